#pragma once

#include <array>
#include <cstdint>

#include "leco/model.hpp"
#include "leco/regressor.hpp"

// Byte layout of the LECO container. Everything is little-endian.
//
//   global header (32 bytes)
//     magic "LECO" | version u8 | scheme u8 | elem_width u8 | reserved u8
//     n u64 | m u64 | L u64 (0 for the variable scheme)
//   start table   u32 x m   (variable scheme only)
//   offset table  u32 x m   (byte offset of each block from the first block)
//   blocks, one per partition:
//     family u8 | phi u8 | ncoef u8 | theta f64 x ncoef
//     [custom]   (kind u8, param f64) x ncoef
//     [step]     first i64
//     [linear]   correction count u32 | (pos u32, prediction i64) x count
//     payload    ceil(len * phi / 8) bytes, LSB-first
//
// A correction count of kNoAccumulation disables accumulated range decode for
// that partition.

namespace leco::format {

inline constexpr std::array<uint8_t, 4> kMagic = {'L', 'E', 'C', 'O'};
inline constexpr uint8_t kVersion = 1;  // predictions are floored
inline constexpr uint64_t kGlobalHeaderBytes = 32;
inline constexpr uint64_t kBlockFixedBytes = 3;
inline constexpr uint64_t kCoefficientBytes = 8;
inline constexpr uint64_t kBasisTermBytes = 9;
inline constexpr uint64_t kStepFirstBytes = 8;
inline constexpr uint64_t kCorrectionCountBytes = 4;
inline constexpr uint64_t kCorrectionBytes = 12;
inline constexpr uint32_t kNoAccumulation = 0xFFFFFFFFu;
inline constexpr uint64_t kMaxValues = uint64_t{1} << 32;

/// Table bytes per partition: the offset entry, plus the start entry when variable.
constexpr uint64_t table_bytes(Scheme scheme) noexcept { return scheme == Scheme::variable ? 8 : 4; }

/// Block header bytes of a stored model, excluding corrections and payload.
inline uint64_t block_header_bytes(const RegressionModel& m) {
  uint64_t b = kBlockFixedBytes + kCoefficientBytes * m.theta.size();
  switch (m.family) {
    case Family::custom: b += kBasisTermBytes * m.basis.size(); break;
    case Family::step: b += kStepFirstBytes; break;
    case Family::linear: b += kCorrectionCountBytes; break;
    default: break;
  }
  return b;
}

/// Coefficient count a regressor stores on disk.
inline uint64_t stored_arity(const FamilySpec& spec) {
  switch (spec.kind) {
    case Regressor::constant: return 1;
    case Regressor::linear: return 2;
    case Regressor::poly2: return 3;
    case Regressor::poly3: return 4;
    case Regressor::step: return 0;
    case Regressor::exp:
    case Regressor::log: return 3;
    case Regressor::custom: return spec.basis.size();
  }
  return 0;
}

/// S_M: bits one partition costs beyond its payload (block header plus table entries).
inline uint64_t model_size_bits(const FamilySpec& spec, Scheme scheme) {
  uint64_t b = kBlockFixedBytes + kCoefficientBytes * stored_arity(spec) + table_bytes(scheme);
  switch (spec.kind) {
    case Regressor::exp:
    case Regressor::log:
    case Regressor::custom: b += kBasisTermBytes * stored_arity(spec); break;
    case Regressor::step: b += kStepFirstBytes; break;
    case Regressor::linear: b += kCorrectionCountBytes; break;
    default: break;
  }
  return 8 * b;
}

/// Same quantity for an already fitted model.
inline uint64_t model_size_bits(const RegressionModel& m, Scheme scheme) {
  return 8 * (block_header_bytes(m) + table_bytes(scheme));
}

}  // namespace leco::format

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "leco/bits.hpp"
#include "leco/error.hpp"
#include "leco/model.hpp"

namespace leco {

enum class DatasetKind : uint8_t { linear, normal, poisson };

inline DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "linear") return DatasetKind::linear;
  if (name == "normal") return DatasetKind::normal;
  if (name == "poisson") return DatasetKind::poisson;
  fail(errc::invalid_argument, "unknown dataset kind '" + std::string(name) + "'");
}

inline const char* to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::linear: return "linear";
    case DatasetKind::normal: return "normal";
    case DatasetKind::poisson: return "poisson";
  }
  return "?";
}

struct GenerateParams {
  // linear
  int64_t start = 0;
  int64_t step = 1000;
  int64_t jitter = 0;  // uniform in [-jitter, jitter]
  // normal
  double mean = 1099511627776.0;  // 2^40
  double stddev = 68719476736.0;  // 2^36
  // poisson
  double rate = 0.001;  // arrivals per time unit
};

/// Synthetic sorted columns. linear: arithmetic progression plus jitter;
/// normal: sorted normal samples; poisson: strictly increasing arrival times.
inline IntSequence generate(DatasetKind kind, uint64_t n, uint64_t seed, const GenerateParams& p = {}) {
  if (n < 1) fail(errc::invalid_argument, "n must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<int64_t> v(n);
  switch (kind) {
    case DatasetKind::linear: {
      std::uniform_int_distribution<int64_t> jit(-p.jitter, p.jitter);
      for (uint64_t i = 0; i < n; ++i) v[i] = p.start + p.step * static_cast<int64_t>(i) + (p.jitter ? jit(rng) : 0);
      std::sort(v.begin(), v.end());
      break;
    }
    case DatasetKind::normal: {
      std::normal_distribution<double> dist(p.mean, p.stddev);
      for (auto& x : v) x = std::llround(dist(rng));
      std::sort(v.begin(), v.end());
      break;
    }
    case DatasetKind::poisson: {
      if (!(p.rate > 0)) fail(errc::invalid_argument, "poisson rate must be positive");
      std::exponential_distribution<double> gap(p.rate);
      int64_t t = p.start;
      for (auto& x : v) {
        t += 1 + static_cast<int64_t>(std::floor(gap(rng)));
        x = t;
      }
      break;
    }
  }
  return IntSequence(std::move(v), 64);
}

enum class FileFormat : uint8_t { bin32, bin64, text };

inline FileFormat parse_file_format(std::string_view name) {
  if (name == "bin32") return FileFormat::bin32;
  if (name == "bin64") return FileFormat::bin64;
  if (name == "text") return FileFormat::text;
  fail(errc::invalid_argument, "unknown file format '" + std::string(name) + "'");
}

/// Binary: u64 count then count little-endian signed values of the format's
/// width. Text: one decimal integer per line, blank lines ignored.
inline IntSequence load_dataset(const std::string& path, FileFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::invalid_argument, "cannot open " + path);
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<int64_t> v;
  if (format == FileFormat::text) {
    std::istringstream ss(data);
    std::string line;
    size_t lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto last = line.find_last_not_of(" \t\r");
      const std::string tok = line.substr(first, last - first + 1);
      size_t used = 0;
      long long x = 0;
      try {
        x = std::stoll(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) fail(errc::parse_error, path + ":" + std::to_string(lineno) + ": not an integer");
      v.push_back(x);
    }
    if (v.empty()) fail(errc::parse_error, path + ": no values");
    return IntSequence(std::move(v), 64);
  }
  const unsigned width = format == FileFormat::bin32 ? 4 : 8;
  const std::span<const uint8_t> bytes(reinterpret_cast<const uint8_t*>(data.data()), data.size());
  ByteReader r(bytes);
  if (bytes.size() < 8) fail(errc::parse_error, path + ": missing count");
  const uint64_t count = r.u64();
  if (count == 0) fail(errc::parse_error, path + ": empty dataset");
  if (r.remaining() / width < count) fail(errc::parse_error, path + ": truncated");
  v.resize(count);
  for (auto& x : v) x = width == 4 ? static_cast<int64_t>(static_cast<int32_t>(r.u32())) : r.i64();
  return IntSequence(std::move(v), width * 8);
}

inline void save_dataset(const std::string& path, const IntSequence& seq, FileFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::invalid_argument, "cannot write " + path);
  if (format == FileFormat::text) {
    for (int64_t x : seq.values()) out << x << '\n';
    return;
  }
  std::vector<uint8_t> buf;
  ByteWriter w(buf);
  w.u64(seq.size());
  for (int64_t x : seq.values()) {
    if (format == FileFormat::bin32) {
      if (x < INT32_MIN || x > INT32_MAX) fail(errc::invalid_argument, "value does not fit bin32");
      w.u32(static_cast<uint32_t>(static_cast<int32_t>(x)));
    } else {
      w.i64(x);
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

}  // namespace leco

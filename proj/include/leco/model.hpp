#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "leco/bits.hpp"
#include "leco/error.hpp"

namespace leco {

// ---------------------------------------------------------------------------
// IntSequence
// ---------------------------------------------------------------------------

/// The uncompressed column. `elem_width` is the declared logical width and only
/// affects range validation and compression-ratio accounting.
class IntSequence {
 public:
  IntSequence() = default;
  IntSequence(std::vector<int64_t> values, unsigned elem_width = 64)
      : values_(std::move(values)), elem_width_(elem_width) {
    validate();
  }

  std::span<const int64_t> values() const noexcept { return values_; }
  const std::vector<int64_t>& vector() const noexcept { return values_; }
  unsigned elem_width() const noexcept { return elem_width_; }
  size_t size() const noexcept { return values_.size(); }
  int64_t operator[](size_t i) const noexcept { return values_[i]; }
  uint64_t raw_bytes() const noexcept { return static_cast<uint64_t>(values_.size()) * elem_width_ / 8; }

  operator std::span<const int64_t>() const noexcept { return values_; }

 private:
  void validate() const {
    if (elem_width_ != 32 && elem_width_ != 64) fail(errc::invalid_argument, "element width must be 32 or 64");
    if (values_.empty()) fail(errc::invalid_argument, "sequence must hold at least one value");
    if (elem_width_ == 32) {
      for (int64_t v : values_) {
        if (v < std::numeric_limits<int32_t>::min() || v > std::numeric_limits<int32_t>::max())
          fail(errc::invalid_argument, "value " + std::to_string(v) + " exceeds 32-bit width");
      }
    }
  }

  std::vector<int64_t> values_;
  unsigned elem_width_ = 64;
};

// ---------------------------------------------------------------------------
// Regression models
// ---------------------------------------------------------------------------

/// Stored model kind. The numeric values are the on-disk family tag.
enum class Family : uint8_t {
  constant = 0,
  linear = 1,
  polynomial = 2,
  step = 3,
  custom = 4,
};

inline const char* to_string(Family f) {
  switch (f) {
    case Family::constant: return "constant";
    case Family::linear: return "linear";
    case Family::polynomial: return "polynomial";
    case Family::step: return "step";
    case Family::custom: return "custom";
  }
  return "?";
}

/// Basis functions M_j(i) for custom-basis models. Values are on-disk tags.
enum class BasisKind : uint8_t {
  one = 0,       // 1
  identity = 1,  // i
  power = 2,     // i^param
  sine = 3,      // sin(param * i)
  cosine = 4,    // cos(param * i)
  exp = 5,       // exp(param * i)
  log1p = 6,     // log(1 + i)
};

struct BasisTerm {
  BasisKind kind = BasisKind::one;
  double param = 0.0;

  double operator()(double i) const noexcept {
    switch (kind) {
      case BasisKind::one: return 1.0;
      case BasisKind::identity: return i;
      case BasisKind::power: return std::pow(i, param);
      case BasisKind::sine: return std::sin(param * i);
      case BasisKind::cosine: return std::cos(param * i);
      case BasisKind::exp: return std::exp(param * i);
      case BasisKind::log1p: return std::log1p(i);
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind) {
      case BasisKind::one: return "1";
      case BasisKind::identity: return "i";
      case BasisKind::power: return "i^" + std::to_string(param);
      case BasisKind::sine: return "sin(" + std::to_string(param) + "*i)";
      case BasisKind::cosine: return "cos(" + std::to_string(param) + "*i)";
      case BasisKind::exp: return "exp(" + std::to_string(param) + "*i)";
      case BasisKind::log1p: return "log(1+i)";
    }
    return "?";
  }

  static bool valid_kind(uint8_t tag) { return tag <= static_cast<uint8_t>(BasisKind::log1p); }
  friend bool operator==(const BasisTerm&, const BasisTerm&) = default;
};

inline constexpr int kMaxPolynomialDegree = 3;

/// A fitted model F(i) = sum_j theta_j * M_j(i), evaluated at the position
/// relative to the start of its partition.
struct RegressionModel {
  Family family = Family::constant;
  std::vector<double> theta;     // constant: [t0]; linear: [t0, t1]; polynomial: [t0..td]; custom: per basis term
  std::vector<BasisTerm> basis;  // custom only
  int64_t first = 0;             // step only: the partition's first value

  static RegressionModel constant(double t0) { return {Family::constant, {t0}, {}, 0}; }
  static RegressionModel linear(double t0, double t1) { return {Family::linear, {t0, t1}, {}, 0}; }
  static RegressionModel polynomial(std::vector<double> coeffs) {
    RegressionModel m{Family::polynomial, std::move(coeffs), {}, 0};
    m.validate();
    return m;
  }
  static RegressionModel step(int64_t first_value) { return {Family::step, {}, {}, first_value}; }
  static RegressionModel custom(std::vector<BasisTerm> terms, std::vector<double> weights) {
    RegressionModel m{Family::custom, std::move(weights), std::move(terms), 0};
    m.validate();
    return m;
  }

  size_t arity() const noexcept { return theta.size(); }

  void validate() const {
    size_t expected = 0;
    switch (family) {
      case Family::constant: expected = 1; break;
      case Family::linear: expected = 2; break;
      case Family::polynomial:
        if (theta.empty() || theta.size() > kMaxPolynomialDegree + 1)
          fail(errc::invalid_argument, "polynomial degree must be in [0, 3]");
        expected = theta.size();
        break;
      case Family::step: expected = 0; break;
      case Family::custom:
        if (basis.empty()) fail(errc::invalid_argument, "custom model needs at least one basis term");
        expected = basis.size();
        break;
    }
    if (theta.size() != expected) fail(errc::invalid_argument, "coefficient count does not match model family");
    for (double t : theta)
      if (!std::isfinite(t)) fail(errc::invalid_argument, "model coefficients must be finite");
    for (const auto& b : basis)
      if (!std::isfinite(b.param)) fail(errc::invalid_argument, "basis parameters must be finite");
  }

  friend bool operator==(const RegressionModel&, const RegressionModel&) = default;
};

/// F(i) as a 64-bit float. Step models carry no standalone prediction.
inline double evaluate(const RegressionModel& model, double i) {
  switch (model.family) {
    case Family::constant: return model.theta[0];
    case Family::linear: return model.theta[0] + model.theta[1] * i;
    case Family::polynomial: {
      double acc = model.theta.back();
      for (size_t j = model.theta.size() - 1; j-- > 0;) acc = acc * i + model.theta[j];
      return acc;
    }
    case Family::step: fail(errc::context_required, "step model needs the previous value to predict");
    case Family::custom: {
      double acc = 0.0;
      for (size_t j = 0; j < model.basis.size(); ++j) acc += model.theta[j] * model.basis[j](i);
      return acc;
    }
  }
  return 0.0;
}

/// floor(x) as int64, or model_divergence if x is not finite or outside int64.
inline int64_t floor_to_int64(double x) {
  const double f = std::floor(x);
  // 2^63 is exactly representable; every double below it converts safely.
  if (!(f >= -9223372036854775808.0 && f < 9223372036854775808.0))
    fail(errc::model_divergence, "prediction outside the 64-bit range");
  return static_cast<int64_t>(f);
}

/// The decoder's prediction: floor(F(i)).
inline int64_t predict_floor(const RegressionModel& model, uint64_t i) {
  return floor_to_int64(evaluate(model, static_cast<double>(i)));
}

/// delta_i = v_i - floor(F(i)); model_divergence when the residual leaves int64.
inline int64_t residual_against(int64_t value, int64_t prediction) {
  const int128 r = static_cast<int128>(value) - prediction;
  if (r < std::numeric_limits<int64_t>::min() || r > std::numeric_limits<int64_t>::max())
    fail(errc::model_divergence, "residual exceeds 64 bits");
  return static_cast<int64_t>(r);
}

inline int64_t residual(const RegressionModel& model, std::span<const int64_t> seq, size_t i) {
  if (i >= seq.size()) fail(errc::out_of_range, "position past the end of the sequence");
  return residual_against(seq[i], predict_floor(model, i));
}

/// Residual vector of a non-step model over `seq`, position 0 being the partition start.
inline std::vector<int64_t> residuals(const RegressionModel& model, std::span<const int64_t> seq) {
  std::vector<int64_t> out(seq.size());
  if (model.family == Family::step) {
    // The implicit step model predicts the previous value; the first slot is anchored to `first`.
    int64_t prev = model.first;
    for (size_t i = 0; i < seq.size(); ++i) {
      out[i] = wrapping_sub(seq[i], prev);
      prev = seq[i];
    }
    return out;
  }
  for (size_t i = 0; i < seq.size(); ++i) out[i] = residual_against(seq[i], predict_floor(model, i));
  return out;
}

// ---------------------------------------------------------------------------
// Partition layouts
// ---------------------------------------------------------------------------

enum class Scheme : uint8_t { fixed = 0, variable = 1 };

/// Ordered boundaries k_0 = 0 < k_1 < ... < k_m = n.
struct PartitionLayout {
  std::vector<uint64_t> boundaries;
  Scheme scheme = Scheme::variable;
  uint64_t fixed_length = 0;  // L for the fixed scheme

  size_t partition_count() const noexcept { return boundaries.empty() ? 0 : boundaries.size() - 1; }
  uint64_t begin(size_t j) const noexcept { return boundaries[j]; }
  uint64_t end(size_t j) const noexcept { return boundaries[j + 1]; }
  uint64_t length(size_t j) const noexcept { return boundaries[j + 1] - boundaries[j]; }
  uint64_t total() const noexcept { return boundaries.empty() ? 0 : boundaries.back(); }

  /// Throws invalid_argument unless the layout tiles [0, n) exactly.
  void validate(uint64_t n) const {
    if (boundaries.size() < 2) fail(errc::invalid_argument, "layout needs at least one partition");
    if (boundaries.front() != 0) fail(errc::invalid_argument, "layout must start at 0");
    if (boundaries.back() != n) fail(errc::invalid_argument, "layout must end at n");
    for (size_t j = 1; j < boundaries.size(); ++j)
      if (boundaries[j] <= boundaries[j - 1]) fail(errc::invalid_argument, "boundaries must be strictly increasing");
    if (scheme == Scheme::fixed) {
      if (fixed_length == 0) fail(errc::invalid_argument, "fixed layout needs L >= 1");
      for (size_t j = 0; j + 1 < partition_count(); ++j)
        if (length(j) != fixed_length) fail(errc::invalid_argument, "fixed layout partitions must have length L");
      if (length(partition_count() - 1) > fixed_length) fail(errc::invalid_argument, "last fixed partition exceeds L");
    }
  }

  friend bool operator==(const PartitionLayout&, const PartitionLayout&) = default;
};

}  // namespace leco

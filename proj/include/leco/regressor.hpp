#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leco/bits.hpp"
#include "leco/error.hpp"
#include "leco/model.hpp"

namespace leco {

// ---------------------------------------------------------------------------
// What to fit
// ---------------------------------------------------------------------------

/// Regressor requested by a caller. `exp` and `log` produce custom-basis models.
enum class Regressor : uint8_t { constant, linear, poly2, poly3, step, exp, log, custom };

inline const char* to_string(Regressor r) {
  switch (r) {
    case Regressor::constant: return "constant";
    case Regressor::linear: return "linear";
    case Regressor::poly2: return "poly2";
    case Regressor::poly3: return "poly3";
    case Regressor::step: return "step";
    case Regressor::exp: return "exp";
    case Regressor::log: return "log";
    case Regressor::custom: return "custom";
  }
  return "?";
}

inline Regressor parse_regressor(std::string_view name) {
  for (Regressor r : {Regressor::constant, Regressor::linear, Regressor::poly2, Regressor::poly3, Regressor::step,
                      Regressor::exp, Regressor::log, Regressor::custom})
    if (name == to_string(r)) return r;
  if (name == "delta") return Regressor::step;
  fail(errc::invalid_argument, "unknown regressor '" + std::string(name) + "'");
}

struct FamilySpec {
  Regressor kind = Regressor::linear;
  std::vector<BasisTerm> basis;  // custom only

  FamilySpec() = default;
  FamilySpec(Regressor r) : kind(r) {}  // NOLINT(google-explicit-constructor)
  static FamilySpec custom(std::vector<BasisTerm> terms) {
    FamilySpec s(Regressor::custom);
    s.basis = std::move(terms);
    return s;
  }

  /// Polynomial degree used when picking seed windows; non-polynomial bases act like degree 1.
  int degree() const noexcept {
    switch (kind) {
      case Regressor::constant: return 0;
      case Regressor::poly2: return 2;
      case Regressor::poly3: return 3;
      default: return 1;
    }
  }

  /// Shortest partition the regressor fits meaningfully (three points for a line).
  size_t min_length() const noexcept {
    switch (kind) {
      case Regressor::constant: return 1;
      case Regressor::step: return 3;
      default: return static_cast<size_t>(degree()) + 2;
    }
  }

  std::string name() const { return to_string(kind); }
  friend bool operator==(const FamilySpec&, const FamilySpec&) = default;
};

struct FitResult {
  RegressionModel model;
  unsigned phi = 0;                // required_bits of the residuals under `model`
  double max_abs_residual = 0.0;   // continuous minimax half-width
};

namespace detail {

/// Index of the additive coefficient, if the model has one.
inline std::optional<size_t> intercept_index(const RegressionModel& m) {
  switch (m.family) {
    case Family::constant:
    case Family::linear:
    case Family::polynomial: return 0;
    case Family::custom:
      for (size_t j = 0; j < m.basis.size(); ++j)
        if (m.basis[j].kind == BasisKind::one) return j;
      return std::nullopt;
    case Family::step: return std::nullopt;
  }
  return std::nullopt;
}

/// Shifts the intercept so floored residuals fit the narrowest offset-binary
/// window. A floored residual is ceil(v - F), so a band of width w fits
/// phi bits whenever w < 2^phi; the shift is the smallest that achieves it and
/// is zero when the centered band already fits. Sets `fit.phi`.
inline void place_intercept(FitResult& fit, std::span<const int64_t> seq) {
  fit.phi = required_bits(residuals(fit.model, seq));
  const auto at = intercept_index(fit.model);
  if (!at || fit.phi == 0) return;
  long double lo = std::numeric_limits<long double>::infinity(), hi = -lo, mag = 0;
  for (size_t i = 0; i < seq.size(); ++i) {
    const long double p = evaluate(fit.model, static_cast<double>(i));
    const long double c = static_cast<long double>(seq[i]) - p;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
    mag = std::max(mag, std::fabs(p));
  }
  const long double margin = 8 * std::numeric_limits<double>::epsilon() * (mag + 1) + 1e-12L;
  const long double width = hi - lo;
  unsigned phi = 0;
  while (phi < 63 && !(width < std::ldexp(1.0L, static_cast<int>(phi)) - 2 * margin)) ++phi;
  if (phi >= fit.phi) return;
  const long double whi = phi == 0 ? 0 : std::ldexp(1.0L, static_cast<int>(phi) - 1) - 1;
  const long double wlo = phi == 0 ? 0 : -std::ldexp(1.0L, static_cast<int>(phi) - 1);
  // ceil(c - s) lands in [wlo, whi] for every c in [lo, hi] iff s in [hi - whi, lo - wlo + 1).
  const long double s_min = hi - whi + margin, s_max = lo - wlo + 1 - margin;
  if (s_min > s_max) return;
  const long double shift = s_min > 0 ? s_min : (s_max < 0 ? s_max : 0);
  RegressionModel moved = fit.model;
  moved.theta[*at] = static_cast<double>(moved.theta[*at] + shift);
  if (!std::isfinite(moved.theta[*at])) return;
  try {
    const unsigned got = required_bits(residuals(moved, seq));
    if (got < fit.phi) {
      fit.model = std::move(moved);
      fit.phi = got;
    }
  } catch (const error&) {
    // keep the unshifted model
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constant
// ---------------------------------------------------------------------------

/// Mid-range constant. With `for_mode` the constant is placed so the offset-binary
/// payload equals the frame-of-reference offsets v - v_min bit for bit
/// whenever v_min + 2^(phi-1) is exact in a double (magnitudes up to 2^53).
/// Beyond that the largest double keeping the FOR width is used when one exists.
inline FitResult fit_constant_minimax(std::span<const int64_t> seq, bool for_mode = false) {
  if (seq.empty()) fail(errc::invalid_argument, "cannot fit an empty sequence");
  const auto [lo_it, hi_it] = std::minmax_element(seq.begin(), seq.end());
  const int64_t lo = *lo_it, hi = *hi_it;
  double t0;
  if (for_mode) {
    const unsigned width = unsigned_bits(static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo));
    const int128 half = width == 0 ? 0 : static_cast<int128>(1) << (width - 1);
    // Bases in (hi - half, lo + half] keep every residual inside the width-bit window.
    const int128 target = static_cast<int128>(lo) + half;
    const int128 floor_ok = width == 0 ? target : static_cast<int128>(hi) - half + 1;
    t0 = static_cast<double>(target);
    if (static_cast<int128>(t0) > target) {
      const double below = std::nextafter(t0, -std::numeric_limits<double>::infinity());
      if (static_cast<int128>(std::floor(below)) >= floor_ok) t0 = below;
    }
  } else {
    t0 = static_cast<double>((static_cast<long double>(lo) + static_cast<long double>(hi)) / 2);
  }
  FitResult out;
  out.model = RegressionModel::constant(t0);
  out.max_abs_residual = static_cast<double>(std::max(std::fabs(static_cast<long double>(hi) - t0),
                                                      std::fabs(static_cast<long double>(lo) - t0)));
  if (for_mode) {
    const int64_t base = floor_to_int64(t0);
    out.phi = required_bits_for_range(residual_against(lo, base), residual_against(hi, base));
  } else {
    detail::place_intercept(out, seq);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear: narrowest vertical band around the convex hull
// ---------------------------------------------------------------------------

/// Incremental minimax line over points appended with strictly increasing x.
/// Keeps the upper and lower convex hulls; the narrowest enclosing band has the
/// slope of one hull edge, located by binary search on the band's derivative.
class LinearBand {
 public:
  struct Point {
    int64_t x;
    int64_t v;
  };

  struct Solution {
    long double slope = 0;
    long double intercept = 0;   // prediction at the first point's x
    long double half_width = 0;  // E
    int64_t ceil_e = 0;          // ceil(E), exact
    int64_t floor_e = 0;         // floor(E), exact
    int128 width_num = 0;        // 2E = width_num / width_den, exact
    int128 width_den = 1;
  };

  LinearBand() = default;

  size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }
  int64_t origin() const noexcept { return x0_; }

  void push(int64_t x, int64_t v) {
    pending_ = false;
    append(Point{x, v});
  }

  /// Appends tentatively; follow with commit() or rollback().
  void try_push(int64_t x, int64_t v) {
    saved_upper_.clear();
    saved_lower_.clear();
    pending_ = true;
    append(Point{x, v});
  }
  void commit() noexcept { pending_ = false; }
  void rollback() {
    if (!pending_) return;
    upper_.pop_back();
    lower_.pop_back();
    upper_.insert(upper_.end(), saved_upper_.rbegin(), saved_upper_.rend());
    lower_.insert(lower_.end(), saved_lower_.rbegin(), saved_lower_.rend());
    --count_;
    pending_ = false;
    solved_ = false;
  }

  /// Band over the union of two adjacent bands (every x in `right` exceeds every x in `left`).
  static LinearBand merge(const LinearBand& left, const LinearBand& right) {
    if (left.empty()) return right;
    if (right.empty()) return left;
    LinearBand out;
    out.count_ = left.count_ + right.count_;
    out.x0_ = left.x0_;
    out.upper_.reserve(left.upper_.size() + right.upper_.size());
    out.lower_.reserve(left.lower_.size() + right.lower_.size());
    for (const auto* side : {&left.upper_, &right.upper_})
      for (const Point& p : *side) push_chain(out.upper_, p, /*upper=*/true, nullptr);
    for (const auto* side : {&left.lower_, &right.lower_})
      for (const Point& p : *side) push_chain(out.lower_, p, /*upper=*/false, nullptr);
    return out;
  }

  const Solution& solve() const {
    if (!solved_) {
      solution_ = compute();
      solved_ = true;
    }
    return solution_;
  }

  /// Residual bits after intercept placement: the smallest phi with 2E < 2^phi.
  unsigned bits() const {
    const Solution& s = solve();
    if (s.width_num == 0) return 0;
    unsigned phi = 0;
    while (phi < 64 && !(s.width_num < (static_cast<int128>(s.width_den) << phi))) ++phi;
    return phi;
  }

  size_t hull_size() const noexcept { return upper_.size() + lower_.size(); }

 private:
  struct Slope {
    int128 dv;
    int128 dx;  // > 0
  };

  static Slope slope_of(const Point& a, const Point& b) {
    return Slope{static_cast<int128>(b.v) - a.v, static_cast<int128>(b.x) - a.x};
  }
  static int compare(const Slope& a, const Slope& b) {
    const int128 l = a.dv * b.dx, r = b.dv * a.dx;
    return l < r ? -1 : (l > r ? 1 : 0);
  }
  static int128 cross(const Point& o, const Point& a, const Point& b) {
    return (static_cast<int128>(a.x) - o.x) * (static_cast<int128>(b.v) - o.v) -
           (static_cast<int128>(a.v) - o.v) * (static_cast<int128>(b.x) - o.x);
  }

  static void push_chain(std::vector<Point>& chain, const Point& p, bool upper, std::vector<Point>* saved) {
    while (chain.size() >= 2) {
      const int128 c = cross(chain[chain.size() - 2], chain.back(), p);
      if (upper ? c < 0 : c > 0) break;
      if (saved) saved->push_back(chain.back());
      chain.pop_back();
    }
    chain.push_back(p);
  }

  void append(const Point& p) {
    if (count_ == 0) x0_ = p.x;
    else if (p.x <= upper_.back().x) fail(errc::invalid_argument, "band points must have increasing x");
    push_chain(upper_, p, true, pending_ ? &saved_upper_ : nullptr);
    push_chain(lower_, p, false, pending_ ? &saved_lower_ : nullptr);
    ++count_;
    solved_ = false;
  }

  // Upper tangent for slopes just above s: first vertex whose outgoing edge is <= s.
  size_t upper_right(const Slope& s) const {
    size_t lo = 0, hi = upper_.size() - 1;
    while (lo < hi) {
      const size_t mid = (lo + hi) / 2;
      if (compare(slope_of(upper_[mid], upper_[mid + 1]), s) <= 0) hi = mid;
      else lo = mid + 1;
    }
    return lo;
  }
  // Lower tangent for slopes just above s: first vertex whose outgoing edge is > s.
  size_t lower_right(const Slope& s) const {
    size_t lo = 0, hi = lower_.size() - 1;
    while (lo < hi) {
      const size_t mid = (lo + hi) / 2;
      if (compare(slope_of(lower_[mid], lower_[mid + 1]), s) > 0) hi = mid;
      else lo = mid + 1;
    }
    return lo;
  }
  // Right derivative of the band width at slope s.
  int128 right_derivative(const Slope& s) const {
    return static_cast<int128>(lower_[lower_right(s)].x) - upper_[upper_right(s)].x;
  }

  Solution compute() const {
    Solution out;
    if (count_ == 0) return out;
    if (count_ == 1) {
      out.intercept = static_cast<long double>(upper_[0].v);
      return out;
    }
    const size_t p = upper_.size(), q = lower_.size();
    // Smallest breakpoint with a non-negative right derivative minimizes the width.
    std::optional<Slope> best;
    {
      // Upper edge slopes decrease with k; the predicate holds on a prefix.
      size_t lo = 0, hi = p - 1;  // search in [0, p-1) for last k with R >= 0
      long found = -1;
      while (lo < hi) {
        const size_t mid = (lo + hi) / 2;
        if (right_derivative(slope_of(upper_[mid], upper_[mid + 1])) >= 0) {
          found = static_cast<long>(mid);
          lo = mid + 1;
        } else {
          hi = mid;
        }
      }
      if (found >= 0) best = slope_of(upper_[found], upper_[found + 1]);
    }
    {
      size_t lo = 0, hi = q - 1;  // first j in [0, q-1) with R >= 0
      while (lo < hi) {
        const size_t mid = (lo + hi) / 2;
        if (right_derivative(slope_of(lower_[mid], lower_[mid + 1])) >= 0) hi = mid;
        else lo = mid + 1;
      }
      if (lo < q - 1) {
        const Slope s = slope_of(lower_[lo], lower_[lo + 1]);
        if (!best || compare(s, *best) < 0) best = s;
      }
    }
    Slope chosen = *best;
    if (right_derivative(chosen) == 0) {
      // Flat bottom [chosen, next breakpoint]: pick the slope of least magnitude.
      std::optional<Slope> next;
      for (size_t k = 0; k + 1 < p; ++k) {
        const Slope s = slope_of(upper_[k], upper_[k + 1]);
        if (compare(s, chosen) > 0 && (!next || compare(s, *next) < 0)) next = s;
      }
      for (size_t j = 0; j + 1 < q; ++j) {
        const Slope s = slope_of(lower_[j], lower_[j + 1]);
        if (compare(s, chosen) > 0 && (!next || compare(s, *next) < 0)) next = s;
      }
      const Slope zero{0, 1};
      if (compare(chosen, zero) >= 0) {
        // already the smallest magnitude
      } else if (next && compare(*next, zero) <= 0) {
        chosen = *next;
      } else {
        chosen = zero;
      }
    }
    const Point& up = upper_[upper_right(chosen)];
    const Point& low = lower_[lower_right(chosen)];
    // Width * dx, exact: (up.v - low.v) * dx - dv * (up.x - low.x).
    const int128 num = (static_cast<int128>(up.v) - low.v) * chosen.dx - chosen.dv * (static_cast<int128>(up.x) - low.x);
    const int128 den = 2 * chosen.dx;
    out.slope = static_cast<long double>(chosen.dv) / static_cast<long double>(chosen.dx);
    out.half_width = static_cast<long double>(num) / static_cast<long double>(den);
    const int128 fl = num / den;  // num >= 0
    const int128 cl = (num + den - 1) / den;
    constexpr int128 cap = std::numeric_limits<int64_t>::max();
    out.floor_e = static_cast<int64_t>(std::min(fl, cap));
    out.ceil_e = static_cast<int64_t>(std::min(cl, cap));
    out.width_num = num;
    out.width_den = chosen.dx;
    // Intercept at x0: ((up.v + low.v) * dx - dv * (up.x + low.x - 2 x0)) / (2 dx), one rounding.
    const int128 icpt = (static_cast<int128>(up.v) + low.v) * chosen.dx -
                        chosen.dv * (static_cast<int128>(up.x - x0_) + static_cast<int128>(low.x - x0_));
    out.intercept = static_cast<long double>(icpt) / static_cast<long double>(den);
    return out;
  }

  std::vector<Point> upper_, lower_;
  std::vector<Point> saved_upper_, saved_lower_;
  size_t count_ = 0;
  int64_t x0_ = 0;
  bool pending_ = false;
  mutable bool solved_ = false;
  mutable Solution solution_;
};

/// Minimax line theta0 + theta1 * i over positions 0..n-1.
inline FitResult fit_linear_minimax(std::span<const int64_t> seq) {
  if (seq.empty()) fail(errc::invalid_argument, "cannot fit an empty sequence");
  LinearBand band;
  for (size_t i = 0; i < seq.size(); ++i) band.push(static_cast<int64_t>(i), seq[i]);
  const auto& s = band.solve();
  FitResult out;
  out.model = RegressionModel::linear(static_cast<double>(s.intercept), static_cast<double>(s.slope));
  out.max_abs_residual = static_cast<double>(s.half_width);
  detail::place_intercept(out, seq);
  return out;
}

// ---------------------------------------------------------------------------
// General bases: discrete Chebyshev fit as a small linear program
// ---------------------------------------------------------------------------

namespace detail {

/// Gaussian elimination with partial pivoting on an n x n row-major system.
/// Returns false when the matrix is numerically singular. `a` is overwritten.
inline bool solve_dense(std::vector<long double>& a, std::vector<long double>& b, size_t n) {
  long double scale = 0;
  for (long double x : a) scale = std::max(scale, std::fabs(x));
  if (scale == 0) return false;
  const long double tiny = scale * 1e-14L;
  for (size_t c = 0; c < n; ++c) {
    size_t piv = c;
    for (size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r * n + c]) > std::fabs(a[piv * n + c])) piv = r;
    if (std::fabs(a[piv * n + c]) <= tiny) return false;
    if (piv != c) {
      for (size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    for (size_t r = c + 1; r < n; ++r) {
      const long double f = a[r * n + c] / a[c * n + c];
      if (f == 0) continue;
      for (size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  for (size_t c = n; c-- > 0;) {
    long double acc = b[c];
    for (size_t k = c + 1; k < n; ++k) acc -= a[c * n + k] * b[k];
    b[c] = acc / a[c * n + c];
  }
  return true;
}

/// Columns of `rows` (n x k, row-major) that are linearly independent, in order,
/// by modified Gram-Schmidt with a relative tolerance.
inline std::vector<size_t> independent_columns(const std::vector<double>& rows, size_t n, size_t k) {
  std::vector<std::vector<long double>> kept;
  std::vector<size_t> idx;
  for (size_t c = 0; c < k; ++c) {
    std::vector<long double> col(n);
    long double norm0 = 0;
    for (size_t i = 0; i < n; ++i) {
      col[i] = rows[i * k + c];
      norm0 += col[i] * col[i];
    }
    if (norm0 == 0) continue;
    for (const auto& q : kept) {
      long double dot = 0;
      for (size_t i = 0; i < n; ++i) dot += q[i] * col[i];
      for (size_t i = 0; i < n; ++i) col[i] -= dot * q[i];
    }
    long double norm = 0;
    for (long double x : col) norm += x * x;
    if (norm <= norm0 * 1e-20L) continue;
    const long double inv = 1 / std::sqrt(norm);
    for (auto& x : col) x *= inv;
    kept.push_back(std::move(col));
    idx.push_back(c);
  }
  return idx;
}

struct ChebyshevSolution {
  std::vector<double> weights;
  double half_width = 0;
  int iterations = 0;
};

/// min_w max_i |t_i - sum_j w_j * A_ij| by the simplex method on the dual LP:
///   max sum_i t_i (p_i - q_i)  s.t.  sum_i (p_i - q_i) A_i = 0,  sum_i (p_i + q_i) <= 1,  p, q >= 0.
/// A dual basis of k+1 signed points is a reference set; each pivot swaps in
/// the point of largest deviation. The simplex multipliers are (w, E).
/// Columns must be independent; targets and columns are expected to be O(1).
inline ChebyshevSolution chebyshev_fit(const std::vector<double>& rows, size_t n, size_t k,
                                       std::span<const double> targets) {
  const size_t dim = k + 1;
  struct Column {
    long idx;  // point index, or -1 for the slack
    int sign;
  };
  auto column_of = [&](const Column& c, std::vector<long double>& out) {
    out.assign(dim, 0);
    out[k] = 1;
    if (c.idx < 0) return;
    for (size_t j = 0; j < k; ++j) out[j] = c.sign * static_cast<long double>(rows[c.idx * k + j]);
  };
  auto cost_of = [&](const Column& c) -> long double { return c.idx < 0 ? 0 : c.sign * static_cast<long double>(targets[c.idx]); };

  std::vector<Column> basis;
  std::vector<long double> xb(dim, 0);

  // Start from k+1 evenly spread points with the signs of the null vector
  // of their basis rows (a feasible dual vertex).
  {
    std::vector<size_t> ref(dim);
    for (size_t t = 0; t < dim; ++t) ref[t] = static_cast<size_t>(std::llround(static_cast<double>(t) * (n - 1) / k));
    bool ok = std::adjacent_find(ref.begin(), ref.end()) == ref.end();
    std::vector<long double> lambda(dim, 1);
    if (ok) {
      // Solve sum_{t>=1} mu_t a_{ref_t} = -a_{ref_0}.
      std::vector<long double> m(k * k), rhs(k);
      for (size_t j = 0; j < k; ++j) {
        rhs[j] = -static_cast<long double>(rows[ref[0] * k + j]);
        for (size_t t = 1; t < dim; ++t) m[j * k + (t - 1)] = rows[ref[t] * k + j];
      }
      ok = solve_dense(m, rhs, k);
      if (ok) {
        long double total = 1;
        for (size_t t = 1; t < dim; ++t) {
          lambda[t] = rhs[t - 1];
          total += std::fabs(lambda[t]);
        }
        for (auto& l : lambda) l /= total;
      }
    }
    if (ok) {
      for (size_t t = 0; t < dim; ++t) {
        basis.push_back(Column{static_cast<long>(ref[t]), lambda[t] < 0 ? -1 : 1});
        xb[t] = std::fabs(lambda[t]);
      }
      std::vector<long double> bm(dim * dim), rhs(dim, 0), col;
      rhs[k] = 1;
      for (size_t c = 0; c < dim; ++c) {
        column_of(basis[c], col);
        for (size_t r = 0; r < dim; ++r) bm[r * dim + c] = col[r];
      }
      ok = solve_dense(bm, rhs, dim);
      if (ok) xb = rhs;
    }
    if (!ok) {
      // Degenerate start: slack plus k independent rows.
      basis.clear();
      std::vector<double> tr(k * n);
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < k; ++j) tr[j * n + i] = rows[i * k + j];
      const auto pts = independent_columns(tr, k, n);
      if (pts.size() < k) fail(errc::singular_basis, "basis columns are linearly dependent");
      for (size_t t = 0; t < k; ++t) basis.push_back(Column{static_cast<long>(pts[t]), 1});
      basis.push_back(Column{-1, 1});
      std::fill(xb.begin(), xb.end(), 0);
      xb[k] = 1;
    }
  }

  std::vector<long double> y(dim), bmat(dim * dim), col, d, resid(n);
  ChebyshevSolution out;
  const int max_iter = static_cast<int>(20 * n + 200);
  int stall = 0;
  long double last_obj = -std::numeric_limits<long double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter;
    // Multipliers: B^T y = c_B.
    for (size_t c = 0; c < dim; ++c) {
      column_of(basis[c], col);
      for (size_t r = 0; r < dim; ++r) bmat[c * dim + r] = col[r];  // row c of B^T
      y[c] = cost_of(basis[c]);
    }
    if (!solve_dense(bmat, y, dim)) fail(errc::singular_basis, "reference system became singular");
    const long double e = y[k];
    long double obj = 0;
    for (size_t c = 0; c < dim; ++c) obj += cost_of(basis[c]) * xb[c];
    stall = obj > last_obj + 1e-15L ? 0 : stall + 1;
    last_obj = std::max(last_obj, obj);
    const bool bland = stall > 30;

    // Pricing: reduced cost of (i, sign) is sign * r_i - E.
    const long double tol = 1e-13L;
    Column enter{-2, 1};
    long double best = tol;
    for (size_t i = 0; i < n; ++i) {
      long double fit = 0;
      for (size_t j = 0; j < k; ++j) fit += y[j] * rows[i * k + j];
      resid[i] = targets[i] - fit;
      const long double rc = std::fabs(resid[i]) - e;
      if (rc > best) {
        const Column cand{static_cast<long>(i), resid[i] < 0 ? -1 : 1};
        bool in_basis = false;
        for (const auto& b : basis) in_basis |= (b.idx == cand.idx && b.sign == cand.sign);
        if (in_basis) continue;
        enter = cand;
        if (bland) break;
        best = rc;
      }
    }
    if (enter.idx == -2 && -e > tol) {
      bool slack_in = false;
      for (const auto& b : basis) slack_in |= b.idx < 0;
      if (!slack_in) enter = Column{-1, 1};
    }
    if (enter.idx == -2) break;

    // Direction d = B^{-1} a_enter and ratio test.
    for (size_t c = 0; c < dim; ++c) {
      column_of(basis[c], col);
      for (size_t r = 0; r < dim; ++r) bmat[r * dim + c] = col[r];
    }
    column_of(enter, d);
    if (!solve_dense(bmat, d, dim)) fail(errc::singular_basis, "reference system became singular");
    long ratio_row = -1;
    long double ratio = 0;
    for (size_t r = 0; r < dim; ++r) {
      if (d[r] <= 1e-12L) continue;
      const long double t = xb[r] / d[r];
      if (ratio_row < 0 || t < ratio - 1e-18L || (std::fabs(t - ratio) <= 1e-18L && d[r] > d[ratio_row])) {
        ratio_row = static_cast<long>(r);
        ratio = t;
      }
    }
    if (ratio_row < 0) break;  // cannot happen for a bounded dual; keep the current answer
    for (size_t r = 0; r < dim; ++r) xb[r] -= ratio * d[r];
    xb[ratio_row] = ratio;
    basis[ratio_row] = enter;
    for (auto& x : xb) x = std::max(x, 0.0L);
  }

  // Final multipliers are the weights.
  for (size_t c = 0; c < dim; ++c) {
    column_of(basis[c], col);
    for (size_t r = 0; r < dim; ++r) bmat[c * dim + r] = col[r];
    y[c] = cost_of(basis[c]);
  }
  if (!solve_dense(bmat, y, dim)) fail(errc::singular_basis, "reference system became singular");
  out.weights.resize(k);
  for (size_t j = 0; j < k; ++j) out.weights[j] = static_cast<double>(y[j]);
  long double worst = 0;
  for (size_t i = 0; i < n; ++i) {
    long double fit = 0;
    for (size_t j = 0; j < k; ++j) fit += static_cast<long double>(out.weights[j]) * rows[i * k + j];
    worst = std::max(worst, std::fabs(targets[i] - fit));
  }
  out.half_width = static_cast<double>(worst);
  return out;
}

/// Target normalization shared by polynomial and custom fits.
struct TargetScale {
  long double mid = 0;
  long double half = 1;
};

inline TargetScale target_scale(std::span<const int64_t> seq, bool centered) {
  const auto [lo, hi] = std::minmax_element(seq.begin(), seq.end());
  TargetScale s;
  if (centered) {
    s.mid = (static_cast<long double>(*lo) + static_cast<long double>(*hi)) / 2;
    s.half = (static_cast<long double>(*hi) - static_cast<long double>(*lo)) / 2;
  } else {
    s.half = std::max(std::fabs(static_cast<long double>(*lo)), std::fabs(static_cast<long double>(*hi)));
  }
  if (s.half == 0) s.half = 1;
  return s;
}

inline FitResult finish_fit(RegressionModel model, double half_width, std::span<const int64_t> seq) {
  FitResult out;
  out.model = std::move(model);
  out.model.validate();
  out.max_abs_residual = half_width;
  place_intercept(out, seq);
  return out;
}

}  // namespace detail

/// Minimax polynomial of the given degree (2 or 3) in the partition position.
inline FitResult fit_poly_minimax(std::span<const int64_t> seq, int degree) {
  if (degree < 0 || degree > kMaxPolynomialDegree) fail(errc::invalid_argument, "polynomial degree must be in [0, 3]");
  const size_t n = seq.size();
  if (n <= static_cast<size_t>(degree)) fail(errc::underdetermined, "need more points than the polynomial degree");
  const size_t k = static_cast<size_t>(degree) + 1;
  const detail::TargetScale ts = detail::target_scale(seq, true);
  std::vector<double> targets(n);
  for (size_t i = 0; i < n; ++i) targets[i] = static_cast<double>((seq[i] - ts.mid) / ts.half);

  // Work in t = alpha * i + beta in [-1, 1] for conditioning.
  const long double alpha = n > 1 ? 2.0L / static_cast<long double>(n - 1) : 1.0L;
  const long double beta = n > 1 ? -1.0L : 0.0L;
  std::vector<double> rows(n * k);
  for (size_t i = 0; i < n; ++i) {
    const long double t = alpha * i + beta;
    long double p = 1;
    for (size_t j = 0; j < k; ++j, p *= t) rows[i * k + j] = static_cast<double>(p);
  }
  std::vector<long double> c_t(k);
  double half_width = 0;
  if (n == k) {
    std::vector<long double> a(rows.begin(), rows.end()), b(targets.begin(), targets.end());
    if (!detail::solve_dense(a, b, k)) fail(errc::singular_basis, "interpolation system is singular");
    c_t = b;
  } else {
    const auto sol = detail::chebyshev_fit(rows, n, k, targets);
    for (size_t j = 0; j < k; ++j) c_t[j] = sol.weights[j];
    half_width = static_cast<double>(sol.half_width * ts.half);
  }
  // Expand sum c_j (alpha i + beta)^j into monomials of i.
  std::vector<long double> mono(k, 0);
  for (size_t j = 0; j < k; ++j) {
    long double binom = 1;
    for (size_t r = 0; r <= j; ++r) {
      // C(j, r) * alpha^r * beta^(j-r)
      mono[r] += c_t[j] * binom * std::pow(alpha, static_cast<long double>(r)) *
                 std::pow(beta, static_cast<long double>(j - r));
      binom = binom * static_cast<long double>(j - r) / static_cast<long double>(r + 1);
    }
  }
  std::vector<double> theta(k);
  for (size_t j = 0; j < k; ++j) theta[j] = static_cast<double>(mono[j] * ts.half);
  theta[0] = static_cast<double>(mono[0] * ts.half + ts.mid);
  return detail::finish_fit(RegressionModel::polynomial(std::move(theta)), half_width, seq);
}

/// Minimax weights over an arbitrary basis. With `drop_singular`, linearly
/// dependent terms are given weight zero instead of raising singular_basis.
inline FitResult fit_custom_basis_minimax(std::span<const int64_t> seq, const std::vector<BasisTerm>& basis,
                                          bool drop_singular = false) {
  const size_t n = seq.size();
  if (basis.empty()) fail(errc::invalid_argument, "empty basis");
  if (n < basis.size()) fail(errc::underdetermined, "need at least as many points as basis terms");
  const size_t k_all = basis.size();
  std::vector<double> all(n * k_all);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < k_all; ++j) {
      const double val = basis[j](static_cast<double>(i));
      if (!std::isfinite(val)) fail(errc::singular_basis, "basis term " + basis[j].name() + " is not finite");
      all[i * k_all + j] = val;
    }
  std::vector<long double> colscale(k_all, 0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < k_all; ++j) colscale[j] = std::max(colscale[j], std::fabs(static_cast<long double>(all[i * k_all + j])));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < k_all; ++j)
      if (colscale[j] > 0) all[i * k_all + j] = static_cast<double>(all[i * k_all + j] / colscale[j]);

  std::vector<size_t> keep = detail::independent_columns(all, n, k_all);
  if (keep.size() < k_all && !drop_singular) fail(errc::singular_basis, "basis terms are linearly dependent on this range");
  if (keep.empty()) fail(errc::singular_basis, "no usable basis term");
  const size_t k = keep.size();
  long one_term = -1;
  for (size_t t = 0; t < k; ++t)
    if (basis[keep[t]].kind == BasisKind::one) one_term = static_cast<long>(t);

  const detail::TargetScale ts = detail::target_scale(seq, one_term >= 0);
  std::vector<double> targets(n), rows(n * k);
  for (size_t i = 0; i < n; ++i) {
    targets[i] = static_cast<double>((seq[i] - ts.mid) / ts.half);
    for (size_t t = 0; t < k; ++t) rows[i * k + t] = all[i * k_all + keep[t]];
  }
  std::vector<long double> w(k);
  double half_width = 0;
  if (n == k) {
    std::vector<long double> a(rows.begin(), rows.end()), b(targets.begin(), targets.end());
    if (!detail::solve_dense(a, b, k)) fail(errc::singular_basis, "interpolation system is singular");
    w = b;
  } else {
    const auto sol = detail::chebyshev_fit(rows, n, k, targets);
    for (size_t t = 0; t < k; ++t) w[t] = sol.weights[t];
    half_width = static_cast<double>(sol.half_width * ts.half);
  }
  std::vector<double> theta(k_all, 0.0);
  for (size_t t = 0; t < k; ++t) theta[keep[t]] = static_cast<double>(w[t] * ts.half / colscale[keep[t]]);
  if (one_term >= 0) {
    const size_t j = keep[one_term];
    theta[j] = static_cast<double>(w[one_term] * ts.half / colscale[j] + ts.mid);
  }
  return detail::finish_fit(RegressionModel::custom(basis, std::move(theta)), half_width, seq);
}

/// Basis for the exponential regressor at rate `rate`: {1, i, exp(rate * i)}.
inline std::vector<BasisTerm> exp_basis(double rate) {
  return {{BasisKind::one, 0}, {BasisKind::identity, 0}, {BasisKind::exp, rate}};
}
inline std::vector<BasisTerm> log_basis() {
  return {{BasisKind::one, 0}, {BasisKind::identity, 0}, {BasisKind::log1p, 0}};
}

/// Exponential regressor: the rate is chosen from a grid scaled to the
/// partition length; the fit with the fewest residual bits wins.
inline FitResult fit_exp_minimax(std::span<const int64_t> seq) {
  const size_t n = seq.size();
  std::optional<FitResult> best;
  for (double g : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    for (double sign : {1.0, -1.0}) {
      const double rate = sign * g / static_cast<double>(std::max<size_t>(n - 1, 1));
      FitResult f = fit_custom_basis_minimax(seq, exp_basis(rate), /*drop_singular=*/true);
      if (!best || f.phi < best->phi || (f.phi == best->phi && f.max_abs_residual < best->max_abs_residual))
        best = std::move(f);
    }
  }
  return *best;
}

inline FitResult fit_log_minimax(std::span<const int64_t> seq) {
  return fit_custom_basis_minimax(seq, log_basis(), /*drop_singular=*/true);
}

/// Step (Delta) "fit": the model is the first value; residuals are successive differences.
inline FitResult fit_step(std::span<const int64_t> seq) {
  if (seq.empty()) fail(errc::invalid_argument, "cannot fit an empty sequence");
  FitResult out;
  out.model = RegressionModel::step(seq[0]);
  int64_t lo = 0, hi = 0;
  for (size_t i = 1; i < seq.size(); ++i) {
    const int64_t d = wrapping_sub(seq[i], seq[i - 1]);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  out.phi = required_bits_for_range(lo, hi);
  out.max_abs_residual = std::max(std::fabs(static_cast<double>(lo)), std::fabs(static_cast<double>(hi)));
  return out;
}

/// Fits `spec` to a partition of any length >= 1. Short partitions fall back to
/// the richest model the points determine (interpolation), so partitioners can
/// score single points and pairs.
inline FitResult fit(std::span<const int64_t> seq, const FamilySpec& spec) {
  if (seq.empty()) fail(errc::invalid_argument, "cannot fit an empty sequence");
  const size_t n = seq.size();
  switch (spec.kind) {
    case Regressor::constant: return fit_constant_minimax(seq);
    case Regressor::linear: return fit_linear_minimax(seq);
    case Regressor::step: return fit_step(seq);
    case Regressor::poly2:
    case Regressor::poly3: {
      if (n <= 2) return fit_linear_minimax(seq);
      return fit_poly_minimax(seq, std::min<int>(spec.degree(), static_cast<int>(n) - 1));
    }
    case Regressor::exp:
      if (n <= 3) return fit_linear_minimax(seq);
      return fit_exp_minimax(seq);
    case Regressor::log:
      if (n <= 3) return fit_linear_minimax(seq);
      return fit_log_minimax(seq);
    case Regressor::custom:
      if (n < spec.basis.size()) return fit_linear_minimax(seq);
      return fit_custom_basis_minimax(seq, spec.basis, /*drop_singular=*/true);
  }
  fail(errc::invalid_argument, "unknown regressor");
}

/// Delta(v): bits for the worst residual of the minimax fit of `spec` on `seq`.
/// For the step family the first value is the model and is excluded.
inline unsigned max_residual_bits(std::span<const int64_t> seq, const FamilySpec& spec) { return fit(seq, spec).phi; }

/// Approximate linear difficulty: log2(max d_k - min d_k) over adjacent
/// differences, clamped to 0 when the spread is at most 1.
inline double approx_linear_bits(std::span<const int64_t> seq) {
  if (seq.size() < 3) fail(errc::too_short, "need at least three values");
  int128 lo = std::numeric_limits<int128>::max(), hi = std::numeric_limits<int128>::min();
  for (size_t k = 1; k < seq.size(); ++k) {
    const int128 d = static_cast<int128>(seq[k]) - seq[k - 1];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  const int128 spread = hi - lo;
  if (spread <= 1) return 0.0;
  return static_cast<double>(std::log2(static_cast<long double>(spread)));
}

}  // namespace leco

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "hm/curve.hpp"

namespace hm {

/// Contour and cache parameters for the cutoff functions
///   V(x) = (1/2 pi i) int_(c) Gamma(1+w)^2 x^{-w} dw / w^2,
///   W(x) = (1/2 pi i) int_(c) Gamma(1+w)^2 x^{-w} dw / w.
struct CutoffParams {
  double c = 0.7;    // abscissa of the vertical contour
  double T = 40.0;   // the contour is cut at |Im w| = T
  double h = 0.05;   // trapezoid step in Im w
  double grid_ratio = 1.02;
  double x_min = 1e-6;   // below: residue expansion at w = 0, -1, -2, -3
  double x_max = 2000.0;  // above: V and W are treated as zero (both < 1e-36)

  void validate() const;
};

/// V and W by contour quadrature, plus a cache for bulk use.
///
/// The cache is piecewise quintic Hermite in t = log x on a geometric grid. It
/// uses exact derivative relations in t: V' = -W, V'' = xV, W' = -xV, W'' = x(W - V).
class CutoffFunction {
 public:
  explicit CutoffFunction(CutoffParams cutoff_params = {});

  const CutoffParams& params() const { return params_; }

  double v_quadrature(double x) const;
  double w_quadrature(double x) const;

  double V(double x) const { return x > 0 ? V_log(std::log(x)) : throw_nonpositive(); }
  double W(double x) const { return x > 0 ? W_log(std::log(x)) : throw_nonpositive(); }

  /// V at x = e^t; hot path.
  double V_log(double t) const {
    if (t >= t_max_) return 0.0;
    if (t < t_min_) return small_v(t);
    return eval(v_coef_, t);
  }
  double W_log(double t) const {
    if (t >= t_max_) return 0.0;
    if (t < t_min_) return small_w(t);
    return eval(w_coef_, t);
  }

  /// x^{-1/4} e^{-2 sqrt x}, the decay envelope of V.
  static double envelope(double x);
  /// max of V(x) / envelope(x) over cache nodes in [lo, hi], from the quadrature values.
  double decay_constant(double lo = 1.0, double hi = 100.0) const;

  std::size_t cache_intervals() const { return v_coef_.size() / 6; }

 private:
  static double throw_nonpositive();
  double eval(const std::vector<double>& coef, double t) const {
    const double pos = (t - t_min_) * inv_dt_;
    auto i = static_cast<std::size_t>(pos);
    if (i >= intervals_) i = intervals_ - 1;
    const double s = pos - static_cast<double>(i);
    const double* a = &coef[6 * i];
    return a[0] + s * (a[1] + s * (a[2] + s * (a[3] + s * (a[4] + s * a[5]))));
  }
  static double small_v(double t);
  static double small_w(double t);
  double quadrature(double x, const std::vector<std::complex<double>>& kernel) const;

  CutoffParams params_;
  std::vector<std::complex<double>> kernel_v_, kernel_w_;  // weighted Gamma(1+w)^2/w^k at the nodes
  std::vector<double> node_y_;
  std::vector<double> node_v_, node_x_;  // cache node values, for decay_constant
  std::vector<double> v_coef_, w_coef_;
  double t_min_ = 0, t_max_ = 0, inv_dt_ = 0;
  std::size_t intervals_ = 0;
};

/// The truncation ranges U = (NY)^{1/2+e/2}, V = N^{1/2+e/2} Y^{e/2}, N0 = (NY)^{1+e}.
struct TruncationParams {
  double epsilon = 0.1;
  double U = 0, V_bound = 0, N0 = 0;
  static TruncationParams for_range(std::uint64_t N, double Y, double epsilon = 0.1);
};

struct TruncationPolicy {
  double epsilon = 0.1;
  double tail_tolerance = 1e-10;  // absolute bound on the omitted part of L'_d
};

/// Upper bound for the part of the L'_d series with n m^2 > X/c, c = 4 pi^2 / (N |d|).
/// Uses |a_n| <= tau(n) sqrt(n), r_d(n) <= tau(n) <= 4 n^{1/3}, and
/// V(x) <= sqrt(pi) x^{-1/4} e^{-2 sqrt x}.
double series_tail_bound(double c, double X);
/// Smallest X on a 1e-3 relative grid with series_tail_bound(c, X) <= tol.
double cutoff_point(double c, double tol);

/// Central derivative L'_d(E, 1) by the smoothed series
///   L'_d = 2 sum_{(m,N)=1} chi_d(m)/m sum_n a_n r_d(n)/n V(4 pi^2 n m^2 / (N |d|)),
/// streaming the lattice points u^2 + |d| v^2 = 4n instead of tabulating r_d.
class LPrimeEvaluator {
 public:
  LPrimeEvaluator(const CoefficientTable& coeffs, const CutoffFunction& cutoff, TruncationPolicy policy = {});

  struct Parts {
    double total = 0;          // L'_d from the full lattice loop
    double diagonal = 0;       // v = 0
    double off_diagonal = 0;   // u >= 0, v != 0 (the r'_d count)
    double off_diagonal_abs = 0;
    double boundary = 0;       // u = 0, v != 0, counted once per sign of v
    int units = 1;             // u_d: 3 for d = -3, else 1
    std::uint64_t limit = 0;   // n m^2 bound used
  };

  /// Series bound n m^2 <= limit for discriminant d.
  std::uint64_t series_limit(std::int64_t d) const;
  /// Table length needed for every |d| <= d_abs_max.
  static std::uint64_t required_table_size(std::uint64_t N, std::uint64_t d_abs_max, const CutoffParams& cutoff_params,
                                           TruncationPolicy policy = {});

  double l_prime(std::int64_t d) const { return l_prime(d, 1.0); }
  /// Same with the series limit scaled by `range_factor` (truncation checks).
  double l_prime(std::int64_t d, double range_factor) const;
  /// Each part from its own loop; total = (diagonal + off_diagonal - boundary) / units.
  Parts decomposition(std::int64_t d) const;
  /// Off-diagonal part only; also valid for non-fundamental d. `abs_out` receives the
  /// same sum with every term in absolute value.
  double off_diagonal(std::int64_t d, double* abs_out = nullptr) const;
  /// S(X) = sum_{(m,N)=1} chi_d(m)/m sum_n a_n r_d(n)/n W(4 pi^2 n m^2 / (N |d| X)).
  double fe_sum(std::int64_t d, double X) const;
  /// Upper bound for what truncation at series_limit(d) omits.
  double tail_bound(std::int64_t d) const;

  std::uint64_t conductor() const { return N_; }
  const CutoffFunction& cutoff() const { return *cutoff_; }

 private:
  struct Node {
    double coef;  // a_n / n
    double logn;
  };
  struct Sums {
    double signed_sum;
    double abs_sum;
  };
  void check(std::uint64_t limit, std::int64_t d) const;
  double log_scale(std::int64_t d) const;
  template <class Kernel>
  Sums lattice_sum(std::int64_t d, std::uint64_t limit, double log_scale, Kernel&& kernel) const;
  template <class Fn>
  double full_lattice(std::uint64_t ad, std::uint64_t nlim, Fn&& term) const;

  std::uint64_t N_;
  const CutoffFunction* cutoff_;
  TruncationPolicy policy_;
  std::vector<Node> nodes_;
  std::vector<std::int32_t> a_;
};

int unit_count(std::int64_t d);

}  // namespace hm

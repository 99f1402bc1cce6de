#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hm/afe.hpp"
#include "hm/summation.hpp"

namespace hm {

namespace {
constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;
}

TruncationParams TruncationParams::for_range(std::uint64_t N, double Y, double epsilon) {
  const double n = static_cast<double>(N);
  TruncationParams t;
  t.epsilon = epsilon;
  t.U = std::pow(n * Y, 0.5 + epsilon / 2);
  t.V_bound = std::pow(n, 0.5 + epsilon / 2) * std::pow(Y, epsilon / 2);
  t.N0 = std::pow(n * Y, 1.0 + epsilon);
  return t;
}

double series_tail_bound(double c, double X) {
  // 2 sum_m m^{-1} sum_{n m^2 > X/c} 16 n^{1/6} V(c n m^2)
  //   <= 32 zeta(10/3) c^{-7/6} int_X^inf y^{1/6} V(y) dy,
  // and int_X^inf y^{-1/12} e^{-2 sqrt y} dy = 2 int_T^inf s^{5/6} e^{-2s} ds <= 2 T^{5/6} e^{-2T} / (2 - 5/(6T)).
  const double T = std::sqrt(X);
  if (T <= 5.0 / 12.0) return INFINITY;
  const double integral = 2.0 * std::pow(T, 5.0 / 6.0) * std::exp(-2.0 * T) / (2.0 - 5.0 / (6.0 * T));
  static const double kZeta = std::riemann_zeta(10.0 / 3.0);
  return 32.0 * std::sqrt(std::numbers::pi) * kZeta * std::pow(c, -7.0 / 6.0) * integral;
}

double cutoff_point(double c, double tol) {
  double X = 1.0;
  while (series_tail_bound(c, X) > tol) X *= 1.001;
  return X;
}

int unit_count(std::int64_t d) { return d == -3 ? 3 : (d == -4 ? 2 : 1); }

LPrimeEvaluator::LPrimeEvaluator(const CoefficientTable& coeffs, const CutoffFunction& cutoff,
                                 TruncationPolicy policy)
    : N_(coeffs.conductor()), cutoff_(&cutoff), policy_(policy), a_(coeffs.values()) {
  nodes_.resize(static_cast<std::size_t>(coeffs.n_max()) + 1);
  nodes_[0] = {0.0, -INFINITY};
  for (std::size_t n = 1; n < nodes_.size(); ++n) {
    const double dn = static_cast<double>(n);
    nodes_[n] = {static_cast<double>(a_[n]) / dn, std::log(dn)};
  }
}

std::uint64_t LPrimeEvaluator::series_limit(std::int64_t d) const {
  const double Nd = static_cast<double>(N_) * static_cast<double>(d < 0 ? -d : d);
  const double c = kFourPiSq / Nd;
  const double X = cutoff_point(c, policy_.tail_tolerance);
  if (X >= cutoff_->params().x_max)
    throw std::invalid_argument("lprime: cutoff cache too short for the requested tail tolerance");
  const double nominal_range = std::pow(Nd, 1.0 + policy_.epsilon);
  return static_cast<std::uint64_t>(std::ceil(std::max(nominal_range, X / c)));
}

std::uint64_t LPrimeEvaluator::required_table_size(std::uint64_t N, std::uint64_t d_abs_max,
                                                   const CutoffParams& cutoff_params, TruncationPolicy policy) {
  const double Nd = static_cast<double>(N) * static_cast<double>(d_abs_max);
  const double c = kFourPiSq / Nd;
  const double X = cutoff_point(c, policy.tail_tolerance);
  if (X >= cutoff_params.x_max) throw std::invalid_argument("lprime: cutoff cache too short for the requested tail tolerance");
  return static_cast<std::uint64_t>(std::ceil(std::max(std::pow(Nd, 1.0 + policy.epsilon), X / c)));
}

double LPrimeEvaluator::tail_bound(std::int64_t d) const {
  const double Nd = static_cast<double>(N_) * static_cast<double>(d < 0 ? -d : d);
  const double c = kFourPiSq / Nd;
  return series_tail_bound(c, c * static_cast<double>(series_limit(d)));
}

void LPrimeEvaluator::check(std::uint64_t limit, std::int64_t d) const {
  if (d >= 0 || mod_floor(d, 4) != 1)
    throw std::invalid_argument("lprime: d = " + std::to_string(d) + " is not a negative discriminant = 1 mod 4");
  if (limit + 1 > nodes_.size())
    throw std::out_of_range("lprime: coefficient table of size " + std::to_string(nodes_.size() - 1) +
                            " does not reach n = " + std::to_string(limit) + " needed for d = " + std::to_string(d));
}

// sum_{(m,N)=1} chi_d(m)/m * inner(m) in ascending m. The kernel receives the
// bound on n for this m and log(c m^2), and returns the inner sum together with
// the same sum over absolute values.
template <class Kernel>
LPrimeEvaluator::Sums LPrimeEvaluator::lattice_sum(std::int64_t d, std::uint64_t limit, double log_scale,
                                                   Kernel&& kernel) const {
  CompensatedSum total, total_abs;
  for (std::uint64_t m = 1; m * m <= limit; ++m) {
    if (std::gcd(m, N_) != 1) continue;
    const int chi = kronecker(d, m);
    if (chi == 0) continue;
    const double md = static_cast<double>(m);
    const Sums inner = kernel(limit / (m * m), log_scale + 2.0 * std::log(md));
    total.add(chi * inner.signed_sum / md);
    total_abs.add(inner.abs_sum / md);
  }
  return {total.value(), total_abs.value()};
}

double LPrimeEvaluator::log_scale(std::int64_t d) const {
  return std::log(kFourPiSq / (static_cast<double>(N_) * static_cast<double>(-d)));
}

// Sum over all (u, v) in Z^2 \ {0} with u = v mod 2 and u^2 + |d| v^2 <= 4 nlim of
// a_n/n K(t + log n), n = (u^2 + |d| v^2)/4; each (u, v) with u, v >= 0 stands for its sign orbit.
template <class Fn>
double LPrimeEvaluator::full_lattice(std::uint64_t ad, std::uint64_t nlim, Fn&& term) const {
  CompensatedSum acc;
  const std::uint64_t lim4 = 4 * nlim;
  for (std::uint64_t v = 0;; ++v) {
    const std::uint64_t base = ad * v * v;
    if (base > lim4) break;
    std::uint64_t u = v & 1U;
    std::uint64_t n4 = u * u + base;
    if (n4 == 0) {
      u = 2;
      n4 = 4;
    }
    CompensatedSum row;
    for (; n4 <= lim4; n4 += 4 * u + 4, u += 2) {
      const Node& node = nodes_[n4 >> 2];
      row.add((u > 0 ? 2.0 : 1.0) * term(node));
    }
    acc.add((v > 0 ? 2.0 : 1.0) * row.value());
  }
  return acc.value();
}

double LPrimeEvaluator::l_prime(std::int64_t d, double range_factor) const {
  const auto limit = static_cast<std::uint64_t>(std::ceil(static_cast<double>(series_limit(d)) * range_factor));
  check(limit, d);
  const auto ad = static_cast<std::uint64_t>(-d);
  const CutoffFunction& V = *cutoff_;
  const Sums s = lattice_sum(d, limit, log_scale(d), [&](std::uint64_t nlim, double tm) {
    return Sums{full_lattice(ad, nlim, [&](const Node& nd) { return nd.coef * V.V_log(tm + nd.logn); }), 0.0};
  });
  // 2 sum chi/m sum a_n r_d(n)/n V with r_d(n) = #{(u, v)} / (2 u_d).
  return s.signed_sum / unit_count(d);
}

double LPrimeEvaluator::fe_sum(std::int64_t d, double X) const {
  if (!(X > 0)) throw std::invalid_argument("fe_sum: X must be positive");
  const auto limit =
      static_cast<std::uint64_t>(std::ceil(1.5 * std::max(X, 1.0) * static_cast<double>(series_limit(d))));
  check(limit, d);
  const auto ad = static_cast<std::uint64_t>(-d);
  const CutoffFunction& V = *cutoff_;
  const Sums s = lattice_sum(d, limit, log_scale(d) - std::log(X), [&](std::uint64_t nlim, double tm) {
    return Sums{full_lattice(ad, nlim, [&](const Node& nd) { return nd.coef * V.W_log(tm + nd.logn); }), 0.0};
  });
  return s.signed_sum / (2.0 * unit_count(d));
}

double LPrimeEvaluator::off_diagonal(std::int64_t d, double* abs_out) const {
  const std::uint64_t limit = series_limit(d);
  check(limit, d);
  const auto ad = static_cast<std::uint64_t>(-d);
  const CutoffFunction& V = *cutoff_;
  const Sums s = lattice_sum(d, limit, log_scale(d), [&](std::uint64_t nlim, double tm) {
    CompensatedSum acc, acc_abs;
    const std::uint64_t lim4 = 4 * nlim;
    for (std::uint64_t v = 1;; ++v) {
      const std::uint64_t base = ad * v * v;
      if (base > lim4) break;
      std::uint64_t u = v & 1U;
      CompensatedSum row, row_abs;
      for (std::uint64_t n4 = u * u + base; n4 <= lim4; n4 += 4 * u + 4, u += 2) {
        const Node& node = nodes_[n4 >> 2];
        const double t = node.coef * V.V_log(tm + node.logn);
        row.add(t);
        row_abs.add(std::fabs(t));
      }
      // (u, v) and (u, -v)
      acc.add(2.0 * row.value());
      acc_abs.add(2.0 * row_abs.value());
    }
    return Sums{acc.value(), acc_abs.value()};
  });
  if (abs_out) *abs_out = 2.0 * s.abs_sum;
  return 2.0 * s.signed_sum;
}

LPrimeEvaluator::Parts LPrimeEvaluator::decomposition(std::int64_t d) const {
  Parts p;
  p.limit = series_limit(d);
  check(p.limit, d);
  p.units = unit_count(d);
  p.total = l_prime(d);
  p.off_diagonal = off_diagonal(d, &p.off_diagonal_abs);
  const auto ad = static_cast<std::uint64_t>(-d);
  const CutoffFunction& V = *cutoff_;
  // v = 0: n = k^2 from u = +-2k.
  p.diagonal = 2.0 * lattice_sum(d, p.limit, log_scale(d), [&](std::uint64_t nlim, double tm) {
                       CompensatedSum acc;
                       for (std::uint64_t k = 1; k * k <= nlim; ++k) {
                         const Node& node = nodes_[k * k];
                         acc.add(node.coef * V.V_log(tm + node.logn));
                       }
                       return Sums{acc.value(), 0.0};
                     }).signed_sum;
  // u = 0: n = |d| w^2 from v = +-2w; one orbit representative per sign of v.
  p.boundary = 2.0 * lattice_sum(d, p.limit, log_scale(d), [&](std::uint64_t nlim, double tm) {
                       CompensatedSum acc;
                       for (std::uint64_t w = 1; ad * w * w <= nlim; ++w) {
                         const Node& node = nodes_[ad * w * w];
                         acc.add(node.coef * V.V_log(tm + node.logn));
                       }
                       return Sums{acc.value(), 0.0};
                     }).signed_sum;
  return p;
}

}  // namespace hm

#include "hm/sym2.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hm/summation.hpp"

namespace hm {

const char* to_string(BadSym2Factor f) {
  return f == BadSym2Factor::kUnshifted ? "unshifted (1-p^-s)^-1" : "shifted (1-p^(1-s))^-1";
}

std::uint32_t Sym2Series::damping_limit(const Sym2Params& params) {
  return static_cast<std::uint32_t>(std::ceil(160.0 * params.x0));
}

Sym2Series::Sym2Series(const CoefficientTable& coeffs, const PrimeSieve& sieve, Sym2Params params)
    : params_(params), conductor_(coeffs.conductor()) {
  if (!(params.x0 >= 100)) throw std::invalid_argument("sym2: damping scale x0 must be at least 100");
  const std::uint32_t n_lim = damping_limit(params);
  if (coeffs.n_max() < n_lim || sieve.bound() < n_lim)
    throw std::invalid_argument("sym2: coefficient table must reach n = " + std::to_string(n_lim));

  for (std::uint32_t p : sieve.primes()) {
    if (p > n_lim) break;
    primes_.push_back(p);
    ap_.push_back(static_cast<std::int32_t>(coeffs[p]));
  }

  b_.assign(static_cast<std::size_t>(n_lim) + 1, 0.0);
  b_[1] = 1.0;
  for (std::uint64_t n = 2; n <= n_lim; ++n) {
    const std::uint32_t p = sieve.least_prime_factor(n);
    std::uint64_t pk = p, r = n / p;
    while (r % p == 0) {
      pk *= p;
      r /= p;
    }
    if (r > 1) {
      b_[n] = b_[pk] * b_[r];
      continue;
    }
    const double P = p;
    if (conductor_ % p == 0) {
      b_[n] = b_[n / p] * (params_.bad_factor == BadSym2Factor::kUnshifted ? 1.0 : P);
      continue;
    }
    const double ap = static_cast<double>(coeffs[p]);
    const double c = ap * ap - P;
    double v = c * b_[n / p];
    if (n % (static_cast<std::uint64_t>(p) * p) == 0) v -= P * c * b_[n / p / p];
    if (n % (static_cast<std::uint64_t>(p) * p * p) == 0) v += P * P * P * b_[n / p / p / p];
    b_[n] = v;
  }
}

double Sym2Series::local_factor(std::uint32_t p, double x) const {
  const double P = p;
  if (conductor_ % p == 0)
    return params_.bad_factor == BadSym2Factor::kUnshifted ? 1.0 / (1.0 - x) : 1.0 / (1.0 - P * x);
  std::size_t lo = 0, hi = primes_.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (primes_[mid] < p) lo = mid + 1; else hi = mid;
  }
  if (lo == primes_.size() || primes_[lo] != p) throw std::out_of_range("sym2: prime outside table");
  const double ap = ap_[lo];
  const double c = ap * ap - P;
  return 1.0 / (1.0 - c * x + P * c * x * x - P * P * P * x * x * x);
}

Estimate Sym2Series::extrapolate(double s, bool derivative) const {
  CompensatedSum s0, s1, s2;
  double magnitude = 0.0;
  const double inv4 = 1.0 / (4.0 * params_.x0);
  for (std::size_t n = 1; n < b_.size(); ++n) {
    if (b_[n] == 0.0) continue;
    const double logn = std::log(static_cast<double>(n));
    double t = b_[n] * std::exp(-s * logn);
    if (derivative) t *= -logn;
    const double e2 = std::exp(-static_cast<double>(n) * inv4);  // e^{-n/(4 x0)}
    const double e1 = e2 * e2;
    const double e0 = e1 * e1;
    s0.add(t * e0);
    s1.add(t * e1);
    s2.add(t * e2);
    magnitude += std::fabs(t * e2);
  }
  const double r1 = 2.0 * s1.value() - s0.value();
  const double r2 = 2.0 * s2.value() - s1.value();
  const double v = (4.0 * r2 - r1) / 3.0;
  // Spread of the last step plus a rounding allowance for the three sums.
  return {v, std::fabs(v - r2) + 8e-16 * magnitude};
}

Estimate Sym2Series::value(double s) const {
  if (!(s >= 1.5 && s <= 3.0)) throw std::invalid_argument("sym2: s must lie in [1.5, 3]");
  return extrapolate(s, false);
}

Estimate Sym2Series::derivative(double s) const {
  if (!(s >= 1.5 && s <= 3.0)) throw std::invalid_argument("sym2: s must lie in [1.5, 3]");
  return extrapolate(s, true);
}

double Sym2Series::euler_product(double s, std::uint32_t prime_bound) const {
  CompensatedSum log_sum;
  for (std::uint32_t p : primes_) {
    if (p > prime_bound) break;
    log_sum.add(std::log(local_factor(p, std::pow(static_cast<double>(p), -s))));
  }
  return std::exp(log_sum.value());
}

CompositeL::CompositeL(const Sym2Series& sym2, std::uint64_t conductor, const PrimeSieve& sieve,
               std::uint32_t product_bound)
    : sym2_(&sym2), conductor_(conductor), bound_(product_bound) {
  if (sieve.bound() < product_bound)
    throw std::invalid_argument("composite L: sieve must reach the correction-product bound");
  for (std::uint32_t p : sieve.primes()) {
    if (p > product_bound) break;
    if (conductor % p == 0) {
      bad_primes_.push_back(p);
    } else if (p != 2) {
      good_odd_primes_.push_back(p);
    }
  }
  // Bad primes beyond the product bound still matter for zeta^{(N)}.
  std::uint64_t rest = conductor;
  for (std::uint32_t p : bad_primes_)
    while (rest % p == 0) rest /= p;
  for (std::uint64_t p = 2; p * p <= rest; ++p) {
    if (rest % p == 0) {
      bad_primes_.push_back(static_cast<std::uint32_t>(p));
      while (rest % p == 0) rest /= p;
    }
  }
  if (rest > 1) bad_primes_.push_back(static_cast<std::uint32_t>(rest));
}

Estimate CompositeL::correction_product(double t) const { return correction_product(t, bound_); }

Estimate CompositeL::correction_product(double t, std::uint32_t bound) const {
  if (bound > bound_) throw std::invalid_argument("composite L: correction bound beyond the prime table");
  CompensatedSum log_sum;
  for (std::uint32_t p : good_odd_primes_) {
    if (p > bound) break;
    const double P = p;
    log_sum.add(std::log1p(-std::pow(P, -t) / (P + 1.0)));
  }
  const double v = std::exp(log_sum.value());
  // Omitted factors: sum_{p > bound} p^{-t-1} <= bound^{-t}/t, and log(1-y) >= -1.01 y there.
  const double tail = 1.01 * std::pow(static_cast<double>(bound), -t) / t;
  return {v, v * std::expm1(tail) + 1e-15 * v};
}

double CompositeL::zeta_without_bad(double t) const {
  double z = std::riemann_zeta(t);
  for (std::uint32_t p : bad_primes_) z *= 1.0 - std::pow(static_cast<double>(p), -t);
  return z;
}

Estimate CompositeL::at(double s) const {
  if (!(std::fabs(s - 1.0) <= 0.1)) throw std::invalid_argument("composite L: |s - 1| must be at most 0.1");
  const Estimate sym = sym2_->value(2.0 * s);
  const double ratio = zeta_without_bad(4.0 * s - 2.0) / zeta_without_bad(2.0 * s);
  return sym * ratio * correction_product(4.0 * s - 2.0);
}

Estimate CompositeL::at_one() const { return sym2_->value(2.0) * correction_product(2.0); }

Estimate CompositeL::derivative_at_one(double h) const {
  auto diff = [&](double step) {
    const Estimate up = at(1.0 + step), down = at(1.0 - step);
    return (up - down) / (2.0 * step);
  };
  const Estimate d1 = diff(h), d2 = diff(h / 2.0);
  const double v = (4.0 * d2.value - d1.value) / 3.0;
  return {v, std::fabs(v - d2.value) + (4.0 * d2.error + d1.error) / 3.0};
}

double CompositeL::zeta_ratio_log_derivative_at_one() const {
  constexpr double kZetaPrime2 = -0.93754825431584375370;
  // d/ds [log zeta^{(N)}(4s-2) - log zeta^{(N)}(2s)] at s = 1 is 2 (zeta^{(N)})'/zeta^{(N)} (2).
  double log_deriv_zeta = kZetaPrime2 / std::riemann_zeta(2.0);
  for (std::uint32_t p : bad_primes_) {
    const double P = p, y = 1.0 / (P * P);
    log_deriv_zeta += std::log(P) * y / (1.0 - y);
  }
  return 2.0 * log_deriv_zeta;
}

Estimate CompositeL::derivative_at_one_analytic() const {
  const Estimate sym = sym2_->value(2.0), dsym = sym2_->derivative(2.0);
  CompensatedSum corr;
  for (std::uint32_t p : good_odd_primes_) {
    const double P = p, y = 1.0 / (P * P * (P + 1.0));
    corr.add(4.0 * std::log(P) * y / (1.0 - y));
  }
  const Estimate log_deriv =
      2.0 * (dsym / sym) + exact(zeta_ratio_log_derivative_at_one() + corr.value());
  return at_one() * log_deriv;
}

}  // namespace hm

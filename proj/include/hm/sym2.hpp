#pragma once

#include <cstdint>
#include <vector>

#include "hm/curve.hpp"
#include "hm/estimate.hpp"

namespace hm {

/// Local factor of L(Sym^2 E, s) at a prime of multiplicative reduction.
enum class BadSym2Factor {
  kUnshifted,  // (1 - p^{-s})^{-1}
  kShifted,    // (1 - p^{1-s})^{-1}
};

const char* to_string(BadSym2Factor f);

struct Sym2Params {
  double x0 = 2e4;  // smallest damping scale; the series is also summed at 2 x0 and 4 x0
  BadSym2Factor bad_factor = BadSym2Factor::kUnshifted;
};

/// Dirichlet coefficients of the symmetric square.
///
/// L(Sym^2 E, s) = sum b_n n^{-s}, multiplicative, with the good local factor
/// 1 / (1 - c x + p c x^2 - p^3 x^3), c = a_p^2 - p, x = p^{-s}.
/// Values at fixed s come from the damped sums sum b_n n^{-s} e^{-n/X}, whose
/// expansion in 1/X is removed by two Richardson steps over X, 2X, 4X.
class Sym2Series {
 public:
  /// Needs a_p for p <= damping_limit(params); the table is borrowed only during construction.
  Sym2Series(const CoefficientTable& coeffs, const PrimeSieve& sieve, Sym2Params params = {});

  /// Largest n the damped sums touch: e^{-n/(4 x0)} < e^{-40} beyond it.
  static std::uint32_t damping_limit(const Sym2Params& params);

  const Sym2Params& params() const { return params_; }
  std::uint32_t n_max() const { return static_cast<std::uint32_t>(b_.size() - 1); }
  double coefficient(std::uint32_t n) const { return b_[n]; }

  /// L(Sym^2 E, s); error bar from the spread of the extrapolation.
  Estimate value(double s) const;
  /// d/ds L(Sym^2 E, s), same scheme with log n weights.
  Estimate derivative(double s) const;
  /// Truncated Euler product over p <= prime_bound (capped at the table size).
  double euler_product(double s, std::uint32_t prime_bound) const;
  /// Local factor at p as a function of x = p^{-s}.
  double local_factor(std::uint32_t p, double x) const;

 private:
  Estimate extrapolate(double s, bool derivative) const;

  Sym2Params params_;
  std::uint64_t conductor_ = 0;
  std::vector<double> b_;
  std::vector<std::int32_t> ap_;      // a_p, indexed like primes_
  std::vector<std::uint32_t> primes_;
};

/// The composite Euler product
///   L(s) = L(Sym^2 E, 2s) zeta^{(N)}(4s-2) / zeta^{(N)}(2s) prod_{(p,2N)=1} (1 - p^{-(4s-2)}/(p+1)).
class CompositeL {
 public:
  CompositeL(const Sym2Series& sym2, std::uint64_t conductor, const PrimeSieve& sieve,
         std::uint32_t product_bound = 1000000);

  /// prod over (p, 2N) = 1, p <= bound, of (1 - p^{-t}/(p+1)); error bar bounds the tail.
  Estimate correction_product(double t) const;
  Estimate correction_product(double t, std::uint32_t bound) const;
  /// zeta(t) with the Euler factors at p | N removed.
  double zeta_without_bad(double t) const;

  Estimate at(double s) const;
  /// L(1) = L(Sym^2 E, 2) * correction(2); the zeta ratio is exactly 1 there.
  Estimate at_one() const;
  /// Central differences at h and h/2 combined by Richardson.
  Estimate derivative_at_one(double h = 1e-4) const;
  /// The same derivative from logarithmic derivatives of each factor.
  Estimate derivative_at_one_analytic() const;
  /// Contribution of zeta^{(N)}(4s-2)/zeta^{(N)}(2s) to L'(1)/L(1). The ratio is 1 at s = 1.
  double zeta_ratio_log_derivative_at_one() const;

 private:
  const Sym2Series* sym2_;
  std::uint64_t conductor_;
  std::uint32_t bound_;
  std::vector<std::uint32_t> good_odd_primes_;
  std::vector<std::uint32_t> bad_primes_;
};

}  // namespace hm

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <vector>

#include "hm/afe.hpp"
#include "hm/estimate.hpp"
#include "hm/heegner.hpp"

namespace hm {

/// F(t) = exp(-1/((t - t0)(t1 - t))) on (t0, t1), zero outside, times a scale.
class BumpFunction {
 public:
  BumpFunction(double t0, double t1, double scale = 1.0);

  double operator()(double t) const {
    if (t <= t0_ || t >= t1_) return 0.0;
    return scale_ * std::exp(-1.0 / ((t - t0_) * (t1_ - t)));
  }
  double t0() const { return t0_; }
  double t1() const { return t1_; }
  double scale() const { return scale_; }
  /// int F and int F(t) log t, adaptive Gauss-Kronrod to 1e-12.
  double I0() const { return i0_; }
  double I1() const { return i1_; }

 private:
  double t0_, t1_, scale_;
  double i0_ = 0, i1_ = 0;
};

struct MainTerms {
  double cN = 0;
  Estimate L1, Lp1;
  double I0 = 0, I1 = 0;
  Estimate alpha, beta;

  /// alpha Y log Y + beta Y.
  Estimate main(double Y) const;
};

/// alpha = c_N L(1) I0, beta = c_N [(L'(1) + L(1)(log(N/4 pi^2) - 2 gamma)) I0 + L(1) I1].
MainTerms main_term_constants(std::uint64_t N, double cN, Estimate L1, Estimate Lp1, const BumpFunction& F);

struct MomentReport {
  double Y = 0;
  std::size_t count = 0;  // discriminants with F(|d|/Y) != 0
  Estimate empirical;
  Estimate alpha, beta, main;
  Estimate residual;
  double ratio = 0;  // empirical / main
};

struct DecompositionReport {
  double Y = 0;
  double empirical = 0;     // sum F L'_d
  double diagonal = 0;      // sum F diag_d / u_d
  double error_direct = 0;  // sum F err_d
  double error_abs = 0;     // sum F |terms of err_d|
  double boundary = 0;      // sum F bnd_d / u_d
  double relative_mismatch = 0;  // |empirical - (diagonal + error/u - boundary)| / |empirical|
};

struct ErrorSplit {
  double Y = 0;
  std::uint64_t A = 1;
  double E1 = 0, E2 = 0;          // sum over a <= A and a > A of mu(a) Error(a)
  double E1_abs = 0, E2_abs = 0;  // same with |Error(a)|
  double observed = 0;            // error_direct
  double reassembled = 0;         // sum_a mu(a) Error(a)
  double relative_mismatch = 0;
  std::vector<std::pair<std::uint64_t, double>> per_a;  // (a, Error(a)) for squarefree a coprime to 4N
  /// sum_{a > A'} |Error(a)| for A' = 1, 2, 3.
  std::vector<double> tail_abs_by_threshold;
};

struct HeightReport {
  double Y = 0;
  std::size_t count = 0;
  Estimate empirical;
  Estimate cp_theorem, cp_prime_theorem, predicted_theorem;
  Estimate cp_printed, cp_prime_printed, predicted_printed;
  double ratio_theorem = 0, ratio_printed = 0;
};

/// Constants of sum_{|d| <= Y} h(P_d) ~ C_P Y^{3/2} log Y + C_P' Y^{3/2}.
/// Theorem form: C_P = c_N L(1)/(3 Omega). Printed form: C_P = c_N L(Sym^2, 2)/(3 Omega correction(2)).
/// Both use C_P' = C_P (log(N/4 pi^2) - 2/3 - 2 gamma) + c_N L'(1)/(3 Omega).
struct HeightConstants {
  Estimate cp_theorem, cp_prime_theorem;
  Estimate cp_printed, cp_prime_printed;
};
HeightConstants height_constants(std::uint64_t N, double omega, double cN, Estimate L1, Estimate Lp1,
                                 Estimate sym2_at_2, Estimate correction_at_2);

/// A = ceil(Y^{1/6} N^{-7/12}), at least 1.
std::uint64_t error_threshold(double Y, std::uint64_t N);

/// Least-squares slope of log max(|residual|, 1e-3 sqrt Y) against log Y, with its standard error
/// (zero for two points).
Estimate residual_slope(const std::vector<double>& Y, const std::vector<double>& residual);

/// Sums over d of L'_d and its parts, with a per-d cache.
class MomentEngine {
 public:
  MomentEngine(const LPrimeEvaluator& evaluator, const PrimeSieve& sieve, unsigned threads = 0);

  /// L'_d with error bars for each d, computed in parallel and cached.
  std::vector<Estimate> l_primes(const std::vector<std::int64_t>& ds);

  std::vector<std::int64_t> support(const BumpFunction& F, double Y) const;

  MomentReport empirical_moment(const BumpFunction& F, double Y, const MainTerms& terms);
  DecompositionReport decomposition(const BumpFunction& F, double Y) const;
  ErrorSplit error_split(const BumpFunction& F, double Y) const;
  HeightReport height_sum(double Y, double omega, double cN, Estimate L1, Estimate Lp1, Estimate sym2_at_2,
                          Estimate correction_at_2);

  const ResidueSet& residues() const { return residues_; }
  const LPrimeEvaluator& evaluator() const { return *ev_; }
  unsigned threads() const { return threads_; }

 private:
  const LPrimeEvaluator* ev_;
  const PrimeSieve* sieve_;
  unsigned threads_;
  ResidueSet residues_;
  std::map<std::int64_t, Estimate> cache_;
  std::mutex mu_;
};

/// Parameters of the twisted sum: modulus q = 4 N m a^2 v^2 and the class u^2 mod a^2 v^2.
struct TwistConfig {
  std::uint64_t m = 1, a = 1, v = 1, u = 0;
  std::uint64_t q(std::uint64_t N) const { return 4 * N * m * a * a * v * v; }
};

struct TwistResult {
  TwistConfig config;
  std::uint64_t q = 0;
  double S = 0;          // sum_{n <= x} a_n eta(n)
  double majorant = 0;   // sum_{n <= x} |a_n eta(n)|
  double ratio = 0;      // |S| / (sqrt(q) x log x)
  std::uint64_t support = 0;  // n <= x with eta(n) != 0
};

/// eta(n) = chi_d(m) [d in the residue set] with d = (u^2 - n)/(a^2 v^2) when n = u^2 mod a^2 v^2, else 0.
int twist_eta(const ResidueSet& residues, const TwistConfig& cfg, std::uint64_t n);

TwistResult twisted_partial_sum(const CoefficientTable& coeffs, const ResidueSet& residues, const TwistConfig& cfg,
                                std::uint64_t x);

/// `count` draws, uniform over admissible (m, a, v) with q <= q_max, (m, N) = 1, (a, 4N) = 1,
/// then u uniform in [0, a^2 v^2). Deterministic in seed.
std::vector<TwistConfig> sample_twist_configs(std::uint64_t N, std::size_t count, std::uint64_t q_max,
                                              std::uint64_t seed);

}  // namespace hm

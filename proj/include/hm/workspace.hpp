#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "hm/afe.hpp"
#include "hm/curve.hpp"
#include "hm/estimate.hpp"
#include "hm/sym2.hpp"

namespace hm {

struct WorkspaceOptions {
  std::uint64_t d_abs_max = 0;       // largest |d| that L'_d will be asked for
  std::uint64_t fe_d_abs_max = 0;    // largest |d| for the functional-equation check at X = 2
  std::uint64_t extra_table = 0;     // coefficients needed for other sums (twisted sums)
  bool l_function = false;           // build L(Sym^2 E, s) and the composite L(s)
  CutoffParams cutoff;
  TruncationPolicy truncation;
  Sym2Params sym2;
  unsigned threads = 0;
};

/// Constants of the curve entering the main terms.
struct CurveConstants {
  double cN = 0;
  double omega = 0;  // volume of the period lattice
  Estimate sym2_at_2;          // selected bad factor
  Estimate sym2_at_2_shifted;  // the alternative bad factor
  Estimate correction_at_2;
  Estimate L1, Lp1, Lp1_analytic;
  double zeta_ratio_term = 0;  // contribution of zeta^{(N)}(4s-2)/zeta^{(N)}(2s) to L'(1)/L(1)
  /// L'(1) with that contribution removed.
  Estimate Lp1_zeta_ratio_free() const { return {Lp1.value - zeta_ratio_term * L1.value, Lp1.error + 1e-15 * std::fabs(zeta_ratio_term * L1.value)}; }
  /// L(Sym^2, 2) N / (pi Omega deg), 1 when the normalisation is right; empty without a degree.
  std::optional<double> degree_identity_ratio;
  std::optional<double> degree_identity_ratio_shifted;
};

/// Everything derived from one curve: coefficient table, cutoff, evaluator and L-functions.
class Workspace {
 public:
  Workspace(const CurveData& curve, const WorkspaceOptions& options);
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const CurveData& curve() const { return curve_; }
  const WorkspaceOptions& options() const { return options_; }
  const PrimeSieve& sieve() const { return sieve_; }
  const CoefficientTable& coefficients() const { return coeffs_; }
  const CutoffFunction& cutoff() const { return cutoff_; }
  const LPrimeEvaluator& evaluator() const { return *evaluator_; }
  const PeriodData& period() const { return period_; }
  bool has_l_function() const { return sym2_ != nullptr; }
  const Sym2Series& sym2() const;
  const CompositeL& composite() const;

  /// Requires l_function.
  CurveConstants constants() const;

  static std::uint64_t table_size(const CurveData& curve, const WorkspaceOptions& options);

 private:
  CurveData curve_;
  WorkspaceOptions options_;
  CutoffFunction cutoff_;
  PrimeSieve sieve_;
  CoefficientTable coeffs_;
  std::unique_ptr<LPrimeEvaluator> evaluator_;
  std::unique_ptr<Sym2Series> sym2_, sym2_alt_;
  std::unique_ptr<CompositeL> composite_;
  PeriodData period_;
};

}  // namespace hm

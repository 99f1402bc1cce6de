#include "hm/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hm/heegner.hpp"

namespace hm {

namespace {
// The composite L(s) needs primes up to this bound for its correction product.
constexpr std::uint32_t kCorrectionBound = 1000000;
}  // namespace

std::uint64_t Workspace::table_size(const CurveData& curve, const WorkspaceOptions& options) {
  std::uint64_t n = std::max<std::uint64_t>(options.extra_table, 100);
  if (options.d_abs_max > 0)
    n = std::max(n, LPrimeEvaluator::required_table_size(curve.conductor, options.d_abs_max, options.cutoff,
                                                         options.truncation));
  if (options.fe_d_abs_max > 0) {
    // fe_sum at X = 2 reaches three times the series limit.
    n = std::max(n, 3 * LPrimeEvaluator::required_table_size(curve.conductor, options.fe_d_abs_max, options.cutoff,
                                                             options.truncation) + 1);
  }
  if (options.l_function)
    n = std::max<std::uint64_t>({n, Sym2Series::damping_limit(options.sym2), kCorrectionBound});
  if (n > (1ULL << 31)) throw std::invalid_argument("workspace: coefficient table too large");
  return n;
}

Workspace::Workspace(const CurveData& curve, const WorkspaceOptions& options)
    : curve_(curve),
      options_(options),
      cutoff_(options.cutoff),
      sieve_(static_cast<std::uint32_t>(table_size(curve, options) + 1)),
      coeffs_(curve, sieve_, static_cast<std::uint32_t>(table_size(curve, options)), options.threads) {
  curve_.validate();
  evaluator_ = std::make_unique<LPrimeEvaluator>(coeffs_, cutoff_, options.truncation);
  period_ = periods(curve_.model);
  if (options.l_function) {
    sym2_ = std::make_unique<Sym2Series>(coeffs_, sieve_, options.sym2);
    Sym2Params alt = options.sym2;
    alt.bad_factor = alt.bad_factor == BadSym2Factor::kUnshifted ? BadSym2Factor::kShifted : BadSym2Factor::kUnshifted;
    sym2_alt_ = std::make_unique<Sym2Series>(coeffs_, sieve_, alt);
    composite_ = std::make_unique<CompositeL>(*sym2_, curve_.conductor, sieve_, kCorrectionBound);
  }
}

const Sym2Series& Workspace::sym2() const {
  if (!sym2_) throw std::logic_error("workspace: built without L-functions");
  return *sym2_;
}

const CompositeL& Workspace::composite() const {
  if (!composite_) throw std::logic_error("workspace: built without L-functions");
  return *composite_;
}

CurveConstants Workspace::constants() const {
  const CompositeL& L = composite();
  CurveConstants k;
  k.cN = density_constant(curve_.conductor);
  k.omega = period_.volume;
  k.sym2_at_2 = sym2_->value(2.0);
  k.sym2_at_2_shifted = sym2_alt_->value(2.0);
  k.correction_at_2 = L.correction_product(2.0);
  k.L1 = L.at_one();
  k.Lp1 = L.derivative_at_one();
  k.Lp1_analytic = L.derivative_at_one_analytic();
  k.zeta_ratio_term = L.zeta_ratio_log_derivative_at_one();
  if (curve_.modular_degree) {
    const double target =
        std::numbers::pi * k.omega * static_cast<double>(*curve_.modular_degree) / static_cast<double>(curve_.conductor);
    k.degree_identity_ratio = k.sym2_at_2.value / target;
    k.degree_identity_ratio_shifted = k.sym2_at_2_shifted.value / target;
  }
  return k;
}

}  // namespace hm

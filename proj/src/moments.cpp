#include "hm/moments.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hm/special.hpp"
#include "hm/summation.hpp"

namespace hm {

namespace {
constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;
}

BumpFunction::BumpFunction(double t0, double t1, double scale) : t0_(t0), t1_(t1), scale_(scale) {
  if (!(t0 > 0 && t1 > t0)) throw std::invalid_argument("bump: need 0 < t0 < t1");
  using boost::math::quadrature::gauss_kronrod;
  const auto& self = *this;
  i0_ = gauss_kronrod<double, 61>::integrate([&](double t) { return self(t); }, t0, t1, 20, 1e-12);
  i1_ = gauss_kronrod<double, 61>::integrate([&](double t) { return self(t) * std::log(t); }, t0, t1, 20, 1e-12);
  if (!(i0_ > 0)) throw std::runtime_error("bump: integral is not positive");
}

Estimate MainTerms::main(double Y) const { return alpha * (Y * std::log(Y)) + beta * Y; }

MainTerms main_term_constants(std::uint64_t N, double cN, Estimate L1, Estimate Lp1, const BumpFunction& F) {
  MainTerms t;
  t.cN = cN;
  t.L1 = L1;
  t.Lp1 = Lp1;
  t.I0 = F.I0();
  t.I1 = F.I1();
  t.alpha = cN * t.I0 * L1;
  const double shift = std::log(static_cast<double>(N) / kFourPiSq) - 2.0 * kEulerGamma;
  t.beta = cN * ((Lp1 + shift * L1) * t.I0 + t.I1 * L1);
  return t;
}

HeightConstants height_constants(std::uint64_t N, double omega, double cN, Estimate L1, Estimate Lp1,
                                 Estimate sym2_at_2, Estimate correction_at_2) {
  const double shift = std::log(static_cast<double>(N) / kFourPiSq) - 2.0 / 3.0 - 2.0 * kEulerGamma;
  const double k = cN / (3.0 * omega);
  HeightConstants h;
  h.cp_theorem = k * L1;
  h.cp_prime_theorem = shift * h.cp_theorem + k * Lp1;
  h.cp_printed = k * (sym2_at_2 / correction_at_2);
  h.cp_prime_printed = shift * h.cp_printed + k * Lp1;
  return h;
}

std::uint64_t error_threshold(double Y, std::uint64_t N) {
  const double A = std::ceil(std::pow(Y, 1.0 / 6.0) * std::pow(static_cast<double>(N), -7.0 / 12.0));
  return A < 1.0 ? 1 : static_cast<std::uint64_t>(A);
}

Estimate residual_slope(const std::vector<double>& Y, const std::vector<double>& residual) {
  if (Y.size() != residual.size() || Y.size() < 2) throw std::invalid_argument("slope: need at least two points");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    xs.push_back(std::log(Y[i]));
    ys.push_back(std::log(std::max(std::fabs(residual[i]), 1e-3 * std::sqrt(Y[i]))));
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  if (xs.size() < 3) return {slope, 0.0};
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - my - slope * (xs[i] - mx);
    ss += e * e;
  }
  return {slope, std::sqrt(ss / (n - 2.0) / sxx)};
}

MomentEngine::MomentEngine(const LPrimeEvaluator& evaluator, const PrimeSieve& sieve, unsigned threads)
    : ev_(&evaluator), sieve_(&sieve), threads_(resolve_threads(threads)), residues_(evaluator.conductor()) {}

std::vector<Estimate> MomentEngine::l_primes(const std::vector<std::int64_t>& ds) {
  std::vector<std::int64_t> missing;
  {
    std::lock_guard lock(mu_);
    for (std::int64_t d : ds)
      if (!cache_.count(d)) missing.push_back(d);
  }
  const auto fresh = parallel_map<Estimate>(missing.size(), threads_, [&](std::size_t i) {
    const std::int64_t d = missing[i];
    const double v = ev_->l_prime(d);
    // Truncation tail plus the cutoff interpolation budget.
    return Estimate{v, ev_->tail_bound(d) + 1e-9 * std::max(1.0, std::fabs(v))};
  });
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < missing.size(); ++i) cache_[missing[i]] = fresh[i];
  std::vector<Estimate> out;
  out.reserve(ds.size());
  for (std::int64_t d : ds) out.push_back(cache_.at(d));
  return out;
}

std::vector<std::int64_t> MomentEngine::support(const BumpFunction& F, double Y) const {
  const auto lo = static_cast<std::uint64_t>(std::ceil(F.t0() * Y));
  const auto hi = static_cast<std::uint64_t>(std::floor(F.t1() * Y));
  std::vector<std::int64_t> out;
  if (hi < lo) return out;
  for (std::int64_t d : heegner_discriminants(residues_, lo, hi, *sieve_))
    if (F(static_cast<double>(-d) / Y) != 0.0) out.push_back(d);
  return out;
}

MomentReport MomentEngine::empirical_moment(const BumpFunction& F, double Y, const MainTerms& terms) {
  MomentReport r;
  r.Y = Y;
  const auto ds = support(F, Y);
  const auto values = l_primes(ds);
  CompensatedSum sum, err;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double w = F(static_cast<double>(-ds[i]) / Y);
    sum.add(w * values[i].value);
    err.add(w * values[i].error);
  }
  r.count = ds.size();
  r.empirical = {sum.value(), err.value()};
  r.alpha = terms.alpha;
  r.beta = terms.beta;
  r.main = terms.main(Y);
  r.residual = r.empirical - r.main;
  r.ratio = r.main.value != 0.0 ? r.empirical.value / r.main.value : 0.0;
  return r;
}

DecompositionReport MomentEngine::decomposition(const BumpFunction& F, double Y) const {
  DecompositionReport r;
  r.Y = Y;
  const auto ds = support(F, Y);
  const auto parts =
      parallel_map<LPrimeEvaluator::Parts>(ds.size(), threads_, [&](std::size_t i) { return ev_->decomposition(ds[i]); });
  CompensatedSum emp, diag, err, err_units, err_abs, bnd;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double w = F(static_cast<double>(-ds[i]) / Y);
    const auto& p = parts[i];
    emp.add(w * p.total);
    diag.add(w * p.diagonal / p.units);
    err.add(w * p.off_diagonal);
    err_units.add(w * p.off_diagonal / p.units);
    err_abs.add(w * p.off_diagonal_abs);
    bnd.add(w * p.boundary / p.units);
  }
  r.empirical = emp.value();
  r.diagonal = diag.value();
  r.error_direct = err.value();
  r.error_abs = err_abs.value();
  r.boundary = bnd.value();
  const double rebuilt = r.diagonal + err_units.value() - r.boundary;
  r.relative_mismatch = r.empirical != 0.0 ? std::fabs(r.empirical - rebuilt) / std::fabs(r.empirical)
                                           : std::fabs(rebuilt);
  return r;
}

ErrorSplit MomentEngine::error_split(const BumpFunction& F, double Y) const {
  ErrorSplit r;
  r.Y = Y;
  const std::uint64_t N = ev_->conductor();
  r.A = error_threshold(Y, N);
  const auto lo = static_cast<std::uint64_t>(std::ceil(F.t0() * Y));
  const auto hi = static_cast<std::uint64_t>(std::floor(F.t1() * Y));
  std::vector<std::int64_t> ds;
  if (hi >= lo)
    for (std::int64_t d : residue_discriminants(residues_, lo, hi))
      if (F(static_cast<double>(-d) / Y) != 0.0) ds.push_back(d);
  const auto errs = parallel_map<double>(ds.size(), threads_, [&](std::size_t i) { return ev_->off_diagonal(ds[i]); });

  // Error(a) = sum over d with a^2 | d, in ascending |d|.
  std::map<std::uint64_t, CompensatedSum> by_a;
  CompensatedSum direct;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto ad = static_cast<std::uint64_t>(-ds[i]);
    const double term = F(static_cast<double>(ad) / Y) * errs[i];
    for (std::uint64_t a = 1; a * a <= ad; ++a)
      if (ad % (a * a) == 0) by_a[a].add(term);
    if (ad <= sieve_->bound() ? sieve_->is_squarefree(ad) : is_squarefree_trial(ad)) direct.add(term);
  }
  r.observed = direct.value();

  CompensatedSum reassembled, e1, e2, e1_abs, e2_abs;
  std::vector<CompensatedSum> tails(3);
  for (const auto& [a, acc] : by_a) {
    const int mu = sieve_->mobius(a);
    if (mu == 0) continue;
    const double value = acc.value();
    r.per_a.emplace_back(a, value);
    reassembled.add(mu * value);
    if (a <= r.A) {
      e1.add(mu * value);
      e1_abs.add(std::fabs(value));
    } else {
      e2.add(mu * value);
      e2_abs.add(std::fabs(value));
    }
    for (std::uint64_t t = 1; t <= 3; ++t)
      if (a > t) tails[t - 1].add(std::fabs(value));
  }
  r.reassembled = reassembled.value();
  r.E1 = e1.value();
  r.E2 = e2.value();
  r.E1_abs = e1_abs.value();
  r.E2_abs = e2_abs.value();
  for (const auto& t : tails) r.tail_abs_by_threshold.push_back(t.value());
  r.relative_mismatch = r.observed != 0.0 ? std::fabs(r.reassembled - r.observed) / std::fabs(r.observed)
                                          : std::fabs(r.reassembled);
  return r;
}

HeightReport MomentEngine::height_sum(double Y, double omega, double cN, Estimate L1, Estimate Lp1,
                                      Estimate sym2_at_2, Estimate correction_at_2) {
  HeightReport r;
  r.Y = Y;
  const auto ds = heegner_discriminants(residues_, 1, static_cast<std::uint64_t>(std::floor(Y)), *sieve_);
  const auto values = l_primes(ds);
  CompensatedSum sum, err;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double u = unit_count(ds[i]);
    const double k = u * u * std::sqrt(static_cast<double>(-ds[i])) / (2.0 * omega);
    sum.add(k * values[i].value);
    err.add(k * values[i].error);
  }
  r.count = ds.size();
  r.empirical = {sum.value(), err.value()};

  const auto k = height_constants(ev_->conductor(), omega, cN, L1, Lp1, sym2_at_2, correction_at_2);
  const double y32 = std::pow(Y, 1.5);
  r.cp_theorem = k.cp_theorem;
  r.cp_prime_theorem = k.cp_prime_theorem;
  r.predicted_theorem = (y32 * std::log(Y)) * r.cp_theorem + y32 * r.cp_prime_theorem;
  r.cp_printed = k.cp_printed;
  r.cp_prime_printed = k.cp_prime_printed;
  r.predicted_printed = (y32 * std::log(Y)) * r.cp_printed + y32 * r.cp_prime_printed;
  r.ratio_theorem = r.empirical.value / r.predicted_theorem.value;
  r.ratio_printed = r.empirical.value / r.predicted_printed.value;
  return r;
}

int twist_eta(const ResidueSet& residues, const TwistConfig& cfg, std::uint64_t n) {
  const std::uint64_t mod = cfg.a * cfg.a * cfg.v * cfg.v;
  const std::uint64_t u2 = cfg.u * cfg.u;
  if (n % mod != u2 % mod) return 0;
  const auto d = (static_cast<std::int64_t>(u2) - static_cast<std::int64_t>(n)) / static_cast<std::int64_t>(mod);
  if (d >= 0 || !residues.contains(d)) return 0;
  return kronecker(d, cfg.m);
}

TwistResult twisted_partial_sum(const CoefficientTable& coeffs, const ResidueSet& residues, const TwistConfig& cfg,
                                std::uint64_t x) {
  if (x > coeffs.n_max()) throw std::out_of_range("twisted sum: x beyond the coefficient table");
  if (x < 2) throw std::invalid_argument("twisted sum: x must be at least 2");
  TwistResult r;
  r.config = cfg;
  r.q = cfg.q(residues.conductor());
  const std::uint64_t mod = cfg.a * cfg.a * cfg.v * cfg.v;
  std::uint64_t n = (cfg.u * cfg.u) % mod;
  if (n == 0) n = mod;
  CompensatedSum s, maj;
  for (; n <= x; n += mod) {
    const int eta = twist_eta(residues, cfg, n);
    if (eta == 0) continue;
    const double t = static_cast<double>(coeffs[n]) * eta;
    s.add(t);
    maj.add(std::fabs(t));
    ++r.support;
  }
  r.S = s.value();
  r.majorant = maj.value();
  const double xd = static_cast<double>(x);
  r.ratio = std::fabs(r.S) / (std::sqrt(static_cast<double>(r.q)) * xd * std::log(xd));
  return r;
}

std::vector<TwistConfig> sample_twist_configs(std::uint64_t N, std::size_t count, std::uint64_t q_max,
                                              std::uint64_t seed) {
  std::vector<TwistConfig> admissible;
  for (std::uint64_t m = 1; 4 * N * m <= q_max; ++m) {
    if (std::gcd(m, N) != 1) continue;
    for (std::uint64_t a = 1; 4 * N * m * a * a <= q_max; ++a) {
      if (std::gcd(a, 4 * N) != 1) continue;
      for (std::uint64_t v = 1; 4 * N * m * a * a * v * v <= q_max; ++v) admissible.push_back({m, a, v, 0});
    }
  }
  if (admissible.empty()) throw std::invalid_argument("twist sampler: no admissible configuration below q_max");
  std::mt19937_64 rng(seed);
  std::vector<TwistConfig> out;
  for (std::size_t i = 0; i < count; ++i) {
    TwistConfig c = admissible[rng() % admissible.size()];
    c.u = rng() % (c.a * c.a * c.v * c.v);
    out.push_back(c);
  }
  return out;
}

}  // namespace hm

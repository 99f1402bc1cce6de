#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hm/moments.hpp"
#include "hm/workspace.hpp"

using namespace hm;

namespace {

const Workspace& workspace_11a1() {
  static const Workspace w = [] {
    WorkspaceOptions o;
    o.d_abs_max = 20000;
    o.extra_table = 100000;
    return Workspace(builtin_curve("11a1"), o);
  }();
  return w;
}

MomentEngine& engine() {
  static MomentEngine e(workspace_11a1().evaluator(), workspace_11a1().sieve());
  return e;
}

// Synthetic L-values: the moment machinery is linear in them.
const Estimate kL1{0.6, 0.0}, kLp1{-0.2, 0.0};

}  // namespace

TEST_CASE("bump integrals against tanh-sinh quadrature") {
  boost::math::quadrature::tanh_sinh<double> ts;
  for (auto [t0, t1] : {std::pair{1.0, 2.0}, std::pair{0.5, 3.0}, std::pair{2.0, 2.5}}) {
    const BumpFunction F(t0, t1);
    const double i0 = ts.integrate([&](double t) { return F(t); }, t0, t1);
    const double i1 = ts.integrate([&](double t) { return F(t) * std::log(t); }, t0, t1);
    CHECK(F.I0() == doctest::Approx(i0).epsilon(1e-11));
    CHECK(F.I1() == doctest::Approx(i1).epsilon(1e-11));
  }
  CHECK(BumpFunction(1, 2)(1.0) == 0.0);
  CHECK(BumpFunction(1, 2)(1.5) == doctest::Approx(std::exp(-4.0)));
  CHECK_THROWS(BumpFunction(2, 1));
}

TEST_CASE("main term constants") {
  const BumpFunction F(1, 2);
  const double cN = density_constant(11);
  const MainTerms m = main_term_constants(11, cN, kL1, kLp1, F);
  CHECK(m.alpha.value == doctest::Approx(cN * kL1.value * F.I0()).epsilon(1e-15));
  const double shift = std::log(11.0 / (4 * std::numbers::pi * std::numbers::pi)) - 2 * std::numbers::egamma;
  const double beta = cN * ((kLp1.value + kL1.value * shift) * F.I0() + kL1.value * F.I1());
  CHECK(m.beta.value == doctest::Approx(beta).epsilon(1e-14));
  CHECK(m.main(1000).value == doctest::Approx(m.alpha.value * 1000 * std::log(1000.0) + m.beta.value * 1000).epsilon(1e-15));
}

TEST_CASE("height constants") {
  const double cN = 0.18, omega = 3.7;
  const Estimate sym{0.8, 0.0}, corr{0.75, 0.0};
  const HeightConstants k = height_constants(11, omega, cN, kL1, kLp1, sym, corr);
  const double shift = std::log(11.0 / (4 * std::numbers::pi * std::numbers::pi)) - 2.0 / 3 - 2 * std::numbers::egamma;
  CHECK(k.cp_theorem.value == doctest::Approx(cN * kL1.value / (3 * omega)).epsilon(1e-15));
  CHECK(k.cp_prime_theorem.value == doctest::Approx(k.cp_theorem.value * shift + cN * kLp1.value / (3 * omega)).epsilon(1e-14));
  CHECK(k.cp_printed.value == doctest::Approx(cN * sym.value / (3 * omega * corr.value)).epsilon(1e-15));
}

TEST_CASE("error threshold") {
  CHECK(error_threshold(1.0, 11) == 1);
  CHECK(error_threshold(1e12, 11) == static_cast<std::uint64_t>(std::ceil(1e2 * std::pow(11.0, -7.0 / 12))));
}

TEST_CASE("empty support gives an empty sum") {
  const BumpFunction F(1, 2);
  const MainTerms m = main_term_constants(11, density_constant(11), kL1, kLp1, F);
  CHECK(engine().support(F, 3.0).empty());
  const MomentReport r = engine().empirical_moment(F, 3.0, m);
  CHECK(r.count == 0);
  CHECK(r.empirical.value == 0.0);
}

TEST_CASE("moment is positive and linear in the weight") {
  const BumpFunction F(1, 2), G(1, 2, 2.0);
  const MainTerms mf = main_term_constants(11, density_constant(11), kL1, kLp1, F);
  const MainTerms mg = main_term_constants(11, density_constant(11), kL1, kLp1, G);
  for (double Y : {500.0, 2000.0}) {
    const MomentReport a = engine().empirical_moment(F, Y, mf), b = engine().empirical_moment(G, Y, mg);
    CHECK(a.empirical.value > 0);
    CHECK(b.empirical.value == doctest::Approx(2 * a.empirical.value).epsilon(1e-14));
    CHECK(b.main.value == doctest::Approx(2 * a.main.value).epsilon(1e-14));
    CHECK(a.residual.value == doctest::Approx(a.empirical.value - a.main.value).epsilon(1e-12));
    // Support: fundamental d in the set with Y < |d| < 2Y.
    for (std::int64_t d : engine().support(F, Y)) {
      REQUIRE(-d > Y);
      REQUIRE(-d < 2 * Y);
      REQUIRE(engine().residues().contains(d));
    }
  }
}

TEST_CASE("decomposition and Mobius reassembly at Y = 2000") {
  const BumpFunction F(1, 2);
  const DecompositionReport d = engine().decomposition(F, 2000);
  CHECK(d.relative_mismatch <= 1e-12);
  const ErrorSplit s = engine().error_split(F, 2000);
  CHECK(s.relative_mismatch <= 1e-6);
  CHECK(s.observed == doctest::Approx(d.error_direct).epsilon(1e-15));
  CHECK(s.E1 + s.E2 == doctest::Approx(s.reassembled).epsilon(1e-12));
}

TEST_CASE("error split at Y = 10000") {
  const BumpFunction F(1, 2);
  const ErrorSplit s = engine().error_split(F, 10000);
  const DecompositionReport d = engine().decomposition(F, 10000);
  CHECK(std::fabs(d.error_direct) <= d.error_abs / 10);
  CHECK(s.A == error_threshold(10000, 11));
  std::set<std::uint64_t> seen;
  for (auto [a, e] : s.per_a) {
    // Only squarefree a prime to 4N occur: other classes carry no discriminant of the set.
    CHECK(std::gcd(a, std::uint64_t{44}) == 1);
    CHECK(is_squarefree_trial(a));
    CHECK(seen.insert(a).second);
  }
  REQUIRE(s.tail_abs_by_threshold.size() == 3);
  CHECK(s.tail_abs_by_threshold[0] >= s.tail_abs_by_threshold[1]);
  CHECK(s.tail_abs_by_threshold[1] >= s.tail_abs_by_threshold[2]);
}

TEST_CASE("residue discriminants divisible by a^2 with (a, 4N) > 1 are absent") {
  const ResidueSet rs(11);
  for (std::int64_t d : residue_discriminants(rs, 1, 20000)) {
    CHECK(-d % 4 != 0);
    CHECK(-d % 11 != 0);
  }
}

TEST_CASE("twisted sums: vanishing eta, bounds and Abel summation") {
  const Workspace& w = workspace_11a1();
  const ResidueSet rs(11);
  // a = v = m = 1: eta(n) != 0 only for -n in the set, and the least such n is 7.
  const TwistResult zero = twisted_partial_sum(w.coefficients(), rs, {1, 1, 1, 0}, 6);
  CHECK(zero.S == 0.0);
  CHECK(zero.support == 0);
  CHECK(twisted_partial_sum(w.coefficients(), rs, {1, 1, 1, 0}, 7).support == 1);

  // sum a_n eta(n)/n = S(x)/x + sum_{k < x} S(k) (1/k - 1/(k+1)).
  const TwistConfig cfg{3, 1, 1, 0};
  const std::uint64_t x = 3000;
  double direct = 0;
  for (std::uint64_t n = 1; n <= x; ++n)
    direct += static_cast<double>(w.coefficients()[n]) * twist_eta(rs, cfg, n) / static_cast<double>(n);
  double abel = twisted_partial_sum(w.coefficients(), rs, cfg, x).S / static_cast<double>(x);
  for (std::uint64_t k = 2; k < x; ++k)
    abel += twisted_partial_sum(w.coefficients(), rs, cfg, k).S * (1.0 / k - 1.0 / (k + 1));
  CHECK(std::fabs(abel - direct) <= 1e-10 * std::max(1.0, std::fabs(direct)));

  for (const TwistConfig& c : sample_twist_configs(11, 100, 10000, 20240917)) {
    const TwistResult r = twisted_partial_sum(w.coefficients(), rs, c, 100000);
    CHECK(r.ratio <= 1.0);
    CHECK(std::fabs(r.S) <= r.majorant);
    CHECK(r.q <= 10000);
  }
}

TEST_CASE("eta against its definition") {
  const ResidueSet rs(11);
  const TwistConfig c{5, 3, 1, 2};
  for (std::uint64_t n = 1; n < 2000; ++n) {
    int expected = 0;
    const std::int64_t diff = 4 - static_cast<std::int64_t>(n);
    if (diff % 9 == 0 && diff < 0 && rs.contains(diff / 9)) expected = kronecker(diff / 9, 5);
    REQUIRE(twist_eta(rs, c, n) == expected);
  }
}

TEST_CASE("twist sampler is deterministic and admissible") {
  const auto a = sample_twist_configs(11, 100, 10000, 20240917);
  const auto b = sample_twist_configs(11, 100, 10000, 20240917);
  const auto c = sample_twist_configs(11, 100, 10000, 1);
  REQUIRE(a.size() == 100);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].m == b[i].m);
    CHECK(a[i].a == b[i].a);
    CHECK(a[i].v == b[i].v);
    CHECK(a[i].u == b[i].u);
    differs |= a[i].m != c[i].m || a[i].u != c[i].u;
    CHECK(std::gcd(a[i].m, std::uint64_t{11}) == 1);
    CHECK(std::gcd(a[i].a, std::uint64_t{44}) == 1);
    CHECK(a[i].u < a[i].a * a[i].a * a[i].v * a[i].v);
  }
  CHECK(differs);
  CHECK_THROWS_AS(sample_twist_configs(11, 1, 10, 1), std::invalid_argument);
}

TEST_CASE("frozen twisted-sum constant for the default seed") {
  const Workspace& w = workspace_11a1();
  const ResidueSet rs(11);
  double worst = 0;
  for (const TwistConfig& c : sample_twist_configs(11, 100, 10000, 20240917))
    worst = std::max(worst, twisted_partial_sum(w.coefficients(), rs, c, 100000).ratio);
  CHECK(worst == doctest::Approx(0.00037926074071097679).epsilon(1e-12));
}

TEST_CASE("residual slope on synthetic data") {
  std::vector<double> Y, r;
  for (double y : {1000.0, 2000.0, 4000.0, 8000.0}) {
    Y.push_back(y);
    r.push_back(-3.0 * std::pow(y, 0.75));
  }
  const Estimate s = residual_slope(Y, r);
  CHECK(s.value == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(s.error <= 1e-10);
  // Tiny residuals are floored at 1e-3 sqrt(Y).
  const Estimate f = residual_slope(Y, {0.0, 0.0, 0.0, 0.0});
  CHECK(f.value == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("height sum is the weighted sum of L'_d") {
  const Workspace& w = workspace_11a1();
  const double omega = w.period().volume;
  const HeightReport h = engine().height_sum(3000, omega, density_constant(11), kL1, kLp1, {0.8, 0}, {0.75, 0});
  const auto ds = heegner_discriminants(engine().residues(), 1, 3000, w.sieve());
  double sum = 0;
  for (std::int64_t d : ds) {
    const double u = unit_count(d);
    sum += u * u * std::sqrt(static_cast<double>(-d)) / (2 * omega) * w.evaluator().l_prime(d);
  }
  CHECK(h.count == ds.size());
  CHECK(h.empirical.value == doctest::Approx(sum).epsilon(1e-12));
  CHECK(h.empirical.value > 0);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hm/curve.hpp"

using namespace hm;

namespace {

struct Cubic {
  double b2, b4, b6;
  double operator()(double x) const { return ((4.0 * x + b2) * x + 2.0 * b4) * x + b6; }
};

Cubic cubic(const WeierstrassModel& m) {
  return {static_cast<double>(m.b2()), static_cast<double>(m.b4()), static_cast<double>(m.b6())};
}

// Volume 2 x area of the period lattice from real integrals of dx/sqrt|f|,
// f = 4x^3 + b2 x^2 + 2 b4 x + b6, with substitutions that remove the endpoint singularities.
double volume_by_quadrature(const WeierstrassModel& m) {
  using boost::math::quadrature::exp_sinh;
  using boost::math::quadrature::gauss_kronrod;
  const Cubic f = cubic(m);
  const auto roots = real_two_torsion_roots(m);
  const double e1 = roots.front();
  if (roots.size() == 3) {
    const double e2 = roots[1], e3 = roots[2];
    // x = e1 + t^2 on [e1, inf): dx / sqrt f = dt / sqrt((x - e2)(x - e3)).
    exp_sinh<double> es;
    const double real = 2.0 * es.integrate([&](double t) {
      const double x = e1 + t * t;
      return 1.0 / std::sqrt((x - e2) * (x - e3));
    });
    // f < 0 on (e2, e1). x = e2 + (e1 - e2) sin^2 th: dx / sqrt(-f) = d th / sqrt(x - e3).
    const double imag = 2.0 * gauss_kronrod<double, 61>::integrate(
                                  [&](double th) {
                                    const double s = std::sin(th);
                                    return 1.0 / std::sqrt(e2 + (e1 - e2) * s * s - e3);
                                  },
                                  0.0, std::numbers::pi / 2, 15, 1e-15);
    // Rectangular lattice generated by real and i imag.
    return 2.0 * real * imag;
  }
  // One real root: f = 4 (x - e1)(x^2 + p x + q).
  const double p = f.b2 / 4.0 + e1, q = f.b4 / 2.0 + e1 * p;
  exp_sinh<double> es;
  const double real = 2.0 * es.integrate([&](double t) {
    const double x = e1 + t * t;
    return 1.0 / std::sqrt(x * x + p * x + q);
  });
  const double left = 2.0 * es.integrate([&](double t) {
    const double x = e1 - t * t;
    return 1.0 / std::sqrt(x * x + p * x + q);
  });
  // Lattice generated by w1 = real and (w1 + i left)/2: area = real * left / 2.
  return real * left;
}

}  // namespace

TEST_CASE("a_p examples for 11a1") {
  const CurveData c = builtin_curve("11a1");
  CHECK(a_p(c, 2) == -2);
  CHECK(a_p(c, 3) == -1);
  CHECK(a_p(c, 11) == 1);
  CHECK(count_points_naive(c.model, 2) == 5);
}

TEST_CASE("baby-step giant-step traces equal naive counts") {
  const PrimeSieve sieve(6000);
  for (const auto& label : builtin_curve_labels()) {
    const CurveData c = builtin_curve(label);
    int checked = 0;
    for (std::uint32_t p : sieve.primes()) {
      if (p < 5 || c.conductor % p == 0) continue;
      REQUIRE_MESSAGE(trace_bsgs(c.model, p) == trace_naive(c.model, p), label << " p=" << p);
      ++checked;
    }
    CHECK(checked > 700);
  }
}

TEST_CASE("bad primes: split and non-split multiplicative reduction") {
  // 14a1 has a_2 = -1, a_7 = 1; 15a1 has a_3 = -1, a_5 = 1.
  CHECK(a_p(builtin_curve("14a1"), 2) == -1);
  CHECK(a_p(builtin_curve("14a1"), 7) == 1);
  CHECK(a_p(builtin_curve("15a1"), 3) == -1);
  CHECK(a_p(builtin_curve("15a1"), 5) == 1);
}

TEST_CASE("model and conductor disagreeing at p is rejected") {
  CurveData c = builtin_curve("11a1");
  c.conductor = 33;
  CHECK_THROWS_AS(a_p(c, 3), std::domain_error);
}

TEST_CASE("invalid curves are rejected") {
  CurveData singular{"sing", {0, 0, 0, 0, 0}, 11, {}};
  CHECK_THROWS_AS(singular.validate(), std::invalid_argument);
  CurveData square = builtin_curve("11a1");
  square.conductor = 121;
  CHECK_THROWS_AS(square.validate(), std::invalid_argument);
  CHECK_THROWS(parse_curve_json(R"({"label":"x","a_invariants":[0,1],"conductor":11})"));
}

TEST_CASE("curve JSON round trip") {
  for (const auto& label : builtin_curve_labels()) {
    const CurveData c = builtin_curve(label);
    const CurveData back = parse_curve_json(curve_to_json(c));
    CHECK(back.label == c.label);
    CHECK(back.conductor == c.conductor);
    CHECK(back.model.a4 == c.model.a4);
    CHECK(back.model.a6 == c.model.a6);
    CHECK(back.modular_degree == c.modular_degree);
  }
}

TEST_CASE("coefficient examples for 11a1") {
  const PrimeSieve sieve(1000);
  const CoefficientTable t(builtin_curve("11a1"), sieve, 1000);
  CHECK(t[1] == 1);
  CHECK(t[4] == 2);
  CHECK(t[6] == 2);
  // q prod (1 - q^n)^2 (1 - q^11n)^2 = q - 2q^2 - q^3 + 2q^4 + q^5 + 2q^6 - 2q^7 - 2q^9 - 2q^10 + q^11 ...
  const std::vector<std::int64_t> expected = {1, -2, -1, 2, 1, 2, -2, 0, -2, -2, 1, -2, 4, 4, -1, -4, -2, 4, 0, 2};
  for (std::size_t n = 1; n <= expected.size(); ++n) CHECK(t[n] == expected[n - 1]);
  CHECK_THROWS_AS(t.at(1001), std::out_of_range);
  CHECK_THROWS_AS(t.at(0), std::out_of_range);
}

TEST_CASE("eta-product expansion of 11a1 to 2000 terms") {
  // f = q prod_{n>=1} (1 - q^n)^2 (1 - q^{11 n})^2, computed by integer series multiplication.
  const std::size_t M = 2000;
  std::vector<std::int64_t> s(M, 0);
  s[0] = 1;
  auto mul_one_minus = [&](std::size_t k) {
    for (std::size_t i = M - 1; i >= k; --i) s[i] -= s[i - k];
  };
  for (std::size_t n = 1; n < M; ++n) {
    mul_one_minus(n);
    mul_one_minus(n);
    if (11 * n < M) {
      mul_one_minus(11 * n);
      mul_one_minus(11 * n);
    }
  }
  const PrimeSieve sieve(M + 1);
  const CoefficientTable t(builtin_curve("11a1"), sieve, M);
  for (std::size_t n = 1; n <= M; ++n) REQUIRE(t[n] == s[n - 1]);
}

TEST_CASE("Hecke relations, multiplicativity and the Deligne bound hold on the whole table") {
  const std::uint32_t n_max = 200000;
  const PrimeSieve sieve(n_max + 1);
  for (const auto& label : builtin_curve_labels()) {
    const CurveData c = builtin_curve(label);
    const CoefficientTable t(c, sieve, n_max);
    REQUIRE(t[1] == 1);
    for (std::uint64_t n = 2; n <= n_max; ++n) {
      const auto f = sieve.factor(n);
      if (f.size() > 1) {
        const std::uint64_t p = f[0].first;
        std::uint64_t pk = 1;
        for (int i = 0; i < f[0].second; ++i) pk *= p;
        REQUIRE(t[n] == t[pk] * t[n / pk]);
      } else {
        const std::uint64_t p = f[0].first;
        if (n != p) {
          if (c.conductor % p == 0) {
            REQUIRE(t[n] == t[p] * t[n / p]);
          } else {
            const std::int64_t prev2 = (n / p == p) ? 1 : t[n / (p * p)];
            REQUIRE(t[n] == t[p] * t[n / p] - static_cast<std::int64_t>(p) * prev2);
          }
        }
      }
      REQUIRE(std::fabs(static_cast<double>(t[n])) <= sieve.divisor_count(n) * std::sqrt(static_cast<double>(n)) + 1e-9);
    }
  }
}

TEST_CASE("a_p from point counting matches a_{p^2} + p = a_p^2") {
  const PrimeSieve sieve(200000);
  const CurveData c = builtin_curve("37a1");
  const CoefficientTable t(c, sieve, 200000);
  int count = 0;
  for (std::uint32_t p : sieve.primes()) {
    if (static_cast<std::uint64_t>(p) * p > 200000 || count == 20) break;
    if (c.conductor % p == 0) continue;
    CHECK(t[static_cast<std::uint64_t>(p) * p] + static_cast<std::int64_t>(p) == a_p(c, p) * a_p(c, p));
    ++count;
  }
  CHECK(count == 20);
}

TEST_CASE("period volume against quadrature of dx/|y|") {
  for (const auto& label : builtin_curve_labels()) {
    const CurveData c = builtin_curve(label);
    const PeriodData p = periods(c.model);
    CHECK(p.volume > 0);
    const double q = volume_by_quadrature(c.model);
    CHECK_MESSAGE(std::fabs(p.volume - q) <= 1e-10 * q, label << " AGM " << p.volume << " quadrature " << q);
  }
}

TEST_CASE("period examples for 11a1") {
  const PeriodData p = periods(builtin_curve("11a1").model);
  CHECK(p.omega1 == doctest::Approx(1.269209304279553).epsilon(1e-13));
  CHECK(p.volume == doctest::Approx(3.703087246911918).epsilon(1e-13));
  CHECK_FALSE(p.two_real_components);
}

TEST_CASE("rescaling (a4, a6) -> (u^4 a4, u^6 a6) scales periods by 1/u") {
  const WeierstrassModel base{0, 0, 0, -11, 14};  // three real 2-torsion points
  const WeierstrassModel other{0, 0, 0, -2, 5};   // one real 2-torsion point
  for (const auto& m : {base, other}) {
    const PeriodData p = periods(m);
    for (std::int64_t u : {2, 3}) {
      const PeriodData q = periods(m.rescaled(u));
      CHECK(q.omega1 == doctest::Approx(p.omega1 / u).epsilon(1e-13));
      CHECK(q.volume == doctest::Approx(p.volume / (u * u)).epsilon(1e-13));
    }
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "hm/heegner.hpp"

using namespace hm;

namespace {

std::int64_t powmod(std::int64_t b, std::int64_t e, std::int64_t m) {
  __int128 r = 1, x = mod_floor(b, m);
  while (e > 0) {
    if (e & 1) r = r * x % m;
    x = x * x % m;
    e >>= 1;
  }
  return static_cast<std::int64_t>(r);
}

// d is a square unit mod 4N from local conditions: odd squares are 1 mod 4, and 1 mod 8
// once 8 | 4N; at each odd p | N, d must be a nonzero square mod p.
bool square_mod_4N_local(std::int64_t d, std::uint64_t N) {
  if (mod_floor(d, N % 2 == 0 ? 8 : 4) != 1) return false;
  std::uint64_t m = N;
  while (m % 2 == 0) m /= 2;
  for (std::uint64_t p = 3; p <= m; p += 2) {
    if (m % p != 0) continue;
    while (m % p == 0) m /= p;
    if (d % static_cast<std::int64_t>(p) == 0) return false;
    if (powmod(d, (static_cast<std::int64_t>(p) - 1) / 2, static_cast<std::int64_t>(p)) != 1) return false;
  }
  return true;
}

std::uint64_t lpf_trial(std::uint64_t n) {
  for (std::uint64_t q = 2; q * q <= n; ++q)
    if (n % q == 0) return q;
  return n;
}

}  // namespace

TEST_CASE("membership examples for N = 11") {
  const PrimeSieve sieve(100);
  const HeegnerSet s = enumerate_D(11, 100, sieve);
  auto has = [&](std::int64_t d) {
    for (const auto& h : s.discriminants)
      if (h.d == d) return true;
    return false;
  };
  CHECK(has(-7));
  CHECK_FALSE(has(-3));
  CHECK_FALSE(has(-9));
  CHECK(ResidueSet(11).contains(-7));
}

TEST_CASE("density constant for N = 11") {
  CHECK(density_constant(11) == doctest::Approx(11.0 / (6.0 * std::numbers::pi * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("residue class counts") {
  // phi(4N) / 2^{omega(4N)} for odd N; one more halving for even N (odd squares are 1 mod 8).
  CHECK(ResidueSet(11).size() == 5);
  CHECK(ResidueSet(14).size() == 3);
  CHECK(ResidueSet(15).size() == 2);
  CHECK(ResidueSet(17).size() == 8);
  CHECK(ResidueSet(19).size() == 9);
  CHECK(ResidueSet(37).size() == 18);
}

TEST_CASE("residue set agrees with local square conditions") {
  for (std::uint64_t N : {11, 14, 15, 17, 19, 37, 20, 24}) {
    const ResidueSet rs(N);
    for (std::int64_t d = -1; d > -20 * static_cast<std::int64_t>(N); --d) {
      const bool unit = std::gcd(static_cast<std::uint64_t>(-d), 4 * N) == 1;
      REQUIRE_MESSAGE(rs.contains(d) == (unit && square_mod_4N_local(d, N)), "N=" << N << " d=" << d);
      if (rs.contains(d)) {
        const std::uint32_t nu = rs.witness(d);
        REQUIRE(std::gcd(static_cast<std::uint64_t>(nu), 4 * N) == 1);
        REQUIRE(mod_floor(static_cast<std::int64_t>(nu) * nu - d, static_cast<std::int64_t>(4 * N)) == 0);
        for (std::uint32_t smaller = 1; smaller < nu; ++smaller)
          REQUIRE(mod_floor(static_cast<std::int64_t>(smaller) * smaller - d, static_cast<std::int64_t>(4 * N)) != 0);
      }
    }
  }
}

TEST_CASE("chi_d examples") {
  CHECK(chi_d(-7, 11) == 1);
  CHECK(chi_d(-7, 2) == 1);
  CHECK(chi_d(-7, 3) == -1);
  CHECK(chi_d(-7, 7) == 0);
  CHECK_THROWS(chi_d(-8, 3));
}

TEST_CASE("r_prime and r_ideal examples") {
  // u^2 + 7 v^2 = 4n with v != 0, u >= 0.
  CHECK(r_prime(-7, 2) == 2);   // (1, +-1)
  CHECK(r_prime(-7, 1) == 0);
  CHECK(r_prime(-7, 4) == 2);  // (3, +-1)
  CHECK(r_prime(-7, 8) == 4);  // (5, +-1), (2, +-2)
  CHECK(r_ideal(-7, 1).value() == 1.0);
  CHECK(r_ideal(-7, 2).value() == 2.0);
  CHECK(r_ideal(-3, 1).units == 3);
  CHECK(r_ideal(-3, 1).value() == 1.0);
  CHECK(r_ideal(-3, 3).value() == 1.0);
}

TEST_CASE("ideal count equals the divisor sum of chi_d for class number one") {
  for (std::int64_t d : {-3, -7, -11, -19, -43, -67, -163})
    for (std::uint64_t n = 1; n <= 500; ++n) {
      int s = 0;
      for (std::uint64_t e = 1; e <= n; ++e)
        if (n % e == 0) s += chi_d(d, e);
      REQUIRE_MESSAGE(r_ideal(d, n).value() == static_cast<double>(s), "d=" << d << " n=" << n);
    }
}

TEST_CASE("r_prime against a brute-force lattice count") {
  for (std::int64_t d : {-7, -35, -51, -3}) {
    for (std::uint64_t n = 1; n <= 300; ++n) {
      std::uint64_t count = 0;
      for (std::int64_t v = -40; v <= 40; ++v)
        for (std::int64_t u = 0; u <= 40; ++u)
          if (v != 0 && static_cast<std::uint64_t>(u * u - d * v * v) == 4 * n) ++count;
      REQUIRE_MESSAGE(r_prime(d, n) == count, "d=" << d << " n=" << n);
    }
  }
}

TEST_CASE("r'_d is sparse on average over the set") {
  const PrimeSieve sieve(40001);
  const ResidueSet rs(11);
  const auto ds = heegner_discriminants(rs, 1, 40000, sieve);
  for (std::uint64_t n = 1; n <= 10000; n += 7) {
    std::uint64_t total = 0;
    for (std::int64_t d : ds) {
      if (static_cast<std::uint64_t>(-d) > 4 * n) break;
      total += r_prime(d, n);
    }
    REQUIRE_MESSAGE(static_cast<double>(total) <= 4.0 * std::sqrt(static_cast<double>(n)), "n=" << n);
  }
}

TEST_CASE("detection by characters mod 4N") {
  // For odd N, 2^{-k} sum over products of the characters mod 4 and mod each p | N is the
  // indicator of the set; the characters come from Euler's criterion.
  for (std::uint64_t N : {11, 15}) {
    const ResidueSet rs(N);
    std::vector<std::uint64_t> odd_primes;
    for (std::uint64_t p = 3; p <= N; p += 2)
      if (N % p == 0 && lpf_trial(p) == p) odd_primes.push_back(p);
    for (std::int64_t d = -1; d > -4000; --d) {
      if (std::gcd(static_cast<std::uint64_t>(-d), 4 * N) != 1) continue;
      // Sum over the 2^{omega} products of the generating characters.
      const std::size_t k = odd_primes.size() + 1;
      int sum = 0;
      for (std::size_t mask = 0; mask < (1U << k); ++mask) {
        int value = 1;
        if (mask & 1) value *= mod_floor(d, 4) == 1 ? 1 : -1;
        for (std::size_t j = 0; j < odd_primes.size(); ++j)
          if (mask & (2U << j)) {
            const auto p = static_cast<std::int64_t>(odd_primes[j]);
            value *= powmod(d, (p - 1) / 2, p) == 1 ? 1 : -1;
          }
        sum += value;
      }
      REQUIRE(sum % (1 << k) == 0);
      REQUIRE_MESSAGE((sum == (1 << k)) == rs.contains(d), "N=" << N << " d=" << d);
    }
  }
}

TEST_CASE("enumeration is sorted, fundamental, and carries witnesses") {
  const PrimeSieve sieve(20001);
  for (std::uint64_t N : {11, 14, 37}) {
    const HeegnerSet s = enumerate_D(N, 20000, sieve);
    const ResidueSet rs(N);
    REQUIRE(!s.discriminants.empty());
    std::int64_t prev = 0;
    std::size_t brute = 0;
    for (std::int64_t d = -3; d >= -20000; --d)
      if (mod_floor(d, 4) == 1 && is_squarefree_trial(-d) && rs.contains(d)) ++brute;
    CHECK(s.discriminants.size() == brute);
    for (const auto& h : s.discriminants) {
      REQUIRE(h.d < prev);
      prev = h.d;
      REQUIRE(mod_floor(h.d, 4) == 1);
      REQUIRE(is_squarefree_trial(-h.d));
      REQUIRE(h.witness_nu == rs.witness(h.d));
    }
    // Trial division path agrees with the sieve path.
    const PrimeSieve small(100);
    const HeegnerSet t = enumerate_D(N, 20000, small);
    REQUIRE(t.discriminants.size() == s.discriminants.size());
    for (std::size_t i = 0; i < t.discriminants.size(); ++i) REQUIRE(t.discriminants[i].d == s.discriminants[i].d);
  }
}

TEST_CASE("heegner csv layout") {
  const PrimeSieve sieve(100);
  const std::string csv = heegner_csv(enumerate_D(11, 40, sieve));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# hm-csv v1 heegner", 0) == 0);
  std::getline(in, line);
  CHECK(line == "d,witness_nu");
  std::getline(in, line);
  CHECK(line.rfind("-7,", 0) == 0);
}

#include "hm/numtheory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hm {

PrimeSieve::PrimeSieve(std::uint32_t bound) : bound_(std::max<std::uint32_t>(bound, 2)) {
  lpf_.assign(static_cast<std::size_t>(bound_) + 1, 0);
  primes_.reserve(bound_ / 10 + 16);
  for (std::uint32_t i = 2; i <= bound_; ++i) {
    if (lpf_[i] == 0) {
      lpf_[i] = i;
      primes_.push_back(i);
    }
    for (std::uint32_t p : primes_) {
      const std::uint64_t k = static_cast<std::uint64_t>(p) * i;
      if (p > lpf_[i] || k > bound_) break;
      lpf_[k] = p;
    }
  }
}

void PrimeSieve::check_range(std::uint64_t n) const {
  if (n == 0 || n > bound_) {
    throw std::out_of_range("PrimeSieve: " + std::to_string(n) + " outside [1, " +
                            std::to_string(bound_) + "]");
  }
}

std::uint32_t PrimeSieve::least_prime_factor(std::uint64_t n) const {
  check_range(n);
  if (n < 2) throw std::out_of_range("PrimeSieve: least prime factor of 1");
  return lpf_[n];
}

bool PrimeSieve::is_prime(std::uint64_t n) const {
  check_range(n);
  return n >= 2 && lpf_[n] == n;
}

std::vector<std::pair<std::uint32_t, int>> PrimeSieve::factor(std::uint64_t n) const {
  check_range(n);
  std::vector<std::pair<std::uint32_t, int>> out;
  while (n > 1) {
    const std::uint32_t p = lpf_[n];
    int e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    out.emplace_back(p, e);
  }
  return out;
}

int PrimeSieve::mobius(std::uint64_t n) const {
  check_range(n);
  int mu = 1;
  while (n > 1) {
    const std::uint32_t p = lpf_[n];
    n /= p;
    if (n % p == 0) return 0;
    mu = -mu;
  }
  return mu;
}

int PrimeSieve::omega(std::uint64_t n) const {
  check_range(n);
  int w = 0;
  while (n > 1) {
    const std::uint32_t p = lpf_[n];
    while (n % p == 0) n /= p;
    ++w;
  }
  return w;
}

std::uint32_t PrimeSieve::divisor_count(std::uint64_t n) const {
  std::uint32_t t = 1;
  for (auto [p, e] : factor(n)) t *= static_cast<std::uint32_t>(e + 1);
  return t;
}

bool PrimeSieve::is_squarefree(std::uint64_t n) const { return mobius(n) != 0; }

int kronecker(std::int64_t d, std::uint64_t m) {
  if (m == 0) return (d == 1 || d == -1) ? 1 : 0;
  int result = 1;
  // Strip powers of two from m: (d/2) = 0 for even d, else (-1)^((d^2-1)/8).
  while ((m & 1U) == 0) {
    if ((d & 1) == 0) return 0;
    m >>= 1;
    const std::int64_t r8 = mod_floor(d, 8);
    if (r8 == 3 || r8 == 5) result = -result;
  }
  // Odd m: Jacobi symbol on a reduced nonnegative representative.
  std::uint64_t a = static_cast<std::uint64_t>(mod_floor(d, static_cast<std::int64_t>(m)));
  std::uint64_t n = m;
  while (a != 0) {
    while ((a & 1U) == 0) {
      a >>= 1;
      const std::uint64_t r = n & 7U;
      if (r == 3 || r == 5) result = -result;
    }
    std::swap(a, n);
    if ((a & 3U) == 3 && (n & 3U) == 3) result = -result;
    a %= n;
  }
  return n == 1 ? result : 0;
}

std::vector<std::uint32_t> unit_squares_mod(std::uint32_t q) {
  if (q == 0) throw std::invalid_argument("unit_squares_mod: q must be positive");
  if (q == 1) return {0};
  std::vector<bool> seen(q, false);
  for (std::uint64_t nu = 1; nu < q; ++nu) {
    if (std::gcd(nu, static_cast<std::uint64_t>(q)) == 1) seen[(nu * nu) % q] = true;
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t r = 0; r < q; ++r)
    if (seen[r]) out.push_back(r);
  return out;
}

std::uint64_t isqrt(std::uint64_t n) {
  using u128 = unsigned __int128;
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
  while (static_cast<u128>(r) * r > n) --r;
  while (static_cast<u128>(r + 1) * (r + 1) <= n) ++r;
  return r;
}

bool is_square(std::uint64_t n) {
  const std::uint64_t r = isqrt(n);
  return r * r == n;
}

bool is_squarefree_trial(std::uint64_t n) {
  if (n == 0) return false;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    if (n % (p * p) == 0) return false;
    if (n % p == 0) n /= p;
  }
  return true;
}

std::int64_t mod_floor(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace hm

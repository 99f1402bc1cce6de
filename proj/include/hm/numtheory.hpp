#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace hm {

/// Linear sieve storing the least prime factor of every integer up to a bound.
///
/// Immutable after construction, so one instance can be shared by all workers.
/// Möbius, omega and divisor counts are derived on demand from the factorisation.
class PrimeSieve {
 public:
  explicit PrimeSieve(std::uint32_t bound);

  std::uint32_t bound() const { return bound_; }
  std::span<const std::uint32_t> primes() const { return primes_; }

  /// Smallest prime dividing n, for 2 <= n <= bound.
  std::uint32_t least_prime_factor(std::uint64_t n) const;
  bool is_prime(std::uint64_t n) const;

  /// Prime factorisation as (p, exponent) pairs in ascending p.
  std::vector<std::pair<std::uint32_t, int>> factor(std::uint64_t n) const;

  int mobius(std::uint64_t n) const;
  int omega(std::uint64_t n) const;
  std::uint32_t divisor_count(std::uint64_t n) const;
  bool is_squarefree(std::uint64_t n) const;

 private:
  void check_range(std::uint64_t n) const;

  std::uint32_t bound_;
  std::vector<std::uint32_t> lpf_;
  std::vector<std::uint32_t> primes_;
};

/// Kronecker symbol (d/m). Total: defined for every d and every m >= 0.
int kronecker(std::int64_t d, std::uint64_t m);

/// { nu^2 mod q : gcd(nu, q) = 1 }, sorted ascending. q = 1 gives {0}.
std::vector<std::uint32_t> unit_squares_mod(std::uint32_t q);

std::uint64_t isqrt(std::uint64_t n);
bool is_square(std::uint64_t n);

/// Trial-division squarefree test for values beyond a sieve.
bool is_squarefree_trial(std::uint64_t n);

std::int64_t mod_floor(std::int64_t a, std::int64_t m);

}  // namespace hm

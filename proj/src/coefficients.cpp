#include <limits>
#include <stdexcept>
#include <string>

#include "hm/curve.hpp"
#include "hm/summation.hpp"

namespace hm {

CoefficientTable::CoefficientTable(const CurveData& curve, const PrimeSieve& sieve, std::uint32_t n_max,
                                   unsigned threads)
    : n_max_(n_max), conductor_(curve.conductor) {
  if (n_max == 0) throw std::invalid_argument("coefficient table: n_max must be positive");
  if (n_max > sieve.bound())
    throw std::invalid_argument("coefficient table: n_max " + std::to_string(n_max) + " exceeds sieve bound " +
                                std::to_string(sieve.bound()));

  // a_p for every prime up to n_max, in blocks so the per-task overhead stays small.
  const auto primes = sieve.primes();
  std::size_t n_primes = 0;
  while (n_primes < primes.size() && primes[n_primes] <= n_max) ++n_primes;
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n_primes + kBlock - 1) / kBlock;
  auto traces = parallel_map<std::vector<std::int32_t>>(blocks, threads, [&](std::size_t b) {
    std::vector<std::int32_t> out;
    for (std::size_t i = b * kBlock; i < std::min(n_primes, (b + 1) * kBlock); ++i)
      out.push_back(static_cast<std::int32_t>(a_p(curve, primes[i])));
    return out;
  });

  a_.assign(static_cast<std::size_t>(n_max) + 1, 0);
  a_[1] = 1;
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t i = 0; i < traces[b].size(); ++i) a_[primes[b * kBlock + i]] = traces[b][i];

  // Ascending n: n = p^k r with p = lpf(n), gcd(p, r) = 1.
  for (std::uint64_t n = 4; n <= n_max; ++n) {
    const std::uint32_t p = sieve.least_prime_factor(n);
    if (p == n) continue;
    std::uint64_t pk = p, r = n / p;
    while (r % p == 0) {
      pk *= p;
      r /= p;
    }
    __int128 v;
    if (r > 1) {
      v = static_cast<__int128>(a_[pk]) * a_[r];
    } else {
      v = static_cast<__int128>(a_[p]) * a_[n / p];
      if (conductor_ % p != 0) v -= static_cast<__int128>(p) * a_[n / p / p];
    }
    if (v > std::numeric_limits<std::int32_t>::max() || v < std::numeric_limits<std::int32_t>::min())
      throw std::overflow_error("coefficient table: a_n overflows at n=" + std::to_string(n));
    a_[n] = static_cast<std::int32_t>(v);
  }
}

std::int64_t CoefficientTable::at(std::uint64_t n) const {
  if (n == 0 || n > n_max_)
    throw std::out_of_range("coefficient a_" + std::to_string(n) + " outside table of size " +
                            std::to_string(n_max_));
  return a_[n];
}

}  // namespace hm

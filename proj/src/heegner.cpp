#include "hm/heegner.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hm {

ResidueSet::ResidueSet(std::uint64_t N) : N_(N) {
  if (N == 0) throw std::invalid_argument("residue set: N must be positive");
  if (N > (1ULL << 28)) throw std::invalid_argument("residue set: N too large");
  const std::uint64_t q = modulus();
  witness_.assign(q, 0);
  for (std::uint64_t nu = 1; nu < q; ++nu) {
    if (std::gcd(nu, q) != 1) continue;
    const std::uint64_t r = nu * nu % q;
    if (witness_[r] == 0) witness_[r] = static_cast<std::uint32_t>(nu);
  }
  for (std::uint64_t r = 0; r < q; ++r)
    if (witness_[r] != 0) residues_.push_back(static_cast<std::uint32_t>(r));
}

namespace {

bool squarefree(std::uint64_t n, const PrimeSieve& sieve) {
  return n <= sieve.bound() ? sieve.is_squarefree(n) : is_squarefree_trial(n);
}

}  // namespace

std::vector<std::int64_t> residue_discriminants(const ResidueSet& residues, std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::int64_t> out;
  for (std::uint64_t a = std::max<std::uint64_t>(lo, 1); a <= hi; ++a) {
    const auto d = -static_cast<std::int64_t>(a);
    if (residues.contains(d)) out.push_back(d);
  }
  return out;
}

std::vector<std::int64_t> heegner_discriminants(const ResidueSet& residues, std::uint64_t lo, std::uint64_t hi,
                                                const PrimeSieve& sieve) {
  std::vector<std::int64_t> out;
  for (std::int64_t d : residue_discriminants(residues, lo, hi))
    if (squarefree(static_cast<std::uint64_t>(-d), sieve)) out.push_back(d);
  return out;
}

HeegnerSet enumerate_D(std::uint64_t N, std::uint64_t Y, const PrimeSieve& sieve) {
  if (!is_squarefree_trial(N)) throw std::invalid_argument("enumerate_D: conductor must be squarefree");
  const ResidueSet residues(N);
  HeegnerSet set{N, Y, {}};
  for (std::int64_t d : heegner_discriminants(residues, 1, Y, sieve))
    set.discriminants.push_back({d, residues.witness(d)});
  return set;
}

double density_constant(std::uint64_t N) {
  if (!is_squarefree_trial(N)) throw std::invalid_argument("density constant: conductor must be squarefree");
  const ResidueSet residues(N);
  double c = 3.0 / (std::numbers::pi * std::numbers::pi * static_cast<double>(N));
  auto remove = [&](std::uint64_t p) { c /= 1.0 - 1.0 / (static_cast<double>(p) * static_cast<double>(p)); };
  std::uint64_t rest = 2 * N;
  for (std::uint64_t p = 2; p * p <= rest; ++p) {
    if (rest % p) continue;
    while (rest % p == 0) rest /= p;
    remove(p);
  }
  if (rest > 1) remove(rest);
  return c * static_cast<double>(residues.size());
}

int chi_d(std::int64_t d, std::uint64_t m) {
  if (d >= 0 || mod_floor(d, 4) != 1) throw std::invalid_argument("chi_d: need d < 0 with d = 1 mod 4");
  return kronecker(d, m);
}

std::uint64_t r_prime(std::int64_t d, std::uint64_t n) {
  const auto ad = static_cast<std::uint64_t>(d < 0 ? -d : d);
  if (ad == 0) throw std::invalid_argument("r_prime: d must be nonzero");
  std::uint64_t count = 0;
  for (std::uint64_t v = 1; ad * v * v <= 4 * n; ++v)
    if (is_square(4 * n - ad * v * v)) count += 2;  // u = sqrt(rest) with +v and -v
  return count;
}

IdealCount r_ideal(std::int64_t d, std::uint64_t n) {
  if (d >= 0 || mod_floor(d, 4) != 1) throw std::invalid_argument("r_ideal: need d < 0 with d = 1 mod 4");
  const auto ad = static_cast<std::uint64_t>(-d);
  IdealCount out;
  out.units = d == -3 ? 3 : 1;
  for (std::uint64_t v = 0; ad * v * v <= 4 * n; ++v) {
    const std::uint64_t rest = 4 * n - ad * v * v;
    if (!is_square(rest)) continue;
    const std::uint64_t along_u = rest == 0 ? 1 : 2;
    out.lattice_points += along_u * (v == 0 ? 1 : 2);
  }
  return out;
}

std::string heegner_csv(const HeegnerSet& set) {
  std::ostringstream os;
  os << "# hm-csv v1 heegner N=" << set.N << " Y=" << set.Y << "\n";
  os << "d,witness_nu\n";
  for (const auto& h : set.discriminants) os << h.d << "," << h.witness_nu << "\n";
  return os.str();
}

}  // namespace hm

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hm/numtheory.hpp"

namespace hm {

/// The classes nu^2 mod 4N with gcd(nu, 4N) = 1, with the least such nu for each.
class ResidueSet {
 public:
  explicit ResidueSet(std::uint64_t N);

  std::uint64_t conductor() const { return N_; }
  std::uint64_t modulus() const { return 4 * N_; }
  const std::vector<std::uint32_t>& residues() const { return residues_; }
  std::size_t size() const { return residues_.size(); }

  /// d mod 4N lies in the set (d of any sign).
  bool contains(std::int64_t d) const { return witness_[static_cast<std::size_t>(mod_floor(d, modulus()))] != 0; }
  /// Least nu in [1, 4N) with gcd(nu, 4N) = 1 and nu^2 = d mod 4N, or 0 if none.
  std::uint32_t witness(std::int64_t d) const { return witness_[static_cast<std::size_t>(mod_floor(d, modulus()))]; }

 private:
  std::uint64_t N_;
  std::vector<std::uint32_t> residues_;
  std::vector<std::uint32_t> witness_;  // indexed by class mod 4N
};

struct HeegnerDiscriminant {
  std::int64_t d = 0;
  std::int64_t witness_nu = 0;
};

/// Odd fundamental d < 0 with d = nu^2 mod 4N, sorted by |d| ascending.
struct HeegnerSet {
  std::uint64_t N = 0;
  std::uint64_t Y = 0;
  std::vector<HeegnerDiscriminant> discriminants;
};

/// All d in the set with |d| <= Y. Squarefreeness comes from the sieve when it
/// reaches Y, by trial division otherwise.
HeegnerSet enumerate_D(std::uint64_t N, std::uint64_t Y, const PrimeSieve& sieve);

/// d in the set with lo <= |d| <= hi, ascending |d|.
std::vector<std::int64_t> heegner_discriminants(const ResidueSet& residues, std::uint64_t lo, std::uint64_t hi,
                                                const PrimeSieve& sieve);
/// Same without the squarefree condition: d < 0 with d mod 4N in the residue set.
std::vector<std::int64_t> residue_discriminants(const ResidueSet& residues, std::uint64_t lo, std::uint64_t hi);

/// c_N = 3/(pi^2 N) prod_{p | 2N} (1 - p^{-2})^{-1} card(ResidueSet); the set has density 2 c_N.
double density_constant(std::uint64_t N);

/// chi_d(m) for a discriminant d < 0, d = 1 mod 4.
int chi_d(std::int64_t d, std::uint64_t m);

/// #{(u, v) : u >= 0, v != 0, u^2 + |d| v^2 = 4n}.
std::uint64_t r_prime(std::int64_t d, std::uint64_t n);

/// Principal ideals of norm n: lattice points (u, v) in Z^2 with u^2 + |d| v^2 = 4n,
/// divided by the number 2 u_d of roots of unity.
struct IdealCount {
  std::uint64_t lattice_points = 0;
  int units = 1;  // u_d; 3 when d = -3
  double value() const { return static_cast<double>(lattice_points) / (2.0 * units); }
};
IdealCount r_ideal(std::int64_t d, std::uint64_t n);

/// "# hm-csv v1 heegner" header, then one "d,witness_nu" row per discriminant.
std::string heegner_csv(const HeegnerSet& set);

}  // namespace hm

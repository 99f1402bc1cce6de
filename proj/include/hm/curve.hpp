#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hm/numtheory.hpp"

namespace hm {

/// Integral Weierstrass model y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6.
struct WeierstrassModel {
  std::int64_t a1 = 0, a2 = 0, a3 = 0, a4 = 0, a6 = 0;

  __int128 b2() const;
  __int128 b4() const;
  __int128 b6() const;
  __int128 b8() const;
  __int128 c4() const;
  __int128 c6() const;
  __int128 discriminant() const;

  /// The model with (a4, a6) replaced by (u^4 a4, u^6 a6); only meaningful when a1 = a2 = a3 = 0.
  WeierstrassModel rescaled(std::int64_t u) const;
};

/// Elliptic curve over Q with squarefree conductor.
struct CurveData {
  std::string label;
  WeierstrassModel model;
  std::uint64_t conductor = 0;
  std::optional<std::uint64_t> modular_degree;  // external input, cross-checks only

  /// Throws std::invalid_argument unless the model is nonsingular and the conductor squarefree.
  void validate() const;
  std::vector<std::uint32_t> bad_primes() const;
};

CurveData parse_curve_json(const std::string& text);
CurveData load_curve(const std::string& path);
std::string curve_to_json(const CurveData& curve);

/// Curves shipped with the project: 11a1, 14a1, 15a1, 17a1, 19a1, 37a1.
CurveData builtin_curve(const std::string& label);
std::vector<std::string> builtin_curve_labels();

// --- Point counting -------------------------------------------------------

/// #E(F_p) over all projective points of the reduced equation, singular point included.
std::int64_t count_points_naive(const WeierstrassModel& model, std::uint32_t p);

/// p + 1 - #E(F_p) by direct enumeration.
std::int64_t trace_naive(const WeierstrassModel& model, std::uint32_t p);

/// Trace of Frobenius by baby-step giant-step on E and its quadratic twist.
/// Requires p >= 5 of good reduction and p < 2^26.
std::int64_t trace_bsgs(const WeierstrassModel& model, std::uint32_t p);

/// a_p of the curve. Good primes: p + 1 - #E(F_p). Bad primes: +1 split, -1 non-split.
/// Throws std::domain_error if the model and conductor disagree at p.
std::int64_t a_p(const CurveData& curve, std::uint32_t p);

// --- Fourier coefficients -------------------------------------------------

/// Exact coefficients a_1..a_{n_max} of the newform attached to the curve.
class CoefficientTable {
 public:
  CoefficientTable() = default;
  CoefficientTable(const CurveData& curve, const PrimeSieve& sieve, std::uint32_t n_max,
                   unsigned threads = 0);

  std::uint32_t n_max() const { return n_max_; }
  std::int64_t operator[](std::uint64_t n) const { return a_[n]; }
  std::int64_t at(std::uint64_t n) const;
  const std::vector<std::int32_t>& values() const { return a_; }
  std::uint64_t conductor() const { return conductor_; }

 private:
  std::uint32_t n_max_ = 0;
  std::uint64_t conductor_ = 0;
  std::vector<std::int32_t> a_;  // index 0 unused
};

// --- Periods --------------------------------------------------------------

struct PeriodData {
  double omega1 = 0.0;     // least positive real period
  double omega2_re = 0.0;  // second lattice generator
  double omega2_im = 0.0;
  bool two_real_components = false;  // discriminant > 0: rectangular lattice
  double volume = 0.0;               // 2 x area of a fundamental parallelogram
};

/// Period lattice by the arithmetic-geometric mean. Throws std::runtime_error if
/// the AGM has not converged to `tol` after 80 iterations.
PeriodData periods(const WeierstrassModel& model, double tol = 1e-15);

/// Real roots of 4x^3 + b2 x^2 + 2 b4 x + b6, descending.
std::vector<double> real_two_torsion_roots(const WeierstrassModel& model);

}  // namespace hm

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hm/curve.hpp"

namespace hm {
namespace {

using ld = long double;

ld agm(ld a, ld b, double tol) {
  for (int i = 0; i < 80; ++i) {
    if (std::fabs(a - b) <= tol * std::fabs(a)) return (a + b) / 2;
    const ld next_a = (a + b) / 2;
    b = std::sqrt(a * b);
    a = next_a;
  }
  throw std::runtime_error("AGM did not converge within 80 iterations");
}

// 4x^3 + b2 x^2 + 2 b4 x + b6 and its derivative.
struct Cubic {
  ld c3, c2, c1, c0;
  ld operator()(ld x) const { return ((c3 * x + c2) * x + c1) * x + c0; }
  ld prime(ld x) const { return (3 * c3 * x + 2 * c2) * x + c1; }
  ld polish(ld x) const {
    for (int i = 0; i < 8; ++i) {
      const ld d = prime(x);
      if (d == 0) break;
      const ld step = (*this)(x) / d;
      x -= step;
      if (std::fabs(step) <= 1e-19L * std::max<ld>(1, std::fabs(x))) break;
    }
    return x;
  }
};

Cubic two_torsion_cubic(const WeierstrassModel& m) {
  return {4, static_cast<ld>(m.b2()), 2 * static_cast<ld>(m.b4()), static_cast<ld>(m.b6())};
}

}  // namespace

std::vector<double> real_two_torsion_roots(const WeierstrassModel& model) {
  const Cubic g = two_torsion_cubic(model);
  // Depressed form t^3 + p t + q with x = t - c2/(3 c3).
  const ld a = g.c2 / g.c3, b = g.c1 / g.c3, c = g.c0 / g.c3;
  const ld shift = a / 3;
  const ld p = b - a * a / 3;
  const ld q = 2 * a * a * a / 27 - a * b / 3 + c;
  std::vector<ld> roots;
  if (model.discriminant() > 0) {
    const ld r = std::sqrt(-p / 3);
    const ld phi = std::acos(std::clamp<ld>(3 * q / (2 * p * r), -1, 1));
    for (int k = 0; k < 3; ++k) roots.push_back(2 * r * std::cos((phi - 2 * std::numbers::pi_v<ld> * k) / 3) - shift);
  } else {
    const ld disc = q * q / 4 + p * p * p / 27;
    const ld s = std::sqrt(std::max<ld>(disc, 0));
    roots.push_back(std::cbrt(-q / 2 + s) + std::cbrt(-q / 2 - s) - shift);
  }
  std::vector<double> out;
  for (ld r : roots) out.push_back(static_cast<double>(g.polish(r)));
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

PeriodData periods(const WeierstrassModel& model, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("periods: tolerance must be positive");
  const ld pi = std::numbers::pi_v<ld>;
  const Cubic g = two_torsion_cubic(model);
  const std::vector<double> roots_d = real_two_torsion_roots(model);
  PeriodData out;
  if (model.discriminant() > 0) {
    const ld e1 = g.polish(roots_d[0]), e2 = g.polish(roots_d[1]), e3 = g.polish(roots_d[2]);
    out.two_real_components = true;
    out.omega1 = static_cast<double>(pi / agm(std::sqrt(e1 - e3), std::sqrt(e1 - e2), tol));
    out.omega2_re = 0.0;
    out.omega2_im = static_cast<double>(pi / agm(std::sqrt(e1 - e3), std::sqrt(e2 - e3), tol));
  } else {
    const ld e1 = g.polish(roots_d[0]);
    const ld b2 = static_cast<ld>(model.b2()), b4 = static_cast<ld>(model.b4());
    const ld a = 3 * e1 + b2 / 4;
    const ld b = std::sqrt(3 * e1 * e1 + b2 * e1 / 2 + b4 / 2);
    out.two_real_components = false;
    out.omega1 = static_cast<double>(2 * pi / agm(2 * std::sqrt(b), std::sqrt(2 * b + a), tol));
    out.omega2_re = -out.omega1 / 2;
    out.omega2_im = static_cast<double>(pi / agm(2 * std::sqrt(b), std::sqrt(2 * b - a), tol));
  }
  out.volume = 2.0 * out.omega1 * out.omega2_im;
  if (!(out.volume > 0)) throw std::runtime_error("periods: nonpositive lattice volume");
  return out;
}

}  // namespace hm

#include "hm/special.hpp"

#include <cmath>
#include <stdexcept>

namespace hm {

std::complex<double> log_gamma(std::complex<double> z) {
  if (!(z.real() > 0.0)) throw std::domain_error("log_gamma: requires Re z > 0");
  std::complex<double> shift = 0.0;
  while (z.real() < 12.0) {
    shift += std::log(z);
    z += 1.0;
  }
  // B_{2k} / (2k (2k-1)) for k = 1..8.
  static constexpr double kCoeff[] = {
      1.0 / 12.0,          -1.0 / 360.0,         1.0 / 1260.0,       -1.0 / 1680.0,
      1.0 / 1188.0,        -691.0 / 360360.0,    1.0 / 156.0,        -3617.0 / 122400.0,
  };
  const std::complex<double> inv = 1.0 / z, inv2 = inv * inv;
  std::complex<double> series = 0.0, power = inv;
  for (double c : kCoeff) {
    series += c * power;
    power *= inv2;
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return (z - 0.5) * std::log(z) - z + half_log_2pi + series - shift;
}

}  // namespace hm

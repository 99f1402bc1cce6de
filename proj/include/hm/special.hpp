#pragma once

#include <complex>
#include <numbers>

namespace hm {

inline constexpr double kEulerGamma = std::numbers::egamma;

/// A branch of log Gamma(z) for Re z > 0 (continuous along vertical lines).
/// Recurrence up to Re z >= 12, then the Stirling series with eight Bernoulli terms.
std::complex<double> log_gamma(std::complex<double> z);

}  // namespace hm

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hm/afe.hpp"
#include "hm/special.hpp"
#include "hm/summation.hpp"

namespace hm {

void CutoffParams::validate() const {
  if (!(c > 0.3 && c < 1.5)) throw std::invalid_argument("cutoff: contour abscissa must lie in (0.3, 1.5)");
  if (!(T > 0 && h > 0 && h < T)) throw std::invalid_argument("cutoff: need 0 < h < T");
  if (!(grid_ratio > 1.0 && grid_ratio < 1.5)) throw std::invalid_argument("cutoff: grid ratio must lie in (1, 1.5)");
  if (!(x_min > 0 && x_max > x_min * grid_ratio)) throw std::invalid_argument("cutoff: bad cache range");
}

double CutoffFunction::throw_nonpositive() { throw std::domain_error("cutoff: x must be positive"); }

double CutoffFunction::envelope(double x) { return std::pow(x, -0.25) * std::exp(-2.0 * std::sqrt(x)); }

// Residues at w = 0, -1, -2, -3 after moving the contour to the left:
//   V = sum_k x^k/(k!)^2 (2 H_k - t - 2 gamma),  H_k harmonic numbers.
// The omitted terms are O(x^4 |t|).
namespace {
constexpr double kFactSq[] = {1.0, 1.0, 4.0, 36.0};
constexpr double kHarmonic[] = {0.0, 1.0, 1.5, 11.0 / 6.0};
}  // namespace

double CutoffFunction::small_v(double t) {
  const double x = std::exp(t);
  double sum = 0.0, xk = 1.0;
  for (int k = 0; k < 4; ++k) {
    sum += xk / kFactSq[k] * (2.0 * kHarmonic[k] - t - 2.0 * kEulerGamma);
    xk *= x;
  }
  return sum;
}

// W = 1 - int_0^x V.
double CutoffFunction::small_w(double t) {
  const double x = std::exp(t);
  double sum = 1.0, xk1 = x;
  for (int k = 0; k < 4; ++k) {
    const double k1 = k + 1.0;
    sum -= xk1 / (kFactSq[k] * k1) * (2.0 * kHarmonic[k] - 2.0 * kEulerGamma - t + 1.0 / k1);
    xk1 *= x;
  }
  return sum;
}

CutoffFunction::CutoffFunction(CutoffParams cutoff_params) : params_(cutoff_params) {
  params_.validate();
  // (1/2 pi i) int_{c-iT}^{c+iT} f(w) dw = (1/pi) int_0^T Re f(c+iy) dy for real x.
  const auto nodes = static_cast<std::size_t>(std::floor(params_.T / params_.h)) + 1;
  kernel_v_.resize(nodes);
  kernel_w_.resize(nodes);
  node_y_.resize(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double y = static_cast<double>(k) * params_.h;
    const std::complex<double> w(params_.c, y);
    const std::complex<double> g2 = std::exp(2.0 * log_gamma(1.0 + w));
    const double weight = (k == 0 ? 0.5 : 1.0) * params_.h / std::numbers::pi;
    node_y_[k] = y;
    kernel_v_[k] = weight * g2 / (w * w);
    kernel_w_[k] = weight * g2 / w;
  }

  const double dt = std::log(params_.grid_ratio);
  t_min_ = std::log(params_.x_min);
  intervals_ = static_cast<std::size_t>(std::ceil((std::log(params_.x_max) - t_min_) / dt));
  t_max_ = t_min_ + static_cast<double>(intervals_) * dt;
  inv_dt_ = 1.0 / dt;

  const std::size_t n_nodes = intervals_ + 1;
  node_x_.resize(n_nodes);
  node_v_.resize(n_nodes);
  std::vector<double> w_val(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const double x = std::exp(t_min_ + static_cast<double>(i) * dt);
    node_x_[i] = x;
    node_v_[i] = v_quadrature(x);
    w_val[i] = w_quadrature(x);
  }

  // Quintic Hermite on s in [0, 1], derivatives scaled by dt.
  auto build = [&](auto&& f, auto&& f1, auto&& f2, std::vector<double>& coef) {
    coef.resize(6 * intervals_);
    for (std::size_t i = 0; i < intervals_; ++i) {
      const double F0 = f(i), F1 = f(i + 1);
      const double D0 = dt * f1(i), D1 = dt * f1(i + 1);
      const double S0 = dt * dt * f2(i), S1 = dt * dt * f2(i + 1);
      double* a = &coef[6 * i];
      a[0] = F0;
      a[1] = D0;
      a[2] = 0.5 * S0;
      a[3] = 10.0 * (F1 - F0) - 6.0 * D0 - 4.0 * D1 - 1.5 * S0 + 0.5 * S1;
      a[4] = -15.0 * (F1 - F0) + 8.0 * D0 + 7.0 * D1 + 1.5 * S0 - S1;
      a[5] = 6.0 * (F1 - F0) - 3.0 * D0 - 3.0 * D1 - 0.5 * S0 + 0.5 * S1;
    }
  };
  build([&](std::size_t i) { return node_v_[i]; }, [&](std::size_t i) { return -w_val[i]; },
        [&](std::size_t i) { return node_x_[i] * node_v_[i]; }, v_coef_);
  build([&](std::size_t i) { return w_val[i]; }, [&](std::size_t i) { return -node_x_[i] * node_v_[i]; },
        [&](std::size_t i) { return node_x_[i] * (w_val[i] - node_v_[i]); }, w_coef_);
}

double CutoffFunction::quadrature(double x, const std::vector<std::complex<double>>& kernel) const {
  if (!(x > 0)) throw std::domain_error("cutoff: x must be positive");
  const double logx = std::log(x);
  const double scale = std::exp(-params_.c * logx);
  CompensatedSum acc;
  for (std::size_t k = 0; k < kernel.size(); ++k) {
    // Re[kernel * e^{-i y log x}]
    const double phase = -node_y_[k] * logx;
    acc.add(kernel[k].real() * std::cos(phase) - kernel[k].imag() * std::sin(phase));
  }
  return scale * acc.value();
}

double CutoffFunction::v_quadrature(double x) const { return quadrature(x, kernel_v_); }
double CutoffFunction::w_quadrature(double x) const { return quadrature(x, kernel_w_); }

double CutoffFunction::decay_constant(double lo, double hi) const {
  double best = 0.0;
  for (std::size_t i = 0; i < node_x_.size(); ++i) {
    const double x = node_x_[i];
    if (x < lo || x > hi) continue;
    best = std::max(best, node_v_[i] / envelope(x));
  }
  return best;
}

}  // namespace hm

#pragma once

#include <cmath>

namespace hm {

/// A computed real number together with an absolute error bar.
struct Estimate {
  double value = 0.0;
  double error = 0.0;

  friend Estimate operator+(Estimate a, Estimate b) { return {a.value + b.value, a.error + b.error}; }
  friend Estimate operator-(Estimate a, Estimate b) { return {a.value - b.value, a.error + b.error}; }
  friend Estimate operator*(Estimate a, Estimate b) {
    return {a.value * b.value, std::fabs(a.value) * b.error + std::fabs(b.value) * a.error + a.error * b.error};
  }
  friend Estimate operator*(double s, Estimate a) { return {s * a.value, std::fabs(s) * a.error}; }
  friend Estimate operator*(Estimate a, double s) { return s * a; }
  friend Estimate operator/(Estimate a, double s) { return {a.value / s, a.error / std::fabs(s)}; }
  friend Estimate operator/(Estimate a, Estimate b) {
    const double q = a.value / b.value;
    return {q, (a.error + std::fabs(q) * b.error) / (std::fabs(b.value) - b.error)};
  }
};

inline Estimate exact(double v) { return {v, 0.0}; }

}  // namespace hm

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "gel/types.hpp"

namespace gel {

using ScalarFn = std::function<double(double)>;

enum class ActivationKind { tanh, erf_scaled, sine, linear, custom };

// Odd scalar activation with bounded first three derivatives. Builtins are
// bitwise odd (libm sin/tanh/erf are sign symmetric), which makes symmetric
// quadrature sums of odd integrands cancel exactly.
struct Activation {
  ActivationKind kind = ActivationKind::tanh;
  ScalarFn eval;
  ScalarFn d1;
  ScalarFn d2;
  ScalarFn d3;

  std::string name() const {
    switch (kind) {
      case ActivationKind::tanh: return "tanh";
      case ActivationKind::erf_scaled: return "erf";
      case ActivationKind::sine: return "sine";
      case ActivationKind::linear: return "linear";
      case ActivationKind::custom: return "custom";
    }
    return "?";
  }
};

inline Activation tanh_activation() {
  Activation a;
  a.kind = ActivationKind::tanh;
  a.eval = [](double x) { return std::tanh(x); };
  a.d1 = [](double x) { double t = std::tanh(x); return 1.0 - t * t; };
  a.d2 = [](double x) { double t = std::tanh(x); return -2.0 * t * (1.0 - t * t); };
  a.d3 = [](double x) {
    double t = std::tanh(x), s = 1.0 - t * t;
    return -2.0 * s * (s - 2.0 * t * t);
  };
  return a;
}

// sigma(x) = erf(x / sqrt(2)); normalized so sigma'(0) = sqrt(2/pi)
inline Activation erf_activation() {
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  constexpr double sqrt_2_over_pi = 0.7978845608028653559;
  Activation a;
  a.kind = ActivationKind::erf_scaled;
  a.eval = [](double x) { return std::erf(x * inv_sqrt2); };
  a.d1 = [](double x) { return sqrt_2_over_pi * std::exp(-0.5 * x * x); };
  a.d2 = [](double x) { return -x * sqrt_2_over_pi * std::exp(-0.5 * x * x); };
  a.d3 = [](double x) {
    return (x * x - 1.0) * sqrt_2_over_pi * std::exp(-0.5 * x * x);
  };
  return a;
}

inline Activation sine_activation() {
  Activation a;
  a.kind = ActivationKind::sine;
  a.eval = [](double x) { return std::sin(x); };
  a.d1 = [](double x) { return std::cos(x); };
  a.d2 = [](double x) { return -std::sin(x); };
  a.d3 = [](double x) { return -std::cos(x); };
  return a;
}

inline Activation linear_activation() {
  Activation a;
  a.kind = ActivationKind::linear;
  a.eval = [](double x) { return x; };
  a.d1 = [](double) { return 1.0; };
  a.d2 = [](double) { return 0.0; };
  a.d3 = [](double) { return 0.0; };
  return a;
}

// Oddness and derivative consistency are asserted on a grid instead of
// trusting the caller. Activations with unbounded derivatives at isolated
// points are rejected.
inline void validate_activation(const Activation& a, double grid_max = 6.0,
                                int grid_points = 241) {
  const double tol_odd = 1e-12;
  const double fd_step = 1e-5;
  const double tol_fd = 1e-6;
  for (int i = 0; i < grid_points; ++i) {
    const double x = -grid_max + 2.0 * grid_max * i / (grid_points - 1);
    const double fx = a.eval(x);
    if (!std::isfinite(fx) || !std::isfinite(a.d1(x)) || !std::isfinite(a.d2(x)) ||
        !std::isfinite(a.d3(x)))
      throw std::invalid_argument("activation: non-finite value on test grid");
    if (std::abs(a.eval(-x) + fx) > tol_odd * std::max(1.0, std::abs(fx)))
      throw std::invalid_argument("activation: not odd on test grid");
    const double fd = (a.eval(x + fd_step) - a.eval(x - fd_step)) / (2.0 * fd_step);
    const double d1 = a.d1(x);
    if (std::abs(fd - d1) > tol_fd * std::max(1.0, std::abs(d1)))
      throw std::invalid_argument("activation: d1 inconsistent with eval");
  }
}

inline Activation custom_activation(ScalarFn eval, ScalarFn d1, ScalarFn d2,
                                    ScalarFn d3) {
  Activation a;
  a.kind = ActivationKind::custom;
  a.eval = std::move(eval);
  a.d1 = std::move(d1);
  a.d2 = std::move(d2);
  a.d3 = std::move(d3);
  validate_activation(a);
  return a;
}

inline Activation make_activation(const std::string& name) {
  if (name == "tanh") return tanh_activation();
  if (name == "erf") return erf_activation();
  if (name == "sine") return sine_activation();
  if (name == "linear") return linear_activation();
  throw std::invalid_argument("unknown activation: " + name);
}

}  // namespace gel

#pragma once

#include <algorithm>
#include <cmath>

#include "gel/quadrature.hpp"
#include "gel/types.hpp"

namespace gel {

// Standard mollifier zeta(x) = kappa exp(-1/(1-x^2)) on |x| < 1, 0 outside,
// with kappa chosen so the integral is 1. kappa is computed once by adaptive
// quadrature and cached.
inline double mollifier_kappa() {
  static const double kappa = [] {
    const double I = adaptive_simpson(
        [](double x) {
          const double s = 1.0 - x * x;
          return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
        },
        -1.0, 1.0, 1e-14);
    return 1.0 / I;
  }();
  return kappa;
}

inline double mollifier_unit(double x) {
  const double s = 1.0 - x * x;
  return s > 0.0 ? mollifier_kappa() * std::exp(-1.0 / s) : 0.0;
}

// zeta_delta(x) = zeta(x/delta)/delta, supported on [-delta, delta]
inline double mollifier_eval(double x, double delta) {
  return mollifier_unit(x / delta) / delta;
}

// integral of zeta_delta over [a, b]
inline double mollifier_integral(double a, double b, double delta) {
  a = std::max(a, -delta);
  b = std::min(b, delta);
  if (!(a < b)) return 0.0;
  return adaptive_simpson([delta](double u) { return mollifier_eval(u, delta); }, a,
                          b, 1e-12);
}

// Smooth window Omega_{T,delta} = indicator([-T-delta/2, T+delta/2]) * zeta_{delta/2}.
// Equals 1 on [-T, T] and 0 outside [-T-delta, T+delta]; those plateaus are
// returned exactly, the transition bands by quadrature.
inline double window_eval(double x, double T, double delta) {
  const double ax = std::abs(x);
  if (ax <= T) return 1.0;
  if (ax >= T + delta) return 0.0;
  const double h = 0.5 * delta;
  // Omega(x) = int zeta_h(u) du over u in [x - T - h, x + T + h] ∩ [-h, h]
  return mollifier_integral(x - T - h, x + T + h, h);
}

// Smoothed indicator phi_eps(x) = (indicator(|.| >= 3 eps/2) * zeta_{eps/2})(x - c).
// Satisfies 1_{|x-c| >= 2 eps} <= phi_eps(x) <= 1_{|x-c| >= eps}.
inline double smoothed_indicator_eval(double x, double c, double eps) {
  const double u = std::abs(x - c);
  if (u <= eps) return 0.0;
  if (u >= 2.0 * eps) return 1.0;
  const double h = 0.5 * eps;
  // 1 - mass of zeta_h over v in (u - 3 eps/2, u + 3 eps/2) ∩ [-h, h]
  return 1.0 - mollifier_integral(u - 3.0 * h, u + 3.0 * h, h);
}

}  // namespace gel

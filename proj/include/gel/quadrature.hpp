#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "gel/types.hpp"

namespace gel {

// Gauss-Hermite rule against the standard normal weight (probabilists'
// convention). Weights are normalized so that sum(w) = 1, i.e. the rule
// computes E[f(z)] for z ~ N(0,1). Nodes are exactly symmetric about 0.
struct HermiteRule {
  std::vector<long double> nodes;    // ascending
  std::vector<long double> weights;  // sum = 1
};

// Nodes via Newton iteration on the orthonormal (physicists') Hermite
// recurrence, evaluated in long double, then mapped x -> sqrt(2) x to the
// probabilists' convention. Exact for polynomials up to degree 2*order-1.
inline HermiteRule gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  const int n = order;
  const int half = (n + 1) / 2;
  std::vector<long double> x(n), w(n);

  const long double pim4 = 0.751125544464942482159506486325L;  // pi^{-1/4}
  long double z = 0.0L;
  for (int i = 0; i < half; ++i) {
    // initial guesses from the classical asymptotic expansions
    if (i == 0) {
      z = std::sqrt((long double)(2 * n + 1)) -
          1.85575L * std::pow((long double)(2 * n + 1), -0.16667L);
    } else if (i == 1) {
      z -= 1.14L * std::pow((long double)n, 0.426L) / z;
    } else if (i == 2) {
      z = 1.86L * z - 0.86L * x[0];
    } else if (i == 3) {
      z = 1.91L * z - 0.91L * x[1];
    } else {
      z = 2.0L * z - x[i - 2];
    }
    long double pp = 0.0L;
    for (int iter = 0; iter < 100; ++iter) {
      long double p1 = pim4, p2 = 0.0L;
      for (int j = 1; j <= n; ++j) {
        const long double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0L / j) * p2 - std::sqrt((long double)(j - 1) / j) * p3;
      }
      pp = std::sqrt(2.0L * n) * p2;
      const long double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-20L * std::max(1.0L, std::abs(z))) break;
    }
    x[i] = z;                 // descending positive half
    x[n - 1 - i] = -z;
    w[i] = 2.0L / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  if (n % 2 == 1) x[half - 1] = 0.0L;

  // normalize to a probability rule and switch to probabilists' nodes
  long double wsum = 0.0L;
  for (int i = 0; i < half; ++i) wsum += (i == n - 1 - i) ? w[i] : 2.0L * w[i];
  const long double sqrt2 = std::sqrt(2.0L);
  HermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = x[n - 1 - i] * sqrt2;  // ascending
    rule.weights[i] = w[n - 1 - i] / wsum;
  }
  return rule;
}

// E[f(z)], z ~ N(0,1), evaluated in symmetric pairs so that odd integrands
// cancel exactly.
inline double gauss_expectation(const std::function<double(double)>& f,
                                const HermiteRule& rule) {
  const int n = static_cast<int>(rule.nodes.size());
  long double acc = 0.0L;
  for (int i = 0; i < n / 2; ++i) {
    const double xp = static_cast<double>(rule.nodes[n - 1 - i]);
    const double xm = static_cast<double>(rule.nodes[i]);
    acc += rule.weights[i] * ((long double)f(xm) + (long double)f(xp));
  }
  if (n % 2 == 1) acc += rule.weights[n / 2] * (long double)f(0.0);
  return static_cast<double>(acc);
}

// Adaptive Simpson on [a, b].
namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b,
                           double fa, double fm, double fb, double whole, double tol,
                           int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-12, int max_depth = 40) {
  if (!(a < b)) return a == b ? 0.0 : -adaptive_simpson(f, b, a, tol, max_depth);
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace gel

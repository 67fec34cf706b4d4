#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "gel/types.hpp"

namespace gel {

enum class LossKind { squared, logistic };

// Convex loss l(x; y) with three bounded derivatives in x.
struct Loss {
  LossKind kind = LossKind::squared;
  double value(double x, double y) const;
  double d1(double x, double y) const;
  double d2(double x, double y) const;
  double d3(double x, double y) const;
};

namespace detail {
inline double softplus(double t) { return t > 35.0 ? t : std::log1p(std::exp(t)); }
inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
}  // namespace detail

inline double Loss::value(double x, double y) const {
  switch (kind) {
    case LossKind::squared: return 0.5 * (x - y) * (x - y);
    case LossKind::logistic: return detail::softplus(-y * x);
  }
  return 0.0;
}

inline double Loss::d1(double x, double y) const {
  switch (kind) {
    case LossKind::squared: return x - y;
    case LossKind::logistic: return -y * detail::sigmoid(-y * x);
  }
  return 0.0;
}

inline double Loss::d2(double x, double y) const {
  switch (kind) {
    case LossKind::squared: return 1.0;
    case LossKind::logistic: {
      const double s = detail::sigmoid(y * x);
      return y * y * s * (1.0 - s);
    }
  }
  return 0.0;
}

inline double Loss::d3(double x, double y) const {
  switch (kind) {
    case LossKind::squared: return 0.0;
    case LossKind::logistic: {
      const double s = detail::sigmoid(y * x);
      return y * y * y * s * (1.0 - s) * (1.0 - 2.0 * s);
    }
  }
  return 0.0;
}

inline Loss squared_loss() { return Loss{LossKind::squared}; }
inline Loss logistic_loss() { return Loss{LossKind::logistic}; }

inline Loss make_loss(const std::string& name) {
  if (name == "squared") return squared_loss();
  if (name == "logistic") return logistic_loss();
  throw std::invalid_argument("unknown loss: " + name);
}

// Ridge regularizer h(x) = lambda x^2 / 2, strongly convex with parameter
// lambda (h'' = lambda, h''' = 0).
struct Regularizer {
  double lambda = 0.1;
  double value(double x) const { return 0.5 * lambda * x * x; }
  double d1(double x) const { return lambda * x; }
  double d2(double) const { return lambda; }
  double d3(double) const { return 0.0; }
};

inline Regularizer ridge(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge: lambda must be > 0");
  return Regularizer{lambda};
}

}  // namespace gel

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gel/losses.hpp"
#include "gel/types.hpp"

namespace gel {

// Tilt bound: tau_star = (lambda/4) / (mu1^2 (1 + 2 sqrt(eta))^2 + mu2^2),
// with eta = p/d. The objective stays (lambda/2)-strongly convex for
// |tau1| <= tau_star whenever ||F|| <= 1 + 2 sqrt(eta).
inline double tau_star(double lambda, double mu1, double mu2, double eta) {
  if (!(lambda > 0.0) || !(eta > 0.0))
    throw std::invalid_argument("tau_star: lambda and eta must be > 0");
  const double s = 1.0 + 2.0 * std::sqrt(eta);
  return 0.25 * lambda / (mu1 * mu1 * s * s + mu2 * mu2);
}

struct TiltParams {
  double tau1 = 0.0;
  double tau2 = 0.0;
  bool untilted() const { return tau1 == 0.0 && tau2 == 0.0; }
};

// Tilted training objective
//   sum_t l(r_t^T w / sqrt(p); y_t) + sum_j h(w_j)
//     + tau1 w^T Sigma w + tau2 sqrt(p) mu1 xi^T F w.
// Holds references only; all inputs must outlive the object.
class TiltedObjective {
 public:
  TiltedObjective(const Matrix& R, const Vector& y, const Loss& loss,
                  const Regularizer& reg, TiltParams tilt = {},
                  const Matrix* Sigma = nullptr, const Matrix* F = nullptr,
                  const Vector* xi = nullptr, double mu1 = 0.0)
      : R_(&R), y_(&y), loss_(loss), reg_(reg), tilt_(tilt), Sigma_(Sigma) {
    if (R.rows() != y.size())
      throw std::invalid_argument("TiltedObjective: R/y dimension mismatch");
    sqrt_p_ = std::sqrt(static_cast<double>(R.cols()));
    if (tilt_.tau1 != 0.0) {
      if (!Sigma_ || Sigma_->rows() != R.cols())
        throw std::invalid_argument("TiltedObjective: Sigma required for tau1 != 0");
    }
    if (tilt_.tau2 != 0.0) {
      if (!F || !xi || xi->size() != F->rows() || F->cols() != R.cols())
        throw std::invalid_argument("TiltedObjective: F, xi required for tau2 != 0");
      tilt_lin_ = tilt_.tau2 * sqrt_p_ * mu1 * (F->transpose() * (*xi));
    }
  }

  Index dim() const { return R_->cols(); }
  Index n_samples() const { return R_->rows(); }
  const TiltParams& tilt() const { return tilt_; }

  double value(const Vector& w) const {
    check_dim(w);
    const Vector u = (*R_) * w / sqrt_p_;
    double v = 0.0;
    for (Index t = 0; t < u.size(); ++t) v += loss_.value(u[t], (*y_)[t]);
    for (Index j = 0; j < w.size(); ++j) v += reg_.value(w[j]);
    if (tilt_.tau1 != 0.0) v += tilt_.tau1 * w.dot((*Sigma_) * w);
    if (tilt_lin_.size() > 0) v += tilt_lin_.dot(w);
    return v;
  }

  Vector gradient(const Vector& w) const {
    check_dim(w);
    const Vector u = (*R_) * w / sqrt_p_;
    Vector lp(u.size());
    for (Index t = 0; t < u.size(); ++t) lp[t] = loss_.d1(u[t], (*y_)[t]);
    Vector g = R_->transpose() * lp / sqrt_p_;
    for (Index j = 0; j < w.size(); ++j) g[j] += reg_.d1(w[j]);
    if (tilt_.tau1 != 0.0) g.noalias() += 2.0 * tilt_.tau1 * ((*Sigma_) * w);
    if (tilt_lin_.size() > 0) g += tilt_lin_;
    return g;
  }

  Matrix hessian(const Vector& w) const {
    check_dim(w);
    const Vector u = (*R_) * w / sqrt_p_;
    Vector lpp(u.size());
    for (Index t = 0; t < u.size(); ++t) lpp[t] = loss_.d2(u[t], (*y_)[t]);
    const Matrix Rd = lpp.asDiagonal() * (*R_);
    Matrix H = R_->transpose() * Rd / (sqrt_p_ * sqrt_p_);
    for (Index j = 0; j < w.size(); ++j) H(j, j) += reg_.d2(w[j]);
    if (tilt_.tau1 != 0.0) H.noalias() += 2.0 * tilt_.tau1 * (*Sigma_);
    return H;
  }

 private:
  void check_dim(const Vector& w) const {
    if (w.size() != R_->cols())
      throw std::invalid_argument("TiltedObjective: w dimension mismatch");
  }

  const Matrix* R_;
  const Vector* y_;
  Loss loss_;
  Regularizer reg_;
  TiltParams tilt_;
  const Matrix* Sigma_;
  Vector tilt_lin_;
  double sqrt_p_;
};

struct SolveOptions {
  double tol = -1.0;  // < 0: use 1e-10 * max(1, n)
  int max_iter = 200;
  double line_search_beta = 0.5;
  double line_search_c = 1e-4;
  Vector warm_start;  // empty: start from w = 0
};

struct SolveResult {
  Vector w_star;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  int factorization_retries = 0;
  int gradient_fallbacks = 0;
};

// Damped Newton with backtracking line search. The Hessian is factorized by
// LLT with one diagonal-jitter retry (1e-10 * trace/p) before falling back to
// a gradient step. Deterministic: equal inputs give bit-identical results.
inline SolveResult solve(const TiltedObjective& obj, const SolveOptions& opts = {}) {
  const Index p = obj.dim();
  const double tol =
      opts.tol >= 0.0
          ? opts.tol
          : 1e-10 * std::max<double>(1.0, static_cast<double>(obj.n_samples()));

  SolveResult res;
  Vector w = opts.warm_start.size() == p ? opts.warm_start : Vector::Zero(p);
  double fw = obj.value(w);
  Vector g = obj.gradient(w);
  int stalled = 0;

  for (int it = 0; it < opts.max_iter; ++it) {
    res.grad_norm = g.norm();
    if (res.grad_norm <= tol) {
      res.converged = true;
      break;
    }
    Matrix H = obj.hessian(w);
    Vector dw;
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) {
      const double jitter = 1e-10 * H.trace() / static_cast<double>(p);
      H.diagonal().array() += jitter;
      llt.compute(H);
      ++res.factorization_retries;
    }
    if (llt.info() == Eigen::Success) {
      dw = -llt.solve(g);
      // Newton decrement below the roundoff floor of the objective value:
      // no representable step can improve further, accept the iterate.
      const double value_roundoff =
          4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(fw));
      if (-0.5 * g.dot(dw) <= value_roundoff) {
        res.converged = true;
        break;
      }
    } else {
      dw = -g;  // gradient fallback
      ++res.gradient_fallbacks;
    }
    double slope = g.dot(dw);
    if (!(slope < 0.0)) {  // not a descent direction; take gradient instead
      dw = -g;
      slope = g.dot(dw);
      ++res.gradient_fallbacks;
    }

    double t = 1.0;
    double fnew = obj.value(w + t * dw);
    int backtracks = 0;
    while (fnew > fw + opts.line_search_c * t * slope && backtracks < 80) {
      t *= opts.line_search_beta;
      fnew = obj.value(w + t * dw);
      ++backtracks;
    }
    w += t * dw;
    res.iterations = it + 1;
    // value stagnation at the roundoff floor of the summed objective: no
    // representable progress is possible, so the iterate is optimal in
    // double precision even if the gradient norm sits above tol
    const double roundoff =
        4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(fw));
    if (fw - fnew <= roundoff) {
      if (++stalled >= 3) {
        fw = fnew;
        g = obj.gradient(w);
        res.converged = true;
        break;
      }
    } else {
      stalled = 0;
    }
    fw = fnew;
    g = obj.gradient(w);
  }
  res.grad_norm = g.norm();
  if (res.grad_norm <= tol) res.converged = true;
  res.w_star = std::move(w);
  res.value = fw;
  return res;
}

// E_train = Phi(0,0) / p. Only meaningful for untilted solves.
inline double training_error(const SolveResult& result, Index p,
                             const TiltParams& tilt = {}) {
  if (!tilt.untilted())
    throw std::logic_error("training_error: requires an untilted solve");
  return result.value / static_cast<double>(p);
}

}  // namespace gel

#pragma once

#include <cmath>
#include <stdexcept>

#include "gel/erm.hpp"
#include "gel/losses.hpp"
#include "gel/rf_models.hpp"
#include "gel/types.hpp"

namespace gel {

// Mixed regressor matrix for position k on the interpolation path: rows
// 1..k (1-based) come from the Gaussian surrogate B, rows k+1..n from the
// kernel model A. k = 0 gives A, k = n gives B.
inline Matrix mixed_regressors(const Dataset& ds, Index k) {
  const Index n = ds.A.rows();
  if (k < 0 || k > n) throw std::invalid_argument("mixed_regressors: k out of range");
  Matrix R(n, ds.A.cols());
  if (k > 0) R.topRows(k) = ds.B.topRows(k);
  if (k < n) R.bottomRows(n - k) = ds.A.bottomRows(n - k);
  return R;
}

// Mixed regressors with sample k (1-based) deleted: rows 1..k-1 from B,
// rows k+1..n from A.
inline Matrix loo_regressors(const Dataset& ds, Index k) {
  const Index n = ds.A.rows();
  if (k < 1 || k > n) throw std::invalid_argument("loo_regressors: k out of range");
  Matrix R(n - 1, ds.A.cols());
  if (k > 1) R.topRows(k - 1) = ds.B.topRows(k - 1);
  if (k < n) R.bottomRows(n - k) = ds.A.bottomRows(n - k);
  return R;
}

inline Vector loo_labels(const Dataset& ds, Index k) {
  const Index n = ds.y.size();
  Vector y(n - 1);
  if (k > 1) y.head(k - 1) = ds.y.head(k - 1);
  if (k < n) y.tail(n - k) = ds.y.tail(n - k);
  return y;
}

struct LeaveOneOutSolution {
  Index k = 0;             // 1-based deleted sample
  double phi_minus_k = 0;  // optimal value of the leave-one-out problem
  Vector w_minus_k;        // its minimizer
  SolveResult solver;
};

inline LeaveOneOutSolution leave_one_out_solve(
    Index k, const Dataset& ds, const Loss& loss, const Regularizer& reg,
    TiltParams tilt, const Matrix* Sigma, const Matrix* F, const Vector* xi,
    double mu1, const SolveOptions& opts = {}) {
  const Matrix R = loo_regressors(ds, k);
  const Vector y = loo_labels(ds, k);
  TiltedObjective obj(R, y, loss, reg, tilt, Sigma, F, xi, mu1);
  LeaveOneOutSolution sol;
  sol.solver = solve(obj, opts);
  sol.k = k;
  sol.phi_minus_k = sol.solver.value;
  sol.w_minus_k = sol.solver.w_star;
  return sol;
}

// Quadratic-surrogate Hessian at the leave-one-out solution:
//   H = (1/p) sum_{t<k} l''(b_t^T w/sqrt(p)) b_t b_t^T
//     + (1/p) sum_{t>k} l''(a_t^T w/sqrt(p)) a_t a_t^T
//     + diag{h''(w_i)} + 2 tau1 Sigma.
struct SurrogateHessian {
  Matrix H;
  Eigen::LLT<Matrix> llt;
  double condition_estimate = 0.0;  // ratio of extreme diagonal factors
};

inline SurrogateHessian surrogate_hessian(const LeaveOneOutSolution& loo,
                                          const Dataset& ds, const Loss& loss,
                                          const Regularizer& reg, TiltParams tilt,
                                          const Matrix* Sigma) {
  if (!loo.solver.converged)
    throw std::logic_error("surrogate_hessian: leave-one-out solve not converged");
  const Index p = ds.A.cols();
  const double sp = std::sqrt(static_cast<double>(p));
  const Matrix R = loo_regressors(ds, loo.k);
  const Vector y = loo_labels(ds, loo.k);
  const Vector u = R * loo.w_minus_k / sp;
  Vector lpp(u.size());
  for (Index t = 0; t < u.size(); ++t) lpp[t] = loss.d2(u[t], y[t]);

  SurrogateHessian sh;
  const Matrix Rd = lpp.asDiagonal() * R;
  sh.H = R.transpose() * Rd / static_cast<double>(p);
  for (Index j = 0; j < p; ++j) sh.H(j, j) += reg.d2(loo.w_minus_k[j]);
  if (tilt.tau1 != 0.0) {
    if (!Sigma) throw std::invalid_argument("surrogate_hessian: Sigma required");
    sh.H.noalias() += 2.0 * tilt.tau1 * (*Sigma);
  }
  sh.llt.compute(sh.H);
  if (sh.llt.info() != Eigen::Success) {
    Matrix Hj = sh.H;
    Hj.diagonal().array() += 1e-10 * sh.H.trace() / static_cast<double>(p);
    sh.llt.compute(Hj);
    if (sh.llt.info() != Eigen::Success)
      throw std::runtime_error("surrogate_hessian: factorization failed");
  }
  const Vector d = sh.llt.matrixL().toDenseMatrix().diagonal();
  sh.condition_estimate =
      (d.maxCoeff() / d.minCoeff()) * (d.maxCoeff() / d.minCoeff());
  return sh;
}

// gamma_k(r) = r^T H^{-1} r / p
inline double gamma(const Vector& r, const SurrogateHessian& H, Index p) {
  if (r.size() == 0) return 0.0;
  return r.dot(H.llt.solve(r)) / static_cast<double>(p);
}

// Proximal operator of l(.; y): unique minimizer of l(x; y) + (x-z)^2/(2 gamma).
// gamma = 0 degenerates to z. Squared loss is closed form; otherwise a
// safeguarded Newton on the stationarity equation x - z + gamma l'(x; y) = 0.
inline double prox(const Loss& loss, double y, double z, double gamma_) {
  if (gamma_ < 0.0) throw std::invalid_argument("prox: gamma must be >= 0");
  if (gamma_ == 0.0) return z;
  if (loss.kind == LossKind::squared) return (z + gamma_ * y) / (1.0 + gamma_);

  // bracket [z - gamma L, z + gamma L] with L >= sup |l'| near the solution;
  // for logistic |l'| <= |y|
  double L = std::abs(loss.d1(z, y)) + std::abs(y) + 1.0;
  double lo = z - gamma_ * L, hi = z + gamma_ * L;
  auto g = [&](double x) { return x - z + gamma_ * loss.d1(x, y); };
  double glo = g(lo), ghi = g(hi);
  int expand = 0;
  while (glo > 0.0 || ghi < 0.0) {  // unreachable for convex l, kept as safety
    L *= 2.0;
    lo = z - gamma_ * L;
    hi = z + gamma_ * L;
    glo = g(lo);
    ghi = g(hi);
    if (++expand > 60) throw std::runtime_error("prox: bracketing failed");
  }
  double x = z;
  for (int it = 0; it < 200; ++it) {
    const double gx = g(x);
    if (std::abs(gx) <= 1e-14 * std::max(1.0, std::abs(x))) break;
    if (gx > 0.0) hi = x; else lo = x;
    const double dg = 1.0 + gamma_ * loss.d2(x, y);
    double xn = x - gx / dg;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);  // bisection safeguard
    if (std::abs(xn - x) <= 1e-15 * std::max(1.0, std::abs(x))) { x = xn; break; }
    x = xn;
  }
  return x;
}

// Moreau envelope M(x; gamma) = l(prox; y) + (x - prox)^2 / (2 gamma).
inline double moreau(const Loss& loss, double y, double x, double gamma_) {
  if (gamma_ == 0.0) return loss.value(x, y);
  const double px = prox(loss, y, x, gamma_);
  return loss.value(px, y) + (x - px) * (x - px) / (2.0 * gamma_);
}

// Psi_k(r) = Phi_{\k} + M_k(r^T w_{\k} / sqrt(p); gamma_k(r)).
inline double psi_surrogate(const Vector& r, const LeaveOneOutSolution& loo,
                            const SurrogateHessian& H, const Loss& loss, double y_k,
                            Index p) {
  const double x = r.dot(loo.w_minus_k) / std::sqrt(static_cast<double>(p));
  return loo.phi_minus_k + moreau(loss, y_k, x, gamma(r, H, p));
}

// Direct minimization of the quadratic surrogate
//   S(w) = 1/2 (w - w_{\k})^T H (w - w_{\k}) + l(r^T w / sqrt(p); y_k)
// by Newton iteration. Used as the oracle side of the surrogate identities.
struct QuadSurrogateSolution {
  Vector w_tilde;
  double min_value = 0.0;  // min_w S(w), without the Phi_{\k} offset
};

inline QuadSurrogateSolution quad_surrogate_minimize(const Vector& r,
                                                     const LeaveOneOutSolution& loo,
                                                     const SurrogateHessian& H,
                                                     const Loss& loss, double y_k) {
  const Index p = r.size();
  const double sp = std::sqrt(static_cast<double>(p));
  Vector w = loo.w_minus_k;
  auto Sval = [&](const Vector& v) {
    const Vector d = v - loo.w_minus_k;
    return 0.5 * d.dot(H.H * d) + loss.value(r.dot(v) / sp, y_k);
  };
  double fw = Sval(w);
  for (int it = 0; it < 100; ++it) {
    const Vector d = w - loo.w_minus_k;
    const double u = r.dot(w) / sp;
    Vector g = H.H * d + loss.d1(u, y_k) * r / sp;
    if (g.norm() <= 1e-13 * std::max(1.0, std::abs(fw))) break;
    Matrix Hn = H.H + (loss.d2(u, y_k) / static_cast<double>(p)) * (r * r.transpose());
    Eigen::LLT<Matrix> llt(Hn);
    Vector dw = -llt.solve(g);
    double t = 1.0;
    double fnew = Sval(w + t * dw);
    int bt = 0;
    while (fnew > fw + 1e-4 * t * g.dot(dw) && bt < 80) {
      t *= 0.5;
      fnew = Sval(w + t * dw);
      ++bt;
    }
    w += t * dw;
    fw = fnew;
  }
  return {std::move(w), fw};
}

// Residuals of the two closed-form identities satisfied by the surrogate
// minimizer: the fixed-point form of w_tilde and the scalar prox observation.
struct QuadIdentityResiduals {
  double fixed_point = 0.0;  // || w_tilde - (w_{\k} - l'(.) H^{-1} r / sqrt(p)) ||
  double scalar_prox = 0.0;  // | r^T w_tilde / sqrt(p) - prox(r^T w_{\k}/sqrt(p); gamma) |
};

inline QuadIdentityResiduals quad_solution_identity_check(
    const Vector& r, const LeaveOneOutSolution& loo, const SurrogateHessian& H,
    const Loss& loss, double y_k) {
  const Index p = r.size();
  const double sp = std::sqrt(static_cast<double>(p));
  const QuadSurrogateSolution qs = quad_surrogate_minimize(r, loo, H, loss, y_k);
  const double u = r.dot(qs.w_tilde) / sp;
  const Vector rhs =
      loo.w_minus_k - loss.d1(u, y_k) * H.llt.solve(r) / sp;
  QuadIdentityResiduals res;
  res.fixed_point = (qs.w_tilde - rhs).norm();
  const double x = r.dot(loo.w_minus_k) / sp;
  res.scalar_prox = std::abs(u - prox(loss, y_k, x, gamma(r, H, p)));
  return res;
}

// Phi_k on the Lindeberg path: rows 1..k use B, rows k+1..n use A.
inline SolveResult interpolation_value(Index k, const Dataset& ds, const Loss& loss,
                                       const Regularizer& reg, TiltParams tilt,
                                       const Matrix* Sigma, const Matrix* F,
                                       const Vector* xi, double mu1,
                                       const SolveOptions& opts = {}) {
  const Matrix R = mixed_regressors(ds, k);
  TiltedObjective obj(R, ds.y, loss, reg, tilt, Sigma, F, xi, mu1);
  return solve(obj, opts);
}

}  // namespace gel

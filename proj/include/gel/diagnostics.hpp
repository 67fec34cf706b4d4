#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "gel/activation.hpp"
#include "gel/rf_models.hpp"
#include "gel/rng.hpp"
#include "gel/types.hpp"

namespace gel {

// Spectral norm of a symmetric matrix by power iteration on M^2 from a
// deterministic start vector. Squaring removes the sign oscillation between
// eigenvalues of opposite sign and comparable magnitude; the residual test
// bounds the eigenvalue error directly.
inline double spectral_norm_sym(const Matrix& M, double tol = 1e-10,
                                int max_iter = 10000) {
  const Index p = M.rows();
  if (p == 0) return 0.0;
  Rng rng(substream_seed(0x5eedULL, "power_iteration"));
  Vector v = rng.normal_vector(p);
  v.normalize();
  double lam2 = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vector w = M * v;   // M v
    lam2 = w.squaredNorm();   // v' M^2 v for unit v
    const Vector t = M * w;   // M^2 v
    if ((t - lam2 * v).norm() <= tol * std::max(1.0, lam2)) break;
    const double nu = t.norm();
    if (nu == 0.0) return 0.0;
    v = t / nu;
  }
  return std::sqrt(lam2);
}

inline double spectral_norm(const Matrix& F) {
  return std::sqrt(spectral_norm_sym(F.transpose() * F));
}

// Admissibility of a feature matrix: near-orthonormal columns (with f_0 = xi
// included) and bounded spectral norm.
struct AdmissibilityReport {
  double a1_margin = 0.0;     // max_{0<=i<=j<=p} |f_i^T f_j - delta_ij|
  double a1_threshold = 0.0;  // (log p)^2 / sqrt(p)
  double a2_norm = 0.0;       // ||F||
  double a2_threshold = 0.0;  // 1 + 2 sqrt(eta)
  bool pass_a1 = false;
  bool pass_a2 = false;
  double kappa_p = 0.0;  // sqrt(p) * a1_margin, empirical proxy for kappa_p
};

inline AdmissibilityReport admissibility_check(const FeatureMatrix& F,
                                               const Vector& xi) {
  if (std::abs(xi.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("admissibility_check: xi must be a unit vector");
  const Index p = F.p;
  Matrix ext(F.d, p + 1);
  ext.col(0) = xi;
  ext.rightCols(p) = F.entries;
  Matrix G = ext.transpose() * ext;
  G.diagonal().array() -= 1.0;
  AdmissibilityReport rep;
  rep.a1_margin = G.cwiseAbs().maxCoeff();
  const double lp = std::log(static_cast<double>(p));
  rep.a1_threshold = lp * lp / std::sqrt(static_cast<double>(p));
  rep.a2_norm = spectral_norm(F.entries);
  const double eta = static_cast<double>(p) / static_cast<double>(F.d);
  rep.a2_threshold = 1.0 + 2.0 * std::sqrt(eta);
  rep.pass_a1 = rep.a1_margin <= rep.a1_threshold;
  rep.pass_a2 = rep.a2_norm <= rep.a2_threshold;
  rep.kappa_p = std::sqrt(static_cast<double>(p)) * rep.a1_margin;
  return rep;
}

struct GapEstimate {
  double gap = 0.0;
  double std_band = 0.0;
};

// Monte Carlo estimate of || E[a a^T] - Sigma_b || with a split-sample
// uncertainty band. Sigma_b = mu1^2 F^T F + mu2^2 I.
inline GapEstimate covariance_gap(const FeatureMatrix& F, const Activation& sigma,
                                  const GaussEquivConstants& consts, Index n_mc,
                                  std::uint64_t seed) {
  const Index p = F.p;
  if (n_mc < 10 * p)
    throw std::invalid_argument("covariance_gap: n_mc must be >= 10 p");
  const Matrix Sigma_b = surrogate_covariance(F, consts);

  const int n_chunks = 5;
  const Index per_chunk = n_mc / n_chunks;
  std::vector<double> chunk_gaps;
  Matrix total = Matrix::Zero(p, p);
  for (int c = 0; c < n_chunks; ++c) {
    Rng rng(substream_seed(seed, "covariance_gap", static_cast<std::uint64_t>(c)));
    const Matrix C = rng.normal_matrix(per_chunk, F.d);
    const Matrix A =
        (C * F.entries).unaryExpr([&](double x) { return sigma.eval(x); });
    const Matrix S = A.transpose() * A / static_cast<double>(per_chunk);
    chunk_gaps.push_back(spectral_norm_sym(S - Sigma_b));
    total += S;
  }
  total /= static_cast<double>(n_chunks);
  GapEstimate est;
  est.gap = spectral_norm_sym(total - Sigma_b);
  double mean = 0.0, var = 0.0;
  for (double g : chunk_gaps) mean += g;
  mean /= n_chunks;
  for (double g : chunk_gaps) var += (g - mean) * (g - mean);
  var /= (n_chunks - 1);
  est.std_band = std::sqrt(var / n_chunks);
  return est;
}

// Monte Carlo estimate of |E phi(a^T beta / sqrt(p); c^T xi) -
// E phi(b^T beta / sqrt(p); c^T xi)| with coupled latent inputs. The band is
// the standard error of the paired differences.
inline GapEstimate clt_gap(const FeatureMatrix& F, const Vector& xi,
                           const Vector& beta,
                           const std::function<double(double, double)>& test_fn,
                           const Activation& sigma,
                           const GaussEquivConstants& consts, Index n_mc,
                           std::uint64_t seed) {
  const Index p = F.p;
  const double sp = std::sqrt(static_cast<double>(p));
  double sum = 0.0, sumsq = 0.0;
  const Index chunk = 2000;
  Index done = 0;
  std::uint64_t chunk_idx = 0;
  while (done < n_mc) {
    const Index m = std::min(chunk, n_mc - done);
    Rng rng(substream_seed(seed, "clt_gap", chunk_idx++));
    const Matrix C = rng.normal_matrix(m, F.d);
    const Matrix Z = rng.normal_matrix(m, p);
    const Matrix G = C * F.entries;
    const Vector xa =
        G.unaryExpr([&](double x) { return sigma.eval(x); }) * beta / sp;
    const Vector xb = ((consts.mu1 * G + consts.mu2 * Z).array() + consts.mu0)
                          .matrix() * beta / sp;
    const Vector s = C * xi;
    for (Index i = 0; i < m; ++i) {
      const double d = test_fn(xa[i], s[i]) - test_fn(xb[i], s[i]);
      sum += d;
      sumsq += d * d;
    }
    done += m;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double var = std::max(0.0, sumsq / n - mean * mean);
  GapEstimate est;
  est.gap = std::abs(mean);
  est.std_band = std::sqrt(var / n);
  return est;
}

}  // namespace gel

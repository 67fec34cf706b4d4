#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "gel/activation.hpp"
#include "gel/quadrature.hpp"
#include "gel/rng.hpp"
#include "gel/types.hpp"

namespace gel {

// (mu0, mu1, mu2) matching the activation's Gaussian moments:
// mu0 = E[sigma(z)], mu1 = E[z sigma(z)], mu2 = sqrt(E[sigma^2] - mu0^2 - mu1^2)
struct GaussEquivConstants {
  double mu0 = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
};

// Gauss-Hermite quadrature against the standard normal weight. The node set
// is symmetric about 0, so mu0 vanishes exactly for odd activations. The
// variance residual is clamped at quadrature round-off scale before the
// square root.
inline GaussEquivConstants gauss_moments(const Activation& sigma, int order = 101) {
  if (order < 3 || order % 2 == 0)
    throw std::invalid_argument("gauss_moments: order must be odd and >= 3");
  const HermiteRule rule = gauss_hermite(order);
  const int n = order;

  long double m0 = 0.0L, m1 = 0.0L, m2 = 0.0L;
  for (int i = 0; i < n / 2; ++i) {
    const double xm = static_cast<double>(rule.nodes[i]);
    const double xp = static_cast<double>(rule.nodes[n - 1 - i]);
    const double fm = sigma.eval(xm);
    const double fp = sigma.eval(xp);
    if (!std::isfinite(fm) || !std::isfinite(fp))
      throw std::invalid_argument("gauss_moments: non-finite activation value");
    const long double w = rule.weights[i];
    m0 += w * ((long double)fm + (long double)fp);
    m1 += w * ((long double)xm * fm + (long double)xp * fp);
    m2 += w * ((long double)fm * fm + (long double)fp * fp);
  }
  if (n % 2 == 1) {
    const double f0 = sigma.eval(0.0);
    if (!std::isfinite(f0))
      throw std::invalid_argument("gauss_moments: non-finite activation value");
    const long double w = rule.weights[n / 2];
    m0 += w * f0;
    m2 += w * (long double)f0 * f0;
  }

  GaussEquivConstants c;
  c.mu0 = static_cast<double>(m0);
  c.mu1 = static_cast<double>(m1);
  const long double resid = m2 - m0 * m0 - m1 * m1;
  const long double clamp = 1e-13L * std::max(1.0L, m2);
  c.mu2 = resid <= clamp ? 0.0 : std::sqrt(static_cast<double>(resid));
  return c;
}

// d x p feature matrix with i.i.d. N(0, 1/d) entries (columns are the
// feature vectors).
struct FeatureMatrix {
  Matrix entries;  // d x p
  Index d = 0;
  Index p = 0;
  std::uint64_t seed = 0;
};

inline FeatureMatrix sample_feature_matrix(Index d, Index p, std::uint64_t seed) {
  if (d < 1 || p < 0) throw std::invalid_argument("sample_feature_matrix: bad dims");
  FeatureMatrix F;
  F.d = d;
  F.p = p;
  F.seed = seed;
  Rng rng(substream_seed(seed, "feature_matrix"));
  F.entries = rng.normal_matrix(d, p) / std::sqrt(static_cast<double>(d));
  return F;
}

// Teacher / post-processing scalar maps. sign(0) is defined as +1.
enum class OutputMapKind { sign, identity, tanh };

inline double apply_map(OutputMapKind k, double x) {
  switch (k) {
    case OutputMapKind::sign: return x < 0.0 ? -1.0 : 1.0;
    case OutputMapKind::identity: return x;
    case OutputMapKind::tanh: return std::tanh(x);
  }
  return x;
}

inline OutputMapKind parse_map(const std::string& name) {
  if (name == "sign") return OutputMapKind::sign;
  if (name == "identity") return OutputMapKind::identity;
  if (name == "tanh") return OutputMapKind::tanh;
  throw std::invalid_argument("unknown map: " + name);
}

inline std::string map_name(OutputMapKind k) {
  switch (k) {
    case OutputMapKind::sign: return "sign";
    case OutputMapKind::identity: return "identity";
    case OutputMapKind::tanh: return "tanh";
  }
  return "?";
}

struct TeacherConfig {
  Vector xi;  // unit vector in R^d
  OutputMapKind theta_teach = OutputMapKind::sign;
  OutputMapKind theta_out = OutputMapKind::sign;
};

inline TeacherConfig sample_teacher(Index d, OutputMapKind teach, OutputMapKind out,
                                    std::uint64_t seed) {
  TeacherConfig t;
  Rng rng(substream_seed(seed, "teacher"));
  t.xi = rng.normal_vector(d);
  t.xi.normalize();
  t.theta_teach = teach;
  t.theta_out = out;
  return t;
}

// Coupled dataset: rows of A are sigma(F^T c_t), rows of B are
// mu0 1 + mu1 F^T c_t + mu2 z_t, built from the SAME latent inputs C so the
// Lindeberg interpolation path is well defined.
struct Dataset {
  Matrix C;  // n x d latent inputs
  Vector y;  // n labels
  Matrix A;  // n x p kernel regressors
  Matrix B;  // n x p surrogate regressors
  Matrix Z;  // n x p surrogate noise
};

inline Dataset generate_dataset(const FeatureMatrix& F, const TeacherConfig& teacher,
                                const GaussEquivConstants& consts,
                                const Activation& sigma, Index n,
                                std::uint64_t seed) {
  if (teacher.xi.size() != F.d)
    throw std::invalid_argument("generate_dataset: teacher dimension mismatch");
  Dataset ds;
  {
    Rng rng(substream_seed(seed, "latent_inputs"));
    ds.C = rng.normal_matrix(n, F.d);
  }
  {
    Rng rng(substream_seed(seed, "surrogate_noise"));
    ds.Z = rng.normal_matrix(n, F.p);
  }
  const Matrix G = ds.C * F.entries;  // n x p, rows F^T c_t
  ds.A = G.unaryExpr([&](double x) { return sigma.eval(x); });
  ds.B = (consts.mu1 * G + consts.mu2 * ds.Z).array() + consts.mu0;
  ds.y = (ds.C * teacher.xi)
             .unaryExpr([&](double x) { return apply_map(teacher.theta_teach, x); });
  return ds;
}

// Sigma = mu1^2 F^T F + mu2^2 I, the population covariance of the surrogate
// regressors (mean removed).
inline Matrix surrogate_covariance(const FeatureMatrix& F,
                                   const GaussEquivConstants& consts) {
  Matrix S = consts.mu1 * consts.mu1 * (F.entries.transpose() * F.entries);
  S.diagonal().array() += consts.mu2 * consts.mu2;
  return S;
}

}  // namespace gel

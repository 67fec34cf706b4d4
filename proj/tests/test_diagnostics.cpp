#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gel/diagnostics.hpp"
#include "gel/smoothing.hpp"

using namespace gel;

TEST_CASE("spectral norm against a dense eigensolver") {
  Rng rng(11);
  const Index p = 30;
  Matrix Ahalf = rng.normal_matrix(p, p);
  Matrix S = 0.5 * (Ahalf + Ahalf.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  const double oracle = es.eigenvalues().cwiseAbs().maxCoeff();
  CHECK(std::abs(spectral_norm_sym(S) - oracle) <= 1e-8 * oracle);

  const Matrix F = rng.normal_matrix(40, 25);
  Eigen::JacobiSVD<Matrix> svd(F);
  CHECK(std::abs(spectral_norm(F) - svd.singularValues()[0]) <=
        1e-8 * svd.singularValues()[0]);
  CHECK(spectral_norm_sym(Matrix()) == 0.0);
}

TEST_CASE("admissibility check") {
  // orthonormal columns with xi orthogonal to all of them: margin exactly 0
  const Index d = 12, p = 8;
  FeatureMatrix F;
  F.d = d;
  F.p = p;
  F.entries = Matrix::Zero(d, p);
  for (Index j = 0; j < p; ++j) F.entries(j, j) = 1.0;
  Vector xi = Vector::Zero(d);
  xi[d - 1] = 1.0;
  const AdmissibilityReport rep = admissibility_check(F, xi);
  CHECK(rep.a1_margin == 0.0);
  CHECK(rep.pass_a1);
  CHECK(rep.pass_a2);
  CHECK(rep.kappa_p == 0.0);
  CHECK(rep.a1_threshold ==
        doctest::Approx(std::pow(std::log(double(p)), 2) / std::sqrt(double(p)))
            .epsilon(1e-14));
  CHECK(rep.a2_threshold ==
        doctest::Approx(1.0 + 2.0 * std::sqrt(double(p) / d)).epsilon(1e-14));

  // zero matrix: diagonal deficit makes the margin exactly 1
  FeatureMatrix Z = F;
  Z.entries.setZero();
  const AdmissibilityReport zr = admissibility_check(Z, xi);
  CHECK(zr.a1_margin == 1.0);
  CHECK(zr.pass_a1 == (zr.a1_margin <= zr.a1_threshold));
  CHECK(zr.a2_norm == 0.0);

  // kappa_p proxy ties to the margin
  const FeatureMatrix R = sample_feature_matrix(50, 30, 3);
  Vector u = Vector::Zero(50);
  u[0] = 1.0;
  const AdmissibilityReport rr = admissibility_check(R, u);
  CHECK(std::abs(rr.kappa_p - std::sqrt(30.0) * rr.a1_margin) <= 1e-12);

  CHECK_THROWS_AS(admissibility_check(R, 2.0 * u), std::invalid_argument);
}

TEST_CASE("covariance gap") {
  const GaussEquivConstants lin = gauss_moments(linear_activation());
  const Index p = 20;
  const FeatureMatrix F = sample_feature_matrix(30, p, 5);

  CHECK_THROWS_AS(covariance_gap(F, linear_activation(), lin, 5 * p, 1),
                  std::invalid_argument);

  // linear activation: the true gap is zero, so only estimator noise remains
  const Index m = 100 * p;
  const GapEstimate g = covariance_gap(F, linear_activation(), lin, m, 6);
  const double scale = spectral_norm_sym(surrogate_covariance(F, lin));
  CHECK(g.gap <= 5.0 * std::sqrt(static_cast<double>(p) / m) * scale);
  CHECK(g.std_band >= 0.0);

  // doubling n_mc keeps the estimate stable within bands (tanh)
  const Activation sig = tanh_activation();
  const GaussEquivConstants c = gauss_moments(sig);
  const GapEstimate a = covariance_gap(F, sig, c, 400 * p, 7);
  const GapEstimate b = covariance_gap(F, sig, c, 800 * p, 8);
  CHECK(std::abs(a.gap - b.gap) <= 5.0 * (a.std_band + b.std_band) + 0.05 * a.gap);

  // split-sample consistency: independent seeds agree within bands
  const GapEstimate s1 = covariance_gap(F, sig, c, 400 * p, 9);
  const GapEstimate s2 = covariance_gap(F, sig, c, 400 * p, 10);
  CHECK(std::abs(s1.gap - s2.gap) <= 5.0 * (s1.std_band + s2.std_band) + 0.05 * s1.gap);
}

TEST_CASE("clt gap") {
  const Index d = 30, p = 20;
  const FeatureMatrix F = sample_feature_matrix(d, p, 15);
  Vector xi = Vector::Zero(d);
  xi[0] = 1.0;
  Vector beta = Vector::Ones(p);

  // linear activation: identical laws, gap within the noise band
  const GaussEquivConstants lin = gauss_moments(linear_activation());
  const GapEstimate gl = clt_gap(F, xi, beta, [](double x, double) { return std::tanh(x); },
                                 linear_activation(), lin, 40000, 16);
  CHECK(gl.gap <= 4.0 * gl.std_band);

  // x^2 test function picks up the quadratic-form gap beta'(Sa - Sb)beta / p
  const Activation sig = tanh_activation();
  const GaussEquivConstants c = gauss_moments(sig);
  const GapEstimate gq = clt_gap(F, xi, beta, [](double x, double) { return x * x; },
                                 sig, c, 200000, 17);
  // oracle: Sa via pairwise bivariate-normal quadrature
  const HermiteRule rule = gauss_hermite(41);
  const Matrix G = F.entries.transpose() * F.entries;
  Matrix Sa(p, p);
  for (Index i = 0; i < p; ++i) {
    const double ni = std::sqrt(G(i, i));
    for (Index j = i; j < p; ++j) {
      const double nj = std::sqrt(G(j, j));
      const double r = std::clamp(G(i, j) / (ni * nj), -1.0, 1.0);
      const double sr = std::sqrt(1.0 - r * r);
      long double acc = 0.0L;
      for (int a = 0; a < 41; ++a)
        for (int b = 0; b < 41; ++b) {
          const double z1 = static_cast<double>(rule.nodes[a]);
          const double z2 = static_cast<double>(rule.nodes[b]);
          acc += rule.weights[a] * rule.weights[b] *
                 (long double)(std::tanh(ni * z1) * std::tanh(nj * (r * z1 + sr * z2)));
        }
      Sa(i, j) = Sa(j, i) = static_cast<double>(acc);
    }
  }
  const Matrix Sb = surrogate_covariance(F, c);
  const double qf = std::abs(beta.dot((Sa - Sb) * beta)) / static_cast<double>(p);
  CHECK(std::abs(gq.gap - qf) <= 6.0 * gq.std_band);

  // even test function: gap invariant under beta -> -beta with matched seeds
  const GapEstimate plus = clt_gap(F, xi, beta, [](double x, double) { return x * x; },
                                   sig, c, 10000, 18);
  const GapEstimate minus = clt_gap(F, xi, Vector(-beta),
                                    [](double x, double) { return x * x; }, sig, c,
                                    10000, 18);
  CHECK(plus.gap == minus.gap);
}

TEST_CASE("mollifier") {
  CHECK(std::abs(mollifier_kappa() - 2.2522836210435810105) <= 1e-10);
  CHECK(std::abs(mollifier_unit(0.0) - 0.82856883986910515166) <= 1e-10);
  CHECK(std::abs(mollifier_unit(0.0) - mollifier_kappa() * std::exp(-1.0)) <= 1e-14);
  for (double delta : {0.3, 1.0, 2.5}) {
    CHECK(mollifier_eval(delta, delta) == 0.0);
    CHECK(mollifier_eval(-delta, delta) == 0.0);
    CHECK(mollifier_eval(1.01 * delta, delta) == 0.0);
    CHECK(std::abs(mollifier_integral(-delta, delta, delta) - 1.0) <= 1e-8);
  }
}

TEST_CASE("window function") {
  const double T = 2.0, delta = 0.5;
  for (double x = -T; x <= T; x += 0.05) CHECK(window_eval(x, T, delta) == 1.0);
  for (double x = T + delta; x <= T + 3.0; x += 0.1) {
    CHECK(window_eval(x, T, delta) == 0.0);
    CHECK(window_eval(-x, T, delta) == 0.0);
  }
  CHECK(std::abs(window_eval(T + 0.5 * delta, T, delta) - 0.5) <= 1e-9);
  // monotone decreasing across the transition band
  double prev = 1.0;
  for (double x = T; x <= T + delta; x += delta / 64.0) {
    const double v = window_eval(x, T, delta);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
  // derivative bound scales as C / delta with the same constant across scales
  auto max_deriv = [&](double del) {
    double m = 0.0;
    const double h = del / 4096.0;
    for (double x = T - del; x <= T + 2.0 * del; x += del / 512.0) {
      const double fd = (window_eval(x + h, T, del) - window_eval(x - h, T, del)) / (2.0 * h);
      m = std::max(m, std::abs(fd));
    }
    return m;
  };
  const double c1 = max_deriv(0.1) * 0.1;
  const double c2 = max_deriv(0.01) * 0.01;
  CHECK(std::abs(c1 - c2) <= 1e-3 * std::max(c1, c2));
  CHECK(c1 <= 1.7);  // 2 kappa / e plus slack
}

TEST_CASE("smoothed indicator") {
  const double c = 0.7;
  for (double eps : {0.1, 0.01}) {
    CHECK(smoothed_indicator_eval(c, c, eps) == 0.0);
    CHECK(std::abs(smoothed_indicator_eval(c + 2.0 * eps, c, eps) - 1.0) <= 1e-12);
    CHECK(std::abs(smoothed_indicator_eval(c - 2.0 * eps, c, eps) - 1.0) <= 1e-12);
    CHECK(std::abs(smoothed_indicator_eval(c + 1.5 * eps, c, eps) - 0.5) <= 1e-9);
    // sandwich on a grid
    for (int i = 0; i <= 2000; ++i) {
      const double x = c - 4.0 * eps + 4.0 * eps * i / 1000.0;
      const double v = smoothed_indicator_eval(x, c, eps);
      const double lo = std::abs(x - c) >= 2.0 * eps ? 1.0 : 0.0;
      const double hi = std::abs(x - c) >= eps ? 1.0 : 0.0;
      CHECK(v >= lo - 1e-12);
      CHECK(v <= hi + 1e-12);
    }
  }
  // derivative bound C / eps, scale invariant
  auto max_deriv = [&](double eps) {
    double m = 0.0;
    const double h = eps / 4096.0;
    for (double x = c + eps; x <= c + 2.0 * eps; x += eps / 512.0) {
      const double fd = (smoothed_indicator_eval(x + h, c, eps) -
                         smoothed_indicator_eval(x - h, c, eps)) / (2.0 * h);
      m = std::max(m, std::abs(fd));
    }
    return m;
  };
  const double c1 = max_deriv(0.1) * 0.1;
  const double c2 = max_deriv(0.01) * 0.01;
  CHECK(std::abs(c1 - c2) <= 1e-3 * std::max(c1, c2));
}

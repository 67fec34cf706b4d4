#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gel/diagnostics.hpp"
#include "gel/rf_models.hpp"

using namespace gel;

TEST_CASE("gauss_moments: tanh") {
  const GaussEquivConstants c = gauss_moments(tanh_activation());
  CHECK(c.mu0 == 0.0);  // exact: symmetric nodes, bitwise-odd libm tanh
  CHECK(std::abs(c.mu1 - 0.60570550960215882558) <= 1e-9);
  CHECK(std::abs(c.mu2 - 0.16557574108374166403) <= 1e-9);
}

TEST_CASE("gauss_moments: linear is (0, 1, 0) exactly") {
  const GaussEquivConstants c = gauss_moments(linear_activation());
  CHECK(c.mu0 == 0.0);
  CHECK(c.mu1 == 1.0);
  CHECK(c.mu2 == 0.0);
}

TEST_CASE("gauss_moments: sine matches the Stein-identity value") {
  // E[z sin z] = E[cos z] = e^{-1/2}
  const GaussEquivConstants c = gauss_moments(sine_activation());
  CHECK(c.mu0 == 0.0);
  CHECK(std::abs(c.mu1 - std::exp(-0.5)) <= 1e-10);
  CHECK(std::abs(c.mu2 - 0.25387579091014434978) <= 1e-10);
}

TEST_CASE("gauss_moments: erf-scaled has closed-form mu1") {
  // E[z erf(z/sqrt(2))] = sqrt(2/pi) E[e^{-z^2/2}] = sqrt(2/pi)/sqrt(2) = 1/sqrt(pi)
  const GaussEquivConstants c = gauss_moments(erf_activation());
  CHECK(c.mu0 == 0.0);
  CHECK(std::abs(c.mu1 - 1.0 / std::sqrt(3.14159265358979323846)) <= 1e-10);
}

TEST_CASE("gauss_moments rejects bad orders and non-finite activations") {
  CHECK_THROWS_AS(gauss_moments(tanh_activation(), 2), std::invalid_argument);
  CHECK_THROWS_AS(gauss_moments(tanh_activation(), 1), std::invalid_argument);
  Activation bad;
  bad.kind = ActivationKind::custom;
  bad.eval = [](double x) {
    const double q = x * x * x * x;
    return x < 0 ? -std::exp(q) : std::exp(q);
  };
  bad.d1 = bad.d2 = bad.d3 = [](double) { return 0.0; };
  CHECK_THROWS_AS(gauss_moments(bad, 101), std::invalid_argument);
}

TEST_CASE("activation validation") {
  CHECK_THROWS_AS(make_activation("relu"), std::invalid_argument);
  // a valid odd custom map passes
  const Activation ok = custom_activation(
      [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); },
      [](double x) { return -std::sin(x); }, [](double x) { return -std::cos(x); });
  CHECK(ok.eval(0.3) == std::sin(0.3));
  // non-odd map rejected
  CHECK_THROWS_AS(custom_activation([](double x) { return x + 1.0; },
                                    [](double) { return 1.0; },
                                    [](double) { return 0.0; },
                                    [](double) { return 0.0; }),
                  std::invalid_argument);
  // d1 inconsistent with eval rejected
  CHECK_THROWS_AS(custom_activation([](double x) { return std::sin(x); },
                                    [](double) { return 1.0; },
                                    [](double) { return 0.0; },
                                    [](double) { return 0.0; }),
                  std::invalid_argument);
}

TEST_CASE("sample_feature_matrix determinism and scale") {
  const FeatureMatrix a = sample_feature_matrix(4, 2, 123);
  const FeatureMatrix b = sample_feature_matrix(4, 2, 123);
  CHECK(a.entries == b.entries);
  CHECK(a.d == 4);
  CHECK(a.p == 2);

  const FeatureMatrix big = sample_feature_matrix(1000, 1000, 7);
  double mean_norm = 0.0;
  for (Index j = 0; j < big.p; ++j) mean_norm += big.entries.col(j).norm();
  mean_norm /= static_cast<double>(big.p);
  CHECK(mean_norm > 0.95);
  CHECK(mean_norm < 1.05);

  const FeatureMatrix empty = sample_feature_matrix(2, 0, 1);
  CHECK(empty.entries.size() == 0);
  CHECK(empty.d == 2);
  CHECK_THROWS_AS(sample_feature_matrix(0, 3, 1), std::invalid_argument);
}

TEST_CASE("generate_dataset: linear activation couples A and B exactly") {
  const Activation sig = linear_activation();
  const GaussEquivConstants c = gauss_moments(sig);
  const FeatureMatrix F = sample_feature_matrix(10, 6, 11);
  const TeacherConfig t =
      sample_teacher(10, OutputMapKind::sign, OutputMapKind::sign, 12);
  const Dataset ds = generate_dataset(F, t, c, sig, 20, 13);
  CHECK((ds.A - ds.B).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("generate_dataset: labels and ranges") {
  const Activation sig = tanh_activation();
  const GaussEquivConstants c = gauss_moments(sig);
  const FeatureMatrix F = sample_feature_matrix(50, 50, 21);
  const TeacherConfig t =
      sample_teacher(50, OutputMapKind::sign, OutputMapKind::sign, 22);
  const Dataset ds = generate_dataset(F, t, c, sig, 50, 23);
  for (Index i = 0; i < ds.y.size(); ++i) {
    const double margin = ds.C.row(i).dot(t.xi);
    CHECK(ds.y[i] == (margin < 0 ? -1.0 : 1.0));
  }
  CHECK(ds.A.maxCoeff() < 1.0);
  CHECK(ds.A.minCoeff() > -1.0);
  // reproducibility: equal seeds give bit-identical datasets
  const Dataset ds2 = generate_dataset(F, t, c, sig, 50, 23);
  CHECK(ds.A == ds2.A);
  CHECK(ds.B == ds2.B);
  CHECK(ds.y == ds2.y);
  CHECK(ds.C == ds2.C);
  CHECK(ds.Z == ds2.Z);
  // dimension mismatch
  TeacherConfig bad = t;
  bad.xi = Vector::Ones(3);
  CHECK_THROWS_AS(generate_dataset(F, bad, c, sig, 5, 1), std::invalid_argument);
}

TEST_CASE("surrogate_covariance closed forms") {
  FeatureMatrix F;
  F.d = 1;
  F.p = 1;
  F.entries = Matrix::Ones(1, 1);
  GaussEquivConstants c{0.0, 2.0, 3.0};
  CHECK(surrogate_covariance(F, c)(0, 0) == 13.0);

  const FeatureMatrix G = sample_feature_matrix(8, 5, 3);
  GaussEquivConstants c2{0.0, 0.0, 1.5};
  const Matrix S2 = surrogate_covariance(G, c2);
  CHECK((S2 - 2.25 * Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() == 0.0);

  const GaussEquivConstants lin = gauss_moments(linear_activation());
  const Matrix S3 = surrogate_covariance(G, lin);
  CHECK((S3 - G.entries.transpose() * G.entries).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("B rows have the surrogate covariance empirically") {
  const Activation sig = tanh_activation();
  const GaussEquivConstants c = gauss_moments(sig);
  const Index p = 20, d = 30, m = 100000;
  const FeatureMatrix F = sample_feature_matrix(d, p, 31);
  const TeacherConfig t =
      sample_teacher(d, OutputMapKind::sign, OutputMapKind::sign, 32);
  const Dataset ds = generate_dataset(F, t, c, sig, m, 33);
  const Matrix Sigma = surrogate_covariance(F, c);
  const Matrix S = ds.B.transpose() * ds.B / static_cast<double>(m);
  const double gap = spectral_norm_sym(S - Sigma);
  const double scale = spectral_norm_sym(Sigma);
  CHECK(gap <= 5.0 * std::sqrt(static_cast<double>(p) / m) * scale);

  // odd activation: A columns have mean within 4 standard errors of 0
  for (Index j = 0; j < p; ++j) {
    const double mean = ds.A.col(j).mean();
    const double sd = std::sqrt((ds.A.col(j).array() - mean).square().mean());
    CHECK(std::abs(mean) <= 4.0 * sd / std::sqrt(static_cast<double>(m)));
  }
}

TEST_CASE("output maps") {
  CHECK(apply_map(OutputMapKind::sign, 0.0) == 1.0);  // sign(0) = +1 convention
  CHECK(apply_map(OutputMapKind::sign, -0.3) == -1.0);
  CHECK(apply_map(OutputMapKind::identity, 0.7) == 0.7);
  CHECK(apply_map(OutputMapKind::tanh, 0.5) == std::tanh(0.5));
  CHECK(parse_map("sign") == OutputMapKind::sign);
  CHECK_THROWS_AS(parse_map("step"), std::invalid_argument);
  CHECK(map_name(OutputMapKind::identity) == "identity");
}

TEST_CASE("substream seeds are stable under extension") {
  const std::uint64_t a = substream_seed(1, "x", 0);
  const std::uint64_t b = substream_seed(1, "x", 1);
  const std::uint64_t c = substream_seed(1, "y", 0);
  CHECK(a != b);
  CHECK(a != c);
  CHECK(a == substream_seed(1, "x", 0));
}

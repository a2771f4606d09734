#include <doctest.h>

#include <cmath>

#include "david/error.hpp"
#include "david/kde.hpp"

using namespace david;

namespace {

Eigen::MatrixXd random_points(int m, int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd pts(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = rng.normal();
  return pts;
}

Eigen::VectorXd uniform_weights(int m) {
  return Eigen::VectorXd::Constant(m, 1.0 / m);
}

}  // namespace

TEST_CASE("bandwidth factors match the rules") {
  CHECK(bandwidth_factor(BandwidthRule::scott(), 1000, 3) ==
        doctest::Approx(0.37275937203149406).epsilon(1e-12));
  CHECK(bandwidth_factor(BandwidthRule::silverman(), 1000, 3) ==
        doctest::Approx(0.3610640787640995).epsilon(1e-12));
  CHECK(bandwidth_factor(BandwidthRule::fixed(0.5), 17, 9) == 0.5);
  CHECK(bandwidth_factor(BandwidthRule::fixed(0.5), 1, 1) == 0.5);
  CHECK_THROWS_AS(bandwidth_factor(BandwidthRule::scott(), 1, 2), DataError);
}

TEST_CASE("weighted covariance basics") {
  Eigen::MatrixXd pts(2, 1);
  pts << -1, 1;
  const Eigen::MatrixXd cov = weighted_covariance(pts, uniform_weights(2));
  CHECK(cov(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("weighted covariance equals two-pass oracle under uniform weights") {
  const Eigen::MatrixXd pts = random_points(50, 3, 99);
  const Eigen::MatrixXd cov = weighted_covariance(pts, uniform_weights(50));

  // independent two-pass population covariance
  const Eigen::RowVectorXd mean = pts.colwise().mean();
  Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd c = (pts.row(i) - mean).transpose();
    oracle += c * c.transpose() / 50.0;
  }
  CHECK((cov - oracle).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("weighted covariance of identical points is zero") {
  Eigen::MatrixXd pts(3, 2);
  pts << 1, 2, 1, 2, 1, 2;
  const Eigen::MatrixXd cov = weighted_covariance(pts, uniform_weights(3));
  CHECK(cov.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("cholesky on easy matrices") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  CHECK((cholesky_lower(id) - id).cwiseAbs().maxCoeff() == 0.0);

  Eigen::MatrixXd diag(2, 2);
  diag << 4, 0, 0, 9;
  const Eigen::MatrixXd l = cholesky_lower(diag);
  CHECK(l(0, 0) == doctest::Approx(2.0));
  CHECK(l(1, 1) == doctest::Approx(3.0));
  CHECK(l(0, 1) == 0.0);
}

TEST_CASE("cholesky round-trip on a random PD matrix") {
  const Eigen::MatrixXd a = random_points(5, 5, 4);
  const Eigen::MatrixXd pd = a.transpose() * a + Eigen::MatrixXd::Identity(5, 5);
  const Eigen::MatrixXd l = cholesky_lower(pd);
  CHECK((l * l.transpose() - pd).cwiseAbs().maxCoeff() < 1e-10);
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) CHECK(l(i, j) == 0.0);
}

TEST_CASE("cholesky reports the failing pivot") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;  // indefinite; pivot 1 fails
  CHECK_THROWS_WITH_AS(cholesky_lower(bad), doctest::Contains("pivot 1"), NumericError);
}

TEST_CASE("fit_kde conventions and scaling law") {
  const Eigen::MatrixXd pts = random_points(30, 2, 5);

  // Fixed(1), rho=1, squared convention: H equals the weighted covariance.
  const KdeModel unit = fit_kde(pts, BandwidthRule::fixed(1.0), 1.0);
  const Eigen::MatrixXd cov = weighted_covariance(pts, uniform_weights(30));
  CHECK((unit.bandwidth_cov - cov).cwiseAbs().maxCoeff() < 1e-12);

  // rho scales H linearly, so chol entries scale by sqrt(rho).
  const KdeModel tenth = fit_kde(pts, BandwidthRule::fixed(1.0), 0.1);
  CHECK((tenth.bandwidth_cov - 0.1 * cov).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((tenth.chol_lower - std::sqrt(0.1) * unit.chol_lower).cwiseAbs().maxCoeff() < 1e-10);

  // linear vs squared conventions differ by one factor of eta
  const double eta = bandwidth_factor(BandwidthRule::silverman(), 30, 2);
  const KdeModel sq = fit_kde(pts, BandwidthRule::silverman(), 1.0);
  const KdeModel lin =
      fit_kde(pts, BandwidthRule::silverman(), 1.0, BandwidthConvention::Linear);
  CHECK((sq.bandwidth_cov - eta * eta * cov).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((lin.bandwidth_cov - eta * cov).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_kde invariants from the model contract") {
  const Eigen::MatrixXd pts = random_points(40, 3, 6);
  Rng wr(7);
  Eigen::VectorXd w(40);
  for (int i = 0; i < 40; ++i) w[i] = wr.uniform() + 0.01;
  const KdeModel model = fit_kde(pts, w, BandwidthRule::silverman(), 0.1);
  CHECK(model.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((model.chol_lower * model.chol_lower.transpose() - model.bandwidth_cov)
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK((model.bandwidth_cov - model.bandwidth_cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_kde zero-bandwidth degenerate path") {
  const Eigen::MatrixXd pts = random_points(10, 2, 8);
  const KdeModel model = fit_kde(pts, BandwidthRule::fixed(0.0), 0.5);
  CHECK(model.chol_lower.cwiseAbs().maxCoeff() == 0.0);
  Rng rng(1);
  const Eigen::VectorXd s = model.sample_from_seed(3, rng);
  CHECK((s - pts.row(3).transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(model.density_at(Eigen::VectorXd::Zero(2)), NumericError);
}

TEST_CASE("fit_kde rejects fully degenerate points") {
  Eigen::MatrixXd pts(5, 2);
  pts.setConstant(3.0);
  CHECK_THROWS_AS(fit_kde(pts, BandwidthRule::silverman(), 1.0), NumericError);
}

TEST_CASE("density of a single standard kernel") {
  Eigen::MatrixXd pts(1, 1);
  pts << 0.0;
  KdeModel model;
  model.points = pts;
  model.weights = Eigen::VectorXd::Ones(1);
  model.bandwidth_cov = Eigen::MatrixXd::Identity(1, 1);
  model.chol_lower = Eigen::MatrixXd::Identity(1, 1);

  Eigen::VectorXd at(1);
  at << 0.0;
  CHECK(model.density_at(at) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
}

TEST_CASE("density of a symmetric two-point mixture") {
  Eigen::MatrixXd pts(2, 1);
  pts << -1.0, 1.0;
  KdeModel model;
  model.points = pts;
  model.weights = uniform_weights(2);
  model.bandwidth_cov = Eigen::MatrixXd::Identity(1, 1);
  model.chol_lower = Eigen::MatrixXd::Identity(1, 1);

  Eigen::VectorXd at(1);
  at << 0.0;
  CHECK(model.density_at(at) == doctest::Approx(0.24197072451914337).epsilon(1e-12));

  Eigen::VectorXd bad(2);
  CHECK_THROWS_AS(model.density_at(bad), DataError);
}

TEST_CASE("1D density integrates to one on a +-10 sd grid") {
  const Eigen::MatrixXd pts = random_points(25, 1, 12);
  const KdeModel model = fit_kde(pts, BandwidthRule::silverman(), 1.0);

  const double sd = std::sqrt(model.bandwidth_cov(0, 0) +
                              weighted_covariance(pts, uniform_weights(25))(0, 0));
  const double lo = pts.minCoeff() - 10.0 * sd;
  const double hi = pts.maxCoeff() + 10.0 * sd;
  const int steps = 4000;
  const double h = (hi - lo) / steps;
  double integral = 0.0;
  Eigen::VectorXd at(1);
  for (int i = 0; i <= steps; ++i) {
    at[0] = lo + i * h;
    const double f = model.density_at(at);
    integral += (i == 0 || i == steps) ? 0.5 * f : f;
  }
  integral *= h;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("2D density integrates to one on a grid") {
  const Eigen::MatrixXd pts = random_points(15, 2, 14);
  const KdeModel model = fit_kde(pts, BandwidthRule::silverman(), 1.0);

  const Eigen::MatrixXd total =
      weighted_covariance(pts, uniform_weights(15)) + model.bandwidth_cov;
  const double sd = std::sqrt(std::max(total(0, 0), total(1, 1)));
  const double lo0 = pts.col(0).minCoeff() - 8.0 * sd;
  const double hi0 = pts.col(0).maxCoeff() + 8.0 * sd;
  const double lo1 = pts.col(1).minCoeff() - 8.0 * sd;
  const double hi1 = pts.col(1).maxCoeff() + 8.0 * sd;
  const int steps = 250;
  const double h0 = (hi0 - lo0) / steps;
  const double h1 = (hi1 - lo1) / steps;
  double integral = 0.0;
  Eigen::VectorXd at(2);
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      at[0] = lo0 + i * h0;
      at[1] = lo1 + j * h1;
      double f = model.density_at(at);
      if (i == 0 || i == steps) f *= 0.5;
      if (j == 0 || j == steps) f *= 0.5;
      integral += f;
    }
  }
  integral *= h0 * h1;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("density_at is invariant under permuting (point, weight) pairs") {
  Eigen::MatrixXd pts(3, 1);
  pts << 0.0, 1.0, 4.0;
  Eigen::VectorXd w(3);
  w << 0.2, 0.5, 0.3;
  KdeModel a;
  a.points = pts;
  a.weights = w;
  a.bandwidth_cov = Eigen::MatrixXd::Identity(1, 1) * 0.7;
  a.chol_lower = a.bandwidth_cov.cwiseSqrt();

  KdeModel b = a;
  b.points << 4.0, 0.0, 1.0;
  b.weights << 0.3, 0.2, 0.5;

  Eigen::VectorXd at(1);
  at << 0.6;
  CHECK(a.density_at(at) == doctest::Approx(b.density_at(at)).epsilon(1e-14));
}

TEST_CASE("sample_from_seed moments at 100k draws") {
  Eigen::MatrixXd pts(2, 1);
  pts << 5.0, -3.0;
  KdeModel model;
  model.points = pts;
  model.weights = uniform_weights(2);
  model.bandwidth_cov = Eigen::MatrixXd::Constant(1, 1, 4.0);
  model.chol_lower = Eigen::MatrixXd::Constant(1, 1, 2.0);

  Rng rng(1234);
  const int draws = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = model.sample_from_seed(0, rng)[0];
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / draws;
  const double var = sumsq / draws - mean * mean;
  CHECK(mean == doctest::Approx(5.0).epsilon(0.004));  // 5 +- 0.02
  CHECK(var == doctest::Approx(4.0).epsilon(0.025));   // 4 +- 0.1

  CHECK_THROWS_AS(model.sample_from_seed(2, rng), DataError);

  // fixed rng seed reproduces the draw
  Rng r1(7), r2(7);
  CHECK(model.sample_from_seed(1, r1)[0] == model.sample_from_seed(1, r2)[0]);
}

TEST_CASE("sample honors one-hot and uniform seed weights") {
  Eigen::MatrixXd pts(4, 1);
  pts << 0.0, 10.0, 20.0, 30.0;

  KdeModel onehot;
  onehot.points = pts;
  onehot.weights = Eigen::VectorXd::Zero(4);
  onehot.weights[2] = 1.0;
  onehot.bandwidth_cov = Eigen::MatrixXd::Constant(1, 1, 1e-8);
  onehot.chol_lower = Eigen::MatrixXd::Constant(1, 1, 1e-4);
  Rng rng(5);
  const Eigen::MatrixXd s = onehot.sample(2000, rng);
  CHECK(s.col(0).mean() == doctest::Approx(20.0).epsilon(1e-4));

  KdeModel uniform;
  uniform.points = pts;
  uniform.weights = uniform_weights(4);
  uniform.bandwidth_cov = onehot.bandwidth_cov;
  uniform.chol_lower = onehot.chol_lower;
  Rng rng2(6);
  const Eigen::MatrixXd draws = uniform.sample(100000, rng2);
  Eigen::Vector4i counts = Eigen::Vector4i::Zero();
  for (int i = 0; i < draws.rows(); ++i) {
    const int idx = static_cast<int>(std::lround(draws(i, 0) / 10.0));
    counts[idx]++;
  }
  for (int k = 0; k < 4; ++k)
    CHECK(std::abs(counts[k] / 100000.0 - 0.25) < 0.01);

  CHECK(uniform.sample(0, rng2).rows() == 0);
}

TEST_CASE("mixture moments: mean and covariance of samples") {
  const Eigen::MatrixXd pts = random_points(6, 2, 77);
  Rng wr(3);
  Eigen::VectorXd w(6);
  for (int i = 0; i < 6; ++i) w[i] = wr.uniform() + 0.1;
  const KdeModel model = fit_kde(pts, w, BandwidthRule::silverman(), 0.5);

  const Eigen::VectorXd expect_mean = model.points.transpose() * model.weights;
  const Eigen::MatrixXd expect_cov =
      weighted_covariance(model.points, model.weights) + model.bandwidth_cov;

  Rng rng(99);
  const int draws = 100000;
  const Eigen::MatrixXd s = model.sample(draws, rng);
  const Eigen::RowVectorXd mean = s.colwise().mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < draws; ++i) {
    const Eigen::VectorXd c = (s.row(i) - mean).transpose();
    cov += c * c.transpose() / static_cast<double>(draws);
  }

  // three Monte-Carlo standard errors per coordinate
  for (int j = 0; j < 2; ++j) {
    const double se = std::sqrt(expect_cov(j, j) / draws);
    CHECK(std::abs(mean[j] - expect_mean[j]) < 3.0 * se);
  }
  CHECK((cov - expect_cov).cwiseAbs().maxCoeff() < 0.02);
}

#include <doctest.h>

#include <cmath>

#include "david/error.hpp"
#include "david/weights.hpp"

using namespace david;

TEST_CASE("alpha = 0 gives exactly uniform weights") {
  Eigen::VectorXd y(5);
  y << 0, 1, 2, 3, 100;
  const RelevanceWeights rw = relevance_weights(y, 0.0, BandwidthRule::silverman());
  for (int i = 0; i < 5; ++i) {
    CHECK(rw.raw[i] == 1.0);
    CHECK(rw.normalized[i] == doctest::Approx(0.2).epsilon(1e-15));
  }
  const Eigen::VectorXd lw = loss_weights(rw);
  for (int i = 0; i < 5; ++i) CHECK(lw[i] == 1.0);
}

TEST_CASE("density ratio 2:1 normalizes to (1/3, 2/3)") {
  Eigen::VectorXd dens(2);
  dens << 0.4, 0.2;  // f(y1) = 2 f(y2)
  const RelevanceWeights rw = weights_from_densities(dens, 1.0, BandwidthRule::silverman());
  CHECK(rw.normalized[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(rw.normalized[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("isolated target value outweighs clustered ones") {
  Eigen::VectorXd y(4);
  y << 0, 0, 0, 10;
  const RelevanceWeights rw = relevance_weights(y, 1.0, BandwidthRule::silverman());
  for (int i = 0; i < 3; ++i) CHECK(rw.normalized[3] > rw.normalized[i]);
}

TEST_CASE("normalization and mean-1 contracts") {
  Eigen::VectorXd y(6);
  y << 1.0, 1.1, 1.3, 2.0, 5.0, 9.0;
  const RelevanceWeights rw = relevance_weights(y, 1.0, BandwidthRule::silverman());
  CHECK(rw.raw.minCoeff() > 0.0);
  CHECK(rw.normalized.sum() == doctest::Approx(1.0).epsilon(1e-12));

  const Eigen::VectorXd lw = loss_weights(rw);
  CHECK(lw.mean() == doctest::Approx(1.0).epsilon(1e-12));

  // positive rescaling preserves ordering
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK((rw.raw[i] < rw.raw[j]) == (lw[i] < lw[j]));
}

TEST_CASE("exponent identity: raw(alpha=2) = raw(alpha=1)^2") {
  Eigen::VectorXd y(8);
  y << 0.0, 0.2, 0.3, 0.35, 1.2, 2.0, 4.0, 4.1;
  const RelevanceWeights a1 = relevance_weights(y, 1.0, BandwidthRule::silverman());
  const RelevanceWeights a2 = relevance_weights(y, 2.0, BandwidthRule::silverman());
  for (int i = 0; i < 8; ++i)
    CHECK(a2.raw[i] == doctest::Approx(a1.raw[i] * a1.raw[i]).epsilon(1e-10));
}

TEST_CASE("strict monotonicity in the density") {
  Eigen::VectorXd y(20);
  for (int i = 0; i < 18; ++i) y[i] = 0.1 * i;  // dense cluster
  y[18] = 50.0;
  y[19] = 51.0;  // sparse pair
  const RelevanceWeights rw = relevance_weights(y, 1.5, BandwidthRule::scott());

  // recompute densities to compare pairs with strict density ordering
  const KdeModel kde = fit_kde(y, BandwidthRule::scott(), 1.0);
  Eigen::VectorXd dens(20);
  Eigen::VectorXd at(1);
  for (int i = 0; i < 20; ++i) {
    at[0] = y[i];
    dens[i] = kde.density_at(at);
  }
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      if (dens[i] < dens[j]) CHECK(rw.raw[i] > rw.raw[j]);
}

TEST_CASE("equally spaced targets have near-uniform interior weights") {
  const int n = 101;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = static_cast<double>(i);
  const RelevanceWeights rw = relevance_weights(y, 1.0, BandwidthRule::silverman());

  // exclude the edge fifth on each side
  double lo = 1e300, hi = 0.0;
  for (int i = 20; i <= 80; ++i) {
    lo = std::min(lo, rw.raw[i]);
    hi = std::max(hi, rw.raw[i]);
  }
  CHECK((hi - lo) / lo < 0.05);
}

TEST_CASE("degenerate inputs are rejected") {
  Eigen::VectorXd one(1);
  one << 3.0;
  CHECK_THROWS_AS(relevance_weights(one, 1.0, BandwidthRule::silverman()), DataError);

  Eigen::VectorXd constant = Eigen::VectorXd::Constant(5, 2.0);
  CHECK_THROWS_AS(relevance_weights(constant, 1.0, BandwidthRule::silverman()), NumericError);

  Eigen::VectorXd ok(3);
  ok << 1, 2, 3;
  CHECK_THROWS_AS(relevance_weights(ok, -1.0, BandwidthRule::silverman()), DataError);
}

#include "david/weights.hpp"

#include <cassert>
#include <cmath>

#include "david/error.hpp"

namespace david {

RelevanceWeights weights_from_densities(const Eigen::VectorXd& densities, double alpha,
                                        const BandwidthRule& rule) {
  if (alpha < 0.0) throw DataError("relevance weights: alpha must be nonnegative");
  RelevanceWeights rw;
  rw.alpha = alpha;
  rw.bandwidth_rule = rule;
  rw.raw.resize(densities.size());
  for (Eigen::Index i = 0; i < densities.size(); ++i) {
    assert(densities[i] > 0.0);  // Gaussian kernels are strictly positive
    rw.raw[i] = alpha == 0.0 ? 1.0 : std::pow(densities[i], -alpha);
    if (!std::isfinite(rw.raw[i]))
      throw NumericError("relevance weights: non-finite weight from density " +
                         std::to_string(densities[i]));
  }
  rw.normalized = rw.raw / rw.raw.sum();
  return rw;
}

RelevanceWeights relevance_weights(const Eigen::VectorXd& y, double alpha,
                                   const BandwidthRule& rule) {
  if (y.size() < 2) throw DataError("relevance weights: need at least two observations");
  if (y.minCoeff() == y.maxCoeff())
    throw NumericError("relevance weights: constant target, density estimate degenerate");

  const KdeModel kde = fit_kde(y, rule, /*noise_scale=*/1.0, BandwidthConvention::Squared);
  Eigen::VectorXd dens(y.size());
  Eigen::VectorXd point(1);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    point[0] = y[i];
    dens[i] = kde.density_at(point);
  }
  return weights_from_densities(dens, alpha, rule);
}

Eigen::VectorXd loss_weights(const RelevanceWeights& rw) {
  const double mean = rw.raw.mean();
  return rw.raw / mean;
}

}  // namespace david

#pragma once

#include <Eigen/Dense>

#include "david/kde.hpp"

namespace david {

// Inverse-density relevance weights over a continuous target: rare target
// values get large weights. Used for loss weighting, seed drawing, and the
// weighted MSE metric.
struct RelevanceWeights {
  Eigen::VectorXd raw;         // 1 / fhat(y_i)^alpha, all positive
  Eigen::VectorXd normalized;  // raw / sum(raw), sums to 1
  double alpha = 1.0;
  BandwidthRule bandwidth_rule;
};

// Core of the weighting scheme given already-evaluated densities.
RelevanceWeights weights_from_densities(const Eigen::VectorXd& densities, double alpha,
                                        const BandwidthRule& rule);

// Fits a univariate KDE on y (uniform fit weights, noise scale 1, squared
// factor convention), evaluates it at each y_i and inverts.
RelevanceWeights relevance_weights(const Eigen::VectorXd& y, double alpha,
                                   const BandwidthRule& rule);

// Raw weights rescaled to mean 1, used as per-example factors in the
// training loss so the loss magnitude stays comparable across alphas.
Eigen::VectorXd loss_weights(const RelevanceWeights& rw);

}  // namespace david

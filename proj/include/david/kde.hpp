#pragma once

#include <Eigen/Dense>

#include "david/rng.hpp"

namespace david {

enum class BandwidthKind { Silverman, Scott, Fixed };

struct BandwidthRule {
  BandwidthKind kind = BandwidthKind::Silverman;
  double fixed_factor = 1.0;  // used only by Fixed; 0 selects the no-noise path

  static BandwidthRule silverman() { return {BandwidthKind::Silverman, 1.0}; }
  static BandwidthRule scott() { return {BandwidthKind::Scott, 1.0}; }
  static BandwidthRule fixed(double factor) { return {BandwidthKind::Fixed, factor}; }
};

// How the bandwidth factor enters the smoothing matrix. Squared is the
// convention of the usual numerical KDE packages (H = eta^2 * Cov) and the
// default; Linear is the literal H = eta * Cov reading.
enum class BandwidthConvention { Squared, Linear };

// Weighted Gaussian mixture over m support points in d dimensions.
// Immutable after fit; density and sampling are safe to call concurrently
// as long as each caller owns its Rng.
struct KdeModel {
  Eigen::MatrixXd points;        // m x d
  Eigen::VectorXd weights;       // m, nonnegative, sums to 1
  Eigen::MatrixXd bandwidth_cov; // d x d SPD (or exactly zero in the degenerate path)
  Eigen::MatrixXd chol_lower;    // lower-triangular, L L^T = bandwidth_cov

  int m() const { return static_cast<int>(points.rows()); }
  int d() const { return static_cast<int>(points.cols()); }

  // Mixture density sum_i w_i * phi_H(x - p_i). Requires PD bandwidth.
  double density_at(const Eigen::VectorXd& point) const;

  // points[seed] + L * eps with eps i.i.d. standard normal.
  Eigen::VectorXd sample_from_seed(int seed_index, Rng& rng) const;

  // Categorical seed draw by weights, then kernel noise, per output row.
  Eigen::MatrixXd sample(int count, Rng& rng) const;
};

// Silverman: (4/(d+2))^(1/(d+4)) * m^(-1/(d+4)); Scott: m^(-1/(d+4));
// Fixed: the stored factor regardless of m and d.
double bandwidth_factor(const BandwidthRule& rule, int m, int d);

// sum_i w_i (p_i - pbar)(p_i - pbar)^T with pbar the weighted mean.
Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& points,
                                    const Eigen::VectorXd& weights);

// Lower Cholesky factor; throws NumericError naming the failing pivot when
// the matrix is not positive-definite (pivot threshold 1e-12).
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a);

// H = rho * eta^2 * weighted_covariance (Squared convention) with a single
// jitter retry on a non-PD result. An exactly zero H is accepted and yields
// L = 0, the degenerate no-noise sampler.
KdeModel fit_kde(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                 const BandwidthRule& rule, double noise_scale,
                 BandwidthConvention convention = BandwidthConvention::Squared);

// Same with uniform weights.
KdeModel fit_kde(const Eigen::MatrixXd& points, const BandwidthRule& rule, double noise_scale,
                 BandwidthConvention convention = BandwidthConvention::Squared);

}  // namespace david

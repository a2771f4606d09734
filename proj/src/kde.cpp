#include "david/kde.hpp"

#include <cmath>
#include <string>

#include "david/error.hpp"

namespace david {

namespace {
constexpr double kPivotTol = 1e-12;
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

double bandwidth_factor(const BandwidthRule& rule, int m, int d) {
  if (rule.kind == BandwidthKind::Fixed) {
    if (rule.fixed_factor < 0.0) throw DataError("fixed bandwidth factor must be nonnegative");
    return rule.fixed_factor;
  }
  if (m < 2) throw DataError("bandwidth rules need at least two support points");
  if (d < 1) throw DataError("bandwidth rules need dimension >= 1");
  const double exponent = -1.0 / (d + 4);
  const double scott = std::pow(static_cast<double>(m), exponent);
  if (rule.kind == BandwidthKind::Scott) return scott;
  return std::pow(4.0 / (d + 2), 1.0 / (d + 4)) * scott;
}

Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& points,
                                    const Eigen::VectorXd& weights) {
  const int m = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  if (m < 2) throw DataError("weighted covariance needs at least two points");
  if (weights.size() != m) throw DataError("weighted covariance: weight length mismatch");

  const Eigen::VectorXd mean = points.transpose() * weights;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd c = points.row(i).transpose() - mean;
    cov.noalias() += weights[i] * (c * c.transpose());
  }
  return cov;
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a) {
  const int d = static_cast<int>(a.rows());
  if (a.cols() != d) throw DataError("cholesky: matrix must be square");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (pivot <= kPivotTol)
      throw NumericError("cholesky: matrix not positive-definite at pivot " + std::to_string(j));
    l(j, j) = std::sqrt(pivot);
    for (int i = j + 1; i < d; ++i) {
      const double s = a(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

KdeModel fit_kde(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                 const BandwidthRule& rule, double noise_scale,
                 BandwidthConvention convention) {
  const int m = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  if (m < 1 || d < 1) throw DataError("fit_kde: empty point set");
  if (weights.size() != m) throw DataError("fit_kde: weight length mismatch");
  if (weights.minCoeff() < 0.0) throw DataError("fit_kde: negative weight");
  const double wsum = weights.sum();
  if (!(wsum > 0.0)) throw DataError("fit_kde: weights sum to zero");
  if (!(noise_scale >= 0.0)) throw DataError("fit_kde: noise scale must be nonnegative");

  KdeModel model;
  model.points = points;
  model.weights = weights / wsum;

  const double eta = bandwidth_factor(rule, m, d);
  const double factor =
      convention == BandwidthConvention::Squared ? noise_scale * eta * eta : noise_scale * eta;
  const Eigen::MatrixXd cov = weighted_covariance(points, model.weights);
  model.bandwidth_cov = factor * cov;

  const double tr = model.bandwidth_cov.trace();
  if (tr == 0.0) {
    // Degenerate no-noise path (Fixed(0) bandwidth or rho -> 0): sampling
    // returns the seed itself.
    model.chol_lower = Eigen::MatrixXd::Zero(d, d);
    return model;
  }

  try {
    model.chol_lower = cholesky_lower(model.bandwidth_cov);
  } catch (const NumericError&) {
    const double jitter = 1e-9 * tr / d;
    model.bandwidth_cov += jitter * Eigen::MatrixXd::Identity(d, d);
    model.chol_lower = cholesky_lower(model.bandwidth_cov);  // second failure propagates
  }
  return model;
}

KdeModel fit_kde(const Eigen::MatrixXd& points, const BandwidthRule& rule, double noise_scale,
                 BandwidthConvention convention) {
  const Eigen::VectorXd w =
      Eigen::VectorXd::Constant(points.rows(), 1.0 / static_cast<double>(points.rows()));
  return fit_kde(points, w, rule, noise_scale, convention);
}

double KdeModel::density_at(const Eigen::VectorXd& point) const {
  if (point.size() != d()) throw DataError("density_at: point dimension mismatch");
  if (chol_lower.diagonal().minCoeff() <= 0.0)
    throw NumericError("density_at: zero bandwidth has no density");

  // log|H|^(1/2) = sum log L_jj
  double log_det_half = 0.0;
  for (int j = 0; j < d(); ++j) log_det_half += std::log(chol_lower(j, j));
  const double log_norm = -0.5 * d() * std::log(kTwoPi) - log_det_half;

  double acc = 0.0;
  for (int i = 0; i < m(); ++i) {
    const Eigen::VectorXd u = point - points.row(i).transpose();
    const Eigen::VectorXd v = chol_lower.triangularView<Eigen::Lower>().solve(u);
    acc += weights[i] * std::exp(log_norm - 0.5 * v.squaredNorm());
  }
  return acc;
}

Eigen::VectorXd KdeModel::sample_from_seed(int seed_index, Rng& rng) const {
  if (seed_index < 0 || seed_index >= m())
    throw DataError("sample_from_seed: seed index out of range");
  Eigen::VectorXd eps(d());
  for (int j = 0; j < d(); ++j) eps[j] = rng.normal();
  return points.row(seed_index).transpose() + chol_lower * eps;
}

Eigen::MatrixXd KdeModel::sample(int count, Rng& rng) const {
  if (count < 0) throw DataError("sample: negative count");
  Eigen::MatrixXd out(count, d());
  Eigen::VectorXd cumulative(m());
  double acc = 0.0;
  for (int i = 0; i < m(); ++i) {
    acc += weights[i];
    cumulative[i] = acc;
  }
  for (int r = 0; r < count; ++r) {
    const double u = rng.uniform();
    int seed = m() - 1;
    for (int i = 0; i < m(); ++i) {
      if (u < cumulative[i]) {
        seed = i;
        break;
      }
    }
    out.row(r) = sample_from_seed(seed, rng).transpose();
  }
  return out;
}

}  // namespace david

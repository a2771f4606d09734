#include "david/generators.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>

#include "david/error.hpp"

namespace david {

namespace {

TabularDataset empty_like(const TabularDataset& train) {
  TabularDataset out;
  out.features.resize(0, train.p());
  out.target.resize(0);
  out.feature_names = train.feature_names;
  out.target_name = train.target_name;
  out.scaler = train.scaler;
  return out;
}

TabularDataset from_joint_matrix(const Eigen::MatrixXd& rows, const TabularDataset& train) {
  TabularDataset out;
  out.features = rows.leftCols(train.p());
  out.target = rows.col(train.p());
  out.feature_names = train.feature_names;
  out.target_name = train.target_name;
  out.scaler = train.scaler;
  return out;
}

Eigen::MatrixXd joint_matrix(const TabularDataset& ds) {
  Eigen::MatrixXd m(ds.n(), ds.p() + 1);
  m.leftCols(ds.p()) = ds.features;
  m.col(ds.p()) = ds.target;
  return m;
}

void check_model_for_kind(GeneratorKind kind, const VaeModel* model) {
  if (!generator_needs_vae(kind)) return;
  if (!model) throw DataError("generator '" + generator_kind_name(kind) + "' needs a VAE model");
  if (!model->trained)
    throw DataError("generator '" + generator_kind_name(kind) + "' needs a trained model");
  const double a = model->config.alpha;
  const double bkl = model->config.beta_kl;
  switch (kind) {
    case GeneratorKind::ZeroVAE:
      if (bkl != 0.0)
        throw DataError("0vae requires a model trained with beta_kl = 0 (got beta_kl = " +
                        std::to_string(bkl) + ")");
      break;
    case GeneratorKind::BVAE:
    case GeneratorKind::KBVAE:
      if (a != 0.0)
        throw DataError(generator_kind_name(kind) +
                        " requires a model trained with alpha = 0 (got alpha = " +
                        std::to_string(a) + ")");
      break;
    case GeneratorKind::BVAEw:
    case GeneratorKind::KBVAEw:
      if (a <= 0.0)
        throw DataError(generator_kind_name(kind) +
                        " requires a model trained with the balanced loss (alpha > 0, got " +
                        std::to_string(a) + ")");
      break;
    default:
      break;
  }
}

}  // namespace

GeneratorKind parse_generator_kind(const std::string& name) {
  if (name == "baseline") return GeneratorKind::Baseline;
  if (name == "os") return GeneratorKind::OS;
  if (name == "csb") return GeneratorKind::CSB;
  if (name == "0vae") return GeneratorKind::ZeroVAE;
  if (name == "bvae") return GeneratorKind::BVAE;
  if (name == "kbvae") return GeneratorKind::KBVAE;
  if (name == "bvaew") return GeneratorKind::BVAEw;
  if (name == "kbvaew" || name == "david") return GeneratorKind::KBVAEw;
  if (name == "kpca") return GeneratorKind::KPCA;
  throw DataError("unknown generator kind '" + name + "'");
}

std::string generator_kind_name(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Baseline: return "baseline";
    case GeneratorKind::OS: return "os";
    case GeneratorKind::CSB: return "csb";
    case GeneratorKind::ZeroVAE: return "0vae";
    case GeneratorKind::BVAE: return "bvae";
    case GeneratorKind::KBVAE: return "kbvae";
    case GeneratorKind::BVAEw: return "bvaew";
    case GeneratorKind::KBVAEw: return "kbvaew";
    case GeneratorKind::KPCA: return "kpca";
  }
  return "unknown";
}

bool generator_needs_vae(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::ZeroVAE:
    case GeneratorKind::BVAE:
    case GeneratorKind::KBVAE:
    case GeneratorKind::BVAEw:
    case GeneratorKind::KBVAEw:
      return true;
    default:
      return false;
  }
}

std::vector<int> draw_seeds(const RelevanceWeights& weights, long long m, Rng& rng) {
  if (m < 0) throw DataError("draw_seeds: negative count");
  const Eigen::Index n = weights.normalized.size();
  Eigen::VectorXd cumulative(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += weights.normalized[i];
    cumulative[i] = acc;
  }
  std::vector<int> seeds(static_cast<std::size_t>(m));
  for (long long r = 0; r < m; ++r) {
    const double u = rng.uniform();
    int pick = static_cast<int>(n) - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (u < cumulative[i]) {
        pick = static_cast<int>(i);
        break;
      }
    }
    seeds[static_cast<std::size_t>(r)] = pick;
  }
  return seeds;
}

TabularDataset david_generate(const VaeModel& model, const TabularDataset& train_scaled,
                              const AugmentationPlan& plan) {
  if (!model.trained) throw DataError("david_generate: model is not trained");
  const long long m = plan.resolved_count(train_scaled.n());
  Rng rng(derive_seed(plan.rng_seed, "generate.latent-sb"));

  // (i) seed weights from the target density; (ii) smoothed bootstrap over
  // the latent means; (iii) decode.
  const RelevanceWeights omega =
      relevance_weights(train_scaled.target, plan.alpha, plan.weight_rule());

  Eigen::MatrixXd mu;
  encode(model, train_scaled.features, train_scaled.target, &mu, nullptr);
  const KdeModel kde =
      fit_kde(mu, omega.normalized, plan.bandwidth_rule, plan.rho, plan.convention);

  const std::vector<int> seeds = draw_seeds(omega, m, rng);
  Eigen::MatrixXd z(m, model.latent_dim);
  for (long long r = 0; r < m; ++r)
    z.row(r) = kde.sample_from_seed(seeds[static_cast<std::size_t>(r)], rng).transpose();

  TabularDataset out = empty_like(train_scaled);
  Eigen::VectorXd y_hat;
  decode(model, z, &out.features, &y_hat);
  out.target = std::move(y_hat);
  return out;
}

TabularDataset generate(GeneratorKind kind, const TabularDataset& train_scaled,
                        const VaeModel* model, const AugmentationPlan& plan) {
  check_model_for_kind(kind, model);
  const long long m = plan.resolved_count(train_scaled.n());

  switch (kind) {
    case GeneratorKind::Baseline:
      return empty_like(train_scaled);

    case GeneratorKind::OS: {
      Rng rng(derive_seed(plan.rng_seed, "generate.os"));
      const RelevanceWeights omega =
          relevance_weights(train_scaled.target, plan.alpha, plan.weight_rule());
      return train_scaled.rows(draw_seeds(omega, m, rng));
    }

    case GeneratorKind::CSB: {
      Rng rng(derive_seed(plan.rng_seed, "generate.csb"));
      const RelevanceWeights omega =
          relevance_weights(train_scaled.target, plan.alpha, plan.weight_rule());
      const KdeModel kde = fit_kde(joint_matrix(train_scaled), omega.normalized,
                                   plan.bandwidth_rule, plan.rho, plan.convention);
      return from_joint_matrix(kde.sample(static_cast<int>(m), rng), train_scaled);
    }

    case GeneratorKind::ZeroVAE:
    case GeneratorKind::BVAE:
    case GeneratorKind::BVAEw: {
      Rng rng(derive_seed(plan.rng_seed, "generate.natural"));
      const RelevanceWeights omega =
          relevance_weights(train_scaled.target, plan.alpha, plan.weight_rule());
      const std::vector<int> seeds = draw_seeds(omega, m, rng);
      return natural_generate(*model, seeds, train_scaled, rng);
    }

    case GeneratorKind::KBVAE:
    case GeneratorKind::KBVAEw:
      return david_generate(*model, train_scaled, plan);

    case GeneratorKind::KPCA: {
      Rng rng(derive_seed(plan.rng_seed, "generate.kpca"));
      const RelevanceWeights omega =
          relevance_weights(train_scaled.target, plan.alpha, plan.weight_rule());
      const PcaModel pca = pca_fit(joint_matrix(train_scaled));
      const Eigen::MatrixXd scores = pca_project(pca, joint_matrix(train_scaled));
      const KdeModel kde =
          fit_kde(scores, omega.normalized, plan.bandwidth_rule, plan.rho, plan.convention);
      const Eigen::MatrixXd sampled = kde.sample(static_cast<int>(m), rng);
      return from_joint_matrix(pca_inverse(pca, sampled), train_scaled);
    }
  }
  throw DataError("generate: unhandled generator kind");
}

PcaModel pca_fit(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < d || d < 1) throw DataError("pca_fit: need at least d rows");

  PcaModel model;
  model.mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("pca_fit: eigen-solve failed");

  // Solver returns ascending eigenvalues; flip to descending and fix signs
  // so each component's largest-magnitude entry is positive.
  model.components.resize(d, d);
  model.eigenvalues.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::Index src = d - 1 - j;
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index argmax = 0;
    v.cwiseAbs().maxCoeff(&argmax);
    if (v[argmax] < 0.0) v = -v;
    model.components.col(j) = v;
    model.eigenvalues[j] = solver.eigenvalues()[src];
  }
  model.retained = static_cast<int>(d);
  return model;
}

Eigen::MatrixXd pca_project(const PcaModel& model, const Eigen::MatrixXd& points) {
  if (points.cols() != model.mean.size()) throw DataError("pca_project: dimension mismatch");
  return (points.rowwise() - model.mean.transpose()) * model.components.leftCols(model.retained);
}

Eigen::MatrixXd pca_inverse(const PcaModel& model, const Eigen::MatrixXd& scores) {
  if (scores.cols() != model.retained) throw DataError("pca_inverse: dimension mismatch");
  return (scores * model.components.leftCols(model.retained).transpose()).rowwise() +
         model.mean.transpose();
}

TabularDataset augment(const TabularDataset& train, const TabularDataset& synthetic,
                       const AugmentationPlan& plan) {
  if (synthetic.n() > 0 && synthetic.p() != train.p())
    throw DataError("augment: column schemas do not match");

  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(synthetic.n()));
  if (plan.mix == "replace-duplicates") {
    std::set<std::vector<double>> seen;
    for (int i = 0; i < train.n(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(train.p() + 1));
      for (int j = 0; j < train.p(); ++j) row[static_cast<std::size_t>(j)] = train.features(i, j);
      row.back() = train.target[i];
      seen.insert(std::move(row));
    }
    for (int i = 0; i < synthetic.n(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(train.p() + 1));
      for (int j = 0; j < train.p(); ++j)
        row[static_cast<std::size_t>(j)] = synthetic.features(i, j);
      row.back() = synthetic.target[i];
      if (seen.insert(std::move(row)).second) keep.push_back(i);
    }
  } else {
    for (int i = 0; i < synthetic.n(); ++i) keep.push_back(i);
  }

  TabularDataset out;
  out.features.resize(train.n() + static_cast<Eigen::Index>(keep.size()), train.p());
  out.target.resize(train.n() + static_cast<Eigen::Index>(keep.size()));
  out.features.topRows(train.n()) = train.features;
  out.target.head(train.n()) = train.target;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.features.row(train.n() + static_cast<Eigen::Index>(i)) = synthetic.features.row(keep[i]);
    out.target[train.n() + static_cast<Eigen::Index>(i)] = synthetic.target[keep[i]];
  }
  out.feature_names = train.feature_names;
  out.target_name = train.target_name;
  out.scaler = train.scaler;
  return out;
}

}  // namespace david

#include "david/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "david/error.hpp"
#include "david/kde.hpp"
#include "david/weights.hpp"

namespace david {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string RegressorKind::name() const {
  char buf[64];
  if (tag == Tag::Knn)
    std::snprintf(buf, sizeof(buf), "knn:%d", k);
  else
    std::snprintf(buf, sizeof(buf), "ridge:%g", lambda);
  return buf;
}

std::vector<RegressorKind> parse_regressors(const std::string& spec) {
  std::vector<RegressorKind> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    RegressorKind r;
    if (item.rfind("knn", 0) == 0) {
      r.tag = RegressorKind::Tag::Knn;
      r.k = item.size() > 4 ? std::stoi(item.substr(4)) : 5;
      if (r.k < 1) throw DataError("knn: k must be >= 1");
    } else if (item.rfind("ridge", 0) == 0) {
      r.tag = RegressorKind::Tag::Ridge;
      r.lambda = item.size() > 6 ? std::stod(item.substr(6)) : 1e-3;
      if (r.lambda < 0.0) throw DataError("ridge: lambda must be nonnegative");
    } else {
      throw DataError("unknown regressor '" + item + "' (use knn:<k> or ridge:<lambda>)");
    }
    out.push_back(r);
  }
  if (out.empty()) throw DataError("no regressors specified");
  return out;
}

Eigen::VectorXd knn_fit_predict(const TabularDataset& train, const Eigen::MatrixXd& test_features,
                                int k) {
  const int n = train.n();
  if (n < 1) throw DataError("knn: empty training set");
  if (k < 1 || k > n) throw DataError("knn: k must lie in [1, n]");
  if (test_features.cols() != train.p()) throw DataError("knn: feature count mismatch");

  Eigen::VectorXd pred(test_features.rows());
  std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < test_features.rows(); ++t) {
    for (int i = 0; i < n; ++i)
      dist[static_cast<std::size_t>(i)] = {
          (train.features.row(i) - test_features.row(t)).squaredNorm(), i};
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += train.target[dist[static_cast<std::size_t>(j)].second];
    pred[t] = acc / k;
  }
  return pred;
}

Eigen::VectorXd ridge_fit_predict(const TabularDataset& train,
                                  const Eigen::MatrixXd& test_features, double lambda) {
  const int n = train.n();
  const int p = train.p();
  if (n <= p) throw DataError("ridge: need more rows than features");
  if (test_features.cols() != p) throw DataError("ridge: feature count mismatch");

  // Intercept via column augmentation; the penalty skips the intercept.
  Eigen::MatrixXd a(n, p + 1);
  a.col(0).setOnes();
  a.rightCols(p) = train.features;

  Eigen::MatrixXd m = a.transpose() * a;
  for (int j = 1; j <= p; ++j) m(j, j) += lambda;
  const Eigen::VectorXd rhs = a.transpose() * train.target;

  Eigen::MatrixXd l;
  try {
    l = cholesky_lower(m);
  } catch (const NumericError&) {
    throw NumericError("ridge: normal equations singular; use lambda > 0");
  }
  const Eigen::VectorXd beta = l.transpose().triangularView<Eigen::Upper>().solve(
      l.triangularView<Eigen::Lower>().solve(rhs));

  return test_features * beta.tail(p) + Eigen::VectorXd::Constant(test_features.rows(), beta[0]);
}

double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
  if (y.size() != y_hat.size()) throw DataError("mse: length mismatch");
  return (y - y_hat).squaredNorm() / static_cast<double>(y.size());
}

double mae(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
  if (y.size() != y_hat.size()) throw DataError("mae: length mismatch");
  return (y - y_hat).cwiseAbs().sum() / static_cast<double>(y.size());
}

double mape(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat, double epsilon) {
  if (y.size() != y_hat.size()) throw DataError("mape: length mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    acc += std::abs(y[i] - y_hat[i]) / std::max(epsilon, std::abs(y[i]));
  return acc / static_cast<double>(y.size());
}

double wmse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
            const Eigen::VectorXd& weights) {
  if (y.size() != y_hat.size() || y.size() != weights.size())
    throw DataError("wmse: length mismatch");
  return (weights.array() * (y - y_hat).array().square()).sum() / static_cast<double>(y.size());
}

void BenchmarkReport::recompute_aggregates() {
  aggregates.clear();
  std::map<std::pair<std::string, std::string>, std::vector<Metrics>> groups;
  for (const auto& row : rows) groups[{row.generator, row.regressor}].push_back(row.metrics);

  for (const auto& [key, ms] : groups) {
    const double k = static_cast<double>(ms.size());
    BenchmarkAggregate agg;
    for (const auto& m : ms) {
      agg.mean.mse += m.mse / k;
      agg.mean.wmse += m.wmse / k;
      agg.mean.mae += m.mae / k;
      agg.mean.mape += m.mape / k;
    }
    if (ms.size() > 1) {
      Metrics var;
      for (const auto& m : ms) {
        var.mse += (m.mse - agg.mean.mse) * (m.mse - agg.mean.mse);
        var.wmse += (m.wmse - agg.mean.wmse) * (m.wmse - agg.mean.wmse);
        var.mae += (m.mae - agg.mean.mae) * (m.mae - agg.mean.mae);
        var.mape += (m.mape - agg.mean.mape) * (m.mape - agg.mean.mape);
      }
      const double denom = k - 1.0;
      agg.stddev.mse = std::sqrt(var.mse / denom);
      agg.stddev.wmse = std::sqrt(var.wmse / denom);
      agg.stddev.mae = std::sqrt(var.mae / denom);
      agg.stddev.mape = std::sqrt(var.mape / denom);
    }
    aggregates[key] = agg;
  }
}

namespace {

struct FoldModels {
  VaeModel balanced;  // alpha > 0
  VaeModel plain;     // alpha = 0
  VaeModel nokl;      // alpha = 0, beta_kl = 0
  bool has_balanced = false;
  bool has_plain = false;
  bool has_nokl = false;
};

const VaeModel* model_for_kind(GeneratorKind kind, const FoldModels& models) {
  switch (kind) {
    case GeneratorKind::ZeroVAE:
      return &models.nokl;
    case GeneratorKind::BVAE:
    case GeneratorKind::KBVAE:
      return &models.plain;
    case GeneratorKind::BVAEw:
    case GeneratorKind::KBVAEw:
      return &models.balanced;
    default:
      return nullptr;
  }
}

std::vector<BenchmarkRow> run_fold(const TabularDataset& ds, int fold,
                                   const std::vector<int>& train_idx,
                                   const std::vector<int>& test_idx,
                                   const std::vector<GeneratorKind>& kinds,
                                   const std::vector<RegressorKind>& regressors,
                                   const RunConfig& cfg) {
  const std::uint64_t fold_seed =
      derive_seed(derive_seed(cfg.seed, "fold"), static_cast<std::uint64_t>(fold));
  const BandwidthRule rule = parse_bandwidth_rule(cfg.bandwidth_rule);
  const BandwidthConvention convention = cfg.bandwidth_convention == "linear"
                                             ? BandwidthConvention::Linear
                                             : BandwidthConvention::Squared;

  const TabularDataset train_raw = ds.rows(train_idx);
  const TabularDataset test_raw = ds.rows(test_idx);

  // Scaler fit on the train side only; test rows reuse it.
  auto [train_scaled, scaler] = minmax_fit_transform(train_raw);
  const TabularDataset test_scaled = minmax_transform(test_raw, scaler);

  FoldModels models;
  for (GeneratorKind kind : kinds) {
    if ((kind == GeneratorKind::BVAEw || kind == GeneratorKind::KBVAEw) && !models.has_balanced) {
      if (cfg.alpha <= 0.0)
        throw DataError("bvaew/kbvaew need alpha > 0 in the run configuration");
      models.balanced =
          train_vae(train_scaled, cfg.vae_config(derive_seed(fold_seed, "train.balanced"),
                                                 cfg.alpha))
              .first;
      models.has_balanced = true;
    }
    if ((kind == GeneratorKind::BVAE || kind == GeneratorKind::KBVAE) && !models.has_plain) {
      models.plain =
          train_vae(train_scaled, cfg.vae_config(derive_seed(fold_seed, "train.plain"), 0.0))
              .first;
      models.has_plain = true;
    }
    if (kind == GeneratorKind::ZeroVAE && !models.has_nokl) {
      VaeConfig vc = cfg.vae_config(derive_seed(fold_seed, "train.nokl"), 0.0);
      vc.beta_kl = 0.0;
      models.nokl = train_vae(train_scaled, vc).first;
      models.has_nokl = true;
    }
  }

  // wMSE weights from a KDE on the test targets, in original units.
  const RelevanceWeights test_rw = relevance_weights(test_raw.target, cfg.alpha, rule);
  const Eigen::VectorXd wmse_w = cfg.wmse_normalization == "sum"
                                     ? test_rw.normalized
                                     : Eigen::VectorXd(test_rw.normalized *
                                                       static_cast<double>(test_raw.n()));

  std::vector<BenchmarkRow> rows;
  for (GeneratorKind kind : kinds) {
    const std::string kind_name = generator_kind_name(kind);
    try {
      AugmentationPlan plan;
      plan.n_synthetic = cfg.n_synthetic;
      plan.alpha = cfg.alpha;
      plan.rho = cfg.rho;
      plan.bandwidth_rule = rule;
      plan.convention = convention;
      plan.mix = cfg.mix;
      plan.rng_seed = derive_seed(fold_seed, "gen." + kind_name);

      const TabularDataset synth_scaled =
          generate(kind, train_scaled, model_for_kind(kind, models), plan);
      const TabularDataset augmented_scaled = augment(train_scaled, synth_scaled, plan);
      const TabularDataset augmented_orig = minmax_inverse(augmented_scaled, scaler);

      // Regressors see scaled features and original-unit targets, so
      // predictions land directly in original units.
      TabularDataset reg_train;
      reg_train.features = augmented_scaled.features;
      reg_train.target = augmented_orig.target;
      reg_train.feature_names = augmented_scaled.feature_names;
      reg_train.target_name = augmented_scaled.target_name;

      for (const RegressorKind& reg : regressors) {
        const Eigen::VectorXd pred =
            reg.tag == RegressorKind::Tag::Knn
                ? knn_fit_predict(reg_train, test_scaled.features, reg.k)
                : ridge_fit_predict(reg_train, test_scaled.features, reg.lambda);

        BenchmarkRow row;
        row.generator = kind_name;
        row.regressor = reg.name();
        row.fold = fold;
        row.metrics.mse = mse(test_raw.target, pred);
        row.metrics.wmse = wmse(test_raw.target, pred, wmse_w);
        row.metrics.mae = mae(test_raw.target, pred);
        row.metrics.mape = mape(test_raw.target, pred, cfg.mape_epsilon);
        rows.push_back(std::move(row));
      }
    } catch (const DataError& e) {
      throw DataError("(generator " + kind_name + ", fold " + std::to_string(fold) +
                      "): " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("(generator " + kind_name + ", fold " + std::to_string(fold) +
                         "): " + e.what());
    }
  }
  return rows;
}

}  // namespace

BenchmarkReport run_benchmark(const TabularDataset& ds, const std::vector<GeneratorKind>& kinds,
                              const std::vector<RegressorKind>& regressors, int folds,
                              const RunConfig& cfg, BenchmarkReport* partial_sink) {
  const KfoldMode mode =
      cfg.kfold_mode == "partition" ? KfoldMode::Partition : KfoldMode::RepeatedHoldout;
  const FoldPlan plan =
      kfold(ds, folds, derive_seed(cfg.seed, "split"), cfg.train_fraction, mode);

  std::vector<std::vector<BenchmarkRow>> fold_rows(static_cast<std::size_t>(folds));
  std::exception_ptr failure;
  std::atomic<int> next_fold{0};
  std::atomic<bool> abort{false};

  const int workers = std::max(1, std::min(cfg.jobs, folds));
  const auto work = [&]() {
    while (!abort.load()) {
      const int f = next_fold.fetch_add(1);
      if (f >= folds) return;
      try {
        fold_rows[static_cast<std::size_t>(f)] =
            run_fold(ds, f, plan.folds[static_cast<std::size_t>(f)].first,
                     plan.folds[static_cast<std::size_t>(f)].second, kinds, regressors, cfg);
      } catch (...) {
        failure = std::current_exception();
        abort.store(true);
        return;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  BenchmarkReport report;
  report.master_seed = cfg.seed;
  report.config_snapshot = cfg.to_kv();
  {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&tt));
    report.timestamp = buf;
  }
  for (auto& rows : fold_rows)
    for (auto& row : rows) report.rows.push_back(std::move(row));
  report.recompute_aggregates();

  if (failure) {
    if (partial_sink) *partial_sink = std::move(report);
    std::rethrow_exception(failure);
  }
  return report;
}

void write_rows_csv(const BenchmarkReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report file: " + path);
  out << "generator,regressor,fold,mse,wmse,mae,mape\n";
  for (const auto& row : report.rows) {
    out << row.generator << ',' << row.regressor << ',' << row.fold << ',' << fmt(row.metrics.mse)
        << ',' << fmt(row.metrics.wmse) << ',' << fmt(row.metrics.mae) << ','
        << fmt(row.metrics.mape) << '\n';
  }
}

std::string format_aggregate_table(const BenchmarkReport& report) {
  std::vector<std::string> regressor_names;
  for (const auto& [key, agg] : report.aggregates)
    if (std::find(regressor_names.begin(), regressor_names.end(), key.second) ==
        regressor_names.end())
      regressor_names.push_back(key.second);

  std::ostringstream out;
  char cell[160];
  for (const std::string& reg : regressor_names) {
    out << "downstream regressor: " << reg << '\n';
    std::snprintf(cell, sizeof(cell), "%-10s %-18s %-18s %-18s %-18s\n", "generator", "MSE",
                  "wMSE", "MAE", "MAPE");
    out << cell;
    for (const auto& [key, agg] : report.aggregates) {
      if (key.second != reg) continue;
      const auto entry = [&](double mean, double sd) {
        char tmp[48];
        std::snprintf(tmp, sizeof(tmp), "%.4g (%.3g)", mean, sd);
        return std::string(tmp);
      };
      std::snprintf(cell, sizeof(cell), "%-10s %-18s %-18s %-18s %-18s\n", key.first.c_str(),
                    entry(agg.mean.mse, agg.stddev.mse).c_str(),
                    entry(agg.mean.wmse, agg.stddev.wmse).c_str(),
                    entry(agg.mean.mae, agg.stddev.mae).c_str(),
                    entry(agg.mean.mape, agg.stddev.mape).c_str());
      out << cell;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace david

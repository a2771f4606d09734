#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "david/config.hpp"
#include "david/dataset.hpp"
#include "david/generators.hpp"

namespace david {

struct RegressorKind {
  enum class Tag { Knn, Ridge } tag = Tag::Knn;
  int k = 5;             // Knn
  double lambda = 1e-3;  // Ridge

  std::string name() const;
};

std::vector<RegressorKind> parse_regressors(const std::string& spec);

struct Metrics {
  double mse = 0.0;
  double wmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;
};

// Mean target of the k nearest training rows by Euclidean distance on the
// features; ties broken by lower row index.
Eigen::VectorXd knn_fit_predict(const TabularDataset& train, const Eigen::MatrixXd& test_features,
                                int k);

// Closed-form ridge with an unpenalized intercept, solved by Cholesky.
Eigen::VectorXd ridge_fit_predict(const TabularDataset& train,
                                  const Eigen::MatrixXd& test_features, double lambda);

double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat);
double mae(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat);
double mape(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat, double epsilon = 1e-8);
double wmse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
            const Eigen::VectorXd& weights);

struct BenchmarkRow {
  std::string generator;
  std::string regressor;
  int fold = 0;
  Metrics metrics;
};

struct BenchmarkAggregate {
  Metrics mean;
  Metrics stddev;  // sample std over folds (0 when folds < 2)
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::map<std::pair<std::string, std::string>, BenchmarkAggregate> aggregates;
  KvPairs config_snapshot;
  std::uint64_t master_seed = 0;
  std::string timestamp;  // informational only; never written to report files

  void recompute_aggregates();
};

// Full protocol: per fold, split / scale on train / train the needed VAE
// variants / generate / augment / fit each regressor / evaluate on the
// untouched test rows in original units. On failure, completed rows are
// placed in partial_sink (when given) before the error propagates.
BenchmarkReport run_benchmark(const TabularDataset& ds, const std::vector<GeneratorKind>& kinds,
                              const std::vector<RegressorKind>& regressors, int folds,
                              const RunConfig& cfg, BenchmarkReport* partial_sink = nullptr);

void write_rows_csv(const BenchmarkReport& report, const std::string& path);
std::string format_aggregate_table(const BenchmarkReport& report);

}  // namespace david

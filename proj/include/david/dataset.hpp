#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "david/rng.hpp"

namespace david {

// Per-column min/max of a dataset, features first, target last (p+1 entries).
// Constant columns are rejected at fit time, so max > min always holds here.
struct ScalerParams {
  Eigen::VectorXd col_min;
  Eigen::VectorXd col_max;

  int cols() const { return static_cast<int>(col_min.size()); }
};

// An n x p feature matrix plus a length-n continuous target. The universal
// currency between modules; immutable by convention once built.
struct TabularDataset {
  Eigen::MatrixXd features;  // n x p
  Eigen::VectorXd target;    // n
  std::vector<std::string> feature_names;
  std::string target_name;
  std::optional<ScalerParams> scaler;  // present on scaled datasets

  int n() const { return static_cast<int>(features.rows()); }
  int p() const { return static_cast<int>(features.cols()); }

  // Gather by row indices (with repetition allowed).
  TabularDataset rows(const std::vector<int>& idx) const;
};

struct FoldPlan {
  // (train_indices, test_indices) per fold; each pair partitions 0..n-1.
  std::vector<std::pair<std::vector<int>, std::vector<int>>> folds;
  int fold_count = 0;
  std::uint64_t rng_seed = 0;
};

enum class KfoldMode {
  RepeatedHoldout,  // k independent random splits at a given train fraction
  Partition,        // classical K-fold: one shuffle, k disjoint test blocks
};

// CSV ingestion: header row required, all cells numeric, target column
// extracted by name. Constant columns produce a warning but are kept.
TabularDataset load_csv(const std::string& path, const std::string& target_column,
                        std::vector<std::string>* warnings = nullptr);

void write_csv(const TabularDataset& ds, const std::string& path);

// Writes real rows then synthetic rows with a trailing `origin` column.
void write_csv_with_origin(const TabularDataset& real, const TabularDataset& synthetic,
                           const std::string& path);

// Min-max scaling of every column (features and target) to [0,1].
std::pair<TabularDataset, ScalerParams> minmax_fit_transform(const TabularDataset& ds);

// Applies an already-fitted scaler (used for test rows, never refit).
TabularDataset minmax_transform(const TabularDataset& ds, const ScalerParams& scaler);

TabularDataset minmax_inverse(const TabularDataset& ds_scaled, const ScalerParams& scaler);

// Simulated dataset: six nonlinearly-linked Gaussian features and a target
// built from a weighted min-max blend of three of them. Gaussian second
// parameters are standard deviations.
TabularDataset simulate_illustration(int n, std::uint64_t rng_seed);

std::pair<TabularDataset, TabularDataset> split_train_test(const TabularDataset& ds,
                                                           double train_fraction,
                                                           std::uint64_t rng_seed);

// The split indices behind split_train_test; fold i of a FoldPlan is
// reproducible from (rng_seed, i) alone.
std::pair<std::vector<int>, std::vector<int>> split_indices(int n, double train_fraction,
                                                            std::uint64_t rng_seed);

FoldPlan kfold(const TabularDataset& ds, int k, std::uint64_t rng_seed,
               double train_fraction = 0.6, KfoldMode mode = KfoldMode::RepeatedHoldout);

}  // namespace david

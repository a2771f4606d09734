#include "david/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "david/error.hpp"

namespace david {

namespace {

std::string format_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void validate_shape(const TabularDataset& ds) {
  if (ds.features.rows() != ds.target.size())
    throw DataError("dataset: feature row count does not match target length");
  if (ds.p() < 1) throw DataError("dataset: need at least one feature column");
  if (ds.n() < 2) throw DataError("dataset: need at least two rows");
}

// Fisher-Yates over 0..n-1.
std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.index(static_cast<std::size_t>(i) + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

Eigen::VectorXd minmax_column(const Eigen::VectorXd& col) {
  const double lo = col.minCoeff();
  const double hi = col.maxCoeff();
  if (!(hi > lo)) throw NumericError("min-max scaling degenerate: constant column");
  return (col.array() - lo) / (hi - lo);
}

}  // namespace

TabularDataset TabularDataset::rows(const std::vector<int>& idx) const {
  TabularDataset out;
  out.features.resize(static_cast<Eigen::Index>(idx.size()), features.cols());
  out.target.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(idx[i]);
    out.target[static_cast<Eigen::Index>(i)] = target[idx[i]];
  }
  out.feature_names = feature_names;
  out.target_name = target_name;
  out.scaler = scaler;
  return out;
}

TabularDataset load_csv(const std::string& path, const std::string& target_column,
                        std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);
  if (header.empty()) throw DataError("missing header row: " + path);

  int target_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == target_column) target_idx = static_cast<int>(j);
  if (target_idx < 0)
    throw DataError("target column '" + target_column + "' not found in " + path);

  const int cols = static_cast<int>(header.size());
  if (cols < 2) throw DataError("need at least one feature besides the target: " + path);

  std::vector<std::vector<double>> rows;
  int row_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (static_cast<int>(cells.size()) != cols)
      throw DataError("row " + std::to_string(row_no) + ": expected " + std::to_string(cols) +
                      " cells, got " + std::to_string(cells.size()));
    std::vector<double> vals(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const char* s = cells[j].c_str();
      char* end = nullptr;
      const double v = std::strtod(s, &end);
      while (end && *end == ' ') ++end;
      if (cells[j].empty() || end == s || (end && *end != '\0') || !std::isfinite(v))
        throw DataError("row " + std::to_string(row_no) + ", column '" + header[j] +
                        "': cannot parse cell '" + cells[j] + "' as a finite number");
      vals[j] = v;
    }
    rows.push_back(std::move(vals));
  }

  const int n = static_cast<int>(rows.size());
  TabularDataset ds;
  ds.features.resize(n, cols - 1);
  ds.target.resize(n);
  ds.target_name = header[static_cast<std::size_t>(target_idx)];
  for (int j = 0; j < cols; ++j)
    if (j != target_idx) ds.feature_names.push_back(header[static_cast<std::size_t>(j)]);
  for (int i = 0; i < n; ++i) {
    int fj = 0;
    for (int j = 0; j < cols; ++j) {
      if (j == target_idx)
        ds.target[i] = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      else
        ds.features(i, fj++) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  validate_shape(ds);

  if (warnings) {
    for (int j = 0; j < ds.p(); ++j) {
      if (ds.features.col(j).minCoeff() == ds.features.col(j).maxCoeff())
        warnings->push_back("column '" + ds.feature_names[static_cast<std::size_t>(j)] +
                            "' is constant");
    }
    if (ds.target.minCoeff() == ds.target.maxCoeff())
      warnings->push_back("target column '" + ds.target_name + "' is constant");
  }
  return ds;
}

void write_csv(const TabularDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (int j = 0; j < ds.p(); ++j) out << ds.feature_names[static_cast<std::size_t>(j)] << ',';
  out << ds.target_name << '\n';
  for (int i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.p(); ++j) out << format_cell(ds.features(i, j)) << ',';
    out << format_cell(ds.target[i]) << '\n';
  }
}

void write_csv_with_origin(const TabularDataset& real, const TabularDataset& synthetic,
                           const std::string& path) {
  if (real.p() != synthetic.p() && synthetic.n() > 0)
    throw DataError("origin export: column schemas do not match");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (int j = 0; j < real.p(); ++j) out << real.feature_names[static_cast<std::size_t>(j)] << ',';
  out << real.target_name << ",origin\n";
  const auto dump = [&](const TabularDataset& ds, const char* origin) {
    for (int i = 0; i < ds.n(); ++i) {
      for (int j = 0; j < ds.p(); ++j) out << format_cell(ds.features(i, j)) << ',';
      out << format_cell(ds.target[i]) << ',' << origin << '\n';
    }
  };
  dump(real, "real");
  dump(synthetic, "synthetic");
}

std::pair<TabularDataset, ScalerParams> minmax_fit_transform(const TabularDataset& ds) {
  const int p = ds.p();
  ScalerParams sp;
  sp.col_min.resize(p + 1);
  sp.col_max.resize(p + 1);
  for (int j = 0; j < p; ++j) {
    sp.col_min[j] = ds.features.col(j).minCoeff();
    sp.col_max[j] = ds.features.col(j).maxCoeff();
    if (!(sp.col_max[j] > sp.col_min[j]))
      throw NumericError("min-max scaling degenerate: constant column '" +
                         ds.feature_names[static_cast<std::size_t>(j)] + "'");
  }
  sp.col_min[p] = ds.target.minCoeff();
  sp.col_max[p] = ds.target.maxCoeff();
  if (!(sp.col_max[p] > sp.col_min[p]))
    throw NumericError("min-max scaling degenerate: constant target '" + ds.target_name + "'");
  TabularDataset out = minmax_transform(ds, sp);
  return {std::move(out), std::move(sp)};
}

TabularDataset minmax_transform(const TabularDataset& ds, const ScalerParams& scaler) {
  if (scaler.cols() != ds.p() + 1)
    throw DataError("scaler dimension mismatch: scaler has " + std::to_string(scaler.cols()) +
                    " columns, dataset needs " + std::to_string(ds.p() + 1));
  TabularDataset out = ds;
  for (int j = 0; j < ds.p(); ++j)
    out.features.col(j) =
        (ds.features.col(j).array() - scaler.col_min[j]) / (scaler.col_max[j] - scaler.col_min[j]);
  out.target = (ds.target.array() - scaler.col_min[ds.p()]) /
               (scaler.col_max[ds.p()] - scaler.col_min[ds.p()]);
  out.scaler = scaler;
  return out;
}

TabularDataset minmax_inverse(const TabularDataset& ds_scaled, const ScalerParams& scaler) {
  if (scaler.cols() != ds_scaled.p() + 1)
    throw DataError("scaler dimension mismatch: scaler has " + std::to_string(scaler.cols()) +
                    " columns, dataset needs " + std::to_string(ds_scaled.p() + 1));
  TabularDataset out = ds_scaled;
  for (int j = 0; j < ds_scaled.p(); ++j)
    out.features.col(j) =
        ds_scaled.features.col(j).array() * (scaler.col_max[j] - scaler.col_min[j]) +
        scaler.col_min[j];
  const int p = ds_scaled.p();
  out.target = ds_scaled.target.array() * (scaler.col_max[p] - scaler.col_min[p]) +
               scaler.col_min[p];
  out.scaler.reset();
  return out;
}

TabularDataset simulate_illustration(int n, std::uint64_t rng_seed) {
  if (n < 10) throw DataError("simulate_illustration: n must be at least 10");
  Rng rng(rng_seed);

  Eigen::MatrixXd x(n, 6);
  for (int i = 0; i < n; ++i) x(i, 0) = 0.0 + 2.0 * rng.normal();
  for (int i = 0; i < n; ++i) x(i, 1) = 10.0 + 2.0 * rng.normal();
  for (int i = 0; i < n; ++i) x(i, 2) = 0.0 + 5.0 * rng.normal();
  for (int i = 0; i < n; ++i) x(i, 3) = std::pow(x(i, 0), 3) + 1.0 * rng.normal();
  for (int i = 0; i < n; ++i) x(i, 4) = std::pow(x(i, 1) - 10.0, 2) + 1.0 * rng.normal();
  for (int i = 0; i < n; ++i) x(i, 5) = std::pow(x(i, 2), 2) + 2.0 * rng.normal();

  // mm over the generated sample itself.
  const Eigen::VectorXd m4 = minmax_column(x.col(3));
  const Eigen::VectorXd m5 = minmax_column(x.col(4));
  const Eigen::VectorXd m6 = minmax_column(x.col(5));

  TabularDataset ds;
  ds.features = std::move(x);
  ds.target.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = 11.0 * m4[i] + 9.0 * m5[i] + 14.0 * m6[i] + 10.0;
    ds.target[i] = u * u + 10.0 * rng.normal();
  }
  ds.feature_names = {"X1", "X2", "X3", "X4", "X5", "X6"};
  ds.target_name = "Y";
  return ds;
}

std::pair<std::vector<int>, std::vector<int>> split_indices(int n, double train_fraction,
                                                            std::uint64_t rng_seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw DataError("train fraction must lie in (0,1)");
  const int n_train = static_cast<int>(std::llround(train_fraction * n));
  if (n_train < 2 || n - n_train < 2)
    throw DataError("split leaves fewer than two rows on one side");
  Rng rng(rng_seed);
  std::vector<int> idx = shuffled_indices(n, rng);
  std::vector<int> train(idx.begin(), idx.begin() + n_train);
  std::vector<int> test(idx.begin() + n_train, idx.end());
  return {std::move(train), std::move(test)};
}

std::pair<TabularDataset, TabularDataset> split_train_test(const TabularDataset& ds,
                                                           double train_fraction,
                                                           std::uint64_t rng_seed) {
  auto [train_idx, test_idx] = split_indices(ds.n(), train_fraction, rng_seed);
  return {ds.rows(train_idx), ds.rows(test_idx)};
}

FoldPlan kfold(const TabularDataset& ds, int k, std::uint64_t rng_seed, double train_fraction,
               KfoldMode mode) {
  const int n = ds.n();
  if (k < 2) throw DataError("kfold: k must be at least 2");
  if (n < 2 * k) throw DataError("kfold: dataset too small for k folds");

  FoldPlan plan;
  plan.fold_count = k;
  plan.rng_seed = rng_seed;

  if (mode == KfoldMode::RepeatedHoldout) {
    for (int i = 0; i < k; ++i) {
      plan.folds.push_back(
          split_indices(n, train_fraction, derive_seed(rng_seed, static_cast<std::uint64_t>(i))));
    }
  } else {
    Rng rng(derive_seed(rng_seed, "kfold.partition"));
    const std::vector<int> idx = shuffled_indices(n, rng);
    for (int i = 0; i < k; ++i) {
      const int lo = static_cast<int>(static_cast<long long>(n) * i / k);
      const int hi = static_cast<int>(static_cast<long long>(n) * (i + 1) / k);
      std::vector<int> test(idx.begin() + lo, idx.begin() + hi);
      std::vector<int> train;
      train.reserve(static_cast<std::size_t>(n - (hi - lo)));
      train.insert(train.end(), idx.begin(), idx.begin() + lo);
      train.insert(train.end(), idx.begin() + hi, idx.end());
      plan.folds.emplace_back(std::move(train), std::move(test));
    }
  }
  return plan;
}

}  // namespace david

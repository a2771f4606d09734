#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "david/kde.hpp"
#include "david/vae.hpp"

namespace david {

// Ordered key-value text file: one `key = value` per line, `#` comments.
using KvPairs = std::vector<std::pair<std::string, std::string>>;

KvPairs read_kv_file(const std::string& path);
void write_kv_file(const std::string& path, const KvPairs& pairs);
std::string kv_get(const KvPairs& pairs, const std::string& key);
bool kv_has(const KvPairs& pairs, const std::string& key);

BandwidthRule parse_bandwidth_rule(const std::string& text);
std::string bandwidth_rule_to_string(const BandwidthRule& rule);

// Whole-pipeline configuration with the experiment defaults. Every field is
// overridable from a config file and from CLI flags.
struct RunConfig {
  std::uint64_t seed = 1;
  double train_fraction = 0.6;
  int folds = 10;
  std::string kfold_mode = "holdout";  // holdout | partition

  // VAE training
  double beta_x = 1.0;
  double beta_y = 10.0;
  double beta_kl = 1e-6;
  double alpha = 1.0;
  int epochs = 2000;
  int batch_size = 128;
  double lr = 1e-3;
  int q = 0;  // 0 = automatic p/10 + 1
  bool deterministic_latent = false;

  // KDE / generation plan
  std::string bandwidth_rule = "silverman";  // silverman | scott | fixed:<v>
  std::string bandwidth_convention = "squared";  // squared | linear
  double rho = 0.1;
  long long n_synthetic = -1;  // -1 = training-set size
  std::string mix = "append";  // append | replace-duplicates

  // Benchmark grid
  std::string generators = "baseline,os,csb,0vae,bvae,kbvae,bvaew,kbvaew,kpca";
  std::string regressors = "knn:5,ridge:0.001";
  double mape_epsilon = 1e-8;
  std::string wmse_normalization = "mean1";  // mean1 | sum
  int jobs = 1;

  bool operator==(const RunConfig&) const = default;

  KvPairs to_kv() const;
  static RunConfig from_kv(const KvPairs& pairs);

  // Overlays file values onto the current config (defaults -> file -> flags).
  void overlay(const KvPairs& pairs);
  void apply_file(const std::string& path);
  void validate() const;
  VaeConfig vae_config(std::uint64_t train_seed, double alpha_override) const;
};

}  // namespace david

#include "david/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "david/error.hpp"

namespace david {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw DataError("config key '" + key + "': cannot parse number '" + value + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw DataError("config key '" + key + "': cannot parse integer '" + value + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw DataError("config key '" + key + "': cannot parse boolean '" + value + "'");
}

}  // namespace

KvPairs read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  KvPairs pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    pairs.emplace_back(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return pairs;
}

void write_kv_file(const std::string& path, const KvPairs& pairs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write config file: " + path);
  for (const auto& [key, value] : pairs) out << key << " = " << value << '\n';
}

std::string kv_get(const KvPairs& pairs, const std::string& key) {
  for (const auto& [k, v] : pairs)
    if (k == key) return v;
  throw DataError("missing key '" + key + "'");
}

bool kv_has(const KvPairs& pairs, const std::string& key) {
  for (const auto& [k, v] : pairs)
    if (k == key) return true;
  return false;
}

BandwidthRule parse_bandwidth_rule(const std::string& text) {
  if (text == "silverman") return BandwidthRule::silverman();
  if (text == "scott") return BandwidthRule::scott();
  if (text.rfind("fixed:", 0) == 0)
    return BandwidthRule::fixed(to_double("bandwidth_rule", text.substr(6)));
  throw DataError("unknown bandwidth rule '" + text + "' (use silverman, scott, or fixed:<v>)");
}

std::string bandwidth_rule_to_string(const BandwidthRule& rule) {
  switch (rule.kind) {
    case BandwidthKind::Silverman: return "silverman";
    case BandwidthKind::Scott: return "scott";
    case BandwidthKind::Fixed: return "fixed:" + fmt_double(rule.fixed_factor);
  }
  return "silverman";
}

KvPairs RunConfig::to_kv() const {
  KvPairs kv;
  kv.emplace_back("seed", std::to_string(seed));
  kv.emplace_back("train_fraction", fmt_double(train_fraction));
  kv.emplace_back("folds", std::to_string(folds));
  kv.emplace_back("kfold_mode", kfold_mode);
  kv.emplace_back("beta_x", fmt_double(beta_x));
  kv.emplace_back("beta_y", fmt_double(beta_y));
  kv.emplace_back("beta_kl", fmt_double(beta_kl));
  kv.emplace_back("alpha", fmt_double(alpha));
  kv.emplace_back("epochs", std::to_string(epochs));
  kv.emplace_back("batch_size", std::to_string(batch_size));
  kv.emplace_back("learning_rate", fmt_double(lr));
  kv.emplace_back("q", std::to_string(q));
  kv.emplace_back("deterministic_latent", deterministic_latent ? "true" : "false");
  kv.emplace_back("bandwidth_rule", bandwidth_rule);
  kv.emplace_back("bandwidth_convention", bandwidth_convention);
  kv.emplace_back("rho", fmt_double(rho));
  kv.emplace_back("n_synthetic", std::to_string(n_synthetic));
  kv.emplace_back("mix", mix);
  kv.emplace_back("generators", generators);
  kv.emplace_back("regressors", regressors);
  kv.emplace_back("mape_epsilon", fmt_double(mape_epsilon));
  kv.emplace_back("wmse_normalization", wmse_normalization);
  kv.emplace_back("jobs", std::to_string(jobs));
  return kv;
}

RunConfig RunConfig::from_kv(const KvPairs& pairs) {
  RunConfig cfg;
  cfg.overlay(pairs);
  return cfg;
}

void RunConfig::overlay(const KvPairs& pairs) {
  for (const auto& [key, value] : pairs) {
    if (key == "seed") seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "train_fraction") train_fraction = to_double(key, value);
    else if (key == "folds") folds = static_cast<int>(to_int(key, value));
    else if (key == "kfold_mode") kfold_mode = value;
    else if (key == "beta_x") beta_x = to_double(key, value);
    else if (key == "beta_y") beta_y = to_double(key, value);
    else if (key == "beta_kl") beta_kl = to_double(key, value);
    else if (key == "alpha") alpha = to_double(key, value);
    else if (key == "epochs") epochs = static_cast<int>(to_int(key, value));
    else if (key == "batch_size") batch_size = static_cast<int>(to_int(key, value));
    else if (key == "learning_rate") lr = to_double(key, value);
    else if (key == "q") q = static_cast<int>(to_int(key, value));
    else if (key == "deterministic_latent") deterministic_latent = to_bool(key, value);
    else if (key == "bandwidth_rule") bandwidth_rule = value;
    else if (key == "bandwidth_convention") bandwidth_convention = value;
    else if (key == "rho") rho = to_double(key, value);
    else if (key == "n_synthetic") n_synthetic = to_int(key, value);
    else if (key == "mix") mix = value;
    else if (key == "generators") generators = value;
    else if (key == "regressors") regressors = value;
    else if (key == "mape_epsilon") mape_epsilon = to_double(key, value);
    else if (key == "wmse_normalization") wmse_normalization = value;
    else if (key == "jobs") jobs = static_cast<int>(to_int(key, value));
    else throw DataError("unknown config key '" + key + "'");
  }
  validate();
}

void RunConfig::validate() const {
  parse_bandwidth_rule(bandwidth_rule);
  if (bandwidth_convention != "squared" && bandwidth_convention != "linear")
    throw DataError("bandwidth_convention must be 'squared' or 'linear'");
  if (kfold_mode != "holdout" && kfold_mode != "partition")
    throw DataError("kfold_mode must be 'holdout' or 'partition'");
  if (wmse_normalization != "mean1" && wmse_normalization != "sum")
    throw DataError("wmse_normalization must be 'mean1' or 'sum'");
  if (mix != "append" && mix != "replace-duplicates")
    throw DataError("mix must be 'append' or 'replace-duplicates'");
  if (!(rho > 0.0 && rho <= 1.0)) throw DataError("rho must lie in (0,1]");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw DataError("train_fraction must lie in (0,1)");
  if (alpha < 0.0) throw DataError("alpha must be nonnegative");
  if (jobs < 1) throw DataError("jobs must be at least 1");
}

void RunConfig::apply_file(const std::string& path) { overlay(read_kv_file(path)); }

VaeConfig RunConfig::vae_config(std::uint64_t train_seed, double alpha_override) const {
  VaeConfig vc;
  vc.beta_x = beta_x;
  vc.beta_y = beta_y;
  vc.beta_kl = beta_kl;
  vc.alpha = alpha_override;
  vc.epochs = epochs;
  vc.batch_size = batch_size;
  vc.lr = lr;
  vc.q = q;
  vc.deterministic_latent = deterministic_latent;
  vc.rng_seed = train_seed;
  vc.bandwidth_rule = parse_bandwidth_rule(bandwidth_rule);
  return vc;
}

}  // namespace david

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "david/config.hpp"
#include "david/dataset.hpp"
#include "david/error.hpp"
#include "david/eval.hpp"
#include "david/generators.hpp"
#include "david/vae.hpp"

namespace {

using namespace david;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::vector<GeneratorKind> parse_generator_list(const std::string& spec) {
  std::vector<GeneratorKind> kinds;
  std::string item;
  std::stringstream ss(spec);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) kinds.push_back(parse_generator_kind(item));
  }
  if (kinds.empty()) throw DataError("no generators specified");
  return kinds;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

AugmentationPlan plan_from_config(const RunConfig& cfg, std::uint64_t seed) {
  AugmentationPlan plan;
  plan.n_synthetic = cfg.n_synthetic;
  plan.alpha = cfg.alpha;
  plan.rho = cfg.rho;
  plan.bandwidth_rule = parse_bandwidth_rule(cfg.bandwidth_rule);
  plan.convention = cfg.bandwidth_convention == "linear" ? BandwidthConvention::Linear
                                                         : BandwidthConvention::Squared;
  plan.mix = cfg.mix;
  plan.rng_seed = seed;
  return plan;
}

int cmd_simulate(int n, std::uint64_t seed, const std::string& out_path) {
  const TabularDataset ds = simulate_illustration(n, seed);
  write_csv(ds, out_path);
  std::cout << "wrote " << ds.n() << " rows x " << ds.p() << " features to " << out_path << '\n';
  return kExitOk;
}

int cmd_train(const std::string& data_path, const std::string& target,
              const std::string& model_out, const RunConfig& cfg) {
  std::vector<std::string> warnings;
  const TabularDataset raw = load_csv(data_path, target, &warnings);
  print_warnings(warnings);

  auto [scaled, scaler] = minmax_fit_transform(raw);
  const VaeConfig vc = cfg.vae_config(derive_seed(cfg.seed, "train"), cfg.alpha);
  auto [model, report] = train_vae(scaled, vc);
  save_checkpoint(model, model_out);

  std::ofstream losses(model_out + ".losses.csv");
  if (!losses) throw DataError("cannot write loss file: " + model_out + ".losses.csv");
  losses << "epoch,loss_x,loss_y,loss_kl,total\n";
  char buf[32];
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const EpochStats& s = report.epochs[e];
    losses << e;
    for (double v : {s.loss_x, s.loss_y, s.loss_kl, s.total}) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      losses << ',' << buf;
    }
    losses << '\n';
  }

  std::cout << "trained " << vc.epochs << " epochs in " << report.wall_seconds
            << " s; final loss " << report.epochs.back().total << "; checkpoint " << model_out
            << " (+.meta, +.losses.csv)\n";
  return kExitOk;
}

int cmd_generate(const std::optional<std::string>& model_path, const std::string& data_path,
                 const std::string& target, const std::string& kind_name,
                 const std::string& out_path, bool mix_output, const RunConfig& cfg) {
  const GeneratorKind kind = parse_generator_kind(kind_name);
  std::vector<std::string> warnings;
  const TabularDataset raw = load_csv(data_path, target, &warnings);
  print_warnings(warnings);

  std::optional<VaeModel> model;
  TabularDataset scaled;
  ScalerParams scaler;
  if (generator_needs_vae(kind)) {
    if (!model_path) throw DataError("generator '" + kind_name + "' needs --model <checkpoint>");
    model = load_checkpoint(*model_path);
    if (model->p != raw.p())
      throw DataError("model was trained on " + std::to_string(model->p) +
                      " features, data has " + std::to_string(raw.p()));
    scaler = model->scaler;
    scaled = minmax_transform(raw, scaler);
  } else {
    std::tie(scaled, scaler) = minmax_fit_transform(raw);
  }

  const AugmentationPlan plan = plan_from_config(cfg, derive_seed(cfg.seed, "generate"));
  const TabularDataset synth_scaled = generate(kind, scaled, model ? &*model : nullptr, plan);
  const TabularDataset synth =
      synth_scaled.n() > 0 ? minmax_inverse(synth_scaled, scaler) : synth_scaled;

  if (mix_output) {
    write_csv_with_origin(raw, synth, out_path);
    std::cout << "wrote " << raw.n() << " real + " << synth.n() << " synthetic rows to "
              << out_path << '\n';
  } else {
    TabularDataset empty;
    empty.features.resize(0, raw.p());
    empty.target.resize(0);
    empty.feature_names = raw.feature_names;
    empty.target_name = raw.target_name;
    write_csv_with_origin(empty, synth, out_path);
    std::cout << "wrote " << synth.n() << " synthetic rows to " << out_path << '\n';
  }
  return kExitOk;
}

int cmd_benchmark(const std::optional<std::string>& data_path, const std::string& target,
                  bool simulate, int simulate_n, const std::string& out_dir,
                  const RunConfig& cfg) {
  TabularDataset ds;
  if (simulate) {
    ds = simulate_illustration(simulate_n, derive_seed(cfg.seed, "simulate"));
  } else {
    if (!data_path) throw DataError("benchmark needs --data <csv> or --simulate");
    if (target.empty()) throw DataError("benchmark needs --target with --data");
    std::vector<std::string> warnings;
    ds = load_csv(*data_path, target, &warnings);
    print_warnings(warnings);
  }

  std::filesystem::create_directories(out_dir);
  write_kv_file(out_dir + "/config.effective", cfg.to_kv());

  const std::vector<GeneratorKind> kinds = parse_generator_list(cfg.generators);
  const std::vector<RegressorKind> regressors = parse_regressors(cfg.regressors);

  BenchmarkReport partial;
  BenchmarkReport report;
  try {
    report = run_benchmark(ds, kinds, regressors, cfg.folds, cfg, &partial);
  } catch (...) {
    if (!partial.rows.empty()) {
      write_rows_csv(partial, out_dir + "/rows.csv");
      std::cerr << "flushed " << partial.rows.size() << " completed rows to " << out_dir
                << "/rows.csv before failure\n";
    }
    throw;
  }

  write_rows_csv(report, out_dir + "/rows.csv");
  const std::string table = format_aggregate_table(report);
  {
    std::ofstream out(out_dir + "/aggregate.txt");
    if (!out) throw DataError("cannot write " + out_dir + "/aggregate.txt");
    out << table;
  }
  std::cout << table;
  std::cout << "report written to " << out_dir << "/rows.csv and " << out_dir
            << "/aggregate.txt\n";
  return kExitOk;
}

// Tracks which flags the user set so the merge order is
// defaults -> config file -> explicit CLI flags.
struct FlagOverrides {
  RunConfig staging;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> entries;

  template <typename T>
  void bind(CLI::Option* opt, T RunConfig::* member) {
    entries.emplace_back(opt, [this, member](RunConfig& cfg) { cfg.*member = staging.*member; });
  }

  RunConfig resolve(const std::optional<std::string>& config_path) const {
    RunConfig cfg;
    if (config_path) cfg.apply_file(*config_path);
    for (const auto& [opt, apply] : entries)
      if (opt->count() > 0) apply(cfg);
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DAVID: synthetic data generation for imbalanced regression"};
  app.require_subcommand(1);

  FlagOverrides flags;
  RunConfig& staging = flags.staging;

  // simulate
  auto* sim = app.add_subcommand("simulate", "write the illustration dataset as CSV");
  int sim_n = 3000;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  sim->add_option("--n", sim_n, "number of rows");
  sim->add_option("--seed", sim_seed, "rng seed");
  sim->add_option("--out", sim_out, "output CSV path")->required();

  const auto add_common = [&](CLI::App* cmd) {
    flags.bind(cmd->add_option("--seed", staging.seed, "master rng seed"), &RunConfig::seed);
    flags.bind(cmd->add_option("--alpha", staging.alpha, "weight exponent"), &RunConfig::alpha);
    flags.bind(cmd->add_option("--rho", staging.rho, "noise scale on the smoothing matrix"),
               &RunConfig::rho);
    flags.bind(cmd->add_option("--bandwidth", staging.bandwidth_rule,
                               "silverman | scott | fixed:<v>"),
               &RunConfig::bandwidth_rule);
    flags.bind(cmd->add_option("--bandwidth-convention", staging.bandwidth_convention,
                               "squared | linear"),
               &RunConfig::bandwidth_convention);
    flags.bind(cmd->add_option("--epochs", staging.epochs, "training epochs"),
               &RunConfig::epochs);
    flags.bind(cmd->add_option("--batch-size", staging.batch_size, "training batch size"),
               &RunConfig::batch_size);
    flags.bind(cmd->add_option("--lr", staging.lr, "learning rate"), &RunConfig::lr);
    flags.bind(cmd->add_option("--beta-x", staging.beta_x, "X reconstruction weight"),
               &RunConfig::beta_x);
    flags.bind(cmd->add_option("--beta-y", staging.beta_y, "Y reconstruction weight"),
               &RunConfig::beta_y);
    flags.bind(cmd->add_option("--beta-kl", staging.beta_kl, "KL weight"), &RunConfig::beta_kl);
    flags.bind(cmd->add_option("--q", staging.q, "hidden-layer reduction step (0 = auto)"),
               &RunConfig::q);
    flags.bind(cmd->add_option("--n-synthetic", staging.n_synthetic,
                               "synthetic rows (-1 = train size)"),
               &RunConfig::n_synthetic);
    flags.bind(cmd->add_flag("--deterministic-latent", staging.deterministic_latent,
                             "use z = mu (autoencoder emulation)"),
               &RunConfig::deterministic_latent);
  };

  // train
  auto* train = app.add_subcommand("train", "train a VAE checkpoint on a CSV");
  std::string train_data, train_target, train_model_out;
  std::optional<std::string> train_config;
  train->add_option("--data", train_data, "input CSV")->required();
  train->add_option("--target", train_target, "target column name")->required();
  train->add_option("--config", train_config, "config file");
  train->add_option("--model-out", train_model_out, "checkpoint output path")->required();
  add_common(train);

  // generate
  auto* gen = app.add_subcommand("generate", "generate synthetic rows from a dataset");
  std::optional<std::string> gen_model;
  std::string gen_data, gen_target, gen_kind = "david", gen_out;
  std::optional<std::string> gen_config;
  bool gen_mix = false;
  gen->add_option("--model", gen_model, "VAE checkpoint (VAE-family kinds)");
  gen->add_option("--data", gen_data, "input CSV")->required();
  gen->add_option("--target", gen_target, "target column name")->required();
  gen->add_option("--kind", gen_kind, "generator kind (david, kbvaew, bvae, csb, ...)");
  gen->add_option("--config", gen_config, "config file");
  gen->add_option("--out", gen_out, "output CSV path")->required();
  gen->add_flag("--augment", gen_mix, "write real + synthetic rows instead of synthetic only");
  add_common(gen);

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "run the generator comparison grid");
  std::optional<std::string> bench_data;
  std::string bench_target;
  bool bench_sim = false;
  int bench_sim_n = 3000;
  std::optional<std::string> bench_config;
  std::string bench_out;
  bench->add_option("--data", bench_data, "input CSV");
  bench->add_option("--target", bench_target, "target column name");
  bench->add_flag("--simulate", bench_sim, "use the illustration simulator as input");
  bench->add_option("--simulate-n", bench_sim_n, "simulated rows");
  bench->add_option("--config", bench_config, "config file");
  bench->add_option("--out", bench_out, "output directory")->required();
  flags.bind(bench->add_option("--folds", staging.folds, "number of folds"), &RunConfig::folds);
  flags.bind(bench->add_option("--train-fraction", staging.train_fraction,
                               "train fraction per fold"),
             &RunConfig::train_fraction);
  flags.bind(bench->add_option("--kfold-mode", staging.kfold_mode, "holdout | partition"),
             &RunConfig::kfold_mode);
  flags.bind(bench->add_option("--generators", staging.generators,
                               "comma list of generator kinds"),
             &RunConfig::generators);
  flags.bind(bench->add_option("--regressors", staging.regressors,
                               "comma list, e.g. knn:5,ridge:0.001"),
             &RunConfig::regressors);
  flags.bind(bench->add_option("--jobs", staging.jobs, "parallel fold workers"),
             &RunConfig::jobs);
  flags.bind(bench->add_option("--wmse-normalization", staging.wmse_normalization,
                               "mean1 | sum"),
             &RunConfig::wmse_normalization);
  add_common(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_n, sim_seed, sim_out);
    if (*train)
      return cmd_train(train_data, train_target, train_model_out, flags.resolve(train_config));
    if (*gen)
      return cmd_generate(gen_model, gen_data, gen_target, gen_kind, gen_out, gen_mix,
                          flags.resolve(gen_config));
    if (*bench)
      return cmd_benchmark(bench_data, bench_target, bench_sim, bench_sim_n, bench_out,
                           flags.resolve(bench_config));
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

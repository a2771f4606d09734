#include "david/vae.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "david/config.hpp"
#include "david/error.hpp"
#include "david/weights.hpp"

namespace david {

namespace {

constexpr double kLogVarBiasInit = -6.0;

Eigen::MatrixXd concat_xy(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::MatrixXd in(x.rows(), x.cols() + 1);
  in.leftCols(x.cols()) = x;
  in.col(x.cols()) = y;
  return in;
}

void warn_if_unscaled(const Eigen::MatrixXd& x) {
  static thread_local bool warned = false;
  if (warned) return;
  if (x.size() > 0 && (x.minCoeff() < -0.5 || x.maxCoeff() > 1.5)) {
    std::cerr << "warning: encoder inputs lie far outside [0,1]; did you scale the data?\n";
    warned = true;
  }
}

}  // namespace

std::vector<nn::Mlp*> VaeModel::mlps() {
  return {&enc_trunk, &enc_mu, &enc_logvar, &dec_trunk, &dec_x, &dec_y};
}

std::vector<const nn::Mlp*> VaeModel::mlps() const {
  return {&enc_trunk, &enc_mu, &enc_logvar, &dec_trunk, &dec_x, &dec_y};
}

VaeModel build_architecture(int p, int q, Rng& rng, const VaeConfig& cfg) {
  if (p < 1) throw DataError("build_architecture: need at least one feature");
  if (q < 1) throw DataError("build_architecture: q must be >= 1");
  const int latent = p - 3 * q;
  if (latent < 1)
    throw DataError("build_architecture: latent dim p-3q = " + std::to_string(latent) +
                    " < 1; lower q (p = " + std::to_string(p) + ", q = " + std::to_string(q) +
                    ")");

  VaeModel model;
  model.p = p;
  model.q = q;
  model.latent_dim = latent;
  model.config = cfg;
  model.config.q = q;

  model.enc_trunk = nn::init_mlp({p + 1, 2 * p + 1, p - q, p - 2 * q}, rng, true);
  model.enc_mu = nn::init_mlp({p - 2 * q, latent}, rng, false);
  model.enc_logvar = nn::init_mlp({p - 2 * q, latent}, rng, false);
  // Start sigma near exp(-3): with a tiny KL weight, a unit-sigma start
  // floods the latent with noise for thousands of steps before the
  // reconstruction terms can organize it.
  model.enc_logvar.layers[0].bias.setConstant(kLogVarBiasInit);
  model.dec_trunk = nn::init_mlp({latent, p - 2 * q, p - q, 2 * p + 1}, rng, true);
  model.dec_x = nn::init_mlp({2 * p + 1, p}, rng, false);
  model.dec_y = nn::init_mlp({2 * p + 1, 1}, rng, false);
  return model;
}

void encode(const VaeModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
            Eigen::MatrixXd* mu, Eigen::MatrixXd* log_var) {
  if (x.cols() != model.p) throw DataError("encode: feature count mismatch");
  if (x.rows() != y.size()) throw DataError("encode: batch row mismatch");
  warn_if_unscaled(x);
  const Eigen::MatrixXd h = nn::forward(model.enc_trunk, concat_xy(x, y), nullptr);
  if (mu) *mu = nn::forward(model.enc_mu, h, nullptr);
  if (log_var) *log_var = nn::forward(model.enc_logvar, h, nullptr);
}

Eigen::MatrixXd reparameterize(const VaeModel& model, const Eigen::MatrixXd& mu,
                               const Eigen::MatrixXd& log_var, Rng& rng) {
  if (mu.rows() != log_var.rows() || mu.cols() != log_var.cols())
    throw DataError("reparameterize: mu/log_var shape mismatch");
  if (model.config.deterministic_latent) return mu;
  Eigen::MatrixXd z(mu.rows(), mu.cols());
  for (Eigen::Index i = 0; i < mu.rows(); ++i)
    for (Eigen::Index j = 0; j < mu.cols(); ++j)
      z(i, j) = mu(i, j) + std::exp(0.5 * log_var(i, j)) * rng.normal();
  return z;
}

void decode(const VaeModel& model, const Eigen::MatrixXd& z, Eigen::MatrixXd* x_hat,
            Eigen::VectorXd* y_hat) {
  if (z.cols() != model.latent_dim) throw DataError("decode: latent dimension mismatch");
  const Eigen::MatrixXd h = nn::forward(model.dec_trunk, z, nullptr);
  if (x_hat) *x_hat = nn::forward(model.dec_x, h, nullptr);
  if (y_hat) *y_hat = nn::forward(model.dec_y, h, nullptr).col(0);
}

VaeLoss balanced_loss(const VaeModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& loss_w, const Eigen::MatrixXd& eps,
                      VaeGradients* grads) {
  const Eigen::Index b = x.rows();
  if (y.size() != b || loss_w.size() != b) throw DataError("balanced_loss: batch size mismatch");
  const bool deterministic = model.config.deterministic_latent;
  if (!deterministic && (eps.rows() != b || eps.cols() != model.latent_dim))
    throw DataError("balanced_loss: eps shape mismatch");

  const double inv_b = 1.0 / static_cast<double>(b);
  const double bx = model.config.beta_x;
  const double by = model.config.beta_y;
  const double bkl = model.config.beta_kl;

  // Forward, keeping caches for backward.
  nn::ForwardCache c_enc, c_mu, c_lv, c_dec, c_dx, c_dy;
  const Eigen::MatrixXd h_enc = nn::forward(model.enc_trunk, concat_xy(x, y), &c_enc);
  const Eigen::MatrixXd mu = nn::forward(model.enc_mu, h_enc, &c_mu);
  const Eigen::MatrixXd lv = nn::forward(model.enc_logvar, h_enc, &c_lv);

  const Eigen::MatrixXd sigma = (0.5 * lv.array()).exp().matrix();
  const Eigen::MatrixXd z =
      deterministic ? mu : (mu.array() + sigma.array() * eps.array()).matrix();

  const Eigen::MatrixXd h_dec = nn::forward(model.dec_trunk, z, &c_dec);
  const Eigen::MatrixXd x_hat = nn::forward(model.dec_x, h_dec, &c_dx);
  const Eigen::VectorXd y_hat = nn::forward(model.dec_y, h_dec, &c_dy).col(0);

  VaeLoss loss;
  loss.loss_x = inv_b * (x_hat - x).squaredNorm();
  loss.loss_y = inv_b * (loss_w.array() * (y_hat - y).array().square()).sum();
  // KL_i in the explicitly nonnegative form 1/2 sum_j (e^lv - lv - 1 + mu^2).
  loss.loss_kl =
      inv_b * 0.5 * (lv.array().exp() - lv.array() - 1.0 + mu.array().square()).sum();
  loss.total = bx * loss.loss_x + by * loss.loss_y + bkl * loss.loss_kl;
  if (!std::isfinite(loss.total))
    throw NumericError("balanced_loss: non-finite loss (x " + std::to_string(loss.loss_x) +
                       ", y " + std::to_string(loss.loss_y) + ", kl " +
                       std::to_string(loss.loss_kl) + ")");
  if (!grads) return loss;

  // Reconstruction head gradients.
  const Eigen::MatrixXd d_xhat = (2.0 * bx * inv_b) * (x_hat - x);
  const Eigen::MatrixXd d_yhat =
      (2.0 * by * inv_b) * (loss_w.array() * (y_hat - y).array()).matrix();

  Eigen::MatrixXd d_hdec = nn::backward(model.dec_x, c_dx, d_xhat, &grads->dec_x);
  d_hdec += nn::backward(model.dec_y, c_dy, d_yhat, &grads->dec_y);
  const Eigen::MatrixXd dz = nn::backward(model.dec_trunk, c_dec, d_hdec, &grads->dec_trunk);

  // z = mu + sigma .* eps and the closed-form KL both feed mu / log_var.
  Eigen::MatrixXd d_mu = dz;
  Eigen::MatrixXd d_lv;
  if (deterministic) {
    d_lv = Eigen::MatrixXd::Zero(b, model.latent_dim);
  } else {
    d_lv = (dz.array() * eps.array() * 0.5 * sigma.array()).matrix();
  }
  d_mu += (bkl * inv_b) * mu;
  d_lv += (0.5 * bkl * inv_b) * (lv.array().exp() - 1.0).matrix();

  Eigen::MatrixXd d_henc = nn::backward(model.enc_mu, c_mu, d_mu, &grads->enc_mu);
  d_henc += nn::backward(model.enc_logvar, c_lv, d_lv, &grads->enc_logvar);
  nn::backward(model.enc_trunk, c_enc, d_henc, &grads->enc_trunk);
  return loss;
}

std::pair<VaeModel, TrainReport> train_vae(const TabularDataset& ds_scaled,
                                           const VaeConfig& cfg) {
  const int n = ds_scaled.n();
  const int p = ds_scaled.p();
  if (cfg.epochs < 1) throw DataError("train_vae: epochs must be >= 1");
  if (cfg.batch_size < 1 || cfg.batch_size > n)
    throw DataError("train_vae: batch size must lie in [1, n]");
  if (!ds_scaled.scaler)
    throw DataError("train_vae: dataset must be min-max scaled (scaler missing)");

  const auto start = std::chrono::steady_clock::now();

  const int q = cfg.resolved_q(p);
  Rng init_rng(derive_seed(cfg.rng_seed, "vae.init"));
  VaeModel model = build_architecture(p, q, init_rng, cfg);
  model.scaler = *ds_scaled.scaler;

  // Loss weights frozen before the first epoch: one KDE fit on the training
  // targets. alpha = 0 short-circuits to uniform weights.
  Eigen::VectorXd w;
  if (cfg.alpha == 0.0) {
    w = Eigen::VectorXd::Ones(n);
  } else {
    w = loss_weights(relevance_weights(ds_scaled.target, cfg.alpha, cfg.bandwidth_rule));
  }

  std::vector<nn::Mlp*> mlps = model.mlps();
  std::vector<nn::AdamState> states;
  states.reserve(mlps.size());
  for (nn::Mlp* mlp : mlps) states.push_back(nn::AdamState::init(*mlp, cfg.lr));

  Rng shuffle_rng(derive_seed(cfg.rng_seed, "vae.shuffle"));
  Rng noise_rng(derive_seed(cfg.rng_seed, "vae.noise"));

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  TrainReport report;
  report.epochs.reserve(static_cast<std::size_t>(cfg.epochs));

  VaeGradients grads;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.index(static_cast<std::size_t>(i) + 1));
      std::swap(order[i], order[j]);
    }

    EpochStats stats;
    for (int begin = 0; begin < n; begin += cfg.batch_size) {
      const int b = std::min(cfg.batch_size, n - begin);
      Eigen::MatrixXd xb(b, p);
      Eigen::VectorXd yb(b), wb(b);
      for (int i = 0; i < b; ++i) {
        const int row = order[static_cast<std::size_t>(begin + i)];
        xb.row(i) = ds_scaled.features.row(row);
        yb[i] = ds_scaled.target[row];
        wb[i] = w[row];
      }
      Eigen::MatrixXd eps(b, model.latent_dim);
      for (int i = 0; i < b; ++i)
        for (int j = 0; j < model.latent_dim; ++j) eps(i, j) = noise_rng.normal();

      VaeLoss loss;
      try {
        loss = balanced_loss(model, xb, yb, wb, eps, &grads);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch at row " +
                           std::to_string(begin) + ": " + e.what());
      }
      nn::GradientBundle* bundles[] = {&grads.enc_trunk, &grads.enc_mu, &grads.enc_logvar,
                                       &grads.dec_trunk, &grads.dec_x,  &grads.dec_y};
      for (std::size_t k = 0; k < mlps.size(); ++k) nn::adam_step(*mlps[k], *bundles[k], states[k]);

      stats.loss_x += loss.loss_x * b;
      stats.loss_y += loss.loss_y * b;
      stats.loss_kl += loss.loss_kl * b;
      stats.total += loss.total * b;
    }
    stats.loss_x /= n;
    stats.loss_y /= n;
    stats.loss_kl /= n;
    stats.total /= n;
    report.epochs.push_back(stats);
  }

  model.trained = true;
  model.trained_epochs = cfg.epochs;
  report.final_epoch_count = cfg.epochs;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(model), std::move(report)};
}

TabularDataset natural_generate(const VaeModel& model, const std::vector<int>& seed_indices,
                                const TabularDataset& train_scaled, Rng& rng) {
  if (!model.trained) throw DataError("natural_generate: model is not trained");
  for (int idx : seed_indices)
    if (idx < 0 || idx >= train_scaled.n())
      throw DataError("natural_generate: seed index out of range");

  const int m = static_cast<int>(seed_indices.size());
  Eigen::MatrixXd xs(m, train_scaled.p());
  Eigen::VectorXd ys(m);
  for (int i = 0; i < m; ++i) {
    xs.row(i) = train_scaled.features.row(seed_indices[static_cast<std::size_t>(i)]);
    ys[i] = train_scaled.target[seed_indices[static_cast<std::size_t>(i)]];
  }

  Eigen::MatrixXd mu, lv;
  encode(model, xs, ys, &mu, &lv);
  const Eigen::MatrixXd z = reparameterize(model, mu, lv, rng);

  TabularDataset out;
  Eigen::MatrixXd x_hat;
  Eigen::VectorXd y_hat;
  decode(model, z, &x_hat, &y_hat);
  out.features = std::move(x_hat);
  out.target = std::move(y_hat);
  out.feature_names = train_scaled.feature_names;
  out.target_name = train_scaled.target_name;
  out.scaler = train_scaled.scaler;
  return out;
}

namespace {

void append_mlp_tensors(const std::string& prefix, const nn::Mlp& mlp,
                        std::vector<nn::NamedTensor>& tensors) {
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    tensors.push_back({prefix + "." + std::to_string(k) + ".W", mlp.layers[k].weight});
    tensors.push_back({prefix + "." + std::to_string(k) + ".b", mlp.layers[k].bias});
  }
}

void read_mlp_tensors(const std::string& prefix, const std::vector<nn::NamedTensor>& tensors,
                      nn::Mlp& mlp) {
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    const std::string wname = prefix + "." + std::to_string(k) + ".W";
    const std::string bname = prefix + "." + std::to_string(k) + ".b";
    bool found_w = false;
    bool found_b = false;
    for (const auto& t : tensors) {
      if (t.name == wname) {
        if (t.value.rows() != mlp.layers[k].weight.rows() ||
            t.value.cols() != mlp.layers[k].weight.cols())
          throw DataError("checkpoint tensor '" + wname + "' has unexpected shape");
        mlp.layers[k].weight = t.value;
        found_w = true;
      } else if (t.name == bname) {
        if (t.value.rows() != mlp.layers[k].bias.size() || t.value.cols() != 1)
          throw DataError("checkpoint tensor '" + bname + "' has unexpected shape");
        mlp.layers[k].bias = t.value.col(0);
        found_b = true;
      }
    }
    if (!found_w || !found_b)
      throw DataError("checkpoint is missing tensor '" + (found_w ? bname : wname) + "'");
  }
}

std::string join_csv(const Eigen::VectorXd& v) {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    if (i) out += ',';
    out += buf;
  }
  return out;
}

Eigen::VectorXd parse_csv_vector(const std::string& text) {
  std::vector<double> vals;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string cell =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!cell.empty()) vals.push_back(std::stod(cell));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

}  // namespace

void save_checkpoint(const VaeModel& model, const std::string& path) {
  std::vector<nn::NamedTensor> tensors;
  append_mlp_tensors("enc_trunk", model.enc_trunk, tensors);
  append_mlp_tensors("enc_mu", model.enc_mu, tensors);
  append_mlp_tensors("enc_logvar", model.enc_logvar, tensors);
  append_mlp_tensors("dec_trunk", model.dec_trunk, tensors);
  append_mlp_tensors("dec_x", model.dec_x, tensors);
  append_mlp_tensors("dec_y", model.dec_y, tensors);
  nn::save_tensors(path, tensors);

  char buf[32];
  KvPairs kv;
  kv.emplace_back("format_version", "1");
  kv.emplace_back("p", std::to_string(model.p));
  kv.emplace_back("q", std::to_string(model.q));
  const auto put_double = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    kv.emplace_back(key, buf);
  };
  put_double("beta_x", model.config.beta_x);
  put_double("beta_y", model.config.beta_y);
  put_double("beta_kl", model.config.beta_kl);
  put_double("alpha", model.config.alpha);
  kv.emplace_back("epochs", std::to_string(model.config.epochs));
  kv.emplace_back("batch_size", std::to_string(model.config.batch_size));
  put_double("learning_rate", model.config.lr);
  kv.emplace_back("deterministic_latent", model.config.deterministic_latent ? "true" : "false");
  kv.emplace_back("bandwidth_rule", bandwidth_rule_to_string(model.config.bandwidth_rule));
  kv.emplace_back("rng_seed", std::to_string(model.config.rng_seed));
  kv.emplace_back("trained_epochs", std::to_string(model.trained_epochs));
  kv.emplace_back("scaler_min", join_csv(model.scaler.col_min));
  kv.emplace_back("scaler_max", join_csv(model.scaler.col_max));
  write_kv_file(path + ".meta", kv);
}

VaeModel load_checkpoint(const std::string& path) {
  const KvPairs kv = read_kv_file(path + ".meta");
  if (kv_get(kv, "format_version") != "1")
    throw DataError("unsupported checkpoint version in " + path + ".meta");

  VaeConfig cfg;
  cfg.beta_x = std::stod(kv_get(kv, "beta_x"));
  cfg.beta_y = std::stod(kv_get(kv, "beta_y"));
  cfg.beta_kl = std::stod(kv_get(kv, "beta_kl"));
  cfg.alpha = std::stod(kv_get(kv, "alpha"));
  cfg.epochs = std::stoi(kv_get(kv, "epochs"));
  cfg.batch_size = std::stoi(kv_get(kv, "batch_size"));
  cfg.lr = std::stod(kv_get(kv, "learning_rate"));
  cfg.deterministic_latent = kv_get(kv, "deterministic_latent") == "true";
  cfg.bandwidth_rule = parse_bandwidth_rule(kv_get(kv, "bandwidth_rule"));
  cfg.rng_seed = std::stoull(kv_get(kv, "rng_seed"));

  const int p = std::stoi(kv_get(kv, "p"));
  const int q = std::stoi(kv_get(kv, "q"));
  Rng rng(0);
  VaeModel model = build_architecture(p, q, rng, cfg);

  const std::vector<nn::NamedTensor> tensors = nn::load_tensors(path);
  read_mlp_tensors("enc_trunk", tensors, model.enc_trunk);
  read_mlp_tensors("enc_mu", tensors, model.enc_mu);
  read_mlp_tensors("enc_logvar", tensors, model.enc_logvar);
  read_mlp_tensors("dec_trunk", tensors, model.dec_trunk);
  read_mlp_tensors("dec_x", tensors, model.dec_x);
  read_mlp_tensors("dec_y", tensors, model.dec_y);

  model.scaler.col_min = parse_csv_vector(kv_get(kv, "scaler_min"));
  model.scaler.col_max = parse_csv_vector(kv_get(kv, "scaler_max"));
  if (model.scaler.cols() != p + 1)
    throw DataError("checkpoint scaler has wrong column count in " + path + ".meta");
  model.trained_epochs = std::stoi(kv_get(kv, "trained_epochs"));
  model.trained = model.trained_epochs > 0;
  return model;
}

}  // namespace david

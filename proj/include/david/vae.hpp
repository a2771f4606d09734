#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "david/dataset.hpp"
#include "david/kde.hpp"
#include "david/nn.hpp"

namespace david {

struct VaeConfig {
  double beta_x = 1.0;
  double beta_y = 10.0;
  double beta_kl = 1e-6;
  double alpha = 1.0;  // loss-weight exponent; 0 disables balancing
  int epochs = 2000;
  int batch_size = 128;
  double lr = 1e-3;
  int q = 0;  // hidden-layer reduction step; 0 selects p/10 + 1
  bool deterministic_latent = false;  // plain-autoencoder emulation
  std::uint64_t rng_seed = 0;
  BandwidthRule bandwidth_rule = BandwidthRule::silverman();

  int resolved_q(int p) const { return q > 0 ? q : p / 10 + 1; }
};

// Two-headed encoder (mu, log sigma^2) and two-headed decoder (x_hat, y_hat)
// around Tanh trunks. Trunk widths: encoder p+1 -> 2p+1 -> p-q -> p-2q with
// linear heads of width p-3q; decoder mirrors back to heads of width p and 1.
struct VaeModel {
  nn::Mlp enc_trunk;
  nn::Mlp enc_mu;
  nn::Mlp enc_logvar;
  nn::Mlp dec_trunk;
  nn::Mlp dec_x;
  nn::Mlp dec_y;

  int p = 0;
  int q = 0;
  int latent_dim = 0;
  bool trained = false;
  int trained_epochs = 0;
  VaeConfig config;
  ScalerParams scaler;  // of the training data

  std::vector<nn::Mlp*> mlps();
  std::vector<const nn::Mlp*> mlps() const;
};

struct EpochStats {
  double loss_x = 0.0;
  double loss_y = 0.0;
  double loss_kl = 0.0;
  double total = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double wall_seconds = 0.0;
  int final_epoch_count = 0;
};

struct VaeGradients {
  nn::GradientBundle enc_trunk, enc_mu, enc_logvar, dec_trunk, dec_x, dec_y;
};

struct VaeLoss {
  double total = 0.0;
  double loss_x = 0.0;
  double loss_y = 0.0;
  double loss_kl = 0.0;
};

VaeModel build_architecture(int p, int q, Rng& rng, const VaeConfig& cfg = {});

void encode(const VaeModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
            Eigen::MatrixXd* mu, Eigen::MatrixXd* log_var);

// z = mu + exp(log_var/2) .* eps; z = mu when deterministic_latent is set.
Eigen::MatrixXd reparameterize(const VaeModel& model, const Eigen::MatrixXd& mu,
                               const Eigen::MatrixXd& log_var, Rng& rng);

void decode(const VaeModel& model, const Eigen::MatrixXd& z, Eigen::MatrixXd* x_hat,
            Eigen::VectorXd* y_hat);

// Minimized objective over a batch of size b:
//   beta_x/b * sum ||x - x_hat||^2 + beta_y/b * sum w_i (y - y_hat)^2
//   + beta_kl/b * sum KL_i,  KL_i = 1/2 sum_j (exp(lv) - lv - 1 + mu^2).
// eps is the frozen reparameterization noise (b x latent_dim); ignored when
// deterministic_latent is set.
VaeLoss balanced_loss(const VaeModel& model, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& loss_w, const Eigen::MatrixXd& eps,
                      VaeGradients* grads);

// Mini-batch training on a dataset already scaled to [0,1]. Loss weights are
// computed once from the training targets before the first epoch.
std::pair<VaeModel, TrainReport> train_vae(const TabularDataset& ds_scaled, const VaeConfig& cfg);

// Classical VAE generation: encode each seed row, draw z ~ N(mu, diag(sigma^2)),
// decode. Output is in scaled space.
TabularDataset natural_generate(const VaeModel& model, const std::vector<int>& seed_indices,
                                const TabularDataset& train_scaled, Rng& rng);

// Checkpoint: tensor file plus a key-value sidecar at <path>.meta carrying
// the config and scaler.
void save_checkpoint(const VaeModel& model, const std::string& path);
VaeModel load_checkpoint(const std::string& path);

}  // namespace david

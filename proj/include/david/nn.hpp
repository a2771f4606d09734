#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "david/rng.hpp"

namespace david {
namespace nn {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Fixed-architecture MLP: affine layers with Tanh after each one, except
// that the last layer is linear when tanh_output is false (linear heads).
struct Mlp {
  std::vector<DenseLayer> layers;
  bool tanh_output = true;

  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }
  std::size_t parameter_count() const;
};

// Activations recorded by forward, consumed by backward.
struct ForwardCache {
  Eigen::MatrixXd input;                     // b x in
  std::vector<Eigen::MatrixXd> activations;  // post-activation per layer, b x out_k
};

// Per-layer gradients, shape-matched to the Mlp. Sum convention over the
// batch; loss functions own any 1/b factors.
struct GradientBundle {
  std::vector<DenseLayer> layers;

  void set_zero(const Mlp& mlp);
  bool all_finite() const;
};

struct AdamState {
  std::vector<DenseLayer> first_moment;
  std::vector<DenseLayer> second_moment;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // 0 disables clipping

  static AdamState init(const Mlp& mlp, double lr);
};

// Xavier-uniform weights (bound sqrt(6/(in+out))), zero biases.
Mlp init_mlp(const std::vector<int>& dims, Rng& rng, bool tanh_output = true);

Eigen::MatrixXd forward(const Mlp& mlp, const Eigen::MatrixXd& x_batch, ForwardCache* cache);

// Reverse-mode gradients of forward; returns the gradient w.r.t. the input.
Eigen::MatrixXd backward(const Mlp& mlp, const ForwardCache& cache,
                         const Eigen::MatrixXd& output_grad, GradientBundle* grads);

void adam_step(Mlp& mlp, const GradientBundle& grads, AdamState& state);

// Central differences on probe_count randomly chosen parameters across the
// given models; returns the max relative error against analytic_grads.
// loss_fn must be deterministic under parameter perturbation (freeze any
// sampling noise before calling).
double finite_difference_check(const std::function<double()>& loss_fn,
                               const std::vector<Mlp*>& models,
                               const std::vector<const GradientBundle*>& analytic_grads,
                               int probe_count, double epsilon, Rng& rng);

// Checkpoint tensor file, version 1. Plain text:
//   DAVIDNN 1
//   <tensor count>
//   tensor <name> <rows> <cols>
//   <rows lines of cols space-separated %.17g values>   (repeated per tensor)
// %.17g round-trips doubles exactly, so save/load is lossless.
struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;
};

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::string& path);

}  // namespace nn
}  // namespace david

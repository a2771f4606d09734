#include "david/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "david/error.hpp"

namespace david {
namespace nn {

std::size_t Mlp::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers)
    count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return count;
}

void GradientBundle::set_zero(const Mlp& mlp) {
  layers.resize(mlp.layers.size());
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    layers[k].weight = Eigen::MatrixXd::Zero(mlp.layers[k].weight.rows(),
                                             mlp.layers[k].weight.cols());
    layers[k].bias = Eigen::VectorXd::Zero(mlp.layers[k].bias.size());
  }
}

bool GradientBundle::all_finite() const {
  for (const auto& layer : layers)
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  return true;
}

AdamState AdamState::init(const Mlp& mlp, double lr) {
  AdamState state;
  state.lr = lr;
  state.first_moment.resize(mlp.layers.size());
  state.second_moment.resize(mlp.layers.size());
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    const auto& layer = mlp.layers[k];
    state.first_moment[k].weight = Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols());
    state.first_moment[k].bias = Eigen::VectorXd::Zero(layer.bias.size());
    state.second_moment[k].weight = Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols());
    state.second_moment[k].bias = Eigen::VectorXd::Zero(layer.bias.size());
  }
  return state;
}

Mlp init_mlp(const std::vector<int>& dims, Rng& rng, bool tanh_output) {
  if (dims.size() < 2) throw DataError("init_mlp: need at least input and output dims");
  for (int d : dims)
    if (d < 1) throw DataError("init_mlp: all layer dims must be >= 1");

  Mlp mlp;
  mlp.tanh_output = tanh_output;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const int in = dims[k];
    const int out = dims[k + 1];
    DenseLayer layer;
    layer.weight.resize(out, in);
    const double bound = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) layer.weight(i, j) = bound * (2.0 * rng.uniform() - 1.0);
    layer.bias = Eigen::VectorXd::Zero(out);
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

Eigen::MatrixXd forward(const Mlp& mlp, const Eigen::MatrixXd& x_batch, ForwardCache* cache) {
  if (x_batch.cols() != mlp.input_dim())
    throw DataError("forward: input has " + std::to_string(x_batch.cols()) +
                    " columns, layer expects " + std::to_string(mlp.input_dim()));
  if (cache) {
    cache->input = x_batch;
    cache->activations.clear();
    cache->activations.reserve(mlp.layers.size());
  }
  Eigen::MatrixXd a = x_batch;
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    const auto& layer = mlp.layers[k];
    Eigen::MatrixXd z = a * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    const bool apply_tanh = (k + 1 < mlp.layers.size()) || mlp.tanh_output;
    a = apply_tanh ? z.array().tanh().matrix() : std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

Eigen::MatrixXd backward(const Mlp& mlp, const ForwardCache& cache,
                         const Eigen::MatrixXd& output_grad, GradientBundle* grads) {
  if (cache.activations.size() != mlp.layers.size())
    throw DataError("backward: cache does not match network");
  if (output_grad.rows() != cache.input.rows() || output_grad.cols() != mlp.output_dim())
    throw DataError("backward: output gradient shape mismatch");
  if (grads) grads->set_zero(mlp);

  Eigen::MatrixXd da = output_grad;
  for (std::size_t k = mlp.layers.size(); k-- > 0;) {
    const bool has_tanh = (k + 1 < mlp.layers.size()) || mlp.tanh_output;
    Eigen::MatrixXd dz;
    if (has_tanh) {
      const Eigen::MatrixXd& a = cache.activations[k];
      dz = (da.array() * (1.0 - a.array().square())).matrix();
    } else {
      dz = std::move(da);
    }
    const Eigen::MatrixXd& prev = k == 0 ? cache.input : cache.activations[k - 1];
    if (grads) {
      grads->layers[k].weight.noalias() = dz.transpose() * prev;
      grads->layers[k].bias = dz.colwise().sum().transpose();
    }
    da.noalias() = dz * mlp.layers[k].weight;
  }
  return da;
}

void adam_step(Mlp& mlp, const GradientBundle& grads, AdamState& state) {
  if (grads.layers.size() != mlp.layers.size())
    throw DataError("adam_step: gradient shape mismatch");
  if (!grads.all_finite())
    throw NumericError("adam_step: non-finite gradient entries, training aborted");

  double scale = 1.0;
  if (state.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& layer : grads.layers)
      sq += layer.weight.squaredNorm() + layer.bias.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > state.clip_norm) scale = state.clip_norm / norm;
  }

  state.step += 1;
  const double correct1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double correct2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  const auto update = [&](Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad,
                          Eigen::Ref<Eigen::MatrixXd> m, Eigen::Ref<Eigen::MatrixXd> v) {
    const Eigen::ArrayXXd g = scale * grad.array();
    m.array() = state.beta1 * m.array() + (1.0 - state.beta1) * g;
    v.array() = state.beta2 * v.array() + (1.0 - state.beta2) * g.square();
    const Eigen::ArrayXXd m_hat = m.array() / correct1;
    const Eigen::ArrayXXd v_hat = v.array() / correct2;
    param.array() -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
  };

  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    update(mlp.layers[k].weight, grads.layers[k].weight, state.first_moment[k].weight,
           state.second_moment[k].weight);
    update(mlp.layers[k].bias, grads.layers[k].bias, state.first_moment[k].bias,
           state.second_moment[k].bias);
  }
}

double finite_difference_check(const std::function<double()>& loss_fn,
                               const std::vector<Mlp*>& models,
                               const std::vector<const GradientBundle*>& analytic_grads,
                               int probe_count, double epsilon, Rng& rng) {
  if (models.size() != analytic_grads.size())
    throw DataError("finite_difference_check: models/gradients size mismatch");

  // Flatten addressable coordinates: (model, layer, is_bias, row, col).
  struct Coord {
    double* param;
    double analytic;
  };
  std::vector<Coord> coords;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    Mlp& mlp = *models[mi];
    const GradientBundle& gb = *analytic_grads[mi];
    for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
      auto& w = mlp.layers[k].weight;
      for (Eigen::Index i = 0; i < w.size(); ++i)
        coords.push_back({w.data() + i, gb.layers[k].weight.data()[i]});
      auto& b = mlp.layers[k].bias;
      for (Eigen::Index i = 0; i < b.size(); ++i)
        coords.push_back({b.data() + i, gb.layers[k].bias.data()[i]});
    }
  }

  double max_rel_err = 0.0;
  for (int probe = 0; probe < probe_count; ++probe) {
    Coord& c = coords[rng.index(coords.size())];
    const double saved = *c.param;
    *c.param = saved + epsilon;
    const double loss_plus = loss_fn();
    *c.param = saved - epsilon;
    const double loss_minus = loss_fn();
    *c.param = saved;
    const double g_fd = (loss_plus - loss_minus) / (2.0 * epsilon);
    const double denom = std::max(1e-8, std::abs(c.analytic) + std::abs(g_fd));
    max_rel_err = std::max(max_rel_err, std::abs(c.analytic - g_fd) / denom);
  }
  return max_rel_err;
}

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write tensor file: " + path);
  out << "DAVIDNN 1\n" << tensors.size() << '\n';
  char buf[32];
  for (const auto& t : tensors) {
    out << "tensor " << t.name << ' ' << t.value.rows() << ' ' << t.value.cols() << '\n';
    for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", t.value(i, j));
        out << buf << (j + 1 < t.value.cols() ? " " : "");
      }
      out << '\n';
    }
  }
}

std::vector<NamedTensor> load_tensors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tensor file: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "DAVIDNN" || version != 1)
    throw DataError("bad tensor file header in " + path);
  std::size_t count = 0;
  in >> count;
  std::vector<NamedTensor> tensors(count);
  for (std::size_t t = 0; t < count; ++t) {
    std::string tag;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    in >> tag >> tensors[t].name >> rows >> cols;
    if (tag != "tensor" || rows < 0 || cols < 0)
      throw DataError("malformed tensor entry in " + path);
    tensors[t].value.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        if (!(in >> tensors[t].value(i, j)))
          throw DataError("truncated tensor data in " + path);
  }
  return tensors;
}

}  // namespace nn
}  // namespace david

#pragma once

// Small fully connected networks with hand-written reverse mode.
// Activations are row-major batches: one row per item.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "imvote/errors.hpp"

namespace imvote::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Linear {
  Matrix weight;  // out x in
  Vector bias;    // out

  int in() const { return static_cast<int>(weight.cols()); }
  int out() const { return static_cast<int>(weight.rows()); }
};

// Linear layers with ReLU between them; `relu_last` also rectifies the output.
struct Mlp {
  std::vector<Linear> layers;
  bool relu_last = false;

  int in() const { return layers.empty() ? 0 : layers.front().in(); }
  int out() const { return layers.empty() ? 0 : layers.back().out(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }
};

// Widths {in, h1, ..., out}; He-uniform weights, biases uniform in
// +-1/sqrt(in); the final layer is scaled by `last_scale`.
template <class Rng>
Mlp make_mlp(const std::vector<int>& widths, bool relu_last, Rng& rng, double last_scale = 1.0) {
  if (widths.size() < 2) throw ConfigError("an MLP needs at least an input and output width");
  Mlp m;
  m.relu_last = relu_last;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    Linear l;
    const int in = widths[i];
    const int out = widths[i + 1];
    double bound = std::sqrt(6.0 / std::max(1, in));
    if (i + 2 == widths.size()) bound *= last_scale;
    double bias_bound = 1.0 / std::sqrt(std::max(1, in));
    if (i + 2 == widths.size()) bias_bound *= last_scale;
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::uniform_real_distribution<double> bias_dist(-bias_bound, bias_bound);
    l.weight.resize(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) l.weight(r, c) = dist(rng);
    l.bias.resize(out);
    for (int r = 0; r < out; ++r) l.bias[r] = bias_dist(rng);
    m.layers.push_back(std::move(l));
  }
  return m;
}

inline Mlp zeros_like(const Mlp& m) {
  Mlp z = m;
  for (auto& l : z.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return z;
}

struct MlpCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
};

inline Matrix forward(const Mlp& m, const Matrix& x, MlpCache* cache = nullptr) {
  if (x.cols() != m.in()) throw DimensionMismatch();
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
  }
  Matrix h = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& l = m.layers[i];
    Matrix z = h * l.weight.transpose();
    z.rowwise() += l.bias.transpose();
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->pre.push_back(z);
    }
    const bool rect = (i + 1 < m.layers.size()) || m.relu_last;
    h = rect ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return h;
}

// Accumulates parameter gradients into `grad` and returns d(loss)/d(input).
inline Matrix backward(const Mlp& m, const MlpCache& cache, const Matrix& grad_out, Mlp& grad) {
  Matrix g = grad_out;
  for (std::size_t k = m.layers.size(); k-- > 0;) {
    const bool rect = (k + 1 < m.layers.size()) || m.relu_last;
    if (rect) g = g.cwiseProduct((cache.pre[k].array() > 0.0).cast<double>().matrix());
    grad.layers[k].weight.noalias() += g.transpose() * cache.inputs[k];
    grad.layers[k].bias.noalias() += g.colwise().sum().transpose();
    g = g * m.layers[k].weight;
  }
  return g;
}

// Adaptive moment estimation over a flat list of parameter blocks.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }
  long step_count() const { return t_; }

  // `params` and `grads` are parallel lists of pointers to equally sized blocks.
  void step(std::vector<Eigen::Map<Vector>> params,
            const std::vector<Eigen::Map<const Vector>>& grads) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.push_back(Vector::Zero(p.size()));
        v_.push_back(Vector::Zero(p.size()));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseAbs2();
      params[i].array() -=
          lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Vector> m_;
  std::vector<Vector> v_;
};

}  // namespace imvote::nn

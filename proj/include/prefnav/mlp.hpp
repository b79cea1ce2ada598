#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "prefnav/error.hpp"

namespace prefnav {

/// Output nonlinearity of the last layer. Hidden layers are always ReLU.
enum class Head { linear, tanh };

/// Weights and biases of one dense layer, or a gradient/moment of the same shape.
template <typename Scalar>
struct DenseLayer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Matrix weight;  // out x in
  Vector bias;    // out
};

template <typename Scalar>
using LayerSet = std::vector<DenseLayer<Scalar>>;

template <typename Scalar>
LayerSet<Scalar> zeros_like(const LayerSet<Scalar>& layers) {
  LayerSet<Scalar> out(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    out[i].weight.setZero(layers[i].weight.rows(), layers[i].weight.cols());
    out[i].bias.setZero(layers[i].bias.size());
  }
  return out;
}

template <typename Scalar>
bool all_finite(const LayerSet<Scalar>& layers) {
  for (const auto& l : layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

template <typename Scalar>
using MlpGradients = LayerSet<Scalar>;

/// Activations retained by a forward pass. Columns are samples.
template <typename Scalar>
struct ForwardCache {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<Matrix> inputs;  // input to layer l (post-activation of l - 1)
  std::vector<Matrix> pre;     // pre-activation of layer l
  Matrix output;
  const void* owner{nullptr};
  std::uint64_t version{0};
};

/// Fully connected ReLU network with a linear or tanh head. Any mutation goes
/// through mutable_layers(), which bumps the version and invalidates caches.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Cache = ForwardCache<Scalar>;

  Mlp() = default;

  Mlp(std::vector<int> dims, Head head) : dims_(std::move(dims)), head_(head) {
    require(dims_.size() >= 2, ErrorCode::invalid_argument, "mlp: need at least input and output");
    for (int d : dims_) require(d > 0, ErrorCode::invalid_argument, "mlp: layer width must be > 0");
    layers_.resize(dims_.size() - 1);
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      layers_[l].weight.setZero(dims_[l + 1], dims_[l]);
      layers_[l].bias.setZero(dims_[l + 1]);
    }
  }

  [[nodiscard]] const std::vector<int>& dims() const noexcept { return dims_; }
  [[nodiscard]] Head head() const noexcept { return head_; }
  [[nodiscard]] int input_dim() const noexcept { return dims_.front(); }
  [[nodiscard]] int output_dim() const noexcept { return dims_.back(); }
  [[nodiscard]] const LayerSet<Scalar>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::uint64_t version() const noexcept { return version_; }

  LayerSet<Scalar>& mutable_layers() noexcept {
    ++version_;
    return layers_;
  }

  [[nodiscard]] std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  [[nodiscard]] Cache forward(const Matrix& input) const {
    check_input(input);
    Cache cache;
    cache.owner = this;
    cache.version = version_;
    cache.inputs.reserve(layers_.size());
    cache.pre.reserve(layers_.size());
    Matrix a = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      cache.inputs.push_back(std::move(a));
      a = l + 1 < layers_.size() ? Matrix(z.cwiseMax(Scalar(0))) : apply_head(z);
      cache.pre.push_back(std::move(z));
    }
    cache.output = std::move(a);
    return cache;
  }

  /// Forward pass without retaining activations.
  [[nodiscard]] Matrix predict(const Matrix& input) const {
    check_input(input);
    Matrix a = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      a = l + 1 < layers_.size() ? Matrix(z.cwiseMax(Scalar(0))) : apply_head(z);
    }
    return a;
  }

  [[nodiscard]] Vector predict_one(const Vector& x) const { return predict(Matrix(x)).col(0); }

  struct Backward {
    MlpGradients<Scalar> params;
    Matrix input;
  };

  /// Gradients of sum(output .* output_grad) with respect to every parameter
  /// and the input. Never mutates the network.
  [[nodiscard]] Backward backward(const Cache& cache, const Matrix& output_grad) const {
    check_cache(cache, output_grad);
    Backward out;
    out.params.resize(layers_.size());
    Matrix delta = head_delta(cache, output_grad);
    for (std::size_t l = layers_.size(); l-- > 0;) {
      out.params[l].weight.noalias() = delta * cache.inputs[l].transpose();
      out.params[l].bias = delta.rowwise().sum();
      Matrix prev = layers_[l].weight.transpose() * delta;
      if (l > 0) prev = prev.cwiseProduct(relu_mask(cache.pre[l - 1]));
      delta = std::move(prev);
    }
    out.input = std::move(delta);
    return out;
  }

  /// Input gradient only; skips the parameter-gradient products.
  [[nodiscard]] Matrix input_gradient(const Cache& cache, const Matrix& output_grad) const {
    check_cache(cache, output_grad);
    Matrix delta = head_delta(cache, output_grad);
    for (std::size_t l = layers_.size(); l-- > 0;) {
      Matrix prev = layers_[l].weight.transpose() * delta;
      if (l > 0) prev = prev.cwiseProduct(relu_mask(cache.pre[l - 1]));
      delta = std::move(prev);
    }
    return delta;
  }

 private:
  void check_input(const Matrix& input) const {
    require(!layers_.empty(), ErrorCode::invalid_argument, "mlp: empty network");
    require(input.rows() == dims_.front(), ErrorCode::dimension_mismatch,
            "mlp: input has " + std::to_string(input.rows()) + " rows, expected " +
                std::to_string(dims_.front()));
  }

  void check_cache(const Cache& cache, const Matrix& output_grad) const {
    require(cache.owner == this && cache.version == version_ &&
                cache.inputs.size() == layers_.size(),
            ErrorCode::stale_cache, "mlp: cache does not belong to the current parameters");
    require(output_grad.rows() == cache.output.rows() && output_grad.cols() == cache.output.cols(),
            ErrorCode::dimension_mismatch, "mlp: output gradient shape mismatch");
  }

  [[nodiscard]] Matrix apply_head(const Matrix& z) const {
    return head_ == Head::tanh ? Matrix(z.array().tanh()) : z;
  }

  [[nodiscard]] Matrix head_delta(const Cache& cache, const Matrix& output_grad) const {
    if (head_ == Head::linear) return output_grad;
    return output_grad.cwiseProduct(
        Matrix((Scalar(1) - cache.output.array().square()).matrix()));
  }

  static Matrix relu_mask(const Matrix& pre) {
    return (pre.array() > Scalar(0)).template cast<Scalar>().matrix();
  }

  std::vector<int> dims_;
  Head head_{Head::linear};
  LayerSet<Scalar> layers_;
  std::uint64_t version_{0};
};

/// Fan-in scaled uniform weights in [-sqrt(3 / fan_in), sqrt(3 / fan_in)], zero biases.
template <typename Scalar, typename Engine>
Mlp<Scalar> init_params(Engine& rng, const std::vector<int>& dims, Head head) {
  Mlp<Scalar> net(dims, head);
  auto& layers = net.mutable_layers();
  for (auto& layer : layers) {
    const double bound = std::sqrt(3.0 / static_cast<double>(layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        layer.weight(r, c) = static_cast<Scalar>(dist(rng));
  }
  return net;
}

template <typename Scalar>
struct AdamState {
  LayerSet<Scalar> m;
  LayerSet<Scalar> v;
  std::int64_t step{0};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};

  AdamState() = default;
  explicit AdamState(const Mlp<Scalar>& net) : m(zeros_like(net.layers())), v(zeros_like(net.layers())) {}
};

/// Bias-corrected adaptive-moment update. Rejects non-finite gradients
/// without touching the parameters or the state.
template <typename Scalar>
void adam_step(Mlp<Scalar>& net, const MlpGradients<Scalar>& grads, AdamState<Scalar>& state,
               double lr) {
  require(grads.size() == net.layers().size(), ErrorCode::dimension_mismatch,
          "adam: gradient layer count mismatch");
  require(all_finite(grads), ErrorCode::non_finite, "adam: non-finite gradient rejected");
  if (state.m.empty()) state = AdamState<Scalar>(net);
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<Scalar>(state.beta1), b2 = static_cast<Scalar>(state.beta2);
  const auto step_size = static_cast<Scalar>(lr / c1);
  const auto inv_c2 = static_cast<Scalar>(1.0 / c2);
  const auto eps = static_cast<Scalar>(state.eps);
  auto& layers = net.mutable_layers();
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    param.array() -= step_size * m.array() / ((v.array() * inv_c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    require(grads[l].weight.rows() == layers[l].weight.rows() &&
                grads[l].weight.cols() == layers[l].weight.cols(),
            ErrorCode::dimension_mismatch, "adam: gradient shape mismatch");
    update(layers[l].weight, grads[l].weight, state.m[l].weight, state.v[l].weight);
    update(layers[l].bias, grads[l].bias, state.m[l].bias, state.v[l].bias);
  }
}

/// target <- tau * live + (1 - tau) * target
template <typename Scalar>
void soft_update(Mlp<Scalar>& target, const Mlp<Scalar>& live, double tau) {
  require(tau > 0.0 && tau <= 1.0, ErrorCode::invalid_argument, "soft_update: tau outside (0, 1]");
  require(target.dims() == live.dims(), ErrorCode::dimension_mismatch, "soft_update: shape mismatch");
  const auto t = static_cast<Scalar>(tau), keep = static_cast<Scalar>(1.0 - tau);
  auto& dst = target.mutable_layers();
  const auto& src = live.layers();
  for (std::size_t l = 0; l < dst.size(); ++l) {
    if (tau == 1.0) {
      dst[l] = src[l];
      continue;
    }
    dst[l].weight = t * src[l].weight + keep * dst[l].weight;
    dst[l].bias = t * src[l].bias + keep * dst[l].bias;
  }
}

}  // namespace prefnav

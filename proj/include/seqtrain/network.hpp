#ifndef SEQTRAIN_NETWORK_HPP_
#define SEQTRAIN_NETWORK_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "seqtrain/activation.hpp"
#include "seqtrain/errors.hpp"
#include "seqtrain/rng.hpp"

namespace seqtrain {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Shape of a single-output feedforward network.
struct Architecture {
  Index input_dim = 2;
  std::vector<Index> hidden_widths{16, 16, 16, 16, 16};
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::identity;

  std::size_t depth() const { return hidden_widths.size(); }

  /// Input width of hidden layer `stage` (1-based).
  Index stage_input_dim(std::size_t stage) const {
    return stage == 1 ? input_dim : hidden_widths[stage - 1 - 1];
  }

  void validate() const {
    require(input_dim >= 1, "architecture: input_dim must be >= 1, got " + std::to_string(input_dim));
    require(!hidden_widths.empty(), "architecture: at least one hidden layer is required");
    for (Index w : hidden_widths)
      require(w >= 1, "architecture: hidden widths must be >= 1, got " + std::to_string(w));
  }

  bool operator==(const Architecture&) const = default;
};

/// Affine map followed by the hidden activation: out = f(weights * in + bias).
template <typename Scalar>
struct LayerParams {
  Matrix<Scalar> weights;  // out_dim x in_dim
  Vector<Scalar> bias;     // out_dim

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }
  Index size() const { return weights.size() + bias.size(); }

  static LayerParams zeros(Index in_dim, Index out_dim) {
    return {Matrix<Scalar>::Zero(out_dim, in_dim), Vector<Scalar>::Zero(out_dim)};
  }
};

template <typename Scalar>
struct OutputHead {
  Vector<Scalar> weights;
  Scalar bias{0};
  Activation activation = Activation::identity;

  Index in_dim() const { return weights.size(); }
  Index size() const { return weights.size() + 1; }

  static OutputHead zeros(Index in_dim, Activation act = Activation::identity) {
    return {Vector<Scalar>::Zero(in_dim), Scalar(0), act};
  }
};

template <typename Scalar>
bool bit_equal(const LayerParams<Scalar>& a, const LayerParams<Scalar>& b) {
  return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() &&
         a.bias.size() == b.bias.size() && a.weights == b.weights && a.bias == b.bias;
}

template <typename Scalar>
bool bit_equal(const OutputHead<Scalar>& a, const OutputHead<Scalar>& b) {
  return a.weights.size() == b.weights.size() && a.weights == b.weights && a.bias == b.bias &&
         a.activation == b.activation;
}

namespace detail {

template <typename Scalar>
void check_finite(const LayerParams<Scalar>& layer, std::size_t index) {
  require(layer.weights.allFinite() && layer.bias.allFinite(),
          "layer " + std::to_string(index) + " has non-finite parameters");
}

inline std::string dims(Index a, Index b) {
  return std::to_string(a) + " vs " + std::to_string(b);
}

}  // namespace detail

/// Hidden layers plus one scalar output head.
///
/// Construction validates that layer dimensions chain and that every
/// parameter is finite. The mutable accessors exist for optimizers; they
/// must not change any block's shape.
template <typename Scalar>
class Mlp {
 public:
  Mlp(std::vector<LayerParams<Scalar>> layers, OutputHead<Scalar> head, Activation hidden_activation)
      : layers_(std::move(layers)), head_(std::move(head)), hidden_activation_(hidden_activation) {
    require(!layers_.empty(), "mlp: at least one hidden layer is required");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& layer = layers_[k];
      require(layer.in_dim() >= 1 && layer.out_dim() >= 1,
              "mlp: layer " + std::to_string(k + 1) + " has an empty weight matrix");
      require(layer.bias.size() == layer.out_dim(),
              "mlp: layer " + std::to_string(k + 1) + " weights rows / bias length mismatch: " +
                  detail::dims(layer.out_dim(), layer.bias.size()));
      if (k > 0)
        require(layer.in_dim() == layers_[k - 1].out_dim(),
                "mlp: layer " + std::to_string(k + 1) + " input dim does not chain: " +
                    detail::dims(layer.in_dim(), layers_[k - 1].out_dim()));
      detail::check_finite(layer, k + 1);
    }
    require(head_.in_dim() == layers_.back().out_dim(),
            "mlp: head width does not match last hidden layer: " +
                detail::dims(head_.in_dim(), layers_.back().out_dim()));
    require(head_.weights.allFinite() && std::isfinite(head_.bias), "mlp: head has non-finite parameters");
  }

  std::size_t depth() const { return layers_.size(); }
  Index input_dim() const { return layers_.front().in_dim(); }
  Activation hidden_activation() const { return hidden_activation_; }

  const std::vector<LayerParams<Scalar>>& layers() const { return layers_; }
  const LayerParams<Scalar>& layer(std::size_t k) const { return layers_.at(k); }
  const OutputHead<Scalar>& head() const { return head_; }

  std::vector<LayerParams<Scalar>>& mutable_layers() { return layers_; }
  OutputHead<Scalar>& mutable_head() { return head_; }

  Architecture architecture() const {
    Architecture arch;
    arch.input_dim = input_dim();
    arch.hidden_widths.clear();
    for (const auto& layer : layers_) arch.hidden_widths.push_back(layer.out_dim());
    arch.hidden_activation = hidden_activation_;
    arch.output_activation = head_.activation;
    return arch;
  }

  Index parameter_count() const {
    Index n = head_.size();
    for (const auto& layer : layers_) n += layer.size();
    return n;
  }

  friend bool bit_equal(const Mlp& a, const Mlp& b) {
    if (a.depth() != b.depth() || a.hidden_activation_ != b.hidden_activation_) return false;
    for (std::size_t k = 0; k < a.depth(); ++k)
      if (!bit_equal(a.layers_[k], b.layers_[k])) return false;
    return bit_equal(a.head_, b.head_);
  }

 private:
  std::vector<LayerParams<Scalar>> layers_;
  OutputHead<Scalar> head_;
  Activation hidden_activation_;
};

using Mlpd = Mlp<double>;
using LayerParamsd = LayerParams<double>;
using OutputHeadd = OutputHead<double>;

// ---------------------------------------------------------------------------
// Forward propagation
// ---------------------------------------------------------------------------

template <typename Scalar, typename Derived>
Vector<Scalar> layer_forward(const LayerParams<Scalar>& layer, Activation act,
                             const Eigen::MatrixBase<Derived>& input) {
  require(input.size() == layer.in_dim(),
          "layer_forward: input length " + std::to_string(input.size()) + " does not match layer in_dim " +
              std::to_string(layer.in_dim()));
  require(layer.bias.size() == layer.out_dim(),
          "layer_forward: weights rows / bias length mismatch: " +
              detail::dims(layer.out_dim(), layer.bias.size()));
  const Vector<Scalar> x = input;
  return activate(act, (layer.weights * x + layer.bias).eval());
}

template <typename Scalar, typename Derived>
Scalar head_forward(const OutputHead<Scalar>& head, const Eigen::MatrixBase<Derived>& input) {
  require(input.size() == head.in_dim(),
          "head_forward: input length " + std::to_string(input.size()) + " does not match head width " +
              std::to_string(head.in_dim()));
  const Vector<Scalar> x = input;
  return activate(head.activation, Scalar(head.weights.dot(x) + head.bias));
}

/// Activations after the first `depth` hidden layers (1 <= depth <= L).
template <typename Scalar, typename Derived>
Vector<Scalar> hidden_activations(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& input,
                                  std::size_t depth) {
  require(depth >= 1 && depth <= net.depth(),
          "hidden_activations: depth " + std::to_string(depth) + " outside [1, " +
              std::to_string(net.depth()) + "]");
  Vector<Scalar> a = input;
  for (std::size_t k = 0; k < depth; ++k) a = layer_forward(net.layer(k), net.hidden_activation(), a);
  return a;
}

template <typename Scalar, typename Derived>
Scalar mlp_forward(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& input) {
  return head_forward(net.head(), hidden_activations(net, input, net.depth()));
}

/// Batched forward pass. `inputs` holds one sample per row; returns one
/// prediction per sample, each computed exactly as mlp_forward would.
template <typename Scalar>
Vector<Scalar> mlp_forward_rows(const Mlp<Scalar>& net, const Matrix<Scalar>& inputs) {
  Vector<Scalar> out(inputs.rows());
  for (Index i = 0; i < inputs.rows(); ++i) out(i) = mlp_forward(net, inputs.row(i).transpose());
  return out;
}

// ---------------------------------------------------------------------------
// Parameter counting
// ---------------------------------------------------------------------------

inline Index layer_param_count(Index in_dim, Index out_dim) { return in_dim * out_dim + out_dim; }

inline Index param_count_full(const Architecture& arch) {
  arch.validate();
  Index n = 0;
  for (std::size_t k = 1; k <= arch.depth(); ++k)
    n += layer_param_count(arch.stage_input_dim(k), arch.hidden_widths[k - 1]);
  return n + arch.hidden_widths.back() + 1;
}

/// Unknowns in sequential stage `stage` (1-based): that stage's layer plus
/// its temporary head.
inline Index param_count_stage(const Architecture& arch, std::size_t stage) {
  arch.validate();
  require(stage >= 1 && stage <= arch.depth(),
          "param_count_stage: stage " + std::to_string(stage) + " outside [1, " + std::to_string(arch.depth()) +
              "]");
  const Index width = arch.hidden_widths[stage - 1];
  return layer_param_count(arch.stage_input_dim(stage), width) + width + 1;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// Glorot-uniform weights on +-sqrt(6 / (fan_in + fan_out)), zero bias.
/// Weights are drawn row by row.
template <typename Scalar>
LayerParams<Scalar> glorot_layer(Index in_dim, Index out_dim, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  auto layer = LayerParams<Scalar>::zeros(in_dim, out_dim);
  for (Index r = 0; r < out_dim; ++r)
    for (Index c = 0; c < in_dim; ++c) layer.weights(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
  return layer;
}

template <typename Scalar>
OutputHead<Scalar> glorot_head(Index in_dim, Activation act, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + 1));
  auto head = OutputHead<Scalar>::zeros(in_dim, act);
  for (Index i = 0; i < in_dim; ++i) head.weights(i) = static_cast<Scalar>(rng.uniform(-limit, limit));
  return head;
}

/// Layers 1..L then the head, all from one generator.
template <typename Scalar>
Mlp<Scalar> glorot_mlp(const Architecture& arch, Rng& rng) {
  arch.validate();
  std::vector<LayerParams<Scalar>> layers;
  for (std::size_t k = 1; k <= arch.depth(); ++k)
    layers.push_back(glorot_layer<Scalar>(arch.stage_input_dim(k), arch.hidden_widths[k - 1], rng));
  auto head = glorot_head<Scalar>(arch.hidden_widths.back(), arch.output_activation, rng);
  return Mlp<Scalar>(std::move(layers), std::move(head), arch.hidden_activation);
}

}  // namespace seqtrain

#endif  // SEQTRAIN_NETWORK_HPP_

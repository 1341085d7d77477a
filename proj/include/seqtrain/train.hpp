#ifndef SEQTRAIN_TRAIN_HPP_
#define SEQTRAIN_TRAIN_HPP_

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "seqtrain/dataset.hpp"
#include "seqtrain/network.hpp"
#include "seqtrain/rng.hpp"

namespace seqtrain {

enum class LossNorm { l1, l2 };
enum class OptimizerKind { sgd, adam };
enum class Strategy { full, sequential };

inline std::string_view to_string(LossNorm n) { return n == LossNorm::l1 ? "l1" : "l2"; }
inline std::string_view to_string(OptimizerKind o) { return o == OptimizerKind::sgd ? "sgd" : "adam"; }
inline std::string_view to_string(Strategy s) { return s == Strategy::full ? "full" : "sequential"; }

struct Hyperparams {
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 1e-3;
  Index batch_size = 32;
  std::size_t epochs = 100;
  LossNorm loss = LossNorm::l1;
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  /// A learning rate of exactly 0 is accepted so that a run can be replayed
  /// without moving any parameter.
  void validate() const {
    require(learning_rate >= 0.0 && std::isfinite(learning_rate), "hyperparams: learning_rate must be >= 0");
    require(batch_size >= 1, "hyperparams: batch_size must be >= 1");
    require(epochs >= 1, "hyperparams: epochs must be >= 1");
    require(adam_beta1 > 0.0 && adam_beta1 < 1.0, "hyperparams: adam_beta1 must lie in (0, 1)");
    require(adam_beta2 > 0.0 && adam_beta2 < 1.0, "hyperparams: adam_beta2 must lie in (0, 1)");
    require(adam_epsilon > 0.0, "hyperparams: adam_epsilon must be > 0");
  }
};

// Sub-stream ids for Rng::stream(seed, id). Stage k uses base + k.
inline constexpr std::uint64_t kInitStream = 0x1000;
inline constexpr std::uint64_t kShuffleStream = 0x2000;

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

/// Mean absolute (l1) or mean squared (l2) residual.
template <typename DerivedP, typename DerivedT>
typename DerivedP::Scalar loss(const Eigen::MatrixBase<DerivedP>& predictions,
                               const Eigen::MatrixBase<DerivedT>& targets, LossNorm norm) {
  require(predictions.size() == targets.size(),
          "loss: " + std::to_string(predictions.size()) + " predictions vs " + std::to_string(targets.size()) +
              " targets");
  require(predictions.size() >= 1, "loss: empty input");
  const auto residual = (predictions - targets).array();
  const auto n = static_cast<typename DerivedP::Scalar>(predictions.size());
  return norm == LossNorm::l1 ? residual.abs().sum() / n : residual.square().sum() / n;
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

/// Same layout as the parameters of an Mlp. `head.activation` is unused.
template <typename Scalar>
struct Gradients {
  std::vector<LayerParams<Scalar>> layers;
  OutputHead<Scalar> head;

  static Gradients zeros_like(const Mlp<Scalar>& net) {
    Gradients g;
    for (const auto& layer : net.layers()) g.layers.push_back(LayerParams<Scalar>::zeros(layer.in_dim(), layer.out_dim()));
    g.head = OutputHead<Scalar>::zeros(net.head().in_dim());
    return g;
  }
};

namespace detail {

/// Calls fn(block, layer_index) for every contiguous parameter block as an
/// Eigen::Map over its storage. The head blocks report layer_index = depth.
template <typename Scalar, typename Fn>
void for_each_block(std::vector<LayerParams<Scalar>>& layers, OutputHead<Scalar>& head, Fn&& fn) {
  using Map = Eigen::Map<Vector<Scalar>>;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Map w(layers[k].weights.data(), layers[k].weights.size());
    Map b(layers[k].bias.data(), layers[k].bias.size());
    fn(w, k);
    fn(b, k);
  }
  Map hw(head.weights.data(), head.weights.size());
  Map hb(&head.bias, 1);
  fn(hw, layers.size());
  fn(hb, layers.size());
}

template <typename Scalar>
std::vector<Eigen::Map<Vector<Scalar>>> blocks(std::vector<LayerParams<Scalar>>& layers, OutputHead<Scalar>& head) {
  std::vector<Eigen::Map<Vector<Scalar>>> out;
  for_each_block(layers, head, [&](auto& block, std::size_t) { out.push_back(block); });
  return out;
}

template <typename Scalar>
std::vector<std::size_t> block_owners(const Mlp<Scalar>& net) {
  std::vector<std::size_t> owners;
  for (std::size_t k = 0; k < net.depth(); ++k) owners.insert(owners.end(), {k, k});
  owners.insert(owners.end(), {net.depth(), net.depth()});
  return owners;
}

}  // namespace detail

/// Forward pass over a batch with per-layer caches, one sample per column.
template <typename Scalar>
struct BatchForward {
  std::vector<Matrix<Scalar>> activations;  // L + 1 entries, [0] is the input
  std::vector<Matrix<Scalar>> pre;          // L entries
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> head_pre;
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> output;
};

template <typename Scalar>
BatchForward<Scalar> forward_batch(const Mlp<Scalar>& net, const Matrix<Scalar>& inputs) {
  require(inputs.cols() == net.input_dim(), "forward_batch: inputs have " + std::to_string(inputs.cols()) +
                                                " columns, network expects " + std::to_string(net.input_dim()));
  BatchForward<Scalar> fw;
  fw.activations.reserve(net.depth() + 1);
  fw.activations.push_back(inputs.transpose());
  for (const auto& layer : net.layers()) {
    fw.pre.push_back((layer.weights * fw.activations.back()).colwise() + layer.bias);
    fw.activations.push_back(activate(net.hidden_activation(), fw.pre.back()));
  }
  fw.head_pre = (net.head().weights.transpose() * fw.activations.back()).array() + net.head().bias;
  fw.output = activate(net.head().activation, fw.head_pre);
  return fw;
}

/// Batched predictions, one per input row.
template <typename Scalar>
Vector<Scalar> predict(const Mlp<Scalar>& net, const Matrix<Scalar>& inputs) {
  return forward_batch(net, inputs).output.transpose();
}

template <typename Scalar>
struct LossAndGradients {
  Scalar loss;
  Gradients<Scalar> gradients;
};

/// Reverse-mode gradient of the mean batch loss, plus the loss itself.
/// The l1 subgradient at a zero residual is 0.
template <typename Scalar>
LossAndGradients<Scalar> loss_and_gradients(const Mlp<Scalar>& net, const Matrix<Scalar>& inputs,
                                            const Vector<Scalar>& targets, LossNorm norm) {
  require(inputs.rows() >= 1, "backprop: empty batch");
  require(inputs.rows() == targets.size(), "backprop: " + std::to_string(inputs.rows()) + " inputs vs " +
                                               std::to_string(targets.size()) + " targets");
  const auto fw = forward_batch(net, inputs);
  const Scalar n = static_cast<Scalar>(inputs.rows());
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> residual = fw.output.array() - targets.transpose().array();

  Eigen::Array<Scalar, 1, Eigen::Dynamic> dloss;
  if (norm == LossNorm::l2)
    dloss = Scalar(2) * residual / n;
  else
    dloss = residual.unaryExpr([](Scalar r) { return Scalar((r > 0) - (r < 0)); }) / n;

  LossAndGradients<Scalar> out{loss(fw.output.transpose(), targets, norm), Gradients<Scalar>::zeros_like(net)};
  auto& g = out.gradients;

  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> delta =
      (dloss * activate_derivative(net.head().activation, fw.head_pre).array()).matrix();
  g.head.weights = fw.activations.back() * delta.transpose();
  g.head.bias = delta.sum();

  Matrix<Scalar> upstream = net.head().weights * delta;
  for (std::size_t k = net.depth(); k-- > 0;) {
    const Matrix<Scalar> dz =
        (upstream.array() * activate_derivative(net.hidden_activation(), fw.pre[k]).array()).matrix();
    g.layers[k].weights = dz * fw.activations[k].transpose();
    g.layers[k].bias = dz.rowwise().sum();
    if (k > 0) upstream = net.layer(k).weights.transpose() * dz;
  }
  return out;
}

template <typename Scalar>
Gradients<Scalar> backprop(const Mlp<Scalar>& net, const Matrix<Scalar>& inputs, const Vector<Scalar>& targets,
                           LossNorm norm) {
  return loss_and_gradients(net, inputs, targets, norm).gradients;
}

/// Central-difference gradient (L(p + eps) - L(p - eps)) / (2 eps), one
/// parameter at a time. Losses are evaluated sample by sample through
/// mlp_forward, independently of the batched path used by backprop.
template <typename Scalar>
Gradients<Scalar> finite_diff_grad(const Mlp<Scalar>& net, const Matrix<Scalar>& inputs,
                                   const Vector<Scalar>& targets, LossNorm norm, Scalar epsilon) {
  require(epsilon > Scalar(0), "finite_diff_grad: epsilon must be > 0");
  require(inputs.rows() == targets.size(), "finite_diff_grad: " + std::to_string(inputs.rows()) +
                                               " inputs vs " + std::to_string(targets.size()) + " targets");
  Mlp<Scalar> probe = net;
  auto grads = Gradients<Scalar>::zeros_like(net);
  auto params = detail::blocks(probe.mutable_layers(), probe.mutable_head());
  auto outs = detail::blocks(grads.layers, grads.head);
  const auto eval = [&] { return loss(mlp_forward_rows(probe, inputs), targets, norm); };
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (Index i = 0; i < params[b].size(); ++i) {
      const Scalar saved = params[b](i);
      params[b](i) = saved + epsilon;
      const Scalar up = eval();
      params[b](i) = saved - epsilon;
      const Scalar down = eval();
      params[b](i) = saved;
      outs[b](i) = (up - down) / (Scalar(2) * epsilon);
    }
  }
  return grads;
}

/// Largest |a - b| / max(|a|, |b|, floor) over all parameters.
template <typename Scalar>
Scalar max_relative_error(const Gradients<Scalar>& a, const Gradients<Scalar>& b, Scalar floor) {
  auto ga = a;
  auto gb = b;
  auto ba = detail::blocks(ga.layers, ga.head);
  auto bb = detail::blocks(gb.layers, gb.head);
  require(ba.size() == bb.size(), "max_relative_error: gradient layouts differ");
  Scalar worst(0);
  for (std::size_t k = 0; k < ba.size(); ++k) {
    require(ba[k].size() == bb[k].size(), "max_relative_error: gradient shapes differ");
    for (Index i = 0; i < ba[k].size(); ++i) {
      using std::abs;
      using std::max;
      const Scalar denom = max(max(abs(ba[k](i)), abs(bb[k](i))), floor);
      worst = max(worst, Scalar(abs(ba[k](i) - bb[k](i)) / denom));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

/// Adam moments (unused by sgd). Lazily sized on the first step.
template <typename Scalar>
struct OptimizerState {
  std::uint64_t step = 0;
  std::optional<Gradients<Scalar>> first_moment;
  std::optional<Gradients<Scalar>> second_moment;
};

/// One update of every parameter block belonging to a layer index
/// >= first_trainable (the head is always trainable). Blocks below
/// first_trainable are left bit-identical.
template <typename Scalar>
void optimizer_step(Mlp<Scalar>& net, const Gradients<Scalar>& grads, OptimizerState<Scalar>& state,
                    const Hyperparams& hp, std::size_t first_trainable = 0) {
  auto g = grads;
  auto params = detail::blocks(net.mutable_layers(), net.mutable_head());
  auto gblocks = detail::blocks(g.layers, g.head);
  require(params.size() == gblocks.size(), "optimizer_step: gradient layout does not match network");
  for (std::size_t b = 0; b < params.size(); ++b)
    require(params[b].size() == gblocks[b].size(), "optimizer_step: gradient shape does not match network");
  const auto owners = detail::block_owners(net);
  const Scalar lr = static_cast<Scalar>(hp.learning_rate);
  ++state.step;

  if (hp.optimizer == OptimizerKind::sgd) {
    for (std::size_t b = 0; b < params.size(); ++b)
      if (owners[b] >= first_trainable) params[b] -= lr * gblocks[b];
    return;
  }

  if (!state.first_moment) {
    state.first_moment = Gradients<Scalar>::zeros_like(net);
    state.second_moment = Gradients<Scalar>::zeros_like(net);
  }
  auto m = detail::blocks(state.first_moment->layers, state.first_moment->head);
  auto v = detail::blocks(state.second_moment->layers, state.second_moment->head);
  const Scalar b1 = static_cast<Scalar>(hp.adam_beta1);
  const Scalar b2 = static_cast<Scalar>(hp.adam_beta2);
  const Scalar eps = static_cast<Scalar>(hp.adam_epsilon);
  const Scalar t = static_cast<Scalar>(state.step);
  using std::pow;
  const Scalar c1 = Scalar(1) - pow(b1, t);
  const Scalar c2 = Scalar(1) - pow(b2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (owners[b] < first_trainable) continue;
    m[b] = b1 * m[b] + (Scalar(1) - b1) * gblocks[b];
    v[b] = b2 * v[b] + (Scalar(1) - b2) * gblocks[b].cwiseAbs2();
    params[b].array() -= lr * (m[b].array() / c1) / ((v[b].array() / c2).sqrt() + eps);
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

template <typename Scalar>
struct StageReport {
  std::size_t stage_index = 1;
  std::vector<Scalar> train_loss;  // one entry per epoch, measured after the epoch
  std::vector<Scalar> val_error;
  /// Layers optimized in this stage: one for a sequential stage, all of
  /// them for full training.
  std::vector<LayerParams<Scalar>> trained_layers;
  OutputHead<Scalar> head;
  bool head_discarded = false;
};

template <typename Scalar>
struct TrainReport {
  Strategy strategy;
  std::vector<StageReport<Scalar>> stages;
  Mlp<Scalar> final_model;
  std::vector<Index> problem_sizes;
};

struct StageOptions {
  std::size_t stage_index = 1;
  /// Layers with a smaller index stay frozen.
  std::size_t first_trainable = 0;
};

template <typename Scalar>
struct StageResult {
  StageReport<Scalar> report;
  Mlp<Scalar> model;
};

/// Mini-batch training of one optimization problem. Every epoch draws a
/// fresh Fisher-Yates permutation from the stage's shuffle stream, then
/// records the loss on the full training set and the validation error.
template <typename Scalar>
StageResult<Scalar> train_stage(Mlp<Scalar> net, const Dataset<Scalar>& train, const Dataset<Scalar>& val,
                                const Hyperparams& hp, StageOptions opts = {}) {
  hp.validate();
  require(!train.empty(), "train_stage: empty training set");
  require(!val.empty(), "train_stage: empty validation set");
  require(train.input_dim() == net.input_dim() && val.input_dim() == net.input_dim(),
          "train_stage: dataset input dims " + std::to_string(train.input_dim()) + "/" +
              std::to_string(val.input_dim()) + " do not match network input dim " +
              std::to_string(net.input_dim()));
  require(opts.first_trainable < net.depth(), "train_stage: first_trainable must leave a hidden layer to train");

  Rng shuffle_rng = Rng::stream(hp.seed, kShuffleStream + opts.stage_index);
  OptimizerState<Scalar> state;
  StageReport<Scalar> report;
  report.stage_index = opts.stage_index;
  report.train_loss.reserve(hp.epochs);
  report.val_error.reserve(hp.epochs);

  std::vector<Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), Index{0});
  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hp.batch_size));
      const std::vector<Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(stop));
      const Matrix<Scalar> xb = train.inputs(idx, Eigen::all);
      const Vector<Scalar> yb = train.targets(idx);
      const auto lg = loss_and_gradients(net, xb, yb, hp.loss);
      if (!std::isfinite(lg.loss)) throw DivergenceError(opts.stage_index, epoch);
      optimizer_step(net, lg.gradients, state, hp, opts.first_trainable);
    }
    const Scalar train_loss = loss(predict(net, train.inputs), train.targets, hp.loss);
    const Scalar val_error = loss(predict(net, val.inputs), val.targets, hp.loss);
    if (!std::isfinite(train_loss) || !std::isfinite(val_error)) throw DivergenceError(opts.stage_index, epoch);
    report.train_loss.push_back(train_loss);
    report.val_error.push_back(val_error);
  }

  report.trained_layers.assign(net.layers().begin() + static_cast<std::ptrdiff_t>(opts.first_trainable),
                               net.layers().end());
  report.head = net.head();
  return {std::move(report), std::move(net)};
}

/// Joint optimization of every layer and the head.
template <typename Scalar>
TrainReport<Scalar> train_full(const Architecture& arch, const Dataset<Scalar>& train, const Dataset<Scalar>& val,
                               const Hyperparams& hp) {
  arch.validate();
  require(arch.input_dim == train.input_dim(), "train_full: architecture input_dim " +
                                                   std::to_string(arch.input_dim) + " vs dataset input dim " +
                                                   std::to_string(train.input_dim()));
  Rng init = Rng::stream(hp.seed, kInitStream + 1);
  auto result = train_stage(glorot_mlp<Scalar>(arch, init), train, val, hp, {1, 0});
  return {Strategy::full, {std::move(result.report)}, std::move(result.model), {param_count_full(arch)}};
}

/// Greedy layer-wise training. Stage k trains hidden layer k and a fresh
/// temporary head on the cached activations of the frozen layers 1..k-1;
/// the head is kept only at the last stage.
template <typename Scalar>
TrainReport<Scalar> train_sequential(const Architecture& arch, const Dataset<Scalar>& train,
                                     const Dataset<Scalar>& val, const Hyperparams& hp) {
  arch.validate();
  require(arch.input_dim == train.input_dim(), "train_sequential: architecture input_dim " +
                                                   std::to_string(arch.input_dim) + " vs dataset input dim " +
                                                   std::to_string(train.input_dim()));
  std::vector<StageReport<Scalar>> stages;
  std::vector<LayerParams<Scalar>> frozen;
  std::vector<Index> sizes;
  Dataset<Scalar> stage_train = train;
  Dataset<Scalar> stage_val = val;

  for (std::size_t k = 1; k <= arch.depth(); ++k) {
    const Index in_dim = arch.stage_input_dim(k);
    const Index width = arch.hidden_widths[k - 1];
    Rng init = Rng::stream(hp.seed, kInitStream + k);
    auto layer = glorot_layer<Scalar>(in_dim, width, init);
    auto head = glorot_head<Scalar>(width, arch.output_activation, init);
    Mlp<Scalar> subnet({std::move(layer)}, std::move(head), arch.hidden_activation);

    auto result = train_stage(std::move(subnet), stage_train, stage_val, hp, {k, 0});
    result.report.head_discarded = k < arch.depth();
    frozen.push_back(result.model.layer(0));
    sizes.push_back(param_count_stage(arch, k));

    if (k < arch.depth()) {
      stage_train = map_through(stage_train, {frozen.back()}, arch.hidden_activation);
      stage_val = map_through(stage_val, {frozen.back()}, arch.hidden_activation);
    }
    stages.push_back(std::move(result.report));
  }

  Mlp<Scalar> model(frozen, stages.back().head, arch.hidden_activation);
  return {Strategy::sequential, std::move(stages), std::move(model), std::move(sizes)};
}

}  // namespace seqtrain

#endif  // SEQTRAIN_TRAIN_HPP_

#ifndef SEQTRAIN_DATASET_HPP_
#define SEQTRAIN_DATASET_HPP_

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "seqtrain/network.hpp"

namespace seqtrain {

/// Where a dataset's inputs came from. `stage` is set for activation
/// datasets: the inputs are the outputs of hidden layers 1..stage.
struct Provenance {
  enum class Kind { raw, standardized, activations };
  Kind kind = Kind::raw;
  std::size_t stage = 0;

  bool operator==(const Provenance&) const = default;
};

inline std::string to_string(const Provenance& p) {
  switch (p.kind) {
    case Provenance::Kind::raw: return "raw";
    case Provenance::Kind::standardized: return "standardized";
    case Provenance::Kind::activations: return "activations(" + std::to_string(p.stage) + ")";
  }
  return "?";
}

/// Paired inputs and scalar targets. One sample per row of `inputs`.
template <typename Scalar>
struct Dataset {
  Matrix<Scalar> inputs;   // n x input_dim
  Vector<Scalar> targets;  // n
  Provenance provenance{};

  Dataset() = default;
  Dataset(Matrix<Scalar> in, Vector<Scalar> tgt, Provenance prov = {})
      : inputs(std::move(in)), targets(std::move(tgt)), provenance(prov) {
    require(inputs.rows() == targets.size(),
            "dataset: " + std::to_string(inputs.rows()) + " input rows but " + std::to_string(targets.size()) +
                " targets");
  }

  Index size() const { return inputs.rows(); }
  Index input_dim() const { return inputs.cols(); }
  bool empty() const { return inputs.rows() == 0; }

  bool operator==(const Dataset& other) const {
    return inputs.rows() == other.inputs.rows() && inputs.cols() == other.inputs.cols() &&
           inputs == other.inputs && targets == other.targets && provenance == other.provenance;
  }
};

using Datasetd = Dataset<double>;

/// Seeded permutation followed by a partition into ceil(n * (1 - f)) training
/// samples and the remainder for validation. Both parts keep permuted order.
template <typename Scalar>
std::pair<Dataset<Scalar>, Dataset<Scalar>> split(const Dataset<Scalar>& ds, double val_fraction,
                                                  std::uint64_t seed) {
  require(val_fraction > 0.0 && val_fraction < 1.0, "split: validation fraction must lie in (0, 1)");
  const Index n = ds.size();
  const auto n_train = static_cast<Index>(std::ceil(static_cast<double>(n) * (1.0 - val_fraction)));
  require(n_train >= 1 && n_train < n,
          "split: fraction " + std::to_string(val_fraction) + " on " + std::to_string(n) +
              " samples leaves an empty partition");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  rng.shuffle(order);

  const std::vector<Index> train_idx(order.begin(), order.begin() + n_train);
  const std::vector<Index> val_idx(order.begin() + n_train, order.end());
  return {Dataset<Scalar>(ds.inputs(train_idx, Eigen::all), ds.targets(train_idx), ds.provenance),
          Dataset<Scalar>(ds.inputs(val_idx, Eigen::all), ds.targets(val_idx), ds.provenance)};
}

/// Per-feature training statistics (population std). Features whose std is
/// not positive are flagged constant and pass through untouched.
template <typename Scalar>
struct StandardizeStats {
  Vector<Scalar> mean;
  Vector<Scalar> stddev;
  std::vector<bool> constant;
};

template <typename Scalar>
StandardizeStats<Scalar> standardize_fit(const Dataset<Scalar>& train) {
  require(!train.empty(), "standardize_fit: empty training set");
  const Scalar n = static_cast<Scalar>(train.size());
  StandardizeStats<Scalar> stats;
  stats.mean = train.inputs.colwise().sum().transpose() / n;
  const Matrix<Scalar> centered = train.inputs.rowwise() - stats.mean.transpose();
  stats.stddev = (centered.array().square().colwise().sum().transpose() / n).sqrt().matrix();
  stats.constant.resize(static_cast<std::size_t>(train.input_dim()));
  for (Index j = 0; j < train.input_dim(); ++j)
    stats.constant[static_cast<std::size_t>(j)] = !(stats.stddev(j) > Scalar(0));
  return stats;
}

template <typename Scalar>
Dataset<Scalar> standardize_apply(const Dataset<Scalar>& ds, const StandardizeStats<Scalar>& stats) {
  require(ds.input_dim() == stats.mean.size(),
          "standardize_apply: dataset has " + std::to_string(ds.input_dim()) + " features, stats have " +
              std::to_string(stats.mean.size()));
  Matrix<Scalar> out = ds.inputs;
  for (Index j = 0; j < out.cols(); ++j) {
    if (stats.constant[static_cast<std::size_t>(j)]) continue;
    out.col(j) = ((out.col(j).array() - stats.mean(j)) / stats.stddev(j)).matrix();
  }
  return Dataset<Scalar>(std::move(out), ds.targets, {Provenance::Kind::standardized, 0});
}

/// Replaces every input with the activations of a frozen layer prefix.
/// Provenance counts all layers applied so far, including earlier mappings.
template <typename Scalar>
Dataset<Scalar> map_through(const Dataset<Scalar>& ds, const std::vector<LayerParams<Scalar>>& prefix,
                            Activation act) {
  if (prefix.empty()) return ds;
  Index dim = ds.input_dim();
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    require(prefix[k].in_dim() == dim, "map_through: layer " + std::to_string(k + 1) + " expects input dim " +
                                           std::to_string(prefix[k].in_dim()) + ", got " + std::to_string(dim));
    dim = prefix[k].out_dim();
  }
  Matrix<Scalar> out(ds.size(), dim);
  for (Index i = 0; i < ds.size(); ++i) {
    Vector<Scalar> a = ds.inputs.row(i).transpose();
    for (const auto& layer : prefix) a = layer_forward(layer, act, a);
    out.row(i) = a.transpose();
  }
  const std::size_t applied =
      (ds.provenance.kind == Provenance::Kind::activations ? ds.provenance.stage : 0) + prefix.size();
  return Dataset<Scalar>(std::move(out), ds.targets, {Provenance::Kind::activations, applied});
}

}  // namespace seqtrain

#endif  // SEQTRAIN_DATASET_HPP_

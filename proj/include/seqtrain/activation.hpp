#ifndef SEQTRAIN_ACTIVATION_HPP_
#define SEQTRAIN_ACTIVATION_HPP_

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>

#include <Eigen/Core>

namespace seqtrain {

enum class Activation { relu, identity, tanh };

inline std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

inline std::optional<Activation> parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  if (name == "tanh") return Activation::tanh;
  return std::nullopt;
}

template <typename Scalar>
  requires std::is_floating_point_v<Scalar>
Scalar activate(Activation act, Scalar x) {
  switch (act) {
    case Activation::relu: return x > Scalar(0) ? x : Scalar(0);
    case Activation::identity: return x;
    case Activation::tanh: return std::tanh(x);
  }
  return x;
}

/// Derivative evaluated at the pre-activation value. relu'(0) is taken as 0.
template <typename Scalar>
  requires std::is_floating_point_v<Scalar>
Scalar activate_derivative(Activation act, Scalar x) {
  switch (act) {
    case Activation::relu: return x > Scalar(0) ? Scalar(1) : Scalar(0);
    case Activation::identity: return Scalar(1);
    case Activation::tanh: {
      const Scalar t = std::tanh(x);
      return Scalar(1) - t * t;
    }
  }
  return Scalar(1);
}

/// Elementwise activation of a dense expression.
template <typename Derived>
auto activate(Activation act, const Eigen::MatrixBase<Derived>& pre) {
  using Scalar = typename Derived::Scalar;
  return pre.unaryExpr([act](Scalar x) { return activate(act, x); }).eval();
}

template <typename Derived>
auto activate_derivative(Activation act, const Eigen::MatrixBase<Derived>& pre) {
  using Scalar = typename Derived::Scalar;
  return pre.unaryExpr([act](Scalar x) { return activate_derivative(act, x); }).eval();
}

}  // namespace seqtrain

#endif  // SEQTRAIN_ACTIVATION_HPP_

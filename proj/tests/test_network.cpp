#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "seqtrain/network.hpp"
#include "seqtrain/serialize.hpp"

namespace seqtrain {
namespace {

using Vec = Vector<double>;
using Mat = Matrix<double>;

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Hand-written matrix-vector evaluation, independent of Eigen products.
std::vector<double> hand_layer(const LayerParamsd& layer, Activation act, const std::vector<double>& in) {
  std::vector<double> out(static_cast<std::size_t>(layer.out_dim()));
  for (Index r = 0; r < layer.out_dim(); ++r) {
    double s = layer.bias(r);
    for (Index c = 0; c < layer.in_dim(); ++c) s += layer.weights(r, c) * in[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = act == Activation::relu ? std::max(s, 0.0)
                                       : act == Activation::tanh ? std::tanh(s)
                                                                 : s;
  }
  return out;
}

Mlpd random_net(const Architecture& arch, std::uint64_t seed) {
  Rng rng(seed);
  auto net = glorot_mlp<double>(arch, rng);
  for (auto& layer : net.mutable_layers())
    for (Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-0.5, 0.5);
  net.mutable_head().bias = rng.uniform(-0.5, 0.5);
  return net;
}

Architecture arch_of(Index in, std::vector<Index> widths, Activation hidden = Activation::relu,
                     Activation out = Activation::identity) {
  return Architecture{in, std::move(widths), hidden, out};
}

TEST(Activation, Invariants) {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-50, 50);
    EXPECT_GE(activate(Activation::relu, x), 0.0);
    EXPECT_EQ(activate(Activation::relu, x), x >= 0 ? x : 0.0);
    EXPECT_EQ(activate(Activation::identity, x), x);
    const double t = activate(Activation::tanh, rng.uniform(-5, 5));
    EXPECT_GT(t, -1.0);
    EXPECT_LT(t, 1.0);
  }
  EXPECT_EQ(activate_derivative(Activation::relu, 0.0), 0.0);
  EXPECT_EQ(activate_derivative(Activation::relu, 1e-300), 1.0);
  EXPECT_EQ(parse_activation("tanh"), Activation::tanh);
  EXPECT_FALSE(parse_activation("sigmoid").has_value());
}

TEST(LayerForward, ZeroParametersGiveZero) {
  const auto layer = LayerParamsd::zeros(2, 3);
  const Vec out = layer_forward(layer, Activation::relu, vec({1, -2}));
  EXPECT_EQ(out, Vec::Zero(3));
}

TEST(LayerForward, IdentityWeights) {
  const LayerParamsd layer{Mat::Identity(2, 2), Vec::Zero(2)};
  EXPECT_EQ(layer_forward(layer, Activation::identity, vec({3, -4})), vec({3, -4}));
}

TEST(LayerForward, HandEvaluatedRelu) {
  Mat w(2, 2);
  w << 1, 1, 1, -1;
  const LayerParamsd layer{w, vec({-1, 0})};
  // [2+1-1, 2-1+0] = [2, 1]
  EXPECT_EQ(layer_forward(layer, Activation::relu, vec({2, 1})), vec({2, 1}));
}

TEST(LayerForward, DimensionMismatchNamesBothDims) {
  const auto layer = LayerParamsd::zeros(2, 3);
  try {
    layer_forward(layer, Activation::relu, vec({1, 2, 3, 4, 5}));
    FAIL() << "expected ContractViolation";
  } catch (const ContractViolation& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('5'), std::string::npos) << msg;
    EXPECT_NE(msg.find('2'), std::string::npos) << msg;
  }
}

TEST(HeadForward, Examples) {
  EXPECT_EQ(head_forward(OutputHeadd::zeros(3), vec({4, -2, 9})), 0.0);
  EXPECT_EQ(head_forward(OutputHeadd{vec({1, 2, 3}), 1.0, Activation::identity}, vec({1, 1, 1})), 7.0);
  EXPECT_EQ(head_forward(OutputHeadd{vec({1}), -5.0, Activation::relu}, vec({2})), 0.0);
  EXPECT_THROW(head_forward(OutputHeadd::zeros(3), vec({1, 2})), ContractViolation);
}

TEST(Mlp, ConstructionRejectsBrokenChains) {
  std::vector<LayerParamsd> layers{LayerParamsd::zeros(2, 3), LayerParamsd::zeros(4, 3)};
  EXPECT_THROW(Mlpd(layers, OutputHeadd::zeros(3), Activation::relu), ContractViolation);

  layers = {LayerParamsd::zeros(2, 3)};
  EXPECT_THROW(Mlpd(layers, OutputHeadd::zeros(2), Activation::relu), ContractViolation);

  layers[0].bias = Vec::Zero(2);
  EXPECT_THROW(Mlpd(layers, OutputHeadd::zeros(3), Activation::relu), ContractViolation);

  layers = {LayerParamsd::zeros(2, 3)};
  layers[0].weights(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Mlpd(layers, OutputHeadd::zeros(3), Activation::relu), ContractViolation);

  EXPECT_THROW(Mlpd({}, OutputHeadd::zeros(3), Activation::relu), ContractViolation);
}

TEST(MlpForward, ZeroNetworkIsZeroEverywhere) {
  Rng rng(3);
  for (Activation out : {Activation::relu, Activation::identity}) {
    Mlpd net({LayerParamsd::zeros(2, 4), LayerParamsd::zeros(4, 4)}, OutputHeadd::zeros(4, out), Activation::relu);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(mlp_forward(net, vec({rng.uniform(-9, 9), rng.uniform(-9, 9)})), 0.0);
  }
}

TEST(MlpForward, IdentityChainSumsInputs) {
  Mlpd net({LayerParamsd{Mat::Identity(3, 3), Vec::Zero(3)}}, OutputHeadd{Vec::Ones(3), 0.0, Activation::identity},
           Activation::identity);
  EXPECT_EQ(mlp_forward(net, vec({1.5, -2, 4})), 3.5);
}

TEST(MlpForward, MatchesHandChainedEvaluation) {
  Rng rng(11);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto arch = arch_of(3, {4, 2, 5}, seed % 2 ? Activation::tanh : Activation::relu);
    const auto net = random_net(arch, seed);
    std::vector<double> x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    auto a = x;
    for (const auto& layer : net.layers()) a = hand_layer(layer, net.hidden_activation(), a);
    double z = net.head().bias;
    for (std::size_t i = 0; i < a.size(); ++i) z += net.head().weights(static_cast<Index>(i)) * a[i];
    EXPECT_NEAR(mlp_forward(net, Eigen::Map<const Vec>(x.data(), 3)), z, 1e-12);

    // hidden_activations(depth = 2) against two hand-chained layers.
    auto two = hand_layer(net.layer(1), net.hidden_activation(), hand_layer(net.layer(0), net.hidden_activation(), x));
    const Vec h2 = hidden_activations(net, Eigen::Map<const Vec>(x.data(), 3), 2);
    for (std::size_t i = 0; i < two.size(); ++i) EXPECT_NEAR(h2(static_cast<Index>(i)), two[i], 1e-12);
  }
}

TEST(HiddenActivations, FullDepthComposesWithHead) {
  const auto net = random_net(arch_of(2, {3, 3, 3}), 5);
  const Vec u = vec({0.3, -1.7});
  EXPECT_EQ(head_forward(net.head(), hidden_activations(net, u, net.depth())), mlp_forward(net, u));
}

TEST(HiddenActivations, ZeroFirstLayerGivesZeros) {
  auto net = random_net(arch_of(2, {3, 3}), 5);
  net.mutable_layers()[0] = LayerParamsd::zeros(2, 3);
  EXPECT_EQ(hidden_activations(net, vec({4, -1}), 1), Vec::Zero(3));
}

TEST(HiddenActivations, DepthOutOfRange) {
  const auto net = random_net(arch_of(2, {3, 3}), 5);
  EXPECT_THROW(hidden_activations(net, vec({1, 1}), 0), ContractViolation);
  EXPECT_THROW(hidden_activations(net, vec({1, 1}), 3), ContractViolation);
}

TEST(HiddenActivations, ReluOutputsAreNonnegative) {
  Rng rng(21);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto net = random_net(arch_of(2, {5, 4, 3}), seed);
    const Vec u = vec({rng.uniform(-5, 5), rng.uniform(-5, 5)});
    for (std::size_t d = 1; d <= net.depth(); ++d) EXPECT_GE(hidden_activations(net, u, d).minCoeff(), 0.0);
  }
}

TEST(MlpForward, PureFunction) {
  const auto net = random_net(arch_of(2, {16, 16}), 9);
  const Vec u = vec({0.25, 1.5});
  const double first = mlp_forward(net, u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(mlp_forward(net, u), first);
}

TEST(Forward, IndependentOfInputLayout) {
  const auto net = random_net(arch_of(16, {16}), 4);
  Rng rng(12);
  Mat rows(7, 16);
  for (Index i = 0; i < rows.size(); ++i) rows(i) = rng.uniform(-1.0, 1.0);
  for (Index i = 0; i < rows.rows(); ++i) {
    const Vec copy = rows.row(i).transpose();
    const double strided = head_forward(net.head(), layer_forward(net.layer(0), Activation::relu, rows.row(i).transpose()));
    const double packed = head_forward(net.head(), layer_forward(net.layer(0), Activation::relu, copy));
    EXPECT_EQ(std::memcmp(&strided, &packed, sizeof strided), 0);
    const Vec h = layer_forward(net.layer(0), Activation::relu, copy);
    Mat hs(3, 16);
    hs.row(1) = h.transpose();
    const double a = head_forward(net.head(), hs.row(1).transpose()), b = head_forward(net.head(), h);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
  }
}

// Counts parameters by enumerating every scalar of a constructed network.
Index enumerate_params(const Architecture& arch) {
  const auto net = random_net(arch, 1);
  Index n = 0;
  for (const auto& layer : net.layers()) {
    for (Index r = 0; r < layer.weights.rows(); ++r)
      for (Index c = 0; c < layer.weights.cols(); ++c) ++n;
    for (Index r = 0; r < layer.bias.size(); ++r) ++n;
  }
  return n + net.head().weights.size() + 1;
}

TEST(ParamCount, ThreeLayerNetwork) {
  const auto arch = arch_of(2, {3, 3, 3});
  EXPECT_EQ(param_count_full(arch), 37);
  EXPECT_EQ(param_count_stage(arch, 1), 13);
  EXPECT_EQ(param_count_stage(arch, 2), 16);
  EXPECT_EQ(param_count_stage(arch, 3), 16);
}

TEST(ParamCount, SmallestNetwork) { EXPECT_EQ(param_count_full(arch_of(1, {1})), 4); }

TEST(ParamCount, ExperimentNetwork) {
  const auto arch = arch_of(2, {16, 16, 16, 16, 16});
  EXPECT_EQ(param_count_full(arch), enumerate_params(arch));
  EXPECT_EQ(param_count_full(arch), 1153);
  // Stage k: one-layer network on width_{k-1} inputs.
  for (std::size_t k = 1; k <= 5; ++k)
    EXPECT_EQ(param_count_stage(arch, k), enumerate_params(arch_of(arch.stage_input_dim(k), {16})));
  EXPECT_EQ(param_count_stage(arch, 1), 65);
  EXPECT_EQ(param_count_stage(arch, 5), 289);
}

TEST(ParamCount, StageOutOfRange) {
  const auto arch = arch_of(2, {3, 3, 3});
  EXPECT_THROW(param_count_stage(arch, 0), ContractViolation);
  EXPECT_THROW(param_count_stage(arch, 4), ContractViolation);
}

TEST(ParamCount, DiscardedHeadsIdentity) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    Architecture arch = arch_of(1 + static_cast<Index>(rng.below(6)), {});
    const auto depth = 1 + rng.below(6);
    for (std::uint64_t k = 0; k < depth; ++k) arch.hidden_widths.push_back(1 + static_cast<Index>(rng.below(20)));
    Index stages = 0, heads = 0;
    for (std::size_t k = 1; k <= arch.depth(); ++k) {
      stages += param_count_stage(arch, k);
      if (k < arch.depth()) heads += arch.hidden_widths[k - 1] + 1;
    }
    EXPECT_EQ(param_count_full(arch), stages - heads);
    EXPECT_EQ(param_count_full(arch), enumerate_params(arch));
  }
}

// --- serialization --------------------------------------------------------

double random_finite(Rng& rng) {
  double x;
  do {
    const std::uint64_t bits = rng.next();
    std::memcpy(&x, &bits, sizeof x);
  } while (!std::isfinite(x));
  return x;
}

TEST(Serialize, RoundTripIsBitExact) {
  Rng rng(2024);
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Architecture arch = arch_of(1 + static_cast<Index>(rng.below(4)), {});
    for (std::uint64_t k = 0, d = 1 + rng.below(3); k < d; ++k)
      arch.hidden_widths.push_back(1 + static_cast<Index>(rng.below(5)));
    arch.hidden_activation = seed % 3 == 0 ? Activation::tanh : Activation::relu;
    arch.output_activation = seed % 2 ? Activation::identity : Activation::relu;
    auto net = random_net(arch, seed);
    // Mix in arbitrary finite bit patterns (subnormals, huge values, -0).
    for (auto& layer : net.mutable_layers()) layer.weights(0, 0) = random_finite(rng);
    net.mutable_head().bias = seed == 0 ? -0.0 : random_finite(rng);

    std::stringstream buf;
    write_model(buf, net);
    const auto back = read_model(buf);
    EXPECT_TRUE(bit_equal(net, back));
    EXPECT_EQ(back.architecture(), net.architecture());
    EXPECT_EQ(std::signbit(back.head().bias), std::signbit(net.head().bias));
  }
}

TEST(Serialize, DocumentedLayout) {
  Mat w(1, 2);
  w << 0.5, -0.25;
  Mlpd net({LayerParamsd{w, vec({0.125})}}, OutputHeadd{vec({2}), -1, Activation::identity}, Activation::relu);
  std::stringstream buf;
  write_model(buf, net);
  EXPECT_EQ(buf.str(),
            "seqtrain-mlp 1\n"
            "input_dim 2\n"
            "hidden_widths 1\n"
            "hidden_activation relu\n"
            "output_activation identity\n"
            "layer 1 1 2\n"
            "0.5 -0.25\n"
            "bias 0.125\n"
            "head 1\n"
            "2\n"
            "bias -1\n"
            "end\n");
}

TEST(Serialize, MalformedInputReportsLine) {
  std::stringstream buf;
  buf << "seqtrain-mlp 1\ninput_dim 2\nhidden_widths 1\nhidden_activation relu\noutput_activation identity\n"
         "layer 1 1 2\n0.5 oops\nbias 0\nhead 1\n1\nbias 0\nend\n";
  try {
    read_model(buf);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7u);
  }
  std::stringstream truncated("seqtrain-mlp 1\ninput_dim 2\n");
  EXPECT_THROW(read_model(truncated), ParseError);
  std::stringstream wrong_magic("other 1\n");
  EXPECT_THROW(read_model(wrong_magic), ParseError);
}

}  // namespace
}  // namespace seqtrain

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "seatq/approximator.hpp"
#include "seatq/rng.hpp"

namespace seatq {
namespace {

// Plain-loop evaluation of the same architecture, independent of Eigen.
std::vector<double> reference_forward(const QNetwork& net, std::vector<double> x) {
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    std::vector<double> y(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double acc = layers[l].bias(r);
      for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * x[static_cast<std::size_t>(c)];
      y[static_cast<std::size_t>(r)] = (l + 1 < layers.size() && acc < 0.0) ? 0.0 : acc;
    }
    x = std::move(y);
  }
  return x;
}

QNetwork randomized(std::uint64_t seed) {
  QNetwork net = init_network(seed);
  Engine rng(seed ^ 0xabcdef);
  for (auto& l : net.layers())
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * standard_normal(rng);
  return net;
}

Features random_features(Engine& rng) {
  Features f{};
  for (int i = 0; i < 5; ++i) f[static_cast<std::size_t>(i)] = uniform_unit(rng);
  f[5] = 1.0;
  return f;
}

TrainingBatch random_batch(Engine& rng, int size) {
  TrainingBatch b;
  b.inputs.resize(6, size);
  b.targets.resize(size);
  for (int j = 0; j < size; ++j) {
    const auto f = random_features(rng);
    for (int r = 0; r < 6; ++r) b.inputs(r, j) = f[static_cast<std::size_t>(r)];
    b.actions.push_back(static_cast<int>(uniform_index(rng, 2)));
    b.targets(j) = standard_normal(rng);
  }
  return b;
}

TEST(InitNetwork, DeterministicShapesAndScale) {
  const QNetwork a = init_network(17);
  const QNetwork b = init_network(17);
  ASSERT_EQ(a.dims(), (std::vector<int>{6, 128, 128, 2}));
  for (std::size_t l = 0; l < a.layers().size(); ++l) {
    EXPECT_EQ(a.layers()[l].weights, b.layers()[l].weights);
    EXPECT_TRUE(a.layers()[l].bias.isZero(0.0));
    EXPECT_TRUE(a.accumulators()[l].weights.isZero(0.0));
  }
  const auto& hidden = a.layers()[1].weights;
  ASSERT_EQ(hidden.rows(), 128);
  ASSERT_EQ(hidden.cols(), 128);
  const double mean = hidden.mean();
  const double sd = std::sqrt((hidden.array() - mean).square().sum() / (hidden.size() - 1));
  EXPECT_NEAR(sd, std::sqrt(2.0 / 128.0), 0.1 * std::sqrt(2.0 / 128.0));
  EXPECT_NE(init_network(18).layers()[0].weights, a.layers()[0].weights);
}

TEST(Forward, ZeroNetworkGivesZero) {
  QNetwork net;
  const auto q = forward(net, {0.3, 0.1, 0.2, 0.9, 0.5, 1.0});
  EXPECT_EQ(q[0], 0.0);
  EXPECT_EQ(q[1], 0.0);
}

TEST(Forward, OutputLayerScalesLinearly) {
  QNetwork net = randomized(3);
  const Features x{0.3, 0.1, 0.2, 0.9, 0.5, 1.0};
  const auto q = forward(net, x);
  net.layers().back().weights *= 2.5;
  net.layers().back().bias *= 2.5;
  const auto scaled = forward(net, x);
  EXPECT_NEAR(scaled[0], 2.5 * q[0], 1e-12 * (1.0 + std::abs(q[0])));
  EXPECT_NEAR(scaled[1], 2.5 * q[1], 1e-12 * (1.0 + std::abs(q[1])));
}

TEST(Forward, MatchesPlainLoopReference) {
  Engine rng(4);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const QNetwork net = randomized(100 + s);
    const Features x = random_features(rng);
    const auto q = forward(net, x);
    const auto ref = reference_forward(net, std::vector<double>(x.begin(), x.end()));
    for (int a = 0; a < 2; ++a)
      EXPECT_LE(std::abs(q[static_cast<std::size_t>(a)] - ref[static_cast<std::size_t>(a)]),
                1e-10 * std::abs(ref[static_cast<std::size_t>(a)]));
  }
}

TEST(Forward, BatchAgreesWithSingleAndIsPure) {
  Engine rng(5);
  const QNetwork net = randomized(6);
  const TrainingBatch b = random_batch(rng, 7);
  const Eigen::MatrixXd q = net.forward_batch(b.inputs);
  for (Eigen::Index j = 0; j < 7; ++j) {
    const Eigen::VectorXd single = net.forward(b.inputs.col(j));
    EXPECT_NEAR((single - q.col(j)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    EXPECT_EQ(net.forward(b.inputs.col(j)), single);
  }
}

TEST(Forward, RejectsNonFiniteInput) {
  QNetwork net = randomized(2);
  EXPECT_THROW(forward(net, {std::nan(""), 0, 0, 0, 0, 1}), std::invalid_argument);
  EXPECT_THROW(forward(net, {INFINITY, 0, 0, 0, 0, 1}), std::invalid_argument);
}

TEST(TdGradients, ZeroAtMatchedTargets) {
  Engine rng(9);
  const QNetwork net = randomized(9);
  TrainingBatch b = random_batch(rng, 8);
  const Eigen::MatrixXd q = net.forward_batch(b.inputs);
  for (Eigen::Index j = 0; j < 8; ++j) b.targets(j) = q(b.actions[static_cast<std::size_t>(j)], j);
  const auto lg = td_gradients(net, b);
  EXPECT_EQ(lg.loss, 0.0);
  for (const auto& g : lg.gradients) {
    EXPECT_TRUE(g.weights.isZero(0.0));
    EXPECT_TRUE(g.bias.isZero(0.0));
  }
}

TEST(TdGradients, LinearNetworkMatchesHandDerivative) {
  QNetwork net(std::vector<int>{6, 2});
  Engine rng(10);
  for (Eigen::Index i = 0; i < net.layers()[0].weights.size(); ++i)
    net.layers()[0].weights.data()[i] = standard_normal(rng);
  TrainingBatch b;
  b.inputs.resize(6, 1);
  b.inputs << 0.2, 0.4, 0.6, 0.8, 0.5, 1.0;
  b.actions = {1};
  b.targets.resize(1);
  b.targets << 0.75;
  const double q = net.forward(b.inputs.col(0))(1);
  const auto lg = td_gradients(net, b);
  EXPECT_NEAR(lg.loss, (q - 0.75) * (q - 0.75), 1e-15);
  for (int c = 0; c < 6; ++c) {
    EXPECT_NEAR(lg.gradients[0].weights(1, c), 2.0 * (q - 0.75) * b.inputs(c, 0), 1e-14);
    EXPECT_EQ(lg.gradients[0].weights(0, c), 0.0);
  }
  EXPECT_NEAR(lg.gradients[0].bias(1), 2.0 * (q - 0.75), 1e-14);
}

TEST(TdGradients, LossNonNegativeAndZeroOnlyAtTargets) {
  Engine rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const QNetwork net = randomized(200 + static_cast<std::uint64_t>(trial));
    const TrainingBatch b = random_batch(rng, 4);
    const auto lg = td_gradients(net, b);
    EXPECT_GT(lg.loss, 0.0);
  }
}

TEST(GradientCheck, HealthyBackpropPasses) {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto r = gradient_check(seed);
    EXPECT_GE(r.parameters_checked, 1000u);
    EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(GradientCheck, SignFlipIsDetected) {
  EXPECT_GT(gradient_check(1, GradientFault{1}).max_relative_error, 1e-1);
  EXPECT_GT(gradient_check(1, GradientFault{2}).max_relative_error, 1e-1);
}

TEST(GradientCheck, Deterministic) {
  EXPECT_EQ(gradient_check(7).max_relative_error, gradient_check(7).max_relative_error);
}

TEST(ApplyUpdate, ZeroGradientLeavesParameters) {
  QNetwork net = randomized(30);
  const QNetwork before = net;
  std::vector<DenseLayer> zero;
  for (const auto& l : net.layers())
    zero.push_back({Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                    Eigen::VectorXd::Zero(l.bias.size())});
  apply_update(net, zero, 1e-3);
  for (std::size_t l = 0; l < net.layers().size(); ++l)
    EXPECT_EQ(net.layers()[l].weights, before.layers()[l].weights);
}

TEST(ApplyUpdate, SingleParameterFirstStep) {
  QNetwork net(std::vector<int>{1, 1});
  net.layers()[0].weights(0, 0) = 0.5;
  std::vector<DenseLayer> g{{Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1)}};
  apply_update(net, g, 1e-3);
  const double expected = 0.5 - 1e-3 * 1.0 / (std::sqrt(0.05) + 1e-8);
  EXPECT_NEAR(net.layers()[0].weights(0, 0), expected, 1e-15);
  EXPECT_NEAR(net.accumulators()[0].weights(0, 0), 0.05, 1e-15);
}

TEST(ApplyUpdate, ConstantGradientStepApproachesBaseRate) {
  QNetwork net(std::vector<int>{1, 1});
  const double g = -3.0;
  std::vector<DenseLayer> grad{{Eigen::MatrixXd::Constant(1, 1, g), Eigen::VectorXd::Zero(1)}};
  double prev = 0.0, step = 0.0, prev_acc = 0.0;
  for (int i = 0; i < 400; ++i) {
    apply_update(net, grad, 1e-3);
    const double now = net.layers()[0].weights(0, 0);
    step = now - prev;
    prev = now;
    const double acc = net.accumulators()[0].weights(0, 0);
    EXPECT_GE(acc, prev_acc);
    prev_acc = acc;
  }
  EXPECT_NEAR(step, 1e-3, 1e-9);  // -rate * sign(g)
}

TEST(ApplyUpdate, RejectsNonFiniteGradients) {
  QNetwork net(std::vector<int>{1, 1});
  std::vector<DenseLayer> g{{Eigen::MatrixXd::Constant(1, 1, NAN), Eigen::VectorXd::Zero(1)}};
  EXPECT_THROW(apply_update(net, g, 1e-3), std::invalid_argument);
  EXPECT_EQ(net.layers()[0].weights(0, 0), 0.0);
}

TEST(ApplyUpdate, StaysFiniteOnRandomTraining) {
  Engine rng(40);
  QNetwork net = randomized(40);
  for (int i = 0; i < 200; ++i) {
    TrainingBatch b = random_batch(rng, 16);
    b.targets *= 1e3;
    apply_update(net, td_gradients(net, b).gradients, 1e-2);
  }
  for (const auto& l : net.layers()) {
    EXPECT_TRUE(l.weights.allFinite());
    EXPECT_TRUE(l.bias.allFinite());
  }
}

TEST(Weights, SaveLoadRoundTripIsBitExact) {
  const QNetwork net = randomized(50);
  std::stringstream ss;
  save_weights(net, ss);
  const QNetwork loaded = load_weights(ss);
  Engine rng(51);
  for (int i = 0; i < 20; ++i) {
    const auto f = random_features(rng);
    EXPECT_EQ(forward(net, f), forward(loaded, f));
  }
}

TEST(Weights, TruncatedFileRejected) {
  std::stringstream ss;
  save_weights(randomized(52), ss);
  const std::string full = ss.str();
  std::istringstream cut(full.substr(0, full.size() / 2));
  EXPECT_THROW(load_weights(cut), std::invalid_argument);
}

TEST(Weights, HeaderShapeValidation) {
  std::stringstream ok;
  save_weights(QNetwork{}, ok);
  EXPECT_EQ(ok.str().substr(0, ok.str().find('\n')), "layers 6 128 128 2");
  EXPECT_NO_THROW(load_weights(ok));

  std::stringstream small;
  save_weights(QNetwork(std::vector<int>{6, 128, 2}), small);
  EXPECT_THROW(load_weights(small), std::invalid_argument);
  small.clear();
  small.seekg(0);
  EXPECT_NO_THROW(load_weights(small, std::nullopt));
}

TEST(Weights, MalformedNumberRejected) {
  std::istringstream in("layers 1 1\nW 1 1\nabc\nb 1\n0\n");
  EXPECT_THROW(load_weights(in, std::nullopt), std::invalid_argument);
}

}  // namespace
}  // namespace seatq

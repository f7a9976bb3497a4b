#include "seatq/approximator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "seatq/numeric_text.hpp"
#include "seatq/rng.hpp"

namespace seatq {

QNetwork::QNetwork(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw std::invalid_argument("network needs >= 2 layers");
  for (int d : dims_)
    if (d < 1) throw std::invalid_argument("layer sizes must be positive");
  for (std::size_t i = 0; i + 1 < dims_.size(); ++i) {
    DenseLayer layer{Eigen::MatrixXd::Zero(dims_[i + 1], dims_[i]),
                     Eigen::VectorXd::Zero(dims_[i + 1])};
    layers_.push_back(layer);
    accum_.push_back(layer);
  }
}

std::size_t QNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_)
    n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Eigen::VectorXd QNetwork::forward(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != input_size())
    throw std::invalid_argument("input has wrong size");
  if (!x.allFinite()) throw std::invalid_argument("non-finite network input");
  Eigen::VectorXd h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::VectorXd z = layers_[i].weights * h + layers_[i].bias;
    h = (i + 1 < layers_.size()) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  return h;
}

Eigen::MatrixXd QNetwork::forward_batch(
    const Eigen::Ref<const Eigen::MatrixXd>& inputs) const {
  if (inputs.rows() != input_size())
    throw std::invalid_argument("input has wrong size");
  Eigen::MatrixXd h = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z = layers_[i].weights * h;
    z.colwise() += layers_[i].bias;
    if (i + 1 < layers_.size()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

QNetwork init_network(std::uint64_t seed, const std::vector<int>& dims) {
  QNetwork net(dims);
  Engine rng(seed);
  for (auto& layer : net.layers()) {
    const double scale = std::sqrt(2.0 / static_cast<double>(layer.weights.cols()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        layer.weights(r, c) = scale * standard_normal(rng);
  }
  return net;
}

std::array<double, 2> forward(const QNetwork& net, const Features& features) {
  if (net.input_size() != static_cast<int>(features.size()) ||
      net.output_size() != 2)
    throw std::invalid_argument("network is not a 6-input, 2-action network");
  const Eigen::VectorXd q =
      net.forward(Eigen::Map<const Eigen::VectorXd>(features.data(), 6));
  return {q(0), q(1)};
}

LossGradients td_gradients(const QNetwork& net, const TrainingBatch& batch) {
  const auto& layers = net.layers();
  const Eigen::Index b = batch.inputs.cols();
  if (b < 1 || static_cast<Eigen::Index>(batch.actions.size()) != b ||
      batch.targets.size() != b || batch.inputs.rows() != net.input_size())
    throw std::invalid_argument("malformed training batch");

  // Forward pass keeping each layer's activations.
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(batch.inputs);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].weights * acts.back();
    z.colwise() += layers[i].bias;
    if (i + 1 < layers.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }

  const Eigen::MatrixXd& q = acts.back();
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), b);
  LossGradients out;
  for (Eigen::Index j = 0; j < b; ++j) {
    const int a = batch.actions[static_cast<std::size_t>(j)];
    if (a < 0 || a >= q.rows()) throw std::invalid_argument("action out of range");
    const double err = q(a, j) - batch.targets(j);
    out.loss += err * err;
    delta(a, j) = 2.0 * err / static_cast<double>(b);
  }
  out.loss /= static_cast<double>(b);

  out.gradients.resize(layers.size());
  for (std::size_t i = layers.size(); i-- > 0;) {
    out.gradients[i].weights = delta * acts[i].transpose();
    out.gradients[i].bias = delta.rowwise().sum();
    if (i > 0) {
      Eigen::MatrixXd back = layers[i].weights.transpose() * delta;
      // Rectifier derivative: pass only where the activation is positive.
      delta = (acts[i].array() > 0.0).select(back, 0.0);
    }
  }
  return out;
}

void apply_update(QNetwork& net, const std::vector<DenseLayer>& gradients,
                  double base_rate, const RmsPropConfig& rms) {
  if (gradients.size() != net.layers_.size())
    throw std::invalid_argument("gradient layer count mismatch");
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    const auto& g = gradients[i];
    const auto& p = net.layers_[i];
    if (g.weights.rows() != p.weights.rows() || g.weights.cols() != p.weights.cols() ||
        g.bias.size() != p.bias.size())
      throw std::invalid_argument("gradient shape mismatch");
    if (!g.weights.allFinite() || !g.bias.allFinite())
      throw std::invalid_argument("non-finite gradient");
  }
  const double keep = rms.decay;
  const double blend = 1.0 - rms.decay;
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    auto& p = net.layers_[i];
    auto& acc = net.accum_[i];
    const auto& g = gradients[i];
    acc.weights.array() = keep * acc.weights.array() + blend * g.weights.array().square();
    acc.bias.array() = keep * acc.bias.array() + blend * g.bias.array().square();
    p.weights.array() -=
        base_rate * g.weights.array() / (acc.weights.array().sqrt() + rms.epsilon);
    p.bias.array() -= base_rate * g.bias.array() / (acc.bias.array().sqrt() + rms.epsilon);
  }
}

namespace {

double& parameter_at(std::vector<DenseLayer>& layers, std::size_t flat) {
  for (auto& l : layers) {
    const auto nw = static_cast<std::size_t>(l.weights.size());
    if (flat < nw) return l.weights.data()[flat];
    flat -= nw;
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (flat < nb) return l.bias.data()[flat];
    flat -= nb;
  }
  throw std::out_of_range("parameter index");
}

double batch_loss(const QNetwork& net, const TrainingBatch& batch) {
  const Eigen::MatrixXd q = net.forward_batch(batch.inputs);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double err = q(batch.actions[static_cast<std::size_t>(j)], j) - batch.targets(j);
    loss += err * err;
  }
  return loss / static_cast<double>(q.cols());
}

}  // namespace

GradientCheckResult gradient_check(std::uint64_t seed, GradientFault fault) {
  constexpr int kBatch = 16;
  constexpr std::size_t kSamples = 1200;
  constexpr double kStep = 1e-5;
  // Gradients below this magnitude are compared on an absolute scale; the
  // central difference itself carries roughly 1e-11 of rounding noise here.
  constexpr double kFloor = 1e-6;

  QNetwork net = init_network(derive_seed(seed, 1));
  // Non-zero biases so the bias gradients are exercised away from init.
  Engine rng(derive_seed(seed, 2));
  for (auto& l : net.layers())
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * standard_normal(rng);

  TrainingBatch batch;
  batch.inputs.resize(net.input_size(), kBatch);
  batch.targets.resize(kBatch);
  for (int j = 0; j < kBatch; ++j) {
    for (int r = 0; r + 1 < net.input_size(); ++r) batch.inputs(r, j) = uniform_unit(rng);
    batch.inputs(net.input_size() - 1, j) = 1.0;
    batch.actions.push_back(static_cast<int>(uniform_index(rng, 2)));
    batch.targets(j) = standard_normal(rng);
  }

  LossGradients analytic = td_gradients(net, batch);
  if (fault.flip_sign_layer >= 0 &&
      static_cast<std::size_t>(fault.flip_sign_layer) < analytic.gradients.size()) {
    auto& g = analytic.gradients[static_cast<std::size_t>(fault.flip_sign_layer)];
    g.weights = -g.weights;
    g.bias = -g.bias;
  }

  // Distinct parameters via a partial Fisher-Yates shuffle.
  std::vector<std::size_t> order(net.parameter_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t count = std::min(kSamples, order.size());
  for (std::size_t i = 0; i < count; ++i)
    std::swap(order[i], order[i + uniform_index(rng, order.size() - i)]);

  GradientCheckResult result;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = order[i];
    double& p = parameter_at(net.layers(), k);
    const double saved = p;
    p = saved + kStep;
    const double up = batch_loss(net, batch);
    p = saved - kStep;
    const double down = batch_loss(net, batch);
    p = saved;
    const double numeric = (up - down) / (2.0 * kStep);
    const double exact = parameter_at(analytic.gradients, k);
    const double denom = std::max({std::abs(exact), std::abs(numeric), kFloor});
    result.max_relative_error =
        std::max(result.max_relative_error, std::abs(exact - numeric) / denom);
  }
  result.parameters_checked = count;
  return result;
}

void save_weights(const QNetwork& net, std::ostream& out) {
  out << "layers";
  for (int d : net.dims()) out << ' ' << d;
  out << '\n';
  for (const auto& l : net.layers()) {
    out << "W " << l.weights.rows() << ' ' << l.weights.cols() << '\n';
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
        out << (c ? " " : "") << format_double(l.weights(r, c));
      out << '\n';
    }
    out << "b " << l.bias.size() << '\n';
    for (Eigen::Index r = 0; r < l.bias.size(); ++r)
      out << (r ? " " : "") << format_double(l.bias(r));
    out << '\n';
  }
}

namespace {

std::vector<std::string> line_tokens(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument(std::string("weights file truncated: expected ") + what);
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  for (std::string tok; ss >> tok;) tokens.push_back(tok);
  return tokens;
}

}  // namespace

QNetwork load_weights(std::istream& in,
                      const std::optional<std::vector<int>>& expected_dims) {
  auto head = line_tokens(in, "layers header");
  if (head.size() < 3 || head[0] != "layers")
    throw std::invalid_argument("weights file must start with 'layers'");
  std::vector<int> dims;
  for (std::size_t i = 1; i < head.size(); ++i)
    dims.push_back(static_cast<int>(parse_int(head[i])));
  if (expected_dims && dims != *expected_dims)
    throw std::invalid_argument("weights file layer sizes do not match this agent");

  QNetwork net(dims);
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    auto& l = net.layers()[i];
    auto wh = line_tokens(in, "W header");
    if (wh.size() != 3 || wh[0] != "W" || parse_int(wh[1]) != l.weights.rows() ||
        parse_int(wh[2]) != l.weights.cols())
      throw std::invalid_argument("bad W header for layer " + std::to_string(i));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      auto row = line_tokens(in, "weight row");
      if (static_cast<Eigen::Index>(row.size()) != l.weights.cols())
        throw std::invalid_argument("weight row has wrong length in layer " +
                                    std::to_string(i));
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
        l.weights(r, c) = parse_double(row[static_cast<std::size_t>(c)]);
    }
    auto bh = line_tokens(in, "b header");
    if (bh.size() != 2 || bh[0] != "b" || parse_int(bh[1]) != l.bias.size())
      throw std::invalid_argument("bad b header for layer " + std::to_string(i));
    auto row = line_tokens(in, "bias row");
    if (static_cast<Eigen::Index>(row.size()) != l.bias.size())
      throw std::invalid_argument("bias row has wrong length in layer " +
                                  std::to_string(i));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r)
      l.bias(r) = parse_double(row[static_cast<std::size_t>(r)]);
  }
  for (const auto& l : net.layers())
    if (!l.weights.allFinite() || !l.bias.allFinite())
      throw std::invalid_argument("weights file contains non-finite values");
  return net;
}

}  // namespace seatq

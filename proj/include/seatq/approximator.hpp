#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "seatq/environment.hpp"

namespace seatq {

struct DenseLayer {
  Eigen::MatrixXd weights;  // fan_out x fan_in
  Eigen::VectorXd bias;     // fan_out
};

// Decayed mean of squared gradients, one accumulator per parameter.
struct RmsPropConfig {
  double decay = 0.95;
  double epsilon = 1e-8;
};

// Dense feed-forward Q-network. Every layer but the last is rectified; the
// last is linear with one output per action (accept, deny).
class QNetwork {
 public:
  static inline const std::vector<int> kShippedDims{6, 128, 128, 2};

  QNetwork() : QNetwork(kShippedDims) {}
  // All weights, biases and accumulators zero.
  explicit QNetwork(std::vector<int> dims);

  const std::vector<int>& dims() const { return dims_; }
  int input_size() const { return dims_.front(); }
  int output_size() const { return dims_.back(); }
  std::size_t parameter_count() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  const std::vector<DenseLayer>& accumulators() const { return accum_; }

  // Outputs for a single input. Throws std::invalid_argument on a
  // non-finite or wrongly sized input.
  Eigen::VectorXd forward(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Outputs for each column of `inputs`.
  Eigen::MatrixXd forward_batch(const Eigen::Ref<const Eigen::MatrixXd>& inputs) const;

 private:
  friend void apply_update(QNetwork&, const std::vector<DenseLayer>&, double,
                           const RmsPropConfig&);

  std::vector<int> dims_;
  std::vector<DenseLayer> layers_;
  std::vector<DenseLayer> accum_;
};

// Zero-mean normal weights scaled by sqrt(2 / fan_in), zero biases, drawn
// layer by layer in row-major order.
QNetwork init_network(std::uint64_t seed,
                      const std::vector<int>& dims = QNetwork::kShippedDims);

// (q_accept, q_deny) for the shipped two-output network.
std::array<double, 2> forward(const QNetwork& net, const Features& features);

struct TrainingBatch {
  Eigen::MatrixXd inputs;    // input_size x B
  std::vector<int> actions;  // B indices into the outputs
  Eigen::VectorXd targets;   // B
};

struct LossGradients {
  double loss = 0.0;
  std::vector<DenseLayer> gradients;  // same shapes as the network layers
};

// Loss = mean over the batch of (Q(x_i)[a_i] - target_i)^2, with its exact
// gradient by backpropagation.
LossGradients td_gradients(const QNetwork& net, const TrainingBatch& batch);

// acc <- decay * acc + (1 - decay) * g^2;  p <- p - rate * g / (sqrt(acc) + eps).
// Throws std::invalid_argument on shape mismatch or non-finite gradients.
void apply_update(QNetwork& net, const std::vector<DenseLayer>& gradients,
                  double base_rate, const RmsPropConfig& rms = {});

// Corrupts the analytic gradient before comparison; used to show the check
// catches a broken backward pass.
struct GradientFault {
  int flip_sign_layer = -1;  // negate this layer's gradients, -1 for none
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
};

// Random shipped-shape network and batch; compares td_gradients against
// central differences (step 1e-5) on a random subset of >= 1000 parameters.
GradientCheckResult gradient_check(std::uint64_t seed,
                                   GradientFault fault = {});

// Text weights format:
//   layers 6 128 128 2
//   W <rows> <cols>   then rows lines of cols decimals
//   b <rows>          then one line of rows decimals
void save_weights(const QNetwork& net, std::ostream& out);
// Throws std::invalid_argument on malformed input or, when `expected_dims`
// is given, a shape mismatch. Optimizer state starts at zero.
QNetwork load_weights(std::istream& in,
                      const std::optional<std::vector<int>>& expected_dims =
                          QNetwork::kShippedDims);

}  // namespace seatq

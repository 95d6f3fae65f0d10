#pragma once

// Dense multilayer perceptron with hand-derived backpropagation and Adam.
//
// Parameters live in one contiguous f64 buffer laid out layer by layer as
// [weight (out x in, column-major), bias (out)], so flatten/unflatten and
// federated averaging operate on plain vectors.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fran {

/// Parameter storage. A fixed base alignment keeps Eigen's vectorized kernels on
/// the same code path from run to run, so results are bit-reproducible.
using ParamVector = std::vector<double, Eigen::aligned_allocator<double>>;

enum class Activation : std::uint8_t { linear = 0, relu = 1, sigmoid = 2 };

const char* to_string(Activation act);

/// Shape and placement of one dense layer inside a flat parameter buffer.
struct LayoutEntry {
  std::size_t rows = 0;    // output width
  std::size_t cols = 0;    // input width
  std::size_t offset = 0;  // first weight element; the bias follows the weights
  Activation activation = Activation::linear;

  std::size_t size() const noexcept { return rows * cols + rows; }
  friend bool operator==(const LayoutEntry&, const LayoutEntry&) = default;
};

struct FlatWeights {
  std::vector<double> values;
  std::vector<LayoutEntry> layout;

  std::size_t size() const noexcept { return values.size(); }
  bool same_layout(const FlatWeights& other) const { return layout == other.layout; }
  /// FNV-1a over the layout descriptor.
  std::uint64_t layout_hash() const;
  friend bool operator==(const FlatWeights&, const FlatWeights&) = default;
};

/// Concatenates weight sets, shifting offsets of later layouts.
FlatWeights concat(std::span<const FlatWeights> parts);
/// Splits a concatenation back into parts with the given layer counts.
std::vector<FlatWeights> split(const FlatWeights& flat, std::span<const std::size_t> layer_counts);

struct Topology {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden{300, 100};
  std::size_t output_dim = 0;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::linear;
  /// Multiplier on the output layer's He-uniform bound.
  double output_init_scale = 1.0;
};

class Mlp {
 public:
  using MatrixMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
  using VectorMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

  Mlp() = default;
  /// Zero-initialized network with the given topology.
  explicit Mlp(const Topology& topology);
  /// Adopts a parameter buffer; throws ShapeError if the layout does not chain.
  explicit Mlp(FlatWeights weights);

  std::size_t input_dim() const noexcept { return layout_.empty() ? 0 : layout_.front().cols; }
  std::size_t output_dim() const noexcept { return layout_.empty() ? 0 : layout_.back().rows; }
  std::size_t num_layers() const noexcept { return layout_.size(); }
  std::size_t num_params() const noexcept { return params_.size(); }
  const std::vector<LayoutEntry>& layout() const noexcept { return layout_; }

  std::span<const double> params() const noexcept { return params_; }
  /// Mutable access invalidates outstanding forward caches.
  std::span<double> mutable_params() noexcept {
    ++generation_;
    return params_;
  }

  ConstMatrixMap weight(std::size_t layer) const;
  ConstVectorMap bias(std::size_t layer) const;
  MatrixMap mutable_weight(std::size_t layer);
  VectorMap mutable_bias(std::size_t layer);

  std::uint64_t generation() const noexcept { return generation_; }

  /// Bit-exact parameter and layout equality.
  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.layout_ == b.layout_ && a.params_ == b.params_;
  }

 private:
  std::vector<LayoutEntry> layout_;
  ParamVector params_;
  std::uint64_t generation_ = 0;
};

/// He-uniform weights, zero biases; the output layer bound is multiplied by
/// topology.output_init_scale.
Mlp init_mlp(std::uint64_t seed, const Topology& topology);

FlatWeights flatten(const Mlp& net);
Mlp unflatten(const FlatWeights& flat);

/// Post-activation values of every layer for one batch; activations[0] is the input.
struct ForwardCache {
  const Mlp* net = nullptr;
  std::uint64_t generation = 0;
  std::vector<Eigen::MatrixXd> activations;
};

struct ForwardPass {
  Eigen::MatrixXd output;  // output_dim x batch
  ForwardCache cache;
};

/// Batched forward pass; columns of `input` are samples.
ForwardPass forward(const Mlp& net, const Eigen::MatrixXd& input);
/// Forward pass without a cache.
Eigen::MatrixXd predict(const Mlp& net, const Eigen::MatrixXd& input);
std::vector<double> predict(const Mlp& net, std::span<const double> input);

struct Gradients {
  ParamVector params;  // same layout as Mlp::params(), summed over the batch
  Eigen::MatrixXd input;       // dLoss/dInput per sample
};

/// Backpropagates dLoss/dOutput (output_dim x batch). Throws LifecycleError if
/// the cache does not belong to the current state of `net`.
Gradients backward(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& output_grad);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(std::size_t num_params, double learning_rate)
      : first_moment(num_params, 0.0), second_moment(num_params, 0.0), lr(learning_rate) {}
};

/// One bias-corrected Adam descent step. Throws NumericError on a non-finite
/// gradient before touching any parameter.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);
void adam_step(Mlp& net, std::span<const double> grads, AdamState& state);

}  // namespace fran

#include "fran/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fran/errors.hpp"

namespace fran {

namespace {

void check_chain(const std::vector<LayoutEntry>& layout, std::size_t num_values) {
  std::size_t offset = 0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const LayoutEntry& e = layout[i];
    if (e.rows == 0 || e.cols == 0) throw ShapeError("layer " + std::to_string(i) + " is empty");
    if (e.offset != offset)
      throw ShapeError("layer " + std::to_string(i) + " offset " + std::to_string(e.offset) +
                       ", expected " + std::to_string(offset));
    if (i > 0 && layout[i - 1].rows != e.cols)
      throw ShapeError("layer " + std::to_string(i) + " input width does not match previous output");
    offset += e.size();
  }
  if (offset != num_values)
    throw ShapeError("layout covers " + std::to_string(offset) + " values, buffer holds " +
                     std::to_string(num_values));
}

void apply_activation(Eigen::MatrixXd& z, Activation act) {
  switch (act) {
    case Activation::linear:
      break;
    case Activation::relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::sigmoid:
      z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
  }
}

// Multiplies the incoming gradient by the activation derivative, expressed
// through the post-activation value.
void apply_derivative(Eigen::MatrixXd& grad, const Eigen::MatrixXd& out, Activation act) {
  switch (act) {
    case Activation::linear:
      break;
    case Activation::relu:
      grad = grad.cwiseProduct(out.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
      break;
    case Activation::sigmoid:
      grad = grad.cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix()));
      break;
  }
}

}  // namespace

const char* to_string(Activation act) {
  switch (act) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "unknown";
}

std::uint64_t FlatWeights::layout_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  };
  mix(layout.size());
  for (const LayoutEntry& e : layout) {
    mix(e.rows);
    mix(e.cols);
    mix(e.offset);
    mix(static_cast<std::uint64_t>(e.activation));
  }
  return h;
}

FlatWeights concat(std::span<const FlatWeights> parts) {
  FlatWeights out;
  for (const FlatWeights& p : parts) {
    const std::size_t shift = out.values.size();
    out.values.insert(out.values.end(), p.values.begin(), p.values.end());
    for (LayoutEntry e : p.layout) {
      e.offset += shift;
      out.layout.push_back(e);
    }
  }
  return out;
}

std::vector<FlatWeights> split(const FlatWeights& flat, std::span<const std::size_t> layer_counts) {
  std::size_t total_layers = 0;
  for (std::size_t c : layer_counts) total_layers += c;
  if (total_layers != flat.layout.size())
    throw ShapeError("split: layer counts do not cover the layout");
  std::vector<FlatWeights> parts;
  std::size_t layer = 0;
  for (std::size_t count : layer_counts) {
    FlatWeights part;
    if (count == 0) {
      parts.push_back(std::move(part));
      continue;
    }
    const std::size_t begin = flat.layout[layer].offset;
    std::size_t end = begin;
    for (std::size_t i = 0; i < count; ++i, ++layer) {
      LayoutEntry e = flat.layout[layer];
      if (e.offset != end) throw ShapeError("split: non-contiguous layout");
      end += e.size();
      e.offset -= begin;
      part.layout.push_back(e);
    }
    if (end > flat.values.size()) throw ShapeError("split: layout exceeds buffer");
    part.values.assign(flat.values.begin() + static_cast<std::ptrdiff_t>(begin),
                       flat.values.begin() + static_cast<std::ptrdiff_t>(end));
    parts.push_back(std::move(part));
  }
  return parts;
}

Mlp::Mlp(const Topology& topology) {
  if (topology.input_dim == 0 || topology.output_dim == 0)
    throw ShapeError("topology needs nonzero input and output widths");
  std::vector<std::size_t> widths{topology.input_dim};
  widths.insert(widths.end(), topology.hidden.begin(), topology.hidden.end());
  widths.push_back(topology.output_dim);
  std::size_t offset = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    LayoutEntry e;
    e.cols = widths[i];
    e.rows = widths[i + 1];
    e.offset = offset;
    e.activation = i + 2 == widths.size() ? topology.output_activation : topology.hidden_activation;
    offset += e.size();
    layout_.push_back(e);
  }
  check_chain(layout_, offset);
  params_.assign(offset, 0.0);
}

Mlp::Mlp(FlatWeights weights) {
  check_chain(weights.layout, weights.values.size());
  layout_ = std::move(weights.layout);
  params_.assign(weights.values.begin(), weights.values.end());
}

Mlp::ConstMatrixMap Mlp::weight(std::size_t layer) const {
  const LayoutEntry& e = layout_.at(layer);
  return {params_.data() + e.offset, static_cast<Eigen::Index>(e.rows),
          static_cast<Eigen::Index>(e.cols)};
}

Mlp::ConstVectorMap Mlp::bias(std::size_t layer) const {
  const LayoutEntry& e = layout_.at(layer);
  return {params_.data() + e.offset + e.rows * e.cols, static_cast<Eigen::Index>(e.rows)};
}

Mlp::MatrixMap Mlp::mutable_weight(std::size_t layer) {
  const LayoutEntry& e = layout_.at(layer);
  ++generation_;
  return {params_.data() + e.offset, static_cast<Eigen::Index>(e.rows),
          static_cast<Eigen::Index>(e.cols)};
}

Mlp::VectorMap Mlp::mutable_bias(std::size_t layer) {
  const LayoutEntry& e = layout_.at(layer);
  ++generation_;
  return {params_.data() + e.offset + e.rows * e.cols, static_cast<Eigen::Index>(e.rows)};
}

Mlp init_mlp(std::uint64_t seed, const Topology& topology) {
  Mlp net(topology);
  std::mt19937_64 rng(seed);
  const std::size_t last = net.num_layers() - 1;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    const LayoutEntry e = net.layout()[i];
    double limit = std::sqrt(6.0 / static_cast<double>(e.cols));
    if (i == last) limit *= topology.output_init_scale;
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto w = net.mutable_weight(i);
    // Column-major fill keeps the draw order tied to the flat layout.
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
  }
  return net;
}

FlatWeights flatten(const Mlp& net) {
  FlatWeights flat;
  flat.values.assign(net.params().begin(), net.params().end());
  flat.layout = net.layout();
  return flat;
}

Mlp unflatten(const FlatWeights& flat) { return Mlp(flat); }

ForwardPass forward(const Mlp& net, const Eigen::MatrixXd& input) {
  if (static_cast<std::size_t>(input.rows()) != net.input_dim())
    throw ShapeError("forward: input has " + std::to_string(input.rows()) + " rows, network expects " +
                     std::to_string(net.input_dim()));
  ForwardPass pass;
  pass.cache.net = &net;
  pass.cache.generation = net.generation();
  pass.cache.activations.reserve(net.num_layers() + 1);
  pass.cache.activations.push_back(input);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    Eigen::MatrixXd z = net.weight(i) * pass.cache.activations.back();
    z.colwise() += net.bias(i);
    apply_activation(z, net.layout()[i].activation);
    pass.cache.activations.push_back(std::move(z));
  }
  pass.output = pass.cache.activations.back();
  return pass;
}

Eigen::MatrixXd predict(const Mlp& net, const Eigen::MatrixXd& input) {
  if (static_cast<std::size_t>(input.rows()) != net.input_dim())
    throw ShapeError("predict: input has " + std::to_string(input.rows()) + " rows, network expects " +
                     std::to_string(net.input_dim()));
  Eigen::MatrixXd a = input;
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    Eigen::MatrixXd z = net.weight(i) * a;
    z.colwise() += net.bias(i);
    apply_activation(z, net.layout()[i].activation);
    a = std::move(z);
  }
  return a;
}

std::vector<double> predict(const Mlp& net, std::span<const double> input) {
  const Eigen::MatrixXd x =
      Eigen::Map<const Eigen::MatrixXd>(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  const Eigen::MatrixXd y = predict(net, x);
  return {y.data(), y.data() + y.size()};
}

Gradients backward(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& output_grad) {
  if (cache.net != &net || cache.generation != net.generation() ||
      cache.activations.size() != net.num_layers() + 1)
    throw LifecycleError("backward: forward cache is stale or belongs to another network");
  const Eigen::Index batch = cache.activations.front().cols();
  if (static_cast<std::size_t>(output_grad.rows()) != net.output_dim() || output_grad.cols() != batch)
    throw ShapeError("backward: output gradient shape mismatch");

  Gradients g;
  g.params.assign(net.num_params(), 0.0);
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t i = net.num_layers(); i-- > 0;) {
    const LayoutEntry& e = net.layout()[i];
    apply_derivative(delta, cache.activations[i + 1], e.activation);
    Eigen::Map<Eigen::MatrixXd> dw(g.params.data() + e.offset, static_cast<Eigen::Index>(e.rows),
                                   static_cast<Eigen::Index>(e.cols));
    Eigen::Map<Eigen::VectorXd> db(g.params.data() + e.offset + e.rows * e.cols,
                                   static_cast<Eigen::Index>(e.rows));
    dw.noalias() = delta * cache.activations[i].transpose();
    db = delta.rowwise().sum();
    delta = net.weight(i).transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size())
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  for (double g : grads)
    if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

void adam_step(Mlp& net, std::span<const double> grads, AdamState& state) {
  adam_step(net.mutable_params(), grads, state);
}

}  // namespace fran

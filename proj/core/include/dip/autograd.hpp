#pragma once

// Define-by-run reverse-mode differentiation. A Tape records every operation
// evaluated on its Variables; backward() walks the record once in reverse
// creation order and returns gradients for the leaves that asked for them.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "dip/kernels.hpp"
#include "dip/tensor.hpp"

namespace dip::ag {

using NodeId = std::size_t;
class Tape;

/// A Tensor value plus its node on a Tape. Cheap to copy; valid while the
/// owning Tape is alive.
class Variable {
 public:
  Variable() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  NodeId id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  bool needs_grad() const;
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Variable(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

/// Accumulates d(loss)/d(input_i) into *input_grads[i]; entries are nullptr
/// for inputs that do not need a gradient. Accumulate, never assign: an input
/// may appear more than once. `output` is the node's own forward value.
using BackwardFn =
    std::function<void(const Tensor& grad_out, const Tensor& output, std::span<Tensor* const> input_grads)>;

class Gradients {
 public:
  const Tensor* find(const Variable& v) const;
  const Tensor& at(const Variable& v) const;
  bool contains(const Variable& v) const { return find(v) != nullptr; }
  std::size_t size() const noexcept { return grads_.size(); }

 private:
  friend class Tape;
  std::unordered_map<NodeId, Tensor> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Variable leaf(Tensor value, bool requires_grad);
  Variable constant(Tensor value) { return leaf(std::move(value), false); }

  /// Appends an op node. The backward closure is dropped when no input needs
  /// a gradient.
  Variable record(Tensor value, std::vector<NodeId> inputs, BackwardFn backward);

  /// Gradients of a single-element loss (NotAScalar otherwise).
  Gradients backward(const Variable& loss) const;
  /// Vector-Jacobian product: seed has the output's shape.
  Gradients backward(const Variable& output, const Tensor& seed) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  bool needs_grad(NodeId id) const { return nodes_.at(id).needs_grad; }

  /// Fingerprint of which side of every activation kink each element landed
  /// on. Two evaluations with equal fingerprints followed the same
  /// piecewise-smooth branch.
  std::uint64_t kink_signature() const noexcept { return kink_signature_; }
  void mix_kink_signature(std::uint64_t bits) noexcept;

 private:
  struct Node {
    Tensor value;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    bool needs_grad = false;
    bool is_leaf = false;
  };

  // deque: references to node values stay valid while ops append.
  std::deque<Node> nodes_;
  std::uint64_t kink_signature_ = 0xcbf29ce484222325ULL;
};

// ---- differentiable operations -------------------------------------------
// Forward values come straight from the raw kernels in dip::kernels / tensor.

Variable add(const Variable& a, const Variable& b);
Variable sub(const Variable& a, const Variable& b);
Variable mul(const Variable& a, const Variable& b);
Variable scale(const Variable& a, double factor);
Variable sum(const Variable& a);
Variable mean(const Variable& a);

Variable conv2d(const Variable& input, const Variable& weights, kernels::ConvGeometry geom = {});
/// Adds bias[c] to every element of channel c.
Variable bias_add(const Variable& input, const Variable& bias);

Variable resample(const Variable& input, kernels::ResampleMode mode, std::size_t factor);
Variable nearest_up(const Variable& input, std::size_t factor);
Variable bilinear_up(const Variable& input, std::size_t factor);
Variable lanczos_down(const Variable& input, std::size_t factor);

constexpr double kDefaultLeakySlope = 0.2;
/// x > 0 ? x : slope * x; the derivative at 0 is the negative-side slope.
Variable leaky_relu(const Variable& input, double slope = kDefaultLeakySlope);
Variable sigmoid(const Variable& input);

constexpr double kInstanceNormEps = 1e-5;
/// Per-channel normalization over H x W with learnable scale/shift (shape [C]).
/// DegenerateNormalization for 1 x 1 spatial size.
Variable instance_norm(const Variable& input, const Variable& gamma, const Variable& beta,
                       double eps = kInstanceNormEps);

Variable concat_channels(const Variable& a, const Variable& b);
Variable crop(const Variable& input, std::size_t top, std::size_t left, std::size_t h, std::size_t w);

/// mean((a - b)^2)
Variable mse(const Variable& a, const Variable& b);
/// sum((a - b)^2)
Variable sse(const Variable& a, const Variable& b);
/// sum(((a - b) * mask)^2)
Variable masked_sse(const Variable& a, const Variable& b, const Tensor& mask);
/// masked_sse divided by the number of nonzero mask entries (1 if none).
Variable masked_mse(const Variable& a, const Variable& b, const Tensor& mask);

// ---- finite-difference oracle ----------------------------------------------

/// Builds a scalar on the given tape from leaves bound to the parameters.
using ScalarFn = std::function<Variable(Tape&, std::span<const Variable>)>;

struct GradCheckOptions {
  double h = 1e-5;
  /// Coordinates sampled across all parameters (all of them if fewer).
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  /// Skip coordinates whose +/-h probes change the activation kink pattern.
  bool skip_kinks = true;
  /// Denominator floor, relative to max(1, |f|): |a - n| / max(|a|, |n|, floor).
  double floor_scale = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

/// Compares backward() against central differences (f(p + h e) - f(p - h e)) / 2h.
GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& params, const GradCheckOptions& options = {});

}  // namespace dip::ag

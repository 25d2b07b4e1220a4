#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dip/error.hpp"
#include "dip/network.hpp"
#include "dip/tasks.hpp"
#include "dip/tensor.hpp"

namespace dip::opt {

enum class OptimizerKind { Adam, Sgd };

struct OptimConfig {
  OptimizerKind optimizer = OptimizerKind::Adam;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t iterations = 1800;
  double ema_decay = 0.99;
  std::size_t trace_every = 1;
  std::uint64_t seed = 0;

  /// InvalidRange for the first violated bound.
  void validate() const;

  friend bool operator==(const OptimConfig&, const OptimConfig&) = default;
};

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::size_t step = 0;
};

/// Bias-corrected Adam: m = b1 m + (1-b1) g, v = b2 v + (1-b2) g^2,
/// p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps);
void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double lr);

/// avg = decay * avg + (1 - decay) * x; an empty avg is initialized to x.
void ema_update(Tensor& avg, const Tensor& x, double decay);

struct TraceEntry {
  std::size_t iteration;
  double energy;
  std::optional<double> psnr;
};

struct Snapshot {
  std::size_t iteration;
  Tensor image;
};

struct RestorationResult {
  /// Output of the last forward pass, clamped to [0, 1].
  Tensor final_image;
  /// Exponential moving average of all outputs, clamped to [0, 1].
  Tensor ema_image;
  std::vector<TraceEntry> trace;
  std::vector<Snapshot> snapshots;
  double wall_seconds = 0.0;
  std::size_t parameter_count = 0;
  std::optional<double> psnr_final;
  std::optional<double> psnr_ema;
};

struct RunHooks {
  /// Quality of a (clamped) image, e.g. PSNR against ground truth. Fills the
  /// trace psnr column and the result's psnr fields.
  std::function<double(const Tensor&)> metric;
  /// Iterations (1-based) whose clamped output is kept in `snapshots`.
  std::vector<std::size_t> snapshot_at;
  /// Called for every trace row as it is recorded.
  std::function<void(const TraceEntry&)> on_trace;
};

/// Raised when the energy or a parameter becomes non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, std::vector<TraceEntry> partial_trace)
      : Error(ErrorKind::DivergenceDetected, message), partial_trace_(std::move(partial_trace)) {}

  const std::vector<TraceEntry>& partial_trace() const noexcept { return partial_trace_; }

 private:
  std::vector<TraceEntry> partial_trace_;
};

/// Fits theta from a seeded random init so that E(f_theta(z)) decreases, for
/// exactly cfg.iterations steps. Each step: z = base (+ fresh Gaussian noise
/// when code.perturb_std > 0), forward, energy, backward, EMA of the output,
/// optimizer update. Row i of the trace is recorded when i % trace_every == 0
/// and always for the last iteration.
///
/// When the code is larger than the energy's generator shape (padding for
/// divisibility), the output is center-cropped before the energy sees it.
RestorationResult run_restoration(const tasks::TaskEnergy& energy, const net::ArchitectureSpec& spec,
                                  const tasks::CodeInput& code, const OptimConfig& cfg, const RunHooks& hooks = {});

}  // namespace dip::opt

#include "dip/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace dip::opt {
namespace {

void require_matching(const std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size()) throw Error(ErrorKind::ShapeMismatch, "parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) require_same_shape(params[i], grads[i], "optimizer step");
}

}  // namespace

void OptimConfig::validate() const {
  auto fail = [](const char* msg) { throw Error(ErrorKind::InvalidRange, msg); };
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) fail("Adam betas must be in [0, 1)");
  if (!(eps > 0.0)) fail("Adam eps must be > 0");
  if (iterations == 0) fail("iterations must be >= 1");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) fail("ema_decay must be in [0, 1)");
  if (trace_every == 0) fail("trace_every must be >= 1");
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  require_matching(params, grads);
  if (state.first_moment.empty()) {
    for (const Tensor& p : params) {
      state.first_moment.emplace_back(p.shape());
      state.second_moment.emplace_back(p.shape());
    }
  }
  if (state.first_moment.size() != params.size()) throw Error(ErrorKind::ShapeMismatch, "Adam state size mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].data();
    auto g = grads[k].data();
    auto m = state.first_moment[k].data();
    auto v = state.second_moment[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
}

void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, double lr) {
  require_matching(params, grads);
  for (std::size_t k = 0; k < params.size(); ++k) axpy_inplace(params[k], grads[k], -lr);
}

void ema_update(Tensor& avg, const Tensor& x, double decay) {
  if (!(decay >= 0.0 && decay < 1.0)) throw Error(ErrorKind::InvalidRange, "ema decay must be in [0, 1)");
  if (avg.empty()) {
    avg = x;
    return;
  }
  require_same_shape(avg, x, "ema_update");
  auto a = avg.data();
  auto v = x.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = decay * a[i] + (1.0 - decay) * v[i];
}

RestorationResult run_restoration(const tasks::TaskEnergy& energy, const net::ArchitectureSpec& spec,
                                  const tasks::CodeInput& code, const OptimConfig& cfg, const RunHooks& hooks) {
  cfg.validate();
  if (code.perturb_std < 0.0) throw Error(ErrorKind::InvalidRange, "code perturbation std must be >= 0");
  const auto started = std::chrono::steady_clock::now();

  const net::Generator generator(spec);
  const Shape out_shape = generator.output_shape(code.base.shape());
  const Shape target = energy.generator_shape();
  if (out_shape[0] != target[0] || out_shape[1] < target[1] || out_shape[2] < target[2]) {
    throw Error(ErrorKind::ShapeMismatch, "generator output " + shape_to_string(out_shape) +
                                              " cannot cover energy shape " + shape_to_string(target));
  }
  const bool needs_crop = out_shape != target;
  const std::size_t top = (out_shape[1] - target[1]) / 2;
  const std::size_t left = (out_shape[2] - target[2]) / 2;

  net::ParameterSet params = generator.init(cfg.seed);
  Rng perturb_rng(cfg.seed, 0x7a11);
  AdamState adam;
  std::vector<Tensor> grads(params.size());

  RestorationResult result;
  result.parameter_count = params.total_count();
  Tensor ema;
  Tensor last;

  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    Tensor z = code.base;
    if (code.perturb_std > 0.0) axpy_inplace(z, rand_normal(perturb_rng, z.shape(), 0.0, code.perturb_std));

    ag::Tape tape;
    const net::Generator::Bound bound = generator.forward(tape, params, z, true);
    ag::Variable image = bound.image;
    if (needs_crop) image = ag::crop(image, top, left, target[1], target[2]);
    const ag::Variable loss = energy.evaluate(image);
    const double e = loss.value().item();
    if (!std::isfinite(e)) {
      throw DivergenceError("non-finite energy at iteration " + std::to_string(it), std::move(result.trace));
    }

    const ag::Gradients g = tape.backward(loss);
    for (std::size_t k = 0; k < params.size(); ++k) {
      const Tensor* gk = g.find(bound.params[k]);
      grads[k] = gk ? *gk : Tensor(params[k].shape());
    }

    ema_update(ema, image.value(), cfg.ema_decay);
    last = image.value();

    const bool record = it % cfg.trace_every == 0 || it == cfg.iterations;
    const bool snapshot = std::find(hooks.snapshot_at.begin(), hooks.snapshot_at.end(), it) != hooks.snapshot_at.end();
    if (record || snapshot) {
      const Tensor clamped = clamp(last, 0.0, 1.0);
      if (record) {
        TraceEntry row{it, e, std::nullopt};
        if (hooks.metric) row.psnr = hooks.metric(clamped);
        result.trace.push_back(row);
        if (hooks.on_trace) hooks.on_trace(row);
      }
      if (snapshot) result.snapshots.push_back({it, clamped});
    }

    if (cfg.optimizer == OptimizerKind::Adam) {
      adam_step(params.tensors(), grads, adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    } else {
      sgd_step(params.tensors(), grads, cfg.lr);
    }
    for (const Tensor& p : params.tensors()) {
      if (!all_finite(p)) {
        throw DivergenceError("non-finite parameter after step " + std::to_string(it), std::move(result.trace));
      }
    }
  }

  result.final_image = clamp(last, 0.0, 1.0);
  result.ema_image = clamp(ema, 0.0, 1.0);
  if (hooks.metric) {
    result.psnr_final = hooks.metric(result.final_image);
    result.psnr_ema = hooks.metric(result.ema_image);
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace dip::opt

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dip/autograd.hpp"
#include "dip/error.hpp"

namespace dip::ag {
namespace {

struct Probe {
  double value;
  std::uint64_t kinks;
};

Probe evaluate(const ScalarFn& f, const std::vector<Tensor>& params) {
  Tape tape;
  std::vector<Variable> leaves;
  leaves.reserve(params.size());
  for (const Tensor& p : params) leaves.push_back(tape.constant(p));
  const Variable out = f(tape, leaves);
  return {out.value().item(), tape.kink_signature()};
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& params, const GradCheckOptions& options) {
  if (!(options.h > 0.0)) throw Error(ErrorKind::InvalidRange, "grad_check step must be positive");

  Tape tape;
  std::vector<Variable> leaves;
  for (const Tensor& p : params) leaves.push_back(tape.leaf(p, true));
  const Variable loss = f(tape, leaves);
  const double f0 = loss.value().item();
  const std::uint64_t base_kinks = tape.kink_signature();
  const Gradients grads = tape.backward(loss);

  // Flat coordinate -> (parameter, offset).
  std::vector<std::size_t> starts{0};
  for (const Tensor& p : params) starts.push_back(starts.back() + p.numel());
  const std::size_t total = starts.back();

  std::vector<std::size_t> coords(total);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  const std::size_t count = std::min(options.samples, total);
  if (count < total) {
    Rng rng(options.seed, 0x67c0);
    for (std::size_t i = 0; i < count; ++i) std::swap(coords[i], coords[i + rng.below(total - i)]);
    coords.resize(count);
  }

  GradCheckReport report;
  const double floor = options.floor_scale * std::max(1.0, std::abs(f0));
  std::vector<Tensor> probe = params;
  for (std::size_t flat : coords) {
    const std::size_t which =
        static_cast<std::size_t>(std::upper_bound(starts.begin(), starts.end(), flat) - starts.begin()) - 1;
    const std::size_t offset = flat - starts[which];
    const double original = params[which][offset];

    probe[which][offset] = original + options.h;
    const Probe plus = evaluate(f, probe);
    probe[which][offset] = original - options.h;
    const Probe minus = evaluate(f, probe);
    probe[which][offset] = original;

    if (options.skip_kinks && (plus.kinks != base_kinks || minus.kinks != base_kinks)) {
      ++report.skipped_kinks;
      continue;
    }
    const double numeric = (plus.value - minus.value) / (2.0 * options.h);
    const Tensor* g = grads.find(leaves[which]);
    const double analytic = g ? (*g)[offset] : 0.0;
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(analytic - numeric) / denom);
    ++report.checked;
  }
  return report;
}

}  // namespace dip::ag

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>

#include "dip/cli.hpp"
#include "dip/error.hpp"
#include "dip/imaging.hpp"

namespace dip::cli {
namespace {

// Flags given on the command line; unset ones leave the layered config alone.
struct Flags {
  std::optional<std::string> config_path;
  bool dry_run = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seed_count;
  bool average = false;
  std::optional<std::size_t> iters;
  std::optional<double> lr;
  std::optional<std::string> out;
  std::optional<std::string> arch;
  std::optional<std::string> optimizer;
  std::optional<std::size_t> trace_every;
  std::vector<std::size_t> snapshot_at;

  std::optional<std::string> input, gt, mask, flash, noflash, normalization, dataset, manifest, bench_task;
  std::optional<double> sigma_synth;
  std::optional<std::size_t> factor, crop_border;
  std::vector<std::string> archs;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config_path, "JSON RunConfig; command-line flags override it");
  sub->add_flag("--dry-run", f.dry_run, "Validate and print the resolved config without running");
  sub->add_option("--seed", f.seed, "Base seed (default 0)");
  sub->add_option("--seeds", f.seed_count, "Number of seeds: seed, seed+1, ...")->check(CLI::PositiveNumber);
  sub->add_flag("--average", f.average, "Also write the mean of the per-seed EMA images");
  sub->add_option("--iters", f.iters, "Optimization steps");
  sub->add_option("--lr", f.lr, "Learning rate");
  sub->add_option("--out", f.out, "Output directory");
  sub->add_option("--arch", f.arch, "Architecture preset");
  sub->add_option("--optimizer", f.optimizer, "adam or sgd");
  sub->add_option("--trace-every", f.trace_every, "Trace cadence in iterations");
  sub->add_option("--snapshot-at", f.snapshot_at, "Iterations whose output is saved")->delimiter(',');
  sub->add_option("--crop-border", f.crop_border, "Border excluded from PSNR");
}

void add_input(CLI::App* sub, Flags& f) {
  sub->add_option("--input", f.input, "Observed image (PNG/PPM/PGM)");
  sub->add_option("--gt", f.gt, "Ground truth for PSNR reporting");
}

void add_normalization(CLI::App* sub, Flags& f) {
  sub->add_option("--normalization", f.normalization, "Energy normalization: mean or sum");
}

template <typename T>
void set_if(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

RunConfig resolve(const std::string& task, const Flags& f) {
  RunConfig c = default_config(task);
  if (task == "bench" && f.bench_task) {
    // A benchmark inherits the budget and code settings of the task it runs.
    const RunConfig inner = default_config(*f.bench_task == "sr" ? "sr" : "denoise");
    c.optim = inner.optim;
    c.code = inner.code;
    c.bench_task = *f.bench_task;
  }
  if (f.config_path) {
    c = load_config(*f.config_path, c);
    if (c.task != task) {
      throw Error(ErrorKind::ConfigError, "config is for task '" + c.task + "', not '" + task + "'");
    }
  }

  set_if(f.input, c.input);
  set_if(f.gt, c.gt);
  if (f.sigma_synth) c.sigma_synth = f.sigma_synth;
  set_if(f.factor, c.factor);
  set_if(f.mask, c.mask);
  set_if(f.flash, c.flash);
  set_if(f.noflash, c.noflash);
  if (f.normalization) {
    if (*f.normalization == "mean") {
      c.normalization = tasks::Normalization::Mean;
    } else if (*f.normalization == "sum") {
      c.normalization = tasks::Normalization::Sum;
    } else {
      throw Error(ErrorKind::ConfigError, "--normalization must be mean or sum");
    }
  }
  if (f.crop_border) c.crop_border = f.crop_border;
  set_if(f.dataset, c.dataset);
  set_if(f.manifest, c.manifest);
  set_if(f.bench_task, c.bench_task);
  if (!f.archs.empty()) c.archs = f.archs;

  if (f.arch) c.arch = net::ArchitectureSpec::preset(*f.arch);
  set_if(f.iters, c.optim.iterations);
  set_if(f.lr, c.optim.lr);
  set_if(f.trace_every, c.optim.trace_every);
  if (f.optimizer) {
    if (*f.optimizer == "adam") {
      c.optim.optimizer = opt::OptimizerKind::Adam;
    } else if (*f.optimizer == "sgd") {
      c.optim.optimizer = opt::OptimizerKind::Sgd;
    } else {
      throw Error(ErrorKind::ConfigError, "--optimizer must be adam or sgd");
    }
  }
  if (f.seed || f.seed_count) {
    const std::uint64_t base = f.seed.value_or(c.seeds.empty() ? 0 : c.seeds.front());
    const std::size_t n = f.seed_count.value_or(1);
    c.seeds.clear();
    for (std::size_t i = 0; i < n; ++i) c.seeds.push_back(base + i);
  }
  if (f.average) c.average = true;
  if (!f.snapshot_at.empty()) c.snapshot_at = f.snapshot_at;
  set_if(f.out, c.out);
  return c;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidMask:
    case ErrorKind::InvalidRange:
    case ErrorKind::InvalidShape:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::DecodeError:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image restoration with an untrained convolutional generator", "dip"};
  app.require_subcommand(1);
  Flags f;

  auto* denoise = app.add_subcommand("denoise", "Blind denoising");
  add_common(denoise, f);
  add_input(denoise, f);
  denoise->add_option("--sigma-synth", f.sigma_synth, "Treat --input as clean and add noise of this sigma (0-255)");
  add_normalization(denoise, f);

  auto* sr = app.add_subcommand("sr", "Super-resolution");
  add_common(sr, f);
  add_input(sr, f);
  sr->add_option("--factor", f.factor, "Upsampling factor");

  auto* inpaint = app.add_subcommand("inpaint", "Inpainting");
  add_common(inpaint, f);
  add_input(inpaint, f);
  inpaint->add_option("--mask", f.mask, "bernoulli:p | rect:x,y,w,h | file:path");
  add_normalization(inpaint, f);

  auto* flash = app.add_subcommand("flash", "Flash/no-flash reconstruction");
  add_common(flash, f);
  flash->add_option("--flash", f.flash, "Flash image (drives the code)");
  flash->add_option("--noflash", f.noflash, "No-flash image (the target)");
  flash->add_option("--gt", f.gt, "Ground truth for PSNR reporting");
  add_normalization(flash, f);

  auto* restore = app.add_subcommand("restore", "Generic restoration, e.g. compression artifacts");
  add_common(restore, f);
  add_input(restore, f);
  add_normalization(restore, f);

  auto* impedance = app.add_subcommand("impedance", "Fit natural, noisy, shuffled and white-noise targets");
  add_common(impedance, f);
  impedance->add_option("--input", f.input, "Natural image");
  add_normalization(impedance, f);

  auto* ablate = app.add_subcommand("ablate", "Architecture comparison on an inpainting instance");
  add_common(ablate, f);
  ablate->add_option("--input", f.input, "Clean image");
  ablate->add_option("--mask", f.mask, "bernoulli:p | rect:x,y,w,h | file:path");
  ablate->add_option("--archs", f.archs, "Comma-separated presets")->delimiter(',');
  add_normalization(ablate, f);

  auto* bench = app.add_subcommand("bench", "Dataset benchmark");
  add_common(bench, f);
  bench->add_option("--dataset", f.dataset, "Dataset directory");
  bench->add_option("--task", f.bench_task, "denoise or sr");
  bench->add_option("--manifest", f.manifest, "Manifest path (default DATASET/manifest.json)");
  bench->add_option("--sigma", f.sigma_synth, "Noise sigma for denoising (0-255)");
  bench->add_option("--factor", f.factor, "Upsampling factor for sr");
  add_normalization(bench, f);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      if (!app.get_subcommands().empty()) out << app.get_subcommands().front()->help();
      return kExitOk;
    }
    err << "dip: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::string task = app.get_subcommands().front()->get_name();
  try {
    const RunConfig config = resolve(task, f);
    validate(config);
    if (f.dry_run) {
      out << to_json(config).dump(2) << '\n';
      return kExitOk;
    }
    execute(config, err);
    out << "dip " << task << ": wrote " << config.out << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "dip: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "dip: ConfigError: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "dip: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace dip::cli

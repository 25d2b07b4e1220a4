#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "dip/cli.hpp"
#include "dip/error.hpp"
#include "dip/imaging.hpp"

namespace dip::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Rng streams derived from the run seed, one per independent random source.
enum Stream : std::uint64_t {
  kStreamNoise = 1,
  kStreamMask = 2,
  kStreamCode = 3,
  kStreamShuffle = 4,
  kStreamWhite = 5,
  kStreamDither = 6,
};

// Full-scale reference numbers, reported next to bench results and never
// used as pass/fail thresholds.
struct Reference {
  const char* method;
  const char* dataset;
  double psnr;
};
constexpr Reference kDenoiseReferences[] = {
    {"deep image prior (1800 steps)", "9 color images, sigma 25", 29.22},
    {"deep image prior (sliding-window average)", "9 color images, sigma 25", 30.43},
    {"deep image prior (two-run average)", "9 color images, sigma 25", 31.00},
    {"CBM3D", "9 color images, sigma 25", 31.42},
    {"non-local means", "9 color images, sigma 25", 30.26},
};
constexpr Reference kSrReferences[] = {
    {"deep image prior", "Set5 x4", 29.90},      {"deep image prior", "Set14 x4", 27.00},
    {"bicubic", "Set5 x4", 28.43},               {"bicubic", "Set14 x4", 26.05},
    {"SRResNet (trained)", "Set5 x4", 32.10},    {"SRResNet (trained)", "Set14 x4", 28.53},
};

std::mutex g_log_mutex;

void log_line(std::ostream& log, const std::string& line) {
  std::lock_guard lock(g_log_mutex);
  log << line << '\n' << std::flush;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string exact(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_trace(const fs::path& path, const std::vector<opt::TraceEntry>& trace) {
  std::ostringstream os;
  os << "iteration,energy,psnr_vs_gt\n";
  for (const auto& row : trace) {
    os << row.iteration << ',' << exact(row.energy) << ',';
    if (row.psnr) os << exact(*row.psnr);
    os << '\n';
  }
  write_text(path, os.str());
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Runs fn(0..n-1) on up to worker_count() threads; rethrows the exception of
// the lowest failing index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(n, worker_count());
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// One restoration problem: energy, optional ground truth, how to build z.
struct Problem {
  tasks::TaskEnergy energy;
  Tensor gt;
  std::size_t crop_border = 0;
  // Builds the code for a seed given the generator's padded spatial size.
  std::function<tasks::CodeInput(std::uint64_t seed, std::size_t h, std::size_t w)> make_code;
};

struct SeedRun {
  std::uint64_t seed = 0;
  opt::RestorationResult result;
};

net::ArchitectureSpec resolved_arch(net::ArchitectureSpec arch, const RunConfig& c, std::size_t image_channels) {
  arch.input_channels = c.code.channels;
  arch.output_channels = image_channels;
  arch.validate();
  return arch;
}

std::function<tasks::CodeInput(std::uint64_t, std::size_t, std::size_t)> noise_code(const RunConfig& c) {
  return [spec = c.code](std::uint64_t seed, std::size_t h, std::size_t w) {
    Rng rng(seed, kStreamCode);
    return tasks::make_code_input(h, w, rng, spec);
  };
}

std::function<double(const Tensor&)> psnr_metric(const Problem& p) {
  if (p.gt.empty()) return {};
  return [&p](const Tensor& x) { return img::psnr(x, p.gt, p.crop_border); };
}

opt::RestorationResult restore_once(const Problem& p, const net::ArchitectureSpec& arch, const RunConfig& c,
                                    std::uint64_t seed, const std::string& label, std::ostream& log) {
  const Shape gen = p.energy.generator_shape();
  const tasks::CodeInput code = p.make_code(seed, arch.padded_size(gen[1]), arch.padded_size(gen[2]));
  opt::OptimConfig cfg = c.optim;
  cfg.seed = seed;
  opt::RunHooks hooks;
  hooks.metric = psnr_metric(p);
  hooks.snapshot_at = c.snapshot_at;
  const std::size_t every = std::max<std::size_t>(1, cfg.iterations / 10);
  hooks.on_trace = [&](const opt::TraceEntry& row) {
    if (row.iteration % every != 0 && row.iteration != cfg.iterations) return;
    std::string line = label + " iteration " + std::to_string(row.iteration) + "/" + std::to_string(cfg.iterations) +
                       " energy " + exact(row.energy);
    if (row.psnr) line += " psnr " + fmt(*row.psnr, 2);
    log_line(log, line);
  };
  return opt::run_restoration(p.energy, arch, code, cfg, hooks);
}

std::vector<SeedRun> run_seeds(const Problem& p, const net::ArchitectureSpec& arch, const RunConfig& c,
                               std::ostream& log) {
  std::vector<SeedRun> runs(c.seeds.size());
  parallel_for(runs.size(), [&](std::size_t i) {
    runs[i].seed = c.seeds[i];
    runs[i].result = restore_once(p, arch, c, c.seeds[i], c.task + " seed " + std::to_string(c.seeds[i]), log);
  });
  return runs;
}

void write_run_images(const fs::path& dir, const opt::RestorationResult& r) {
  fs::create_directories(dir);
  img::save_tensor(dir / "final.png", r.final_image);
  img::save_tensor(dir / "ema.png", r.ema_image);
  write_trace(dir / "trace.csv", r.trace);
  for (const auto& s : r.snapshots) {
    img::save_tensor(dir / ("snapshot_" + std::to_string(s.iteration) + ".png"), s.image);
  }
}

// Shared output protocol of the single-image tasks.
json write_results(const RunConfig& c, const Problem& p, const std::vector<SeedRun>& runs, double wall_seconds) {
  const fs::path out = c.out;
  write_run_images(out, runs.front().result);
  if (runs.size() > 1) {
    for (const SeedRun& r : runs) write_run_images(out / ("seed_" + std::to_string(r.seed)), r.result);
  }

  json per_seed = json::array();
  for (const SeedRun& r : runs) {
    per_seed.push_back({{"seed", r.seed},
                        {"psnr_final", optional_number(r.result.psnr_final)},
                        {"psnr_ema", optional_number(r.result.psnr_ema)},
                        {"final_energy", r.result.trace.back().energy},
                        {"wall_time_s", r.result.wall_seconds}});
  }
  const opt::RestorationResult& first = runs.front().result;
  json result{{"task", c.task},
              {"config_hash", config_hash(c)},
              {"seeds", c.seeds},
              {"iterations", c.optim.iterations},
              {"parameter_count", first.parameter_count},
              {"psnr_final", optional_number(first.psnr_final)},
              {"psnr_ema", optional_number(first.psnr_ema)},
              {"final_energy", first.trace.back().energy},
              {"runs", per_seed},
              {"wall_time_s", wall_seconds},
              {"config", to_json(c)}};

  if (c.average) {
    Tensor avg(first.ema_image.shape());
    for (const SeedRun& r : runs) axpy_inplace(avg, r.result.ema_image, 1.0 / static_cast<double>(runs.size()));
    img::save_tensor(out / "average.png", avg);
    result["psnr_average"] = p.gt.empty() ? json(nullptr) : json(img::psnr(avg, p.gt, p.crop_border));
  }
  return result;
}

Tensor load_optional(const std::string& path) { return path.empty() ? Tensor() : img::load_tensor(path); }

void require_gt_shape(const Tensor& gt, const Shape& shape) {
  if (!gt.empty() && gt.shape() != shape) {
    throw Error(ErrorKind::ShapeMismatch,
                "ground truth " + shape_to_string(gt.shape()) + " does not match " + shape_to_string(shape));
  }
}

std::size_t border_or(const RunConfig& c, std::size_t fallback) { return c.crop_border.value_or(fallback); }

// ---- single-image tasks -------------------------------------------------------

void cmd_reconstruct(const RunConfig& c, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  Tensor observed = img::load_tensor(c.input);
  Tensor gt = load_optional(c.gt);
  fs::create_directories(c.out);
  if (c.sigma_synth) {
    if (gt.empty()) gt = observed;
    Rng rng(c.seeds.front(), kStreamNoise);
    observed = img::add_gaussian_noise(gt, *c.sigma_synth, rng);
    img::save_tensor(fs::path(c.out) / "noisy.png", observed);
  }
  require_gt_shape(gt, observed.shape());
  Problem p{tasks::TaskEnergy::reconstruction(observed, c.normalization), gt, border_or(c, 0), noise_code(c)};
  const net::ArchitectureSpec arch = resolved_arch(c.arch, c, observed.dim(0));
  const auto runs = run_seeds(p, arch, c, log);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json result = write_results(c, p, runs, wall);
  if (!gt.empty()) result["psnr_input"] = img::psnr(observed, gt, p.crop_border);
  write_json(fs::path(c.out) / "result.json", result);
}

void cmd_sr(const RunConfig& c, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  const Tensor low = img::load_tensor(c.input);
  const Tensor gt = load_optional(c.gt);
  require_gt_shape(gt, {low.dim(0), low.dim(1) * c.factor, low.dim(2) * c.factor});
  fs::create_directories(c.out);
  Problem p{tasks::TaskEnergy::super_resolution(low, c.factor), gt, border_or(c, c.factor), noise_code(c)};
  const net::ArchitectureSpec arch = resolved_arch(c.arch, c, low.dim(0));
  const auto runs = run_seeds(p, arch, c, log);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json result = write_results(c, p, runs, wall);
  const Tensor bicubic = img::bicubic_up(low, c.factor);
  img::save_tensor(fs::path(c.out) / "bicubic.png", bicubic);
  result["psnr_bicubic"] = gt.empty() ? json(nullptr) : json(img::psnr(bicubic, gt, p.crop_border));
  result["data_term"] = p.energy.evaluate(runs.front().result.final_image);
  write_json(fs::path(c.out) / "result.json", result);
}

void cmd_inpaint(const RunConfig& c, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  const Tensor image = img::load_tensor(c.input);
  const Tensor gt = load_optional(c.gt);
  require_gt_shape(gt, image.shape());
  Rng mask_rng(c.seeds.front(), kStreamMask);
  const Tensor mask = img::make_mask(img::MaskSpec::parse(c.mask), image.shape(), mask_rng);
  const Tensor observed = mul(image, mask);
  fs::create_directories(c.out);
  img::save_tensor(fs::path(c.out) / "mask.png", mask);
  img::save_tensor(fs::path(c.out) / "masked.png", observed);
  Problem p{tasks::TaskEnergy::inpainting(observed, mask, c.normalization), gt, border_or(c, 0), noise_code(c)};
  const net::ArchitectureSpec arch = resolved_arch(c.arch, c, image.dim(0));
  const auto runs = run_seeds(p, arch, c, log);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json result = write_results(c, p, runs, wall);
  double known = 0.0;
  for (double m : mask.data()) known += m;
  result["known_fraction"] = known / static_cast<double>(mask.numel());
  write_json(fs::path(c.out) / "result.json", result);
}

void cmd_flash(const RunConfig& c, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  const tasks::FlashPair pair{img::load_tensor(c.flash), img::load_tensor(c.noflash)};
  require_same_shape(pair.flash, pair.noflash, "flash/no-flash pair");
  const Tensor gt = load_optional(c.gt);
  require_gt_shape(gt, pair.noflash.shape());
  fs::create_directories(c.out);
  const net::ArchitectureSpec arch = resolved_arch(c.arch, c, pair.noflash.dim(0));
  Problem p{tasks::TaskEnergy::reconstruction(pair.noflash, c.normalization), gt, border_or(c, 0),
            [&pair, &c](std::uint64_t seed, std::size_t h, std::size_t w) {
              Rng rng(seed, kStreamDither);
              return tasks::flash_noflash_setup(pair, c.code.channels, rng, h, w, 0.01, c.code.perturb_std).code;
            }};
  const auto runs = run_seeds(p, arch, c, log);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_json(fs::path(c.out) / "result.json", write_results(c, p, runs, wall));
}

// ---- harnesses -----------------------------------------------------------------

void cmd_impedance(const RunConfig& c, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  const Tensor natural = img::load_tensor(c.input);
  const std::uint64_t seed = c.seeds.front();
  Rng noise_rng(seed, kStreamNoise), shuffle_rng(seed, kStreamShuffle), white_rng(seed, kStreamWhite);
  const std::vector<std::pair<std::string, Tensor>> targets{
      {"natural", natural},
      {"noisy", img::add_gaussian_noise(natural, 25.0, noise_rng)},
      {"shuffled", img::shuffle_pixels(natural, shuffle_rng)},
      {"white", rand_uniform(white_rng, natural.shape(), 0.0, 1.0)},
  };
  const net::ArchitectureSpec arch = resolved_arch(c.arch, c, natural.dim(0));
  std::vector<opt::RestorationResult> results(targets.size());
  parallel_for(targets.size(), [&](std::size_t i) {
    const Problem p{tasks::TaskEnergy::reconstruction(targets[i].second, c.normalization), Tensor(), 0,
                    noise_code(c)};
    results[i] = restore_once(p, arch, c, seed, "impedance " + targets[i].first, log);
  });

  const fs::path out = c.out;
  fs::create_directories(out);
  json final_loss;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    write_trace(out / ("trace_" + targets[i].first + ".csv"), results[i].trace);
    img::save_tensor(out / ("target_" + targets[i].first + ".png"), targets[i].second);
    final_loss[targets[i].first] = results[i].trace.back().energy;
  }
  const double nat = final_loss["natural"], noisy = final_loss["noisy"], shuf = final_loss["shuffled"],
               white = final_loss["white"];
  json ordering{{"natural_lt_shuffled", nat < shuf},
                {"natural_lt_white", nat < white},
                {"noisy_lt_shuffled", noisy < shuf},
                {"natural_lt_noisy", nat < noisy}};
  json summary{{"task", "impedance"},
               {"config_hash", config_hash(c)},
               {"seeds", c.seeds},
               {"iterations", c.optim.iterations},
               {"final_loss", final_loss},
               {"ordering", ordering},
               {"natural_fastest", nat < shuf && nat < white},
               {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()},
               {"config", to_json(c)}};
  write_json(out / "summary.json", summary);
  log_line(log, "impedance final losses: natural " + exact(nat) + ", noisy " + exact(noisy) + ", shuffled " +
                    exact(shuf) + ", white " + exact(white));
}

void cmd_ablate(const RunConfig& c, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  const Tensor image = img::load_tensor(c.input);
  Rng mask_rng(c.seeds.front(), kStreamMask);
  const Tensor mask = img::make_mask(img::MaskSpec::parse(c.mask), image.shape(), mask_rng);
  const Problem p{tasks::TaskEnergy::inpainting(mul(image, mask), mask, c.normalization), image, border_or(c, 0),
                  noise_code(c)};

  std::vector<net::ArchitectureSpec> archs;
  for (const std::string& name : c.archs) archs.push_back(resolved_arch(net::ArchitectureSpec::preset(name), c, image.dim(0)));
  std::vector<opt::RestorationResult> results(archs.size());
  parallel_for(archs.size(), [&](std::size_t i) {
    results[i] = restore_once(p, archs[i], c, c.seeds.front(), "ablate " + c.archs[i], log);
  });

  const fs::path out = c.out;
  fs::create_directories(out);
  std::ostringstream csv;
  csv << "arch,params,psnr_final,psnr_ema,final_energy\n";
  json rows = json::array();
  for (std::size_t i = 0; i < archs.size(); ++i) {
    const auto& r = results[i];
    csv << c.archs[i] << ',' << r.parameter_count << ',' << exact(*r.psnr_final) << ',' << exact(*r.psnr_ema) << ','
        << exact(r.trace.back().energy) << '\n';
    rows.push_back({{"arch", c.archs[i]},
                    {"params", r.parameter_count},
                    {"psnr_final", *r.psnr_final},
                    {"psnr_ema", *r.psnr_ema},
                    {"final_energy", r.trace.back().energy},
                    {"wall_time_s", r.wall_seconds}});
    img::save_tensor(out / ("ablate_" + c.archs[i] + ".png"), r.final_image);
    write_trace(out / ("trace_" + c.archs[i] + ".csv"), r.trace);
  }
  write_text(out / "ablation.csv", csv.str());

  // The depth finding is reported, not asserted.
  json depth;
  std::optional<double> previous;
  bool monotone = true;
  for (std::size_t i = 0; i < c.archs.size(); ++i) {
    if (c.archs[i].rfind("ed", 0) != 0) continue;
    depth[c.archs[i]] = *results[i].psnr_final;
    if (previous && *results[i].psnr_final <= *previous) monotone = false;
    previous = results[i].psnr_final;
  }
  write_json(out / "result.json",
             {{"task", "ablate"},
              {"config_hash", config_hash(c)},
              {"seeds", c.seeds},
              {"iterations", c.optim.iterations},
              {"rows", rows},
              {"encoder_decoder_psnr_by_depth", depth},
              {"deeper_encoder_decoder_better", monotone},
              {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()},
              {"config", to_json(c)}});
}

struct BenchItem {
  std::string name;
  Tensor gt;
  Tensor observed;
};

void cmd_bench(const RunConfig& c, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  const fs::path dataset = c.dataset;
  if (!fs::is_directory(dataset)) throw Error(ErrorKind::ConfigError, "dataset directory not found: " + c.dataset);
  const fs::path manifest_path = c.manifest.empty() ? dataset / "manifest.json" : fs::path(c.manifest);
  if (!fs::exists(manifest_path)) throw Error(ErrorKind::ConfigError, "missing manifest " + manifest_path.string());
  json manifest;
  try {
    std::ifstream in(manifest_path);
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, "manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!manifest.is_object() || !manifest.contains("images") || !manifest["images"].is_array()) {
    throw Error(ErrorKind::ConfigError, "manifest needs an \"images\" array");
  }
  if (manifest["images"].empty()) throw Error(ErrorKind::ConfigError, "dataset is empty");
  const bool sr = c.bench_task == "sr";
  const double sigma = c.sigma_synth.value_or(manifest.value("sigma", 25.0));
  const std::size_t factor = manifest.contains("factor") && c.factor == 4 ? manifest["factor"].get<std::size_t>()
                                                                          : c.factor;

  std::vector<BenchItem> items;
  for (const json& entry : manifest["images"]) {
    if (!entry.is_object() || !entry.contains("gt")) throw Error(ErrorKind::ConfigError, "manifest entries need \"gt\"");
    BenchItem item;
    const std::string gt_rel = entry["gt"].get<std::string>();
    item.name = entry.value("name", fs::path(gt_rel).stem().string());
    item.gt = img::load_tensor(dataset / gt_rel);
    if (sr) item.gt = img::crop_to_multiple(item.gt, factor);
    if (entry.contains("input")) {
      item.observed = img::load_tensor(dataset / entry["input"].get<std::string>());
    } else if (sr) {
      item.observed = img::degrade_for_sr(item.gt, factor);
    } else {
      Rng rng(c.seeds.front(), kStreamNoise + 16 * items.size());
      item.observed = img::add_gaussian_noise(item.gt, sigma, rng);
    }
    items.push_back(std::move(item));
  }

  std::vector<Problem> problems;
  problems.reserve(items.size());
  for (const BenchItem& item : items) {
    if (sr) {
      problems.push_back({tasks::TaskEnergy::super_resolution(item.observed, factor), item.gt,
                          border_or(c, factor), noise_code(c)});
    } else {
      problems.push_back({tasks::TaskEnergy::reconstruction(item.observed, c.normalization), item.gt,
                          border_or(c, 0), noise_code(c)});
    }
    require_gt_shape(item.gt, problems.back().energy.generator_shape());
  }

  std::vector<opt::RestorationResult> results(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const net::ArchitectureSpec arch = resolved_arch(c.arch, c, items[i].gt.dim(0));
    results[i] = restore_once(problems[i], arch, c, c.seeds.front(), "bench " + items[i].name, log);
  });

  const fs::path out = c.out;
  fs::create_directories(out);
  std::ostringstream csv;
  const std::string baseline = sr ? "bicubic" : "noisy_input";
  csv << "image,dip_psnr_final,dip_psnr_ema," << baseline << "_psnr,data_term\n";
  json rows = json::array();
  double sum_final = 0, sum_ema = 0, sum_base = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Problem& p = problems[i];
    const Tensor base = sr ? img::bicubic_up(items[i].observed, factor) : items[i].observed;
    const double base_psnr = img::psnr(base, p.gt, p.crop_border);
    const double data_term = p.energy.evaluate(results[i].final_image);
    write_run_images(out / items[i].name, results[i]);
    if (sr) img::save_tensor(out / items[i].name / "bicubic.png", base);
    csv << items[i].name << ',' << exact(*results[i].psnr_final) << ',' << exact(*results[i].psnr_ema) << ','
        << exact(base_psnr) << ',' << exact(data_term) << '\n';
    rows.push_back({{"image", items[i].name},
                    {"dip_psnr_final", *results[i].psnr_final},
                    {"dip_psnr_ema", *results[i].psnr_ema},
                    {baseline + "_psnr", base_psnr},
                    {"data_term", data_term},
                    {"wall_time_s", results[i].wall_seconds}});
    sum_final += *results[i].psnr_final;
    sum_ema += *results[i].psnr_ema;
    sum_base += base_psnr;
  }
  write_text(out / "bench.csv", csv.str());

  const double n = static_cast<double>(items.size());
  json refs = json::array();
  std::ostringstream md;
  md << "# dip bench: " << c.bench_task << "\n\n"
     << "Desk-scale run: " << items.size() << " image(s), " << c.optim.iterations << " iterations, seed "
     << c.seeds.front() << ".\n\n| image | DIP final | DIP EMA | " << baseline << " |\n|---|---|---|---|\n";
  for (const json& r : rows) {
    md << "| " << r["image"].get<std::string>() << " | " << fmt(r["dip_psnr_final"], 2) << " | "
       << fmt(r["dip_psnr_ema"], 2) << " | " << fmt(r[baseline + "_psnr"], 2) << " |\n";
  }
  md << "| **mean** | " << fmt(sum_final / n, 2) << " | " << fmt(sum_ema / n, 2) << " | " << fmt(sum_base / n, 2)
     << " |\n\n## Reference values (informational)\n\nThese are full-scale paper values on the original datasets "
        "at full resolution. They are not comparable with a desk-scale run and are never pass/fail criteria.\n\n"
        "| method | dataset | PSNR (dB) | label |\n|---|---|---|---|\n";
  auto add_refs = [&](const auto& table) {
    for (const Reference& r : table) {
      refs.push_back({{"method", r.method}, {"dataset", r.dataset}, {"psnr", r.psnr}, {"label", "full-scale paper value"}});
      md << "| " << r.method << " | " << r.dataset << " | " << fmt(r.psnr, 2) << " | full-scale paper value |\n";
    }
  };
  if (sr) {
    add_refs(kSrReferences);
  } else {
    add_refs(kDenoiseReferences);
  }
  write_text(out / "report.md", md.str());
  write_json(out / "report.json",
             {{"task", "bench"},
              {"bench_task", c.bench_task},
              {"config_hash", config_hash(c)},
              {"seeds", c.seeds},
              {"iterations", c.optim.iterations},
              {"rows", rows},
              {"mean", {{"dip_psnr_final", sum_final / n}, {"dip_psnr_ema", sum_ema / n}, {baseline + "_psnr", sum_base / n}}},
              {"reference", refs},
              {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()},
              {"config", to_json(c)}});
}

}  // namespace

void execute(const RunConfig& c, std::ostream& log) {
  validate(c);
  if (c.task == "denoise" || c.task == "restore") return cmd_reconstruct(c, log);
  if (c.task == "sr") return cmd_sr(c, log);
  if (c.task == "inpaint") return cmd_inpaint(c, log);
  if (c.task == "flash") return cmd_flash(c, log);
  if (c.task == "impedance") return cmd_impedance(c, log);
  if (c.task == "ablate") return cmd_ablate(c, log);
  if (c.task == "bench") return cmd_bench(c, log);
  throw Error(ErrorKind::ConfigError, "unknown task '" + c.task + "'");
}

}  // namespace dip::cli

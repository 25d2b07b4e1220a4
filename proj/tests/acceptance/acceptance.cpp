// Acceptance gate: one PASS/FAIL line per criterion. Exit status is nonzero
// if any selected criterion fails.
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "dip/autograd.hpp"
#include "dip/cli.hpp"
#include "dip/error.hpp"
#include "dip/imaging.hpp"
#include "dip/network.hpp"
#include "dip/tasks.hpp"

using namespace dip;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData = DIP_TEST_DATA_DIR;

// AC3 margin, frozen from the pilot (seed 1001, see --pilot): the pilot's EMA
// gain over the noisy input was 3.30 dB; the rule fixed before the pilot ran
// is half the pilot gain, rounded down to 0.1 dB.
constexpr double kDenoiseMarginDb = 1.6;
constexpr std::uint64_t kPilotSeed = 1001;

struct Options {
  fs::path work;
  bool verbose = false;
};

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v, int precision = 3) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// Runs the dip command line in-process; throws on a nonzero exit.
void dip(const Options& o, std::vector<std::string> args) {
  std::ostringstream out, err;
  std::ostream& log = o.verbose ? std::cerr : err;
  const int code = cli::run(args, out, log);
  if (code != 0) {
    std::string joined;
    for (const auto& a : args) joined += " " + a;
    throw std::runtime_error("dip" + joined + " exited " + std::to_string(code) + ": " + err.str());
  }
}

fs::path fresh(const Options& o, const std::string& name) {
  const fs::path p = o.work / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---- AC1: gradient oracle --------------------------------------------------------

using ag::Tape;
using ag::Variable;

struct GradCase {
  std::vector<Tensor> params;
  ag::ScalarFn f;
};

Variable project(Tape& tape, const Variable& out, std::uint64_t seed) {
  Rng rng(seed);
  return ag::sum(ag::mul(out, tape.constant(rand_normal(rng, out.shape(), 0, 1))));
}

Shape small_shape(Rng& rng, std::size_t min_side = 1) {
  return {1 + rng.below(3), min_side + rng.below(5), min_side + rng.below(5)};
}

GradCase unary(Rng& rng, const Shape& s, std::function<Variable(const Variable&)> op, double sd = 1.0) {
  const std::uint64_t ps = rng.next_u64();
  return {{rand_normal(rng, s, 0, sd)},
          [op, ps](Tape& t, std::span<const Variable> p) { return project(t, op(p[0]), ps); }};
}

GradCase binary(Rng& rng, const Shape& a, const Shape& b,
                std::function<Variable(const Variable&, const Variable&)> op) {
  const std::uint64_t ps = rng.next_u64();
  return {{rand_normal(rng, a, 0, 1), rand_normal(rng, b, 0, 1)},
          [op, ps](Tape& t, std::span<const Variable> p) { return project(t, op(p[0], p[1]), ps); }};
}

Tensor half_mask(Rng& rng, const Shape& s) {
  Tensor m(s);
  for (double& v : m.data()) v = rng.next_double() < 0.5 ? 0.0 : 1.0;
  return m;
}

struct OpResult {
  double worst = 0.0;
  std::size_t checked = 0;
};

OpResult sweep_op(const std::string& name, const std::function<GradCase(Rng&)>& make) {
  Rng rng(std::hash<std::string>{}(name) ^ 0xac1);
  OpResult r;
  for (int trial = 0; trial < 40; ++trial) {
    const GradCase c = make(rng);
    ag::GradCheckOptions opt;
    opt.samples = 10;
    opt.seed = static_cast<std::uint64_t>(trial);
    const ag::GradCheckReport rep = ag::grad_check(c.f, c.params, opt);
    r.worst = std::max(r.worst, rep.max_rel_error);
    r.checked += rep.checked;
  }
  return r;
}

Verdict ac1(const Options&) {
  Timer timer;
  using kernels::ConvGeometry;
  using kernels::ResampleMode;
  const std::vector<std::pair<std::string, std::function<GradCase(Rng&)>>> ops{
      {"add", [](Rng& r) { const Shape s = small_shape(r); return binary(r, s, s, ag::add); }},
      {"sub", [](Rng& r) { const Shape s = small_shape(r); return binary(r, s, s, ag::sub); }},
      {"mul", [](Rng& r) { const Shape s = small_shape(r); return binary(r, s, s, ag::mul); }},
      {"scale", [](Rng& r) {
         const double c = r.uniform(-3, 3);
         return unary(r, small_shape(r), [c](const Variable& v) { return ag::scale(v, c); });
       }},
      {"sum", [](Rng& r) { return unary(r, small_shape(r), ag::sum); }},
      {"mean", [](Rng& r) { return unary(r, small_shape(r), ag::mean); }},
      {"conv2d", [](Rng& r) {
         const std::size_t k = 1 + r.below(3), ci = 1 + r.below(3), co = 1 + r.below(3);
         const ConvGeometry g{1 + r.below(2), r.below(2)};
         return binary(r, {ci, k + r.below(4), k + r.below(4)}, {co, ci, k, k},
                       [g](const Variable& x, const Variable& w) { return ag::conv2d(x, w, g); });
       }},
      {"bias_add", [](Rng& r) { const Shape s = small_shape(r); return binary(r, s, {s[0]}, ag::bias_add); }},
      {"resample", [](Rng& r) {
         const ResampleMode modes[] = {ResampleMode::NearestUp, ResampleMode::BilinearUp, ResampleMode::LanczosDown,
                                       ResampleMode::BicubicUp};
         const ResampleMode m = modes[r.below(4)];
         const std::size_t t = 1 + r.below(3);
         const Shape s{1 + r.below(2), t * (1 + r.below(4)), t * (1 + r.below(4))};
         return unary(r, s, [m, t](const Variable& v) { return ag::resample(v, m, t); });
       }},
      {"nearest_up", [](Rng& r) {
         const std::size_t t = 1 + r.below(3);
         return unary(r, small_shape(r), [t](const Variable& v) { return ag::nearest_up(v, t); });
       }},
      {"bilinear_up", [](Rng& r) {
         const std::size_t t = 1 + r.below(3);
         return unary(r, small_shape(r), [t](const Variable& v) { return ag::bilinear_up(v, t); });
       }},
      {"lanczos_down", [](Rng& r) {
         const std::size_t t = 1 + r.below(4);
         return unary(r, {1 + r.below(3), t * (1 + r.below(4)), t * (1 + r.below(4))},
                      [t](const Variable& v) { return ag::lanczos_down(v, t); });
       }},
      {"leaky_relu", [](Rng& r) {
         const double slope = r.uniform(0, 0.5);
         return unary(r, small_shape(r), [slope](const Variable& v) { return ag::leaky_relu(v, slope); });
       }},
      {"sigmoid", [](Rng& r) { return unary(r, small_shape(r), ag::sigmoid, 3.0); }},
      {"instance_norm", [](Rng& r) {
         const Shape s = small_shape(r, 2);
         const std::uint64_t ps = r.next_u64();
         return GradCase{{rand_normal(r, s, 0, 1), rand_normal(r, {s[0]}, 1, 0.5), rand_normal(r, {s[0]}, 0, 1)},
                         [ps](Tape& t, std::span<const Variable> p) {
                           return project(t, ag::instance_norm(p[0], p[1], p[2]), ps);
                         }};
       }},
      {"concat_channels", [](Rng& r) {
         const Shape a = small_shape(r);
         return binary(r, a, {1 + r.below(3), a[1], a[2]}, ag::concat_channels);
       }},
      {"crop", [](Rng& r) {
         const Shape s = small_shape(r, 3);
         const std::size_t top = r.below(2), left = r.below(2);
         const std::size_t h = 1 + r.below(s[1] - top), w = 1 + r.below(s[2] - left);
         return unary(r, s, [=](const Variable& v) { return ag::crop(v, top, left, h, w); });
       }},
      {"mse", [](Rng& r) { const Shape s = small_shape(r); return binary(r, s, s, ag::mse); }},
      {"sse", [](Rng& r) { const Shape s = small_shape(r); return binary(r, s, s, ag::sse); }},
      {"masked_sse", [](Rng& r) {
         const Shape s = small_shape(r);
         const Tensor m = half_mask(r, s);
         return binary(r, s, s, [m](const Variable& a, const Variable& b) { return ag::masked_sse(a, b, m); });
       }},
      {"masked_mse", [](Rng& r) {
         const Shape s = small_shape(r);
         const Tensor m = half_mask(r, s);
         return binary(r, s, s, [m](const Variable& a, const Variable& b) { return ag::masked_mse(a, b, m); });
       }},
  };

  bool ok = true;
  double worst = 0.0;
  std::size_t fewest = SIZE_MAX;
  std::string failures;
  for (const auto& [name, make] : ops) {
    const OpResult r = sweep_op(name, make);
    worst = std::max(worst, r.worst);
    fewest = std::min(fewest, r.checked);
    if (!(r.worst < 1e-4) || r.checked < 100) {
      ok = false;
      failures += " " + name + "(" + num(r.worst) + "," + std::to_string(r.checked) + ")";
    }
  }

  // Depth-3 hourglass composed with each task energy.
  net::ArchitectureSpec spec = net::ArchitectureSpec::hourglass();
  spec.depth = 3;
  spec.channels = {16, 32, 64};
  spec.skip_channels = {4, 4, 4};
  spec.input_channels = 8;
  const net::Generator g = net::build(spec);
  const net::ParameterSet params = g.init(21);
  Rng rng(22);
  const Tensor z = rand_uniform(rng, {8, 32, 32}, 0.0, 0.1);
  const Tensor clean = rand_uniform(rng, {3, 32, 32}, 0.0, 1.0);
  const Tensor mask = half_mask(rng, {3, 32, 32});
  const std::vector<std::pair<std::string, tasks::TaskEnergy>> energies{
      {"reconstruction", tasks::TaskEnergy::reconstruction(clean)},
      {"super_resolution", tasks::TaskEnergy::super_resolution(rand_uniform(rng, {3, 8, 8}, 0, 1), 4)},
      {"inpainting", tasks::TaskEnergy::inpainting(mul(clean, mask), mask)},
  };
  std::string hourglass;
  for (const auto& [name, energy] : energies) {
    const ag::ScalarFn f = [&](Tape& tape, std::span<const Variable> p) {
      return energy.evaluate(g.forward(p, tape.constant(z)));
    };
    ag::GradCheckOptions opt;
    opt.samples = 240;
    opt.seed = 23;
    const ag::GradCheckReport r = ag::grad_check(f, params.tensors(), opt);
    worst = std::max(worst, r.max_rel_error);
    hourglass += " " + name + ":" + num(r.max_rel_error) + "/" + std::to_string(r.checked);
    if (!(r.max_rel_error < 1e-4) || r.checked < 100) {
      ok = false;
      failures += " hourglass+" + name;
    }
  }
  const double secs = timer.seconds();
  if (secs >= 120.0) {
    ok = false;
    failures += " runtime";
  }
  return {ok, std::to_string(ops.size()) + " ops, fewest checked " + std::to_string(fewest) + ", max rel " +
                  num(worst) + "; hourglass d3" + hourglass + "; " + num(secs, 3) + " s" +
                  (failures.empty() ? "" : "; failing:" + failures)};
}

// ---- AC2: noise impedance ---------------------------------------------------------

Verdict ac2(const Options& o) {
  Timer timer;
  const fs::path out = fresh(o, "ac2");
  dip(o, {"impedance", "--input", (kData / "natural_64.png").string(), "--iters", "500", "--seed", "0", "--out",
          out.string()});
  const double secs = timer.seconds();
  const json s = read_json(out / "summary.json");
  const json& l = s["final_loss"];
  const double nat = l["natural"], noisy = l["noisy"], shuf = l["shuffled"], white = l["white"];
  const bool ok = nat < shuf && nat < white && noisy < shuf && secs < 600.0;
  return {ok, "final loss natural " + num(nat, 4) + ", noisy " + num(noisy, 4) + ", shuffled " + num(shuf, 4) +
                  ", white " + num(white, 4) + "; " + num(secs, 4) + " s"};
}

// ---- AC3: desk-scale denoising ---------------------------------------------------------

struct DenoiseOutcome {
  double psnr_noisy;
  double psnr_ema;
  double seconds;
};

DenoiseOutcome run_denoise(const Options& o, std::uint64_t seed, const std::string& name) {
  Timer timer;
  const fs::path out = fresh(o, name);
  dip(o, {"denoise", "--input", (kData / "denoise_128.png").string(), "--sigma-synth", "25", "--seed",
          std::to_string(seed), "--trace-every", "100", "--out", out.string()});
  const json r = read_json(out / "result.json");
  return {r["psnr_input"], r["psnr_ema"], timer.seconds()};
}

Verdict ac3(const Options& o) {
  const DenoiseOutcome d = run_denoise(o, 0, "ac3");
  const double gain = d.psnr_ema - d.psnr_noisy;
  const bool ok = gain > kDenoiseMarginDb && d.seconds <= 1800.0;
  return {ok, "PSNR noisy " + num(d.psnr_noisy, 4) + " dB, EMA " + num(d.psnr_ema, 4) + " dB, gain " + num(gain, 3) +
                  " dB (margin " + num(kDenoiseMarginDb) + " dB); " + num(d.seconds, 4) + " s"};
}

// ---- AC4: inpainting invariance -------------------------------------------------------

Verdict ac4(const Options&) {
  net::ArchitectureSpec spec = net::ArchitectureSpec::hourglass();
  spec.depth = 3;
  spec.channels = {16, 32, 64};
  spec.skip_channels = {4, 4, 4};
  spec.input_channels = 8;
  const net::Generator g = net::build(spec);
  const net::ParameterSet params = g.init(41);
  Rng rng(42);
  const Tensor z = rand_uniform(rng, {8, 32, 32}, 0.0, 0.1);
  const Tensor image = rand_uniform(rng, {3, 32, 32}, 0.0, 1.0);
  Tensor mask(image.shape());
  for (double& m : mask.data()) m = rng.next_double() < 0.5 ? 0.0 : 1.0;

  struct Eval {
    double energy;
    std::vector<Tensor> grads;
  };
  auto evaluate = [&](const tasks::TaskEnergy& e) {
    Tape tape;
    const auto bound = g.forward(tape, params, z, true);
    const Variable loss = e.evaluate(bound.image);
    const ag::Gradients grads = tape.backward(loss);
    Eval out{loss.value().item(), {}};
    for (const Variable& p : bound.params) out.grads.push_back(*grads.find(p));
    return out;
  };
  auto bitwise = [](const Eval& a, const Eval& b) {
    if (a.energy != b.energy || a.grads.size() != b.grads.size()) return false;
    for (std::size_t i = 0; i < a.grads.size(); ++i) {
      if (!(a.grads[i] == b.grads[i])) return false;
    }
    return true;
  };

  bool invariant = true;
  std::size_t trials = 0;
  for (auto norm : {tasks::Normalization::Sum, tasks::Normalization::Mean}) {
    const Eval base = evaluate(tasks::TaskEnergy::inpainting(image, mask, norm));
    for (int t = 0; t < 5; ++t, ++trials) {
      Tensor scrambled = image;
      for (std::size_t i = 0; i < scrambled.numel(); ++i) {
        if (mask[i] == 0.0) scrambled[i] = rng.uniform(-1e3, 1e3);
      }
      invariant = invariant && bitwise(base, evaluate(tasks::TaskEnergy::inpainting(scrambled, mask, norm)));
    }
  }
  const Tensor ones = new_filled(image.shape(), 1.0);
  const bool full = bitwise(evaluate(tasks::TaskEnergy::inpainting(image, ones, tasks::Normalization::Sum)),
                            evaluate(tasks::TaskEnergy::reconstruction(image, tasks::Normalization::Sum)));
  return {invariant && full, std::to_string(trials) + " scrambles of masked pixels " +
                                 (invariant ? "bitwise invariant" : "CHANGED the energy or gradients") +
                                 "; all-ones mask " + (full ? "equals" : "differs from") +
                                 " the unnormalized reconstruction energy"};
}

// ---- AC5: desk-scale super-resolution -----------------------------------------------------

Verdict ac5(const Options& o, std::uint64_t seed = 0, const std::string& name = "ac5") {
  Timer timer;
  const fs::path out = fresh(o, name);
  dip(o, {"bench", "--dataset", (kData / "sr_set").string(), "--task", "sr", "--factor", "4", "--seed",
          std::to_string(seed), "--trace-every", "100", "--out", out.string()});
  const json report = read_json(out / "report.json");
  bool ok = true;
  std::string detail;
  for (const json& row : report["rows"]) {
    const double dip_psnr = row["dip_psnr_final"], bicubic = row["bicubic_psnr"], data_term = row["data_term"];
    const bool row_ok = data_term < 1e-3 && dip_psnr >= bicubic - 0.5;
    ok = ok && row_ok;
    detail += row["image"].get<std::string>() + ": data " + num(data_term, 3) + ", DIP " + num(dip_psnr, 4) +
              " vs bicubic " + num(bicubic, 4) + " dB" + (row_ok ? "" : " [fail]") + "; ";
  }
  ok = ok && report["rows"].size() == 3;
  return {ok, detail + num(timer.seconds(), 4) + " s"};
}

// ---- AC6: determinism ---------------------------------------------------------------------

void strip_wall_time(json& j) {
  if (j.is_object()) {
    j.erase("wall_time_s");
    for (auto& [k, v] : j.items()) strip_wall_time(v);
  } else if (j.is_array()) {
    for (auto& v : j) strip_wall_time(v);
  }
}

// Compares two output trees file by file; JSON files modulo wall-clock keys.
std::string diff_trees(const fs::path& a, const fs::path& b, std::size_t& files) {
  std::vector<fs::path> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
  }
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) return "different file sets";
  for (const fs::path& r : rel_a) {
    ++files;
    std::string x = slurp(a / r), y = slurp(b / r);
    if (r.extension() == ".json") {
      json jx = json::parse(x), jy = json::parse(y);
      strip_wall_time(jx);
      strip_wall_time(jy);
      x = jx.dump();
      y = jy.dump();
    }
    if (x != y) return r.string();
  }
  return {};
}

Verdict ac6(const Options& o) {
  const std::string nat = (kData / "natural_64.png").string();
  const std::string inp = (kData / "inpaint_64.png").string();
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
      {"denoise", {"denoise", "--input", nat, "--sigma-synth", "25", "--iters", "4", "--seeds", "2", "--average"}},
      {"sr", {"sr", "--input", (kData / "natural_64.png").string(), "--factor", "2", "--iters", "3"}},
      {"inpaint", {"inpaint", "--input", inp, "--mask", "bernoulli:0.5", "--iters", "3"}},
      {"flash", {"flash", "--flash", nat, "--noflash", inp, "--iters", "3"}},
      {"restore", {"restore", "--input", nat, "--iters", "4", "--snapshot-at", "2"}},
      {"impedance", {"impedance", "--input", nat, "--iters", "3"}},
      {"ablate", {"ablate", "--input", inp, "--iters", "2"}},
      {"bench", {"bench", "--dataset", (kData / "sr_set").string(), "--task", "sr", "--iters", "2"}},
  };
  bool ok = true;
  std::size_t files = 0;
  std::string detail;
  for (const auto& [name, args] : runs) {
    std::vector<fs::path> outs;
    for (const char* threads : {"1", "2"}) {
      // Different worker counts must not change the results either.
      ::setenv("DIP_THREADS", threads, 1);
      // Same command line both times, so the recorded config is identical.
      const fs::path out = fresh(o, "ac6/" + name);
      std::vector<std::string> full = args;
      full.insert(full.end(), {"--seed", "7", "--out", out.string()});
      dip(o, full);
      const fs::path kept = o.work / "ac6" / (name + "_threads" + threads);
      fs::remove_all(kept);
      fs::rename(out, kept);
      outs.push_back(kept);
    }
    const std::string diff = diff_trees(outs[0], outs[1], files);
    if (!diff.empty()) {
      ok = false;
      detail += name + " differs at " + diff + "; ";
    }
  }
  ::unsetenv("DIP_THREADS");
  return {ok, detail + std::to_string(runs.size()) + " subcommands, " + std::to_string(files) +
                  " files compared bitwise (JSON modulo wall_time_s)"};
}

// ---- AC7: format round trips -------------------------------------------------------------

Verdict ac7(const Options& o) {
  const fs::path dir = fresh(o, "ac7");
  Rng rng(77);
  const std::vector<std::pair<std::size_t, std::size_t>> sizes{{1, 1}, {1, 7}, {7, 1}, {2, 2}, {3, 5},
                                                               {17, 33}, {64, 33}, {255, 3}, {128, 128}};
  std::size_t cases = 0;
  std::string failure;
  for (std::size_t channels : {1u, 3u}) {
    for (const auto& [w, h] : sizes) {
      for (int pattern = 0; pattern < 5; ++pattern) {
        img::ImageBuffer image(w, h, channels);
        for (std::size_t i = 0; i < image.samples.size(); ++i) {
          switch (pattern) {
            case 0: image.samples[i] = 0; break;
            case 1: image.samples[i] = 255; break;
            case 2: image.samples[i] = ((i / channels) % 2) ? 255 : 0; break;
            case 3: image.samples[i] = static_cast<std::uint8_t>(i * 37 % 256); break;
            default: image.samples[i] = static_cast<std::uint8_t>(rng.below(256));
          }
        }
        const std::vector<std::string> exts{".png", channels == 1 ? ".pgm" : ".ppm", ".pnm"};
        for (const std::string& ext : exts) {
          ++cases;
          const fs::path file = dir / ("img" + ext);
          img::save(file, image);
          if (!(img::load(file) == image) && failure.empty()) {
            failure = std::to_string(w) + "x" + std::to_string(h) + "x" + std::to_string(channels) + ext;
          }
        }
        ++cases;
        if (!(img::decode_png(img::encode_png(image)) == image) && failure.empty()) failure = "in-memory png";
        ++cases;
        if (!(img::decode_pnm(img::encode_pnm(image)) == image) && failure.empty()) failure = "in-memory pnm";
      }
    }
  }
  return {failure.empty(),
          std::to_string(cases) + " save/load cases" + (failure.empty() ? " identical" : "; first failure " + failure)};
}

// ---- AC8: architecture ablation --------------------------------------------------------

Verdict ac8(const Options& o) {
  Timer timer;
  const fs::path out = fresh(o, "ac8");
  dip(o, {"ablate", "--input", (kData / "inpaint_64.png").string(), "--mask", "bernoulli:0.5", "--archs",
          "hourglass,ed2,ed4,ed6,unet5,resnet8", "--seed", "0", "--trace-every", "50", "--out", out.string()});
  const double secs = timer.seconds();
  const json r = read_json(out / "result.json");
  bool ok = r["rows"].size() == 6 && secs <= 3600.0;
  std::string detail;
  for (const json& row : r["rows"]) {
    const std::size_t params = row["params"];
    if (row["arch"] == "hourglass") ok = ok && params >= 1'000'000 && params <= 3'000'000;
    ok = ok && params > 0 && std::isfinite(row["psnr_final"].get<double>());
    detail += row["arch"].get<std::string>() + " " + std::to_string(params) + " params " +
              num(row["psnr_final"].get<double>(), 4) + " dB; ";
  }
  ok = ok && fs::exists(out / "ablation.csv");
  const bool deeper = r["deeper_encoder_decoder_better"];
  return {ok, detail + "deeper encoder-decoder better: " + (deeper ? "yes" : "no") + " (reported only); " +
                  num(secs, 4) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance gate"};
  std::vector<int> only;
  bool pilot = false;
  Options o;
  o.work = fs::temp_directory_path() / "dip_acceptance";
  app.add_option("--only", only, "Criteria to run (default all)")->check(CLI::Range(1, 8))->delimiter(',');
  app.add_flag("--pilot", pilot, "Run the AC3/AC5 pilots on an independent seed and print the observed margins");
  app.add_option("--work", o.work, "Scratch directory");
  app.add_flag("--verbose", o.verbose, "Stream run logs to stderr");
  CLI11_PARSE(app, argc, argv);

  if (pilot) {
    const DenoiseOutcome d = run_denoise(o, kPilotSeed, "pilot_ac3");
    std::cout << "pilot AC3 seed " << kPilotSeed << ": noisy " << d.psnr_noisy << " dB, EMA " << d.psnr_ema
              << " dB, gain " << d.psnr_ema - d.psnr_noisy << " dB, " << d.seconds << " s\n";
    const Verdict v = ac5(o, kPilotSeed, "pilot_ac5");
    std::cout << "pilot AC5 seed " << kPilotSeed << ": " << v.detail << '\n';
    return 0;
  }

  const std::vector<std::pair<std::string, std::function<Verdict(const Options&)>>> criteria{
      {"gradient oracle suite", ac1},
      {"noise-impedance ordering", ac2},
      {"desk-scale denoising", ac3},
      {"inpainting invariance", ac4},
      {"desk-scale super-resolution", [](const Options& opt) { return ac5(opt); }},
      {"determinism", ac6},
      {"format round trips", ac7},
      {"architecture ablation harness", ac8},
  };
  if (only.empty()) {
    for (int i = 1; i <= 8; ++i) only.push_back(i);
  }
  bool all = true;
  for (int n : only) {
    const auto& [name, fn] = criteria[static_cast<std::size_t>(n - 1)];
    Verdict v;
    try {
      v = fn(o);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    all = all && v.pass;
    std::cout << "AC" << n << ' ' << (v.pass ? "PASS" : "FAIL") << ' ' << name << ": " << v.detail << std::endl;
  }
  return all ? 0 : 1;
}

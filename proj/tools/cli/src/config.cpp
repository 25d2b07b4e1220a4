#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "dip/cli.hpp"
#include "dip/error.hpp"
#include "dip/imaging.hpp"

namespace dip::cli {
namespace {

using nlohmann::json;

const std::set<std::string>& task_names() {
  static const std::set<std::string> names{"denoise", "sr",        "inpaint", "flash",
                                           "restore", "impedance", "ablate",  "bench"};
  return names;
}

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

// Reads j[key] into out when present, converting type errors to ConfigError.
template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    config_error("wrong type for '" + std::string(key) + "' in " + where);
  }
}

std::string to_lower_name(tasks::Normalization n) { return n == tasks::Normalization::Mean ? "mean" : "sum"; }

tasks::Normalization parse_normalization(const std::string& s) {
  if (s == "mean") return tasks::Normalization::Mean;
  if (s == "sum") return tasks::Normalization::Sum;
  config_error("normalization must be 'mean' or 'sum', got '" + s + "'");
}

json arch_to_json(const net::ArchitectureSpec& a) {
  return {{"kind", std::string(net::to_string(a.kind))},
          {"depth", a.depth},
          {"channels", a.channels},
          {"skip_channels", a.skip_channels},
          {"kernel_down", a.kernel_down},
          {"kernel_up", a.kernel_up},
          {"kernel_skip", a.kernel_skip},
          {"upsample", std::string(net::to_string(a.upsample))},
          {"leaky_slope", a.leaky_slope},
          {"normalization", a.normalization},
          {"output", std::string(net::to_string(a.output))}};
}

net::ArchitectureSpec arch_from_json(const json& j, net::ArchitectureSpec a) {
  const std::string where = "architecture";
  reject_unknown(j, {"preset", "kind", "depth", "channels", "skip_channels", "kernel_down", "kernel_up", "kernel_skip",
                     "upsample", "leaky_slope", "normalization", "output"},
                 where);
  if (j.contains("preset")) {
    std::string preset;
    read(j, "preset", preset, where);
    a = net::ArchitectureSpec::preset(preset);
  }
  std::string s;
  if (j.contains("kind")) {
    read(j, "kind", s, where);
    a.kind = net::parse_arch_kind(s);
  }
  read(j, "depth", a.depth, where);
  read(j, "channels", a.channels, where);
  read(j, "skip_channels", a.skip_channels, where);
  read(j, "kernel_down", a.kernel_down, where);
  read(j, "kernel_up", a.kernel_up, where);
  read(j, "kernel_skip", a.kernel_skip, where);
  if (j.contains("upsample")) {
    read(j, "upsample", s, where);
    a.upsample = net::parse_upsample_mode(s);
  }
  read(j, "leaky_slope", a.leaky_slope, where);
  read(j, "normalization", a.normalization, where);
  if (j.contains("output")) {
    read(j, "output", s, where);
    a.output = net::parse_output_activation(s);
  }
  return a;
}

json optim_to_json(const opt::OptimConfig& o) {
  return {{"optimizer", o.optimizer == opt::OptimizerKind::Adam ? "adam" : "sgd"},
          {"lr", o.lr},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"eps", o.eps},
          {"iterations", o.iterations},
          {"ema_decay", o.ema_decay},
          {"trace_every", o.trace_every}};
}

opt::OptimConfig optim_from_json(const json& j, opt::OptimConfig o) {
  const std::string where = "optim";
  reject_unknown(j, {"optimizer", "lr", "beta1", "beta2", "eps", "iterations", "ema_decay", "trace_every"}, where);
  if (j.contains("optimizer")) {
    std::string s;
    read(j, "optimizer", s, where);
    if (s == "adam") {
      o.optimizer = opt::OptimizerKind::Adam;
    } else if (s == "sgd") {
      o.optimizer = opt::OptimizerKind::Sgd;
    } else {
      config_error("optimizer must be 'adam' or 'sgd'");
    }
  }
  read(j, "lr", o.lr, where);
  read(j, "beta1", o.beta1, where);
  read(j, "beta2", o.beta2, where);
  read(j, "eps", o.eps, where);
  read(j, "iterations", o.iterations, where);
  read(j, "ema_decay", o.ema_decay, where);
  read(j, "trace_every", o.trace_every, where);
  return o;
}

}  // namespace

RunConfig default_config(std::string_view task) {
  if (!task_names().contains(std::string(task))) config_error("unknown task '" + std::string(task) + "'");
  RunConfig c;
  c.task = std::string(task);
  std::size_t iters = 1800;
  if (task == "sr") iters = 2000;
  if (task == "restore") iters = 2400;
  if (task == "inpaint") iters = 3000;
  if (task == "flash") iters = 1000;
  if (task == "ablate") iters = 1000;
  if (task == "impedance") iters = 500;
  c.optim.iterations = iters;
  // 1/30 of the code's value range for the noisy-observation tasks
  if (task == "denoise" || task == "sr") c.code.perturb_std = (c.code.hi - c.code.lo) / 30.0;
  if (task == "inpaint" || task == "ablate") c.normalization = tasks::Normalization::Sum;
  if (task == "ablate") c.archs = {"hourglass", "ed2", "ed4", "ed6", "unet5", "resnet8"};
  return c;
}

json to_json(const RunConfig& c) {
  json j{{"task", c.task},
         {"input", c.input},
         {"gt", c.gt},
         {"sigma_synth", c.sigma_synth ? json(*c.sigma_synth) : json(nullptr)},
         {"factor", c.factor},
         {"mask", c.mask},
         {"flash", c.flash},
         {"noflash", c.noflash},
         {"normalization", to_lower_name(c.normalization)},
         {"crop_border", c.crop_border ? json(*c.crop_border) : json(nullptr)},
         {"architecture", arch_to_json(c.arch)},
         {"optim", optim_to_json(c.optim)},
         {"code", {{"channels", c.code.channels}, {"lo", c.code.lo}, {"hi", c.code.hi},
                   {"perturb_std", c.code.perturb_std}}},
         {"seeds", c.seeds},
         {"average", c.average},
         {"snapshot_at", c.snapshot_at},
         {"archs", c.archs},
         {"dataset", c.dataset},
         {"manifest", c.manifest},
         {"bench_task", c.bench_task},
         {"out", c.out}};
  return j;
}

RunConfig config_from_json(const json& j, const RunConfig& base) {
  const std::string where = "config";
  reject_unknown(j, {"task", "input", "gt", "sigma_synth", "factor", "mask", "flash", "noflash", "normalization",
                     "crop_border", "architecture", "optim", "code", "seeds", "average", "snapshot_at", "archs",
                     "dataset", "manifest", "bench_task", "out"},
                 where);
  RunConfig c = base;
  if (j.contains("task")) {
    std::string task;
    read(j, "task", task, where);
    if (task != c.task) {
      // A config for another task starts from that task's defaults.
      c = default_config(task);
    }
  }
  read(j, "input", c.input, where);
  read(j, "gt", c.gt, where);
  if (j.contains("sigma_synth")) {
    if (j["sigma_synth"].is_null()) {
      c.sigma_synth.reset();
    } else {
      double s = 0;
      read(j, "sigma_synth", s, where);
      c.sigma_synth = s;
    }
  }
  read(j, "factor", c.factor, where);
  read(j, "mask", c.mask, where);
  read(j, "flash", c.flash, where);
  read(j, "noflash", c.noflash, where);
  if (j.contains("normalization")) {
    std::string s;
    read(j, "normalization", s, where);
    c.normalization = parse_normalization(s);
  }
  if (j.contains("crop_border")) {
    if (j["crop_border"].is_null()) {
      c.crop_border.reset();
    } else {
      std::size_t b = 0;
      read(j, "crop_border", b, where);
      c.crop_border = b;
    }
  }
  if (j.contains("architecture")) c.arch = arch_from_json(j["architecture"], c.arch);
  if (j.contains("optim")) c.optim = optim_from_json(j["optim"], c.optim);
  if (j.contains("code")) {
    const json& cj = j["code"];
    reject_unknown(cj, {"channels", "lo", "hi", "perturb_std"}, "code");
    read(cj, "channels", c.code.channels, "code");
    read(cj, "lo", c.code.lo, "code");
    read(cj, "hi", c.code.hi, "code");
    read(cj, "perturb_std", c.code.perturb_std, "code");
  }
  read(j, "seeds", c.seeds, where);
  read(j, "average", c.average, where);
  read(j, "snapshot_at", c.snapshot_at, where);
  read(j, "archs", c.archs, where);
  read(j, "dataset", c.dataset, where);
  read(j, "manifest", c.manifest, where);
  read(j, "bench_task", c.bench_task, where);
  read(j, "out", c.out, where);
  return c;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    config_error("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, base);
}

void validate(const RunConfig& c) {
  if (!task_names().contains(c.task)) config_error("unknown task '" + c.task + "'");
  c.arch.validate();
  c.optim.validate();
  if (c.code.channels == 0) config_error("code.channels must be >= 1");
  if (!(c.code.lo < c.code.hi)) throw Error(ErrorKind::InvalidRange, "code range needs lo < hi");
  if (!(c.code.perturb_std >= 0.0)) throw Error(ErrorKind::InvalidRange, "code.perturb_std must be >= 0");
  if (c.seeds.empty()) config_error("at least one seed is required");
  if (c.factor == 0) config_error("factor must be >= 1");
  if (c.sigma_synth && !(*c.sigma_synth >= 0.0)) throw Error(ErrorKind::InvalidRange, "sigma must be >= 0");
  if (c.out.empty()) config_error("an output directory is required");

  auto need = [&](const std::string& value, const char* flag) {
    if (value.empty()) config_error(c.task + " requires " + flag);
  };
  if (c.task == "flash") {
    need(c.flash, "--flash");
    need(c.noflash, "--noflash");
  } else if (c.task == "bench") {
    need(c.dataset, "--dataset");
    if (c.bench_task != "denoise" && c.bench_task != "sr") config_error("bench --task must be denoise or sr");
  } else {
    need(c.input, "--input");
  }
  if (c.task == "inpaint" || c.task == "ablate") img::MaskSpec::parse(c.mask);
  if (c.task == "ablate") {
    if (c.archs.empty()) config_error("ablate needs at least one architecture");
    for (const std::string& a : c.archs) net::ArchitectureSpec::preset(a);
  }
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("out");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::size_t worker_count() {
  if (const char* env = std::getenv("DIP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    config_error("DIP_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace dip::cli

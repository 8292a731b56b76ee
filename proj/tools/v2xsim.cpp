// v2xsim: run experiments, parameter sweeps and model inspection.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "v2x/config.hpp"
#include "v2x/error.hpp"
#include "v2x/harness.hpp"
#include "v2x/nn.hpp"
#include "v2x/simd/kernels.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  long long seed = -1;
  int epochs = -1;
  std::string out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Configuration file (key = value lines)");
  app->add_option("--set", c.overrides, "Override one key, e.g. --set drl.learning_rate=0.0005");
  app->add_option("--seed", c.seed, "Master seed");
  app->add_option("--epochs", c.epochs, "Number of epochs");
  app->add_option("--out", c.out, "Output directory")->required();
}

v2x::ExperimentConfig resolve(const Common& c) {
  v2x::ExperimentConfig cfg = c.config.empty() ? v2x::ExperimentConfig{} : v2x::load_config(c.config);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw v2x::ConfigError(kv, "--set expects key=value");
    v2x::config_set(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed >= 0) cfg.experiment.seed = static_cast<std::uint64_t>(c.seed);
  if (c.epochs >= 0) cfg.experiment.epochs = c.epochs;
  cfg.validate();
  return cfg;
}

void print_stats(const char* what, std::span<const double> v) {
  if (v.empty()) return;
  double lo = v[0], hi = v[0], sum = 0.0;
  for (const double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
  }
  const double mean = sum / static_cast<double>(v.size());
  double var = 0.0;
  for (const double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(v.size()));
  std::printf("  %-8s n=%-7zu min=% .6e max=% .6e mean=% .6e std=%.6e\n", what, v.size(), lo, hi,
              mean, sd);
}

int inspect(const std::string& path) {
  const v2x::QNetwork net = v2x::read_model(path);
  std::printf("%s: %zu layers, %zu parameters\n", path.c_str(), net.num_layers(), net.param_count());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    std::printf("layer %zu: %zu -> %zu\n", l, net.layer_sizes()[l], net.layer_sizes()[l + 1]);
    print_stats("weights", net.weights(l));
    print_stats("biases", net.biases(l));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cellular V2X mode selection and resource allocation simulator"};
  app.require_subcommand(1);

  Common run_opts;
  std::string algo;
  auto* run = app.add_subcommand("run", "Run one experiment");
  add_common(run, run_opts);
  run->add_option("--algo", algo, "random | drl | drl-no-mode | centralized | fed-drl");

  Common sweep_opts;
  std::string axis, values, sweep_algos;
  auto* sw = app.add_subcommand("sweep", "Sweep one parameter");
  add_common(sw, sweep_opts);
  sw->add_option("--axis", axis, "K | gamma_o | algorithm")->required();
  sw->add_option("--values", values, "Comma-separated values")->required();
  sw->add_option("--algo", sweep_algos, "Comma-separated algorithms (default: the config's)");

  std::string model_path;
  auto* ins = app.add_subcommand("inspect-model", "Print layer shapes and weight statistics");
  ins->add_option("checkpoint", model_path, "Model file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      v2x::ExperimentConfig cfg = resolve(run_opts);
      if (!algo.empty()) cfg.experiment.algorithm = v2x::parse_algorithm(algo);
      std::fprintf(stderr, "running %s for %d epochs (seed %llu, %s kernels)\n",
                   std::string(v2x::algorithm_name(cfg.experiment.algorithm)).c_str(),
                   cfg.experiment.epochs, static_cast<unsigned long long>(cfg.experiment.seed),
                   std::string(v2x::simd::backend_name(v2x::simd::active().backend)).c_str());
      const auto r = v2x::run_experiment(cfg, {run_opts.out, {}});
      std::printf("capacity %.6g bps/Hz, satisfied %.4f, reward %.6g (final %d epochs)\n",
                  r.summary.sum_capacity_bpshz, r.summary.satisfied_rate, r.summary.mean_reward,
                  r.summary.epochs_used);
    } else if (*sw) {
      v2x::ExperimentConfig cfg = resolve(sweep_opts);
      std::vector<v2x::Algorithm> algos;
      for (const auto& a : split_list(sweep_algos)) algos.push_back(v2x::parse_algorithm(a));
      if (algos.empty()) algos.push_back(cfg.experiment.algorithm);
      v2x::sweep(cfg, axis, split_list(values), algos, sweep_opts.out);
    } else if (*ins) {
      return inspect(model_path);
    }
  } catch (const v2x::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

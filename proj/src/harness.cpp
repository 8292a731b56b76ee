#include "v2x/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "v2x/baselines.hpp"
#include "v2x/csv.hpp"
#include "v2x/error.hpp"

namespace v2x {

namespace fs = std::filesystem;

SubframeRecord make_record(const StepResult& r) {
  return {r.sum_ivue_capacity_bps, r.reward, r.outcome, r.qos.pair_mean_sinr};
}

MetricsRecord compute_metrics(std::span<const SubframeRecord> window, const QosSpec& qos) {
  if (window.empty()) throw std::invalid_argument("compute_metrics: empty window");
  MetricsRecord m;
  const double n = static_cast<double>(window.size());
  for (const auto& s : window) {
    m.sum_capacity_bps += s.ivue_capacity_bps;
    m.mean_reward += s.reward;
  }
  m.sum_capacity_bps /= n;
  m.sum_capacity_bpshz = m.sum_capacity_bps / qos.w;
  m.mean_reward /= n;

  const std::size_t pairs = window.back().outcome.size();
  if (pairs == 0) {
    m.satisfied_rate = 1.0;
    m.vacuous = true;
    return m;
  }
  const double gamma_eff = effective_outage_threshold(qos);
  m.pair_satisfied.assign(pairs, false);
  std::size_t satisfied = 0;
  for (std::size_t k = 0; k < pairs; ++k) {
    bool delivered = true;
    double sinr = 0.0;
    std::size_t seen = 0;
    for (const auto& s : window) {
      if (k >= s.outcome.size()) continue;  // pair joined mid-window
      ++seen;
      sinr += s.mean_sinr[k];
      if (s.outcome[k] == MessageOutcome::Missed) delivered = false;
    }
    const bool ok = seen > 0 && delivered && sinr / static_cast<double>(seen) >= gamma_eff;
    m.pair_satisfied[k] = ok;
    satisfied += ok ? 1 : 0;
  }
  m.satisfied_rate = static_cast<double>(satisfied) / static_cast<double>(pairs);
  return m;
}

std::vector<std::string> metrics_header() {
  return {"epoch",      "sum_capacity_bps",      "sum_capacity_bpshz", "satisfied_rate",
          "mean_reward", "reward_moving_average", "vacuous",            "cluster_divergence"};
}

std::vector<std::string> metrics_fields(const MetricsRecord& m) {
  std::string div;
  for (std::size_t i = 0; i < m.cluster_divergence.size(); ++i) {
    if (i) div += ',';
    div += format_double(m.cluster_divergence[i]);
  }
  return {std::to_string(m.epoch),
          format_double(m.sum_capacity_bps),
          format_double(m.sum_capacity_bpshz),
          format_double(m.satisfied_rate),
          format_double(m.mean_reward),
          format_double(m.reward_moving_average),
          m.vacuous ? "1" : "0",
          div};
}

Summary summarize(std::span<const MetricsRecord> epochs, double fraction) {
  Summary s;
  if (epochs.empty()) return s;
  const auto n = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(epochs.size()) - 1e-9)));
  const auto tail = epochs.subspan(epochs.size() - std::min(n, epochs.size()));
  for (const auto& m : tail) {
    s.sum_capacity_bps += m.sum_capacity_bps;
    s.sum_capacity_bpshz += m.sum_capacity_bpshz;
    s.satisfied_rate += m.satisfied_rate;
    s.mean_reward += m.mean_reward;
  }
  const double d = static_cast<double>(tail.size());
  s.epochs_used = static_cast<int>(tail.size());
  s.sum_capacity_bps /= d;
  s.sum_capacity_bpshz /= d;
  s.satisfied_rate /= d;
  s.mean_reward /= d;
  return s;
}

Environment make_environment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.experiment.seed;
  VehicleTopology topo = generate_topology(cfg.scenario_config(), stream_seed(seed, "topology"));
  return Environment(cfg.env_config(), std::move(topo), stream_seed(seed, "channel"));
}

void Controller::write_checkpoints(const std::string&, bool) const {}

namespace {

std::string agent_seed_label(std::size_t k) { return "agent-" + std::to_string(k); }

class RandomController : public Controller {
 public:
  RandomController(const ExperimentConfig& cfg, Environment env)
      : env_(std::move(env)), rng_(make_stream(cfg.experiment.seed, "random-select")),
        pool_(cfg.experiment.random_pool) {}

  StepResult step() override {
    std::vector<AgentAction> actions(env_.num_pairs());
    for (std::size_t k = 0; k < actions.size(); ++k) {
      actions[k] = random_select(env_.observe(k), env_.config().power_levels, rng_, pool_);
    }
    return env_.step(actions);
  }
  Environment& env() override { return env_; }

 private:
  Environment env_;
  Rng rng_;
  int pool_;
};

class CentralizedController : public Controller {
 public:
  explicit CentralizedController(Environment env) : env_(std::move(env)) {}

  StepResult step() override {
    // Large-scale CSI only changes on the redraw period.
    if (actions_.size() != env_.num_pairs() ||
        env_.subframe() % env_.config().large_scale_period == 0) {
      actions_ = centralized_allocate(centralized_input(env_)).actions;
    }
    return env_.step(actions_);
  }
  Environment& env() override { return env_; }

 private:
  Environment env_;
  std::vector<AgentAction> actions_;
};

class DrlController : public Controller {
 public:
  DrlController(const ExperimentConfig& cfg, Environment env, bool with_mode)
      : env_(std::move(env)), space_(env_.action_space(with_mode)) {
    const std::size_t obs = observation_size(env_.config().num_rbs);
    for (std::size_t k = 0; k < env_.num_pairs(); ++k) {
      agents_.emplace_back(cfg.dqn_config(), space_, obs,
                           stream_seed(cfg.experiment.seed, agent_seed_label(k)));
    }
  }

  StepResult step() override {
    const std::size_t n = env_.num_pairs();
    std::vector<std::vector<double>> state(n);
    std::vector<int> chosen(n);
    std::vector<AgentAction> actions(n);
    for (std::size_t k = 0; k < n; ++k) {
      state[k] = env_.observe_features(k);
      chosen[k] = agents_[k].select_action(state[k]);
      actions[k] = space_.decode(chosen[k]);
    }
    StepResult r = env_.step(actions);
    for (std::size_t k = 0; k < n; ++k) {
      agents_[k].store_and_train(
          {std::move(state[k]), chosen[k], r.reward, env_.observe_features(k), ~RbMask{0}});
    }
    return r;
  }
  Environment& env() override { return env_; }

  void write_checkpoints(const std::string& dir, bool) const override {
    for (std::size_t k = 0; k < agents_.size(); ++k) {
      write_model(fs::path(dir) / ("agent_" + std::to_string(k) + ".model"), agents_[k].online());
    }
  }

 private:
  Environment env_;
  ActionSpace space_;
  std::vector<DqnAgent> agents_;
};

class FederatedController : public Controller {
 public:
  FederatedController(const ExperimentConfig& cfg, Environment env)
      : sys_(std::move(env), cfg.dqn_config(), cfg.federation_config(), cfg.experiment.seed) {}

  StepResult step() override { return sys_.step(); }
  Environment& env() override { return sys_.env(); }
  std::vector<double> divergence() const override {
    std::vector<double> d;
    if (!sys_.clustered()) return d;
    d.assign(sys_.assignment().num_clusters(), 0.0);
    for (const auto& r : sys_.last_rounds()) {
      if (static_cast<std::size_t>(r.cluster) < d.size()) d[static_cast<std::size_t>(r.cluster)] = r.divergence;
    }
    return d;
  }
  int rounds() const { return sys_.rounds_completed(); }

  void write_checkpoints(const std::string& dir, bool) const override {
    const int r = sys_.rounds_completed() - 1;
    if (r < 0) return;
    const auto& globals = sys_.global_models();
    for (std::size_t c = 0; c < globals.size(); ++c) {
      if (globals[c].param_count() == 0) continue;
      char name[64];
      std::snprintf(name, sizeof name, "global_c%zu_r%d.model", c, r);
      write_model(fs::path(dir) / name, globals[c]);
    }
  }

 private:
  FederatedSystem sys_;
};

}  // namespace

std::unique_ptr<Controller> make_controller(const ExperimentConfig& cfg) {
  Environment env = make_environment(cfg);
  switch (cfg.experiment.algorithm) {
    case Algorithm::Random: return std::make_unique<RandomController>(cfg, std::move(env));
    case Algorithm::Drl: return std::make_unique<DrlController>(cfg, std::move(env), true);
    case Algorithm::DrlNoMode: return std::make_unique<DrlController>(cfg, std::move(env), false);
    case Algorithm::Centralized: return std::make_unique<CentralizedController>(std::move(env));
    case Algorithm::FedDrl: return std::make_unique<FederatedController>(cfg, std::move(env));
  }
  throw ConfigError("experiment.algorithm", "unsupported algorithm");
}

std::vector<std::string> summary_header() {
  return {"algorithm", "seed", "epochs", "num_pairs", "gamma_o_db", "epochs_averaged",
          "sum_capacity_bps", "sum_capacity_bpshz", "satisfied_rate", "mean_reward"};
}

std::vector<std::string> summary_fields(const ExperimentConfig& cfg, const Summary& s) {
  return {std::string(algorithm_name(cfg.experiment.algorithm)),
          std::to_string(cfg.experiment.seed),
          std::to_string(cfg.experiment.epochs),
          std::to_string(cfg.scenario.num_pairs),
          format_double(cfg.qos.gamma_o_db),
          std::to_string(s.epochs_used),
          format_double(s.sum_capacity_bps),
          format_double(s.sum_capacity_bpshz),
          format_double(s.satisfied_rate),
          format_double(s.mean_reward)};
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  auto ctl = make_controller(cfg);
  const bool write = !opt.out_dir.empty();
  std::ofstream metrics_out;
  std::optional<CsvWriter> csv;
  if (write) {
    fs::create_directories(opt.out_dir);
    std::ofstream(fs::path(opt.out_dir) / "resolved-config.txt") << to_text(cfg);
    metrics_out.open(fs::path(opt.out_dir) / "metrics.csv");
    csv.emplace(metrics_out, metrics_header());
  }
  const int every = cfg.experiment.checkpoint_every_rounds;
  auto* fed = dynamic_cast<FederatedController*>(ctl.get());
  int last_saved_round = -1;

  RunResult result;
  const QosSpec qos = ctl->env().config().qos;
  const int window = cfg.experiment.moving_average_window;
  double run = 0.0;
  std::vector<SubframeRecord> epoch_records;
  for (int e = 0; e < cfg.experiment.epochs; ++e) {
    epoch_records.clear();
    for (int t = 0; t < cfg.experiment.steps_per_epoch; ++t) {
      epoch_records.push_back(make_record(ctl->step()));
      if (write && fed != nullptr && every > 0) {
        const int done = fed->rounds();
        if (done > 0 && done - 1 != last_saved_round && (done - 1) % every == 0) {
          last_saved_round = done - 1;
          ctl->write_checkpoints(opt.out_dir, false);
        }
      }
    }
    MetricsRecord m = compute_metrics(epoch_records, qos);
    m.epoch = e;
    m.cluster_divergence = ctl->divergence();
    run += m.mean_reward;
    if (e >= window) run -= result.epochs[static_cast<std::size_t>(e - window)].mean_reward;
    m.reward_moving_average = run / static_cast<double>(std::min(e + 1, window));
    if (csv) csv->row(metrics_fields(m));
    if (opt.on_epoch) opt.on_epoch(m);
    result.epochs.push_back(std::move(m));
  }
  result.summary = summarize(result.epochs, cfg.experiment.summary_fraction);
  if (write) {
    std::ofstream summary_out(fs::path(opt.out_dir) / "summary.csv");
    CsvWriter s(summary_out, summary_header());
    s.row(summary_fields(cfg, result.summary));
    if (fed == nullptr || fed->rounds() - 1 != last_saved_round) ctl->write_checkpoints(opt.out_dir, true);
  }
  return result;
}

std::vector<Summary> sweep(const ExperimentConfig& base, const std::string& axis,
                           const std::vector<std::string>& values,
                           const std::vector<Algorithm>& algorithms, const std::string& out_dir) {
  if (axis != "K" && axis != "gamma_o" && axis != "algorithm") {
    throw ConfigError("sweep.axis", "unknown axis '" + axis + "' (expected K, gamma_o or algorithm)");
  }
  std::vector<Summary> out;
  std::ofstream summary_out;
  std::optional<CsvWriter> csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    summary_out.open(fs::path(out_dir) / "summary.csv");
    auto header = summary_header();
    header.insert(header.begin(), {"axis", "value"});
    csv.emplace(summary_out, header);
  }
  for (const auto& value : values) {
    std::vector<Algorithm> algos = algorithms;
    ExperimentConfig cfg = base;
    if (axis == "K") {
      config_set(cfg, "scenario.num_pairs", value);
    } else if (axis == "gamma_o") {
      config_set(cfg, "qos.gamma_o_db", value);
    } else {
      algos = {parse_algorithm(value)};
    }
    for (const Algorithm a : algos) {
      cfg.experiment.algorithm = a;
      RunOptions opt;
      if (!out_dir.empty()) {
        opt.out_dir = (fs::path(out_dir) / (axis + "=" + value) / std::string(algorithm_name(a))).string();
      }
      const RunResult r = run_experiment(cfg, opt);
      if (csv) {
        auto row = summary_fields(cfg, r.summary);
        row.insert(row.begin(), {axis, value});
        csv->row(row);
      }
      out.push_back(r.summary);
    }
  }
  return out;
}

}  // namespace v2x

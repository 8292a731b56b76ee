#pragma once

// Experiment orchestration: builds the simulation from a config, runs the
// selected algorithm epoch by epoch and aggregates per-epoch metrics.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "v2x/config.hpp"
#include "v2x/federated.hpp"

namespace v2x {

struct SubframeRecord {
  double ivue_capacity_bps = 0.0;
  double reward = 0.0;
  std::vector<MessageOutcome> outcome;  // per pair
  std::vector<double> mean_sinr;        // per pair, linear
};

SubframeRecord make_record(const StepResult& r);

struct MetricsRecord {
  int epoch = 0;
  double sum_capacity_bps = 0.0;
  double sum_capacity_bpshz = 0.0;
  double satisfied_rate = 0.0;
  double mean_reward = 0.0;
  double reward_moving_average = 0.0;
  bool vacuous = false;  // no pairs: satisfied rate reported as 1
  std::vector<bool> pair_satisfied;
  std::vector<double> cluster_divergence;
};

// A pair is satisfied when every message whose deadline fell in the window
// was delivered and its window-mean SINR reaches gamma_eff. Throws on an
// empty window.
MetricsRecord compute_metrics(std::span<const SubframeRecord> window, const QosSpec& qos);

std::vector<std::string> metrics_header();
std::vector<std::string> metrics_fields(const MetricsRecord& m);

struct Summary {
  int epochs_used = 0;
  double sum_capacity_bps = 0.0;
  double sum_capacity_bpshz = 0.0;
  double satisfied_rate = 0.0;
  double mean_reward = 0.0;
};

// Mean over the final `fraction` of epochs (at least one).
Summary summarize(std::span<const MetricsRecord> epochs, double fraction);

Environment make_environment(const ExperimentConfig& cfg);

// One algorithm driving one environment, a subframe at a time.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual StepResult step() = 0;
  virtual Environment& env() = 0;
  // Per-cluster divergence after the latest averaging (federated only).
  virtual std::vector<double> divergence() const { return {}; }
  virtual void write_checkpoints(const std::string& dir, bool final_round) const;
};

std::unique_ptr<Controller> make_controller(const ExperimentConfig& cfg);

struct RunOptions {
  std::string out_dir;  // empty: nothing written
  std::function<void(const MetricsRecord&)> on_epoch;
};

struct RunResult {
  std::vector<MetricsRecord> epochs;
  Summary summary;
};

// Writes metrics.csv, summary.csv, resolved-config.txt and model checkpoints
// when out_dir is set.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

std::vector<std::string> summary_header();
std::vector<std::string> summary_fields(const ExperimentConfig& cfg, const Summary& s);

// axis: K, gamma_o or algorithm. One run per value per algorithm; each run
// goes to out_dir/<axis>=<value>/<algorithm>, summaries to out_dir/summary.csv.
std::vector<Summary> sweep(const ExperimentConfig& base, const std::string& axis,
                           const std::vector<std::string>& values,
                           const std::vector<Algorithm>& algorithms, const std::string& out_dir);

}  // namespace v2x

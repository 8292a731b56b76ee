#pragma once

// Experiment configuration: flat `section.key = value` text, every field
// defaulted, unknown keys rejected.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "v2x/dqn.hpp"
#include "v2x/env.hpp"
#include "v2x/federated.hpp"
#include "v2x/scenario.hpp"

namespace v2x {

enum class Algorithm { Random, Drl, DrlNoMode, Centralized, FedDrl };

Algorithm parse_algorithm(std::string_view name);
std::string_view algorithm_name(Algorithm a);

MarginForm parse_margins(std::string_view name);
std::string_view margin_name(MarginForm m);

struct ExperimentConfig {
  struct Scenario {
    int num_ivues = 5;
    int num_pairs = 10;
    double vehicle_density = 0.025;  // per meter of lane
    double extent_m = 1000.0;
    int lanes_per_direction = 2;
    double lane_width_m = 3.5;
    double pair_range_m = 150.0;
    double speed_mps = 10.0;
    bool mobility = true;
    int max_redraws = 100;
  } scenario;
  struct Channel {
    double shadow_std_los_db = 3.0;
    double shadow_std_nlos_db = 4.0;
    double min_distance_m = 3.0;
    double bs_los_radius_m = 150.0;
    bool fast_fading = true;
    int large_scale_period = 1000;  // subframes
  } channel;
  struct Phy {
    int num_rbs = 10;
    double rb_bandwidth_hz = 180e3;
    double carrier_ghz = 2.0;
    double noise_dbm = -114.0;
    double p_max_dbm = 23.0;
    double ivue_power_dbm = 23.0;
    int power_levels = 4;
  } phy;
  struct Qos {
    double message_bytes = 800.0;
    double t_max_ms = 10.0;
    double message_period_ms = 10.0;
    double gamma_o_db = 3.0;
    double p_o = 0.01;
    double r_min_bpshz = 3.0;
  } qos;
  RewardConfig reward;
  struct Drl {
    std::vector<std::size_t> hidden = {256};
    double discount = 0.70;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int memory_capacity = 3000;
    int batch_size = 8;
    int train_every = 2;
    int target_update_every = 30;
    double eps_initial = 1.0;
    double eps_final = 0.01;
    int eps_steps = 1000;
    int prefill = 64;
    double reward_scale = 1.0;
  } drl;
  struct Federation {
    int num_clusters = 5;
    int round_subframes = 100;
    int clustering_period = 1000;
    double upload_fraction = 1.0;
    bool async_slots = true;
    bool mask_rbs = true;
    int kmeans_restarts = 20;
    double degree_regularization = 1e-12;
  } federation;
  struct Experiment {
    Algorithm algorithm = Algorithm::FedDrl;
    int epochs = 3000;
    std::uint64_t seed = 1;
    int steps_per_epoch = 10;
    int moving_average_window = 100;
    double summary_fraction = 0.1;
    int random_pool = 5;
    int checkpoint_every_rounds = 0;  // 0: final models only
  } experiment;

  // Throws ConfigError naming the offending field.
  void validate() const;

  ScenarioConfig scenario_config() const;
  EnvConfig env_config() const;
  DqnConfig dqn_config() const;
  FederationConfig federation_config() const;
};

// All keys in file order.
std::vector<std::string> config_keys();

std::string config_get(const ExperimentConfig& cfg, std::string_view key);
// Throws ConfigError on an unknown key or a malformed value.
void config_set(ExperimentConfig& cfg, std::string_view key, std::string_view value);

// Every effective parameter, one `key = value` line each.
std::string to_text(const ExperimentConfig& cfg);
// Starts from defaults; `#` starts a comment.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

}  // namespace v2x

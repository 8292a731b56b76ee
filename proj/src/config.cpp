#include "v2x/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <system_error>

#include "v2x/error.hpp"
#include "v2x/units.hpp"

namespace v2x {

Algorithm parse_algorithm(std::string_view name) {
  if (name == "random") return Algorithm::Random;
  if (name == "drl") return Algorithm::Drl;
  if (name == "drl-no-mode") return Algorithm::DrlNoMode;
  if (name == "centralized") return Algorithm::Centralized;
  if (name == "fed-drl") return Algorithm::FedDrl;
  throw ConfigError("experiment.algorithm", "unknown algorithm '" + std::string(name) + "'");
}

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Random: return "random";
    case Algorithm::Drl: return "drl";
    case Algorithm::DrlNoMode: return "drl-no-mode";
    case Algorithm::Centralized: return "centralized";
    case Algorithm::FedDrl: return "fed-drl";
  }
  return "?";
}

MarginForm parse_margins(std::string_view name) {
  if (name == "db") return MarginForm::Db;
  if (name == "linear") return MarginForm::Linear;
  if (name == "relative") return MarginForm::Relative;
  throw ConfigError("reward.margins", "unknown form '" + std::string(name) + "' (expected db, linear or relative)");
}

std::string_view margin_name(MarginForm m) {
  switch (m) {
    case MarginForm::Db: return "db";
    case MarginForm::Linear: return "linear";
    case MarginForm::Relative: return "relative";
  }
  return "?";
}

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

template <typename T>
std::string fmt_int(T v) {
  return std::to_string(v);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key), "expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

template <typename T>
T parse_integer(std::string_view key, std::string_view v) {
  T out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key), "expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(std::string(key), "expected true or false, got '" + std::string(v) + "'");
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

template <typename Proj>
Field real(std::string key, Proj proj) {
  return {key, [proj](const ExperimentConfig& c) { return fmt(proj(c)); },
          [proj, key](ExperimentConfig& c, std::string_view v) { proj(c) = parse_double(key, v); }};
}

template <typename Proj>
Field integer(std::string key, Proj proj) {
  return {key, [proj](const ExperimentConfig& c) { return fmt_int(proj(c)); },
          [proj, key](ExperimentConfig& c, std::string_view v) {
            using T = std::remove_reference_t<decltype(proj(c))>;
            proj(c) = parse_integer<T>(key, v);
          }};
}

template <typename Proj>
Field boolean(std::string key, Proj proj) {
  return {key,
          [proj](const ExperimentConfig& c) {
            return std::string(proj(c) ? "true" : "false");
          },
          [proj, key](ExperimentConfig& c, std::string_view v) { proj(c) = parse_bool(key, v); }};
}

const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = {
      integer("scenario.num_ivues", [](auto& c) -> auto& { return c.scenario.num_ivues; }),
      integer("scenario.num_pairs", [](auto& c) -> auto& { return c.scenario.num_pairs; }),
      real("scenario.vehicle_density", [](auto& c) -> auto& { return c.scenario.vehicle_density; }),
      real("scenario.extent_m", [](auto& c) -> auto& { return c.scenario.extent_m; }),
      integer("scenario.lanes_per_direction", [](auto& c) -> auto& { return c.scenario.lanes_per_direction; }),
      real("scenario.lane_width_m", [](auto& c) -> auto& { return c.scenario.lane_width_m; }),
      real("scenario.pair_range_m", [](auto& c) -> auto& { return c.scenario.pair_range_m; }),
      real("scenario.speed_mps", [](auto& c) -> auto& { return c.scenario.speed_mps; }),
      boolean("scenario.mobility", [](auto& c) -> auto& { return c.scenario.mobility; }),
      integer("scenario.max_redraws", [](auto& c) -> auto& { return c.scenario.max_redraws; }),

      real("channel.shadow_std_los_db", [](auto& c) -> auto& { return c.channel.shadow_std_los_db; }),
      real("channel.shadow_std_nlos_db", [](auto& c) -> auto& { return c.channel.shadow_std_nlos_db; }),
      real("channel.min_distance_m", [](auto& c) -> auto& { return c.channel.min_distance_m; }),
      real("channel.bs_los_radius_m", [](auto& c) -> auto& { return c.channel.bs_los_radius_m; }),
      boolean("channel.fast_fading", [](auto& c) -> auto& { return c.channel.fast_fading; }),
      integer("channel.large_scale_period", [](auto& c) -> auto& { return c.channel.large_scale_period; }),

      integer("phy.num_rbs", [](auto& c) -> auto& { return c.phy.num_rbs; }),
      real("phy.rb_bandwidth_hz", [](auto& c) -> auto& { return c.phy.rb_bandwidth_hz; }),
      real("phy.carrier_ghz", [](auto& c) -> auto& { return c.phy.carrier_ghz; }),
      real("phy.noise_dbm", [](auto& c) -> auto& { return c.phy.noise_dbm; }),
      real("phy.p_max_dbm", [](auto& c) -> auto& { return c.phy.p_max_dbm; }),
      real("phy.ivue_power_dbm", [](auto& c) -> auto& { return c.phy.ivue_power_dbm; }),
      integer("phy.power_levels", [](auto& c) -> auto& { return c.phy.power_levels; }),

      real("qos.message_bytes", [](auto& c) -> auto& { return c.qos.message_bytes; }),
      real("qos.t_max_ms", [](auto& c) -> auto& { return c.qos.t_max_ms; }),
      real("qos.message_period_ms", [](auto& c) -> auto& { return c.qos.message_period_ms; }),
      real("qos.gamma_o_db", [](auto& c) -> auto& { return c.qos.gamma_o_db; }),
      real("qos.p_o", [](auto& c) -> auto& { return c.qos.p_o; }),
      real("qos.r_min_bpshz", [](auto& c) -> auto& { return c.qos.r_min_bpshz; }),

      real("reward.c1", [](auto& c) -> auto& { return c.reward.c1; }),
      real("reward.c2", [](auto& c) -> auto& { return c.reward.c2; }),
      real("reward.c3", [](auto& c) -> auto& { return c.reward.c3; }),
      real("reward.c4", [](auto& c) -> auto& { return c.reward.c4; }),
      real("reward.revenue", [](auto& c) -> auto& { return c.reward.revenue; }),
      {"reward.margins",
       [](const C& c) { return std::string(margin_name(c.reward.margins)); },
       [](C& c, std::string_view v) { c.reward.margins = parse_margins(v); }},
      real("reward.sinr_floor_db", [](auto& c) -> auto& { return c.reward.sinr_floor_db; }),

      {"drl.hidden",
       [](const C& c) {
         std::string s;
         for (std::size_t i = 0; i < c.drl.hidden.size(); ++i) {
           if (i) s += ',';
           s += std::to_string(c.drl.hidden[i]);
         }
         return s;
       },
       [](C& c, std::string_view v) {
         std::vector<std::size_t> h;
         while (!v.empty()) {
           const auto comma = v.find(',');
           const auto item = trim(v.substr(0, comma));
           const auto n = parse_integer<std::size_t>("drl.hidden", item);
           if (n == 0) throw ConfigError("drl.hidden", "layer widths must be positive");
           h.push_back(n);
           if (comma == std::string_view::npos) break;
           v.remove_prefix(comma + 1);
         }
         if (h.empty()) throw ConfigError("drl.hidden", "need at least one hidden layer");
         c.drl.hidden = std::move(h);
       }},
      real("drl.discount", [](auto& c) -> auto& { return c.drl.discount; }),
      real("drl.learning_rate", [](auto& c) -> auto& { return c.drl.learning_rate; }),
      real("drl.adam_beta1", [](auto& c) -> auto& { return c.drl.adam_beta1; }),
      real("drl.adam_beta2", [](auto& c) -> auto& { return c.drl.adam_beta2; }),
      real("drl.adam_epsilon", [](auto& c) -> auto& { return c.drl.adam_epsilon; }),
      integer("drl.memory_capacity", [](auto& c) -> auto& { return c.drl.memory_capacity; }),
      integer("drl.batch_size", [](auto& c) -> auto& { return c.drl.batch_size; }),
      integer("drl.train_every", [](auto& c) -> auto& { return c.drl.train_every; }),
      integer("drl.target_update_every", [](auto& c) -> auto& { return c.drl.target_update_every; }),
      real("drl.eps_initial", [](auto& c) -> auto& { return c.drl.eps_initial; }),
      real("drl.eps_final", [](auto& c) -> auto& { return c.drl.eps_final; }),
      integer("drl.eps_steps", [](auto& c) -> auto& { return c.drl.eps_steps; }),
      integer("drl.prefill", [](auto& c) -> auto& { return c.drl.prefill; }),
      real("drl.reward_scale", [](auto& c) -> auto& { return c.drl.reward_scale; }),

      integer("federation.num_clusters", [](auto& c) -> auto& { return c.federation.num_clusters; }),
      integer("federation.round_subframes", [](auto& c) -> auto& { return c.federation.round_subframes; }),
      integer("federation.clustering_period", [](auto& c) -> auto& { return c.federation.clustering_period; }),
      real("federation.upload_fraction", [](auto& c) -> auto& { return c.federation.upload_fraction; }),
      boolean("federation.async_slots", [](auto& c) -> auto& { return c.federation.async_slots; }),
      boolean("federation.mask_rbs", [](auto& c) -> auto& { return c.federation.mask_rbs; }),
      integer("federation.kmeans_restarts", [](auto& c) -> auto& { return c.federation.kmeans_restarts; }),
      real("federation.degree_regularization", [](auto& c) -> auto& { return c.federation.degree_regularization; }),

      {"experiment.algorithm",
       [](const C& c) { return std::string(algorithm_name(c.experiment.algorithm)); },
       [](C& c, std::string_view v) { c.experiment.algorithm = parse_algorithm(v); }},
      integer("experiment.epochs", [](auto& c) -> auto& { return c.experiment.epochs; }),
      integer("experiment.seed", [](auto& c) -> auto& { return c.experiment.seed; }),
      integer("experiment.steps_per_epoch", [](auto& c) -> auto& { return c.experiment.steps_per_epoch; }),
      integer("experiment.moving_average_window", [](auto& c) -> auto& { return c.experiment.moving_average_window; }),
      real("experiment.summary_fraction", [](auto& c) -> auto& { return c.experiment.summary_fraction; }),
      integer("experiment.random_pool", [](auto& c) -> auto& { return c.experiment.random_pool; }),
      integer("experiment.checkpoint_every_rounds", [](auto& c) -> auto& { return c.experiment.checkpoint_every_rounds; }),
  };
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError(std::string(key), "unknown configuration key");
}

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

std::string config_get(const ExperimentConfig& cfg, std::string_view key) {
  return find_field(key).get(cfg);
}

void config_set(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  find_field(key).set(cfg, trim(value));
}

std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    }
    config_set(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
  require(scenario.num_ivues >= 0, "scenario.num_ivues", "must be >= 0");
  require(scenario.num_pairs >= 0, "scenario.num_pairs", "must be >= 0");
  require(scenario.vehicle_density > 0.0, "scenario.vehicle_density", "must be > 0");
  require(scenario.extent_m > 0.0, "scenario.extent_m", "must be > 0");
  require(scenario.lanes_per_direction >= 1, "scenario.lanes_per_direction", "must be >= 1");
  require(scenario.lane_width_m > 0.0, "scenario.lane_width_m", "must be > 0");
  require(scenario.pair_range_m > 0.0, "scenario.pair_range_m", "must be > 0");
  require(scenario.speed_mps >= 0.0, "scenario.speed_mps", "must be >= 0");
  require(scenario.max_redraws >= 1, "scenario.max_redraws", "must be >= 1");
  require(channel.shadow_std_los_db >= 0.0, "channel.shadow_std_los_db", "must be >= 0");
  require(channel.shadow_std_nlos_db >= 0.0, "channel.shadow_std_nlos_db", "must be >= 0");
  require(channel.min_distance_m > 0.0, "channel.min_distance_m", "must be > 0");
  require(channel.large_scale_period >= 1, "channel.large_scale_period", "must be >= 1");
  require(phy.num_rbs >= 1 && phy.num_rbs <= 64, "phy.num_rbs", "must be in [1, 64]");
  require(phy.num_rbs >= scenario.num_ivues, "phy.num_rbs", "every I-VUE needs its own RB");
  require(phy.rb_bandwidth_hz > 0.0, "phy.rb_bandwidth_hz", "must be > 0");
  require(phy.carrier_ghz == 2.0, "phy.carrier_ghz", "path-loss models are calibrated at 2 GHz only");
  require(phy.power_levels >= 2, "phy.power_levels", "must be >= 2");
  require(qos.message_bytes > 0.0, "qos.message_bytes", "must be > 0");
  require(qos.t_max_ms > 0.0, "qos.t_max_ms", "must be > 0");
  require(qos.message_period_ms >= qos.t_max_ms, "qos.message_period_ms", "must be >= qos.t_max_ms");
  require(qos.p_o > 0.0 && qos.p_o < 1.0, "qos.p_o", "must be in (0, 1)");
  require(qos.r_min_bpshz >= 0.0, "qos.r_min_bpshz", "must be >= 0");
  require(drl.discount >= 0.0 && drl.discount < 1.0, "drl.discount", "must be in [0, 1)");
  require(drl.learning_rate > 0.0, "drl.learning_rate", "must be > 0");
  require(drl.memory_capacity >= 1, "drl.memory_capacity", "must be >= 1");
  require(drl.batch_size >= 1, "drl.batch_size", "must be >= 1");
  require(drl.train_every >= 1, "drl.train_every", "must be >= 1");
  require(drl.target_update_every >= 1, "drl.target_update_every", "must be >= 1");
  require(drl.eps_initial >= 0.0 && drl.eps_initial <= 1.0, "drl.eps_initial", "must be in [0, 1]");
  require(drl.eps_final >= 0.0 && drl.eps_final <= 1.0, "drl.eps_final", "must be in [0, 1]");
  require(drl.eps_steps >= 0, "drl.eps_steps", "must be >= 0");
  require(drl.prefill >= 0, "drl.prefill", "must be >= 0");
  require(federation.num_clusters >= 1, "federation.num_clusters", "must be >= 1");
  require(federation.round_subframes >= 1, "federation.round_subframes", "must be >= 1");
  require(federation.clustering_period >= 1, "federation.clustering_period", "must be >= 1");
  require(federation.upload_fraction > 0.0 && federation.upload_fraction <= 1.0,
          "federation.upload_fraction", "must be in (0, 1]");
  require(federation.kmeans_restarts >= 1, "federation.kmeans_restarts", "must be >= 1");
  require(federation.degree_regularization >= 0.0, "federation.degree_regularization", "must be >= 0");
  require(experiment.epochs >= 0, "experiment.epochs", "must be >= 0");
  require(experiment.steps_per_epoch >= 1, "experiment.steps_per_epoch", "must be >= 1");
  require(experiment.moving_average_window >= 1, "experiment.moving_average_window", "must be >= 1");
  require(experiment.summary_fraction > 0.0 && experiment.summary_fraction <= 1.0,
          "experiment.summary_fraction", "must be in (0, 1]");
  require(experiment.random_pool >= 1, "experiment.random_pool", "must be >= 1");
  require(experiment.checkpoint_every_rounds >= 0, "experiment.checkpoint_every_rounds", "must be >= 0");
}

ScenarioConfig ExperimentConfig::scenario_config() const {
  ScenarioConfig s;
  s.layout.extent = scenario.extent_m;
  s.layout.lanes_per_direction = scenario.lanes_per_direction;
  s.layout.lane_width = scenario.lane_width_m;
  s.num_ivues = scenario.num_ivues;
  s.num_pairs = scenario.num_pairs;
  s.vehicle_density = scenario.vehicle_density;
  s.broadcast_range = scenario.pair_range_m;
  s.speed = scenario.speed_mps;
  s.max_redraws = scenario.max_redraws;
  return s;
}

EnvConfig ExperimentConfig::env_config() const {
  EnvConfig e;
  e.num_rbs = phy.num_rbs;
  e.power_levels = phy.power_levels;
  e.p_max_w = dbm_to_watts(phy.p_max_dbm);
  e.ivue_power_w = dbm_to_watts(phy.ivue_power_dbm);
  e.qos.w = phy.rb_bandwidth_hz;
  e.qos.noise_w = dbm_to_watts(phy.noise_dbm);
  e.qos.msg_bits = qos.message_bytes * 8.0;
  e.qos.t_max = qos.t_max_ms * 1e-3;
  e.qos.gamma_o = db_to_linear(qos.gamma_o_db);
  e.qos.p_o = qos.p_o;
  e.qos.r_min_ivue = qos.r_min_bpshz * phy.rb_bandwidth_hz;
  e.reward = reward;
  e.channel.shadow_std_los_db = channel.shadow_std_los_db;
  e.channel.shadow_std_nlos_db = channel.shadow_std_nlos_db;
  e.channel.min_distance = channel.min_distance_m;
  e.channel.bs_los_radius = channel.bs_los_radius_m;
  e.channel.fast_fading = channel.fast_fading;
  e.subframe_s = kSubframeSeconds;
  e.message_period_s = qos.message_period_ms * 1e-3;
  e.large_scale_period = channel.large_scale_period;
  e.broadcast_range = scenario.pair_range_m;
  e.mobility = scenario.mobility;
  return e;
}

DqnConfig ExperimentConfig::dqn_config() const {
  DqnConfig d;
  d.hidden = drl.hidden;
  d.discount = drl.discount;
  d.adam.learning_rate = drl.learning_rate;
  d.adam.beta1 = drl.adam_beta1;
  d.adam.beta2 = drl.adam_beta2;
  d.adam.epsilon = drl.adam_epsilon;
  d.memory_capacity = static_cast<std::size_t>(drl.memory_capacity);
  d.batch_size = static_cast<std::size_t>(drl.batch_size);
  d.train_every = drl.train_every;
  d.target_update_every = drl.target_update_every;
  d.eps_initial = drl.eps_initial;
  d.eps_final = drl.eps_final;
  d.eps_steps = drl.eps_steps;
  d.prefill = static_cast<std::size_t>(drl.prefill);
  d.reward_scale = drl.reward_scale;
  return d;
}

FederationConfig ExperimentConfig::federation_config() const {
  FederationConfig f;
  f.num_clusters = federation.num_clusters;
  f.round_subframes = federation.round_subframes;
  f.clustering_period = federation.clustering_period;
  f.upload_fraction = federation.upload_fraction;
  f.async_slots = federation.async_slots;
  f.mask_rbs = federation.mask_rbs;
  f.spectral.kmeans_restarts = federation.kmeans_restarts;
  f.spectral.degree_regularization = federation.degree_regularization;
  return f;
}

}  // namespace v2x

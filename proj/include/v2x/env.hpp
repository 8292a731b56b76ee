#pragma once

// The cellular V2X MDP: observations, action coding, reward and subframe
// stepping with per-pair traffic bookkeeping.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "v2x/channel.hpp"
#include "v2x/phy.hpp"
#include "v2x/rng.hpp"
#include "v2x/scenario.hpp"

namespace v2x {

struct AgentAction {
  int rb = 0;
  Mode mode = Mode::V2V;
  int power_level = 0;

  friend bool operator==(const AgentAction&, const AgentAction&) = default;
};

// Flat action index <-> (rb, mode, power level).
// With mode selection: index = rb * 2 * Np + mode * Np + level.
// Without:             index = rb * Np + level, mode always V2V.
class ActionSpace {
 public:
  ActionSpace(int num_rbs, int power_levels, bool with_mode = true);

  int size() const { return num_rbs_ * (with_mode_ ? 2 : 1) * power_levels_; }
  int num_rbs() const { return num_rbs_; }
  int power_levels() const { return power_levels_; }
  bool with_mode() const { return with_mode_; }

  int encode(const AgentAction& a) const;
  AgentAction decode(int index) const;
  int rb_of(int index) const { return decode(index).rb; }

 private:
  int num_rbs_;
  int power_levels_;
  bool with_mode_;
};

// How the two V2V terms measure their shortfall.
// Db: mean SINR in dB minus gamma_eff in dB (floored), latency in bits/s/Hz.
// Linear: SINR difference in linear units, latency in bits/s/Hz.
// Relative: SINR / gamma_eff - 1 and rate / required rate - 1, so a miss
// costs at most one weight unit.
enum class MarginForm { Db, Linear, Relative };

struct RewardConfig {
  double c1 = 0.1;
  double c2 = 0.9;
  double c3 = 1.0;
  double c4 = 1.0;
  double revenue = 1.0;  // A in G(x)
  MarginForm margins = MarginForm::Relative;
  double sinr_floor_db = -30.0;  // Db form only
};

// G(x) = A for x >= 0, x otherwise.
inline double reward_gate(double x, double revenue) { return x >= 0.0 ? revenue : x; }

struct RewardTerms {
  double capacity = 0.0;     // sum_m c1 R_m / W
  double ivue_qos = 0.0;     // sum_m c2 G(R_m - R_min)
  double reliability = 0.0;  // sum_k c3 G(gamma_k - gamma_eff)
  double latency = 0.0;      // sum_k c4 G(R_k - L_r / T_r)

  double total() const { return capacity + ivue_qos + reliability + latency; }
};

// Rates enter in bits/s/Hz (divided by W).
RewardTerms compute_reward(const QosReport& report, const QosSpec& qos, const RewardConfig& cfg);

struct EnvConfig {
  int num_rbs = 10;
  int power_levels = 4;
  double p_max_w = 0.19952623149688797;      // 23 dBm
  double ivue_power_w = 0.19952623149688797;  // 23 dBm
  QosSpec qos;
  RewardConfig reward;
  ChannelConfig channel;
  double subframe_s = 1e-3;
  double message_period_s = 10e-3;   // one fresh message per pair per period
  int large_scale_period = 1000;     // subframes between large-scale redraws
  double broadcast_range = 150.0;    // meters; selection counts and newcomer pairing
  bool mobility = true;
};

// Raw per-agent observation (physical units).
struct AgentObservation {
  std::vector<double> i_v;    // interference at own receiver per RB, watts
  std::vector<double> i_b;    // interference at the BS per RB, watts
  std::vector<double> n_sel;  // neighbours that picked each RB
  double h_k = 0.0;           // own-link large-scale gain
  double h_kb = 0.0;          // tx -> BS large-scale gain
  double l_r = 0.0;           // bits
  double t_r = 0.0;           // seconds

  // Network input: interference in dBm and gains in dB mapped to about
  // [-1, 1], counts / 5, load and time as fractions. Length 3F + 4.
  std::vector<double> features(double msg_bits, double t_max) const;
};

inline std::size_t observation_size(int num_rbs) { return 3 * static_cast<std::size_t>(num_rbs) + 4; }

enum class MessageOutcome : std::uint8_t { None, Delivered, Missed };

struct StepResult {
  RewardTerms terms;
  double reward = 0.0;
  QosReport qos;
  double sum_ivue_capacity_bps = 0.0;
  std::vector<MessageOutcome> outcome;  // per pair; set on the message deadline
  std::vector<bool> transmitting;       // per pair: had an RB and positive power
};

class Environment {
 public:
  Environment(EnvConfig cfg, VehicleTopology topology, std::uint64_t channel_seed);

  const EnvConfig& config() const { return cfg_; }
  const VehicleTopology& topology() const { return topology_; }
  const LargeScale& large_scale() const { return large_; }
  const GainTable& mean_gains() const { return mean_; }
  std::size_t num_pairs() const { return topology_.pairs.size(); }
  std::size_t num_ivues() const { return topology_.i_vues.size(); }
  std::int64_t subframe() const { return subframe_; }
  ActionSpace action_space(bool with_mode = true) const {
    return {cfg_.num_rbs, cfg_.power_levels, with_mode};
  }

  AgentObservation observe(std::size_t k) const;
  std::vector<double> observe_features(std::size_t k) const;

  double power_of(int level) const;
  AllocationSnapshot allocation(std::span<const AgentAction> actions) const;

  // Advances one subframe. Throws InvalidActionError on any malformed action.
  StepResult step(std::span<const AgentAction> actions);

  // Activates one more V2V pair and redraws the large-scale state.
  int add_pair(Rng& rng);

  // Remaining load / time per pair.
  const std::vector<double>& remaining_bits() const { return l_r_; }
  const std::vector<double>& remaining_time() const { return t_r_; }

  // Last subframe's V2V interference received at the BS per RB.
  const std::vector<double>& bs_v2v_interference() const { return bs_v2v_; }

 private:
  void redraw_large_scale();
  void start_period();
  void validate(std::span<const AgentAction> actions) const;
  bool neighbours(std::size_t a, std::size_t b) const;

  EnvConfig cfg_;
  VehicleTopology topology_;
  Rng channel_rng_;
  LargeScale large_;
  GainTable mean_;
  std::int64_t subframe_ = 0;
  int period_subframes_ = 10;

  std::vector<double> l_r_, t_r_;
  std::vector<bool> active_message_;

  // Previous-subframe measurements.
  std::vector<double> rx_interference_;  // K x F
  std::vector<double> bs_v2v_;           // F
  std::vector<double> bs_ivue_;          // F
  std::vector<double> own_bs_;           // K, own contribution at the BS
  std::vector<int> last_rb_;             // K, -1 before the first subframe
};

}  // namespace v2x

#include "v2x/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "v2x/error.hpp"
#include "v2x/units.hpp"

namespace v2x {

ActionSpace::ActionSpace(int num_rbs, int power_levels, bool with_mode)
    : num_rbs_(num_rbs), power_levels_(power_levels), with_mode_(with_mode) {
  if (num_rbs < 1 || power_levels < 2) {
    throw ConfigError("phy", "action space needs >= 1 RB and >= 2 power levels");
  }
}

int ActionSpace::encode(const AgentAction& a) const {
  if (a.rb < 0 || a.rb >= num_rbs_ || a.power_level < 0 || a.power_level >= power_levels_ ||
      (a.mode != Mode::V2V && a.mode != Mode::V2I) || (!with_mode_ && a.mode == Mode::V2I)) {
    throw InvalidActionError("action (rb " + std::to_string(a.rb) + ", level " +
                             std::to_string(a.power_level) + ") outside the action space");
  }
  if (!with_mode_) return a.rb * power_levels_ + a.power_level;
  return a.rb * 2 * power_levels_ + static_cast<int>(a.mode) * power_levels_ + a.power_level;
}

AgentAction ActionSpace::decode(int index) const {
  if (index < 0 || index >= size()) {
    throw InvalidActionError("action index " + std::to_string(index) + " outside [0, " +
                             std::to_string(size()) + ")");
  }
  AgentAction a;
  a.power_level = index % power_levels_;
  if (with_mode_) {
    a.mode = static_cast<Mode>((index / power_levels_) % 2);
    a.rb = index / (2 * power_levels_);
  } else {
    a.mode = Mode::V2V;
    a.rb = index / power_levels_;
  }
  return a;
}

RewardTerms compute_reward(const QosReport& r, const QosSpec& qos, const RewardConfig& cfg) {
  RewardTerms t;
  const double w = qos.w;
  for (std::size_t m = 0; m < r.ivue_rate.size(); ++m) {
    t.capacity += cfg.c1 * r.ivue_rate[m] / w;
    t.ivue_qos += cfg.c2 * reward_gate((r.ivue_rate[m] - qos.r_min_ivue) / w, cfg.revenue);
  }
  const double gamma_eff = effective_outage_threshold(qos);
  for (std::size_t k = 0; k < r.pair_rate.size(); ++k) {
    const double sinr = r.pair_mean_sinr[k];
    const double rate = r.pair_rate[k];
    const double need = r.required_rate[k];
    double reliable = 0.0;
    double timely = 0.0;
    switch (cfg.margins) {
      case MarginForm::Db:
        reliable = std::max(linear_to_db(sinr), cfg.sinr_floor_db) - linear_to_db(gamma_eff);
        timely = (rate - need) / w;
        break;
      case MarginForm::Linear:
        reliable = sinr - gamma_eff;
        timely = (rate - need) / w;
        break;
      case MarginForm::Relative:
        reliable = sinr / gamma_eff - 1.0;
        timely = need > 0.0 ? rate / need - 1.0 : 0.0;
        break;
    }
    t.reliability += cfg.c3 * reward_gate(reliable, cfg.revenue);
    t.latency += cfg.c4 * reward_gate(timely, cfg.revenue);
  }
  return t;
}

namespace {

double interference_feature(double watts) {
  if (!(watts > 0.0)) return -1.0;
  const double dbm = std::clamp(watts_to_dbm(watts), -140.0, -40.0);
  return (dbm + 90.0) / 50.0;
}

double gain_feature(double linear) {
  if (!(linear > 0.0)) return -1.0;
  const double db = std::clamp(linear_to_db(linear), -160.0, -40.0);
  return (db + 100.0) / 60.0;
}

}  // namespace

std::vector<double> AgentObservation::features(double msg_bits, double t_max) const {
  std::vector<double> x;
  x.reserve(3 * i_v.size() + 4);
  for (const double v : i_v) x.push_back(interference_feature(v));
  for (const double v : i_b) x.push_back(interference_feature(v));
  for (const double v : n_sel) x.push_back(v / 5.0);
  x.push_back(gain_feature(h_k));
  x.push_back(gain_feature(h_kb));
  x.push_back(l_r / msg_bits);
  x.push_back(t_r / t_max);
  return x;
}

Environment::Environment(EnvConfig cfg, VehicleTopology topology, std::uint64_t channel_seed)
    : cfg_(std::move(cfg)), topology_(std::move(topology)), channel_rng_(channel_seed) {
  if (cfg_.num_rbs < static_cast<int>(topology_.i_vues.size())) {
    throw ConfigError("phy.num_rbs", "must be >= the number of I-VUEs");
  }
  if (cfg_.num_rbs > 64) throw ConfigError("phy.num_rbs", "at most 64 RBs are supported");
  period_subframes_ =
      std::max(1, static_cast<int>(std::lround(cfg_.message_period_s / cfg_.subframe_s)));
  if (cfg_.qos.t_max > cfg_.message_period_s + 1e-12) {
    throw ConfigError("qos.message_period_ms", "must be >= qos.t_max_ms");
  }
  const std::size_t k = num_pairs();
  const auto f = static_cast<std::size_t>(cfg_.num_rbs);
  l_r_.assign(k, 0.0);
  t_r_.assign(k, cfg_.qos.t_max);
  active_message_.assign(k, false);
  rx_interference_.assign(k * f, 0.0);
  bs_v2v_.assign(f, 0.0);
  bs_ivue_.assign(f, 0.0);
  own_bs_.assign(k, 0.0);
  last_rb_.assign(k, -1);
  redraw_large_scale();
  start_period();
}

void Environment::redraw_large_scale() {
  large_ = draw_large_scale(topology_, cfg_.channel, channel_rng_);
  mean_ = make_gain_table(large_, nullptr, static_cast<std::size_t>(cfg_.num_rbs));
}

void Environment::start_period() {
  for (std::size_t k = 0; k < num_pairs(); ++k) {
    l_r_[k] = cfg_.qos.msg_bits;
    t_r_[k] = cfg_.qos.t_max;
    active_message_[k] = true;
  }
}

bool Environment::neighbours(std::size_t a, std::size_t b) const {
  const Point pa = topology_.vehicle(topology_.pairs[a].tx).pos;
  const Point pb = topology_.vehicle(topology_.pairs[b].tx).pos;
  return distance(pa, pb) <= cfg_.broadcast_range;
}

AgentObservation Environment::observe(std::size_t k) const {
  const auto f_count = static_cast<std::size_t>(cfg_.num_rbs);
  AgentObservation o;
  o.i_v.assign(rx_interference_.begin() + static_cast<std::ptrdiff_t>(k * f_count),
               rx_interference_.begin() + static_cast<std::ptrdiff_t>((k + 1) * f_count));
  o.i_b.assign(f_count, 0.0);
  o.n_sel.assign(f_count, 0.0);
  for (std::size_t f = 0; f < f_count; ++f) o.i_b[f] = bs_ivue_[f];
  for (std::size_t j = 0; j < num_pairs(); ++j) {
    if (j == k || last_rb_[j] < 0) continue;
    const auto f = static_cast<std::size_t>(last_rb_[j]);
    o.i_b[f] += own_bs_[j];
    if (neighbours(k, j)) o.n_sel[f] += 1.0;
  }
  o.h_k = mean_.pair_pair(k, k, 0);
  o.h_kb = mean_.pair_bs(k, 0);
  o.l_r = l_r_[k];
  o.t_r = t_r_[k];
  return o;
}

std::vector<double> Environment::observe_features(std::size_t k) const {
  return observe(k).features(cfg_.qos.msg_bits, cfg_.qos.t_max);
}

double Environment::power_of(int level) const {
  return cfg_.p_max_w * static_cast<double>(level) / static_cast<double>(cfg_.power_levels - 1);
}

void Environment::validate(std::span<const AgentAction> actions) const {
  if (actions.size() != num_pairs()) {
    throw InvalidActionError("expected " + std::to_string(num_pairs()) + " actions, got " +
                             std::to_string(actions.size()));
  }
  const ActionSpace space = action_space();
  for (const AgentAction& a : actions) (void)space.encode(a);
}

AllocationSnapshot Environment::allocation(std::span<const AgentAction> actions) const {
  validate(actions);
  AllocationSnapshot alloc;
  alloc.num_rbs = static_cast<std::size_t>(cfg_.num_rbs);
  alloc.p_i.assign(num_ivues(), cfg_.ivue_power_w);
  for (const AgentAction& a : actions) {
    alloc.rb.push_back(a.rb);
    alloc.mode.push_back(a.mode);
    alloc.p_v.push_back(power_of(a.power_level));
  }
  return alloc;
}

StepResult Environment::step(std::span<const AgentAction> actions) {
  const AllocationSnapshot alloc = allocation(actions);
  const std::size_t k_count = num_pairs();
  const std::size_t m_count = num_ivues();
  const auto f_count = static_cast<std::size_t>(cfg_.num_rbs);

  const FastFading fade =
      draw_fast_fading(m_count, k_count, f_count, cfg_.channel, channel_rng_);
  GainTable inst = mean_;
  for (std::size_t tx = 0; tx < m_count + k_count; ++tx) {
    for (std::size_t rx = 0; rx < k_count + 1; ++rx) {
      for (std::size_t f = 0; f < f_count; ++f) inst.at(tx, rx, f) *= fade.at(tx, rx, f);
    }
  }

  StepResult out;
  out.qos = check_qos(alloc, inst, mean_, cfg_.qos, l_r_, t_r_);
  out.terms = compute_reward(out.qos, cfg_.qos, cfg_.reward);
  out.reward = out.terms.total();
  for (const double r : out.qos.ivue_rate) out.sum_ivue_capacity_bps += r;
  out.transmitting.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) out.transmitting[k] = alloc.p_v[k] > 0.0;

  // Traffic.
  out.outcome.assign(k_count, MessageOutcome::None);
  const double dt = cfg_.subframe_s;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!active_message_[k]) continue;
    l_r_[k] = std::max(0.0, l_r_[k] - out.qos.pair_rate[k] * dt);
    t_r_[k] -= dt;
    if (t_r_[k] <= 1e-12) {
      out.outcome[k] = l_r_[k] <= 0.0 ? MessageOutcome::Delivered : MessageOutcome::Missed;
      active_message_[k] = false;
      l_r_[k] = 0.0;
      t_r_[k] = cfg_.qos.t_max;
    }
  }

  // Measurements seen by next subframe's observations.
  std::fill(rx_interference_.begin(), rx_interference_.end(), 0.0);
  std::fill(bs_v2v_.begin(), bs_v2v_.end(), 0.0);
  std::fill(bs_ivue_.begin(), bs_ivue_.end(), 0.0);
  for (std::size_t m = 0; m < m_count; ++m) bs_ivue_[m] = alloc.p_i[m] * inst.ivue_bs(m, m);
  for (std::size_t k = 0; k < k_count; ++k) {
    double* row = &rx_interference_[k * f_count];
    for (std::size_t m = 0; m < m_count; ++m) row[m] += alloc.p_i[m] * inst.ivue_pair(m, k, m);
    for (std::size_t j = 0; j < k_count; ++j) {
      if (j == k || alloc.rb[j] < 0) continue;
      const auto f = static_cast<std::size_t>(alloc.rb[j]);
      row[f] += alloc.p_v[j] * inst.pair_pair(j, k, f);
    }
    last_rb_[k] = alloc.rb[k];
    if (alloc.rb[k] >= 0) {
      const auto f = static_cast<std::size_t>(alloc.rb[k]);
      own_bs_[k] = alloc.p_v[k] * inst.pair_bs(k, f);
      bs_v2v_[f] += own_bs_[k];
    } else {
      own_bs_[k] = 0.0;
    }
  }

  ++subframe_;
  if (cfg_.mobility) topology_ = advance_mobility(topology_, dt);
  if (subframe_ % cfg_.large_scale_period == 0) redraw_large_scale();
  if (subframe_ % period_subframes_ == 0) start_period();
  return out;
}

int Environment::add_pair(Rng& rng) {
  const int idx = v2x::add_pair(topology_, cfg_.broadcast_range, rng);
  const auto f_count = static_cast<std::size_t>(cfg_.num_rbs);
  l_r_.push_back(0.0);
  t_r_.push_back(cfg_.qos.t_max);
  active_message_.push_back(false);
  rx_interference_.resize(num_pairs() * f_count, 0.0);
  own_bs_.push_back(0.0);
  last_rb_.push_back(-1);
  redraw_large_scale();
  return idx;
}

}  // namespace v2x

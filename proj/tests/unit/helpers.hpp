#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "v2x/baselines.hpp"
#include "v2x/channel.hpp"
#include "v2x/env.hpp"
#include "v2x/phy.hpp"
#include "v2x/scenario.hpp"

namespace testutil {

// Mean gains of a tiny instance as a library gain table (same on every RB).
inline v2x::GainTable to_table(const oracle::TinyInstance& in) {
  const auto m = static_cast<std::size_t>(in.m);
  const auto k = static_cast<std::size_t>(in.k);
  v2x::GainTable t(m, k, static_cast<std::size_t>(in.f));
  for (std::size_t f = 0; f < t.num_rbs(); ++f) {
    for (std::size_t i = 0; i < m; ++i) {
      t.at(i, 0, f) = in.ivue_bs[i];
      for (std::size_t j = 0; j < k; ++j) t.at(i, 1 + j, f) = in.ivue_pair[i * k + j];
    }
    for (std::size_t a = 0; a < k; ++a) {
      t.at(m + a, 0, f) = in.pair_bs[a];
      for (std::size_t b = 0; b < k; ++b) t.at(m + a, 1 + b, f) = in.pair_pair[a * k + b];
    }
  }
  return t;
}

// Gains log-uniform over plausible ranges: own links -60..-100 dB,
// cross links -80..-140 dB.
inline oracle::TinyInstance random_instance(std::mt19937_64& rng, int m, int k, int f) {
  std::uniform_real_distribution<double> own(-100.0, -60.0), cross(-140.0, -80.0);
  const auto lin = [](double db) { return std::pow(10.0, db / 10.0); };
  oracle::TinyInstance in;
  in.m = m;
  in.k = k;
  in.f = f;
  for (int i = 0; i < m; ++i) in.ivue_bs.push_back(lin(own(rng)));
  for (int i = 0; i < m * k; ++i) in.ivue_pair.push_back(lin(cross(rng)));
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) in.pair_pair.push_back(lin(a == b ? own(rng) : cross(rng)));
  }
  for (int a = 0; a < k; ++a) in.pair_bs.push_back(lin(cross(rng)));
  in.ivue_power = 0.19952623149688797;
  in.p_max = 0.19952623149688797;
  in.noise = 3.981071705534973e-15;
  return in;
}

inline v2x::QosSpec qos_of(const oracle::TinyInstance& in) {
  v2x::QosSpec q;
  q.r_min_ivue = in.r_min;
  q.msg_bits = in.msg_bits;
  q.t_max = in.t_max;
  q.gamma_o = in.gamma_o;
  q.p_o = in.p_o;
  q.w = in.w;
  q.noise_w = in.noise;
  return q;
}

inline v2x::AllocationSnapshot to_alloc(const oracle::TinyInstance& in,
                                        const std::vector<oracle::Choice>& c) {
  v2x::AllocationSnapshot a;
  a.num_rbs = static_cast<std::size_t>(in.f);
  for (const auto& ch : c) {
    a.rb.push_back(ch.rb);
    a.mode.push_back(ch.v2i ? v2x::Mode::V2I : v2x::Mode::V2V);
    a.p_v.push_back(in.p_max * ch.level / static_cast<double>(in.levels - 1));
  }
  a.p_i.assign(static_cast<std::size_t>(in.m), in.ivue_power);
  return a;
}

inline v2x::CentralizedInput centralized_of(const oracle::TinyInstance& in,
                                            const v2x::GainTable& table) {
  v2x::CentralizedInput c;
  c.gains = &table;
  c.num_ivues = static_cast<std::size_t>(in.m);
  c.num_rbs = in.f;
  c.power_levels = in.levels;
  c.p_max_w = in.p_max;
  c.ivue_power_w = in.ivue_power;
  c.qos = qos_of(in);
  c.reward.c1 = in.c1;
  c.reward.c2 = in.c2;
  c.reward.c3 = in.c3;
  c.reward.c4 = in.c4;
  c.reward.revenue = in.revenue;
  c.reward.sinr_floor_db = in.sinr_floor_db;
  c.reward.margins = static_cast<v2x::MarginForm>(in.margins);
  return c;
}

// Tiny instance carrying RB 0 of a gain table and an environment's
// parameters (gains must not vary over RBs).
inline oracle::TinyInstance from_table(const v2x::GainTable& t, const v2x::EnvConfig& cfg) {
  oracle::TinyInstance in;
  in.m = static_cast<int>(t.num_ivues());
  in.k = static_cast<int>(t.num_pairs());
  in.f = static_cast<int>(t.num_rbs());
  for (std::size_t i = 0; i < t.num_ivues(); ++i) {
    in.ivue_bs.push_back(t.ivue_bs(i, 0));
    for (std::size_t j = 0; j < t.num_pairs(); ++j) in.ivue_pair.push_back(t.ivue_pair(i, j, 0));
  }
  for (std::size_t a = 0; a < t.num_pairs(); ++a)
    for (std::size_t b = 0; b < t.num_pairs(); ++b) in.pair_pair.push_back(t.pair_pair(a, b, 0));
  for (std::size_t a = 0; a < t.num_pairs(); ++a) in.pair_bs.push_back(t.pair_bs(a, 0));
  in.ivue_power = cfg.ivue_power_w;
  in.p_max = cfg.p_max_w;
  in.levels = cfg.power_levels;
  in.noise = cfg.qos.noise_w;
  in.w = cfg.qos.w;
  in.r_min = cfg.qos.r_min_ivue;
  in.msg_bits = cfg.qos.msg_bits;
  in.t_max = cfg.qos.t_max;
  in.gamma_o = cfg.qos.gamma_o;
  in.p_o = cfg.qos.p_o;
  in.c1 = cfg.reward.c1;
  in.c2 = cfg.reward.c2;
  in.c3 = cfg.reward.c3;
  in.c4 = cfg.reward.c4;
  in.revenue = cfg.reward.revenue;
  in.sinr_floor_db = cfg.reward.sinr_floor_db;
  in.margins = static_cast<int>(cfg.reward.margins);
  return in;
}

inline v2x::Environment small_env(std::uint64_t seed, int m = 2, int k = 3, int f = 4,
                                  bool fading = true) {
  v2x::ScenarioConfig sc;
  sc.num_ivues = m;
  sc.num_pairs = k;
  v2x::EnvConfig ec;
  ec.num_rbs = f;
  ec.channel.fast_fading = fading;
  return v2x::Environment(ec, v2x::generate_topology(sc, seed), seed + 1);
}

}  // namespace testutil

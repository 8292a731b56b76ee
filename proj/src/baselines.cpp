#include "v2x/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "v2x/error.hpp"

namespace v2x {

std::vector<int> quietest_rbs(const std::vector<double>& interference, int pool) {
  std::vector<int> idx(interference.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return interference[static_cast<std::size_t>(a)] < interference[static_cast<std::size_t>(b)];
  });
  idx.resize(std::min(idx.size(), static_cast<std::size_t>(std::max(pool, 1))));
  return idx;
}

AgentAction random_select(const AgentObservation& obs, int power_levels, Rng& rng, int pool) {
  const auto rbs = quietest_rbs(obs.i_v, pool);
  std::uniform_int_distribution<std::size_t> pick(0, rbs.size() - 1);
  return {rbs[pick(rng)], Mode::V2V, power_levels - 1};
}

DqnAgent drl_no_mode_agent(const DqnConfig& cfg, int num_rbs, int power_levels,
                           std::size_t obs_dim, std::uint64_t seed) {
  return DqnAgent(cfg, ActionSpace(num_rbs, power_levels, false), obs_dim, seed);
}

Assignment hungarian(const std::vector<double>& cost, std::size_t rows, std::size_t cols) {
  if (cost.size() != rows * cols) throw DimensionError("hungarian: cost size mismatch");
  Assignment out;
  out.col.assign(rows, -1);
  if (rows == 0 || cols == 0) return out;
  double hi = 0.0;
  for (const double c : cost) {
    if (!std::isfinite(c)) throw std::invalid_argument("hungarian: costs must be finite");
    hi = std::max(hi, std::abs(c));
  }
  const std::size_t n = std::max(rows, cols);
  const double sentinel = 2.0 * hi + 1.0;
  const auto at = [&](std::size_t i, std::size_t j) {
    return i < rows && j < cols ? cost[i * cols + j] : sentinel;
  };

  // Shortest augmenting paths with potentials, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = p[j] - 1;
    if (i < rows && j - 1 < cols) {
      out.col[i] = static_cast<int>(j - 1);
      out.cost += cost[i * cols + j - 1];
    }
  }
  return out;
}

namespace {

double level_power(const CentralizedInput& in, int level) {
  return in.p_max_w * static_cast<double>(level) / static_cast<double>(in.power_levels - 1);
}

AllocationSnapshot empty_snapshot(const CentralizedInput& in, std::size_t pairs) {
  AllocationSnapshot a;
  a.num_rbs = static_cast<std::size_t>(in.num_rbs);
  a.rb.assign(pairs, -1);
  a.mode.assign(pairs, Mode::V2V);
  a.p_v.assign(pairs, 0.0);
  a.p_i.assign(in.num_ivues, in.ivue_power_w);
  return a;
}

QosReport fresh_report(const CentralizedInput& in, const AllocationSnapshot& a) {
  const std::vector<double> bits(a.num_pairs(), in.qos.msg_bits);
  const std::vector<double> time(a.num_pairs(), in.qos.t_max);
  return check_qos(a, *in.gains, *in.gains, in.qos, bits, time);
}

struct Cell {
  double benefit = 0.0;
  int level = 0;
  bool feasible = false;
};

// Pair k alone on RB f next to f's incumbent I-VUE: change in the I-VUE
// terms plus the pair's own terms, best over power levels.
Cell evaluate_cell(const CentralizedInput& in, std::size_t k, int f, Mode mode) {
  const std::size_t pairs = in.gains->num_pairs();
  const RewardConfig& rc = in.reward;
  const auto ivue_terms = [&](const QosReport& r) {
    if (static_cast<std::size_t>(f) >= in.num_ivues) return 0.0;
    const double rate = r.ivue_rate[static_cast<std::size_t>(f)];
    return rc.c1 * rate / in.qos.w +
           rc.c2 * reward_gate((rate - in.qos.r_min_ivue) / in.qos.w, rc.revenue);
  };
  AllocationSnapshot a = empty_snapshot(in, pairs);
  const double base = ivue_terms(fresh_report(in, a));
  Cell best;
  best.benefit = -std::numeric_limits<double>::infinity();
  a.rb[k] = f;
  a.mode[k] = mode;
  for (int l = 0; l < in.power_levels; ++l) {
    a.p_v[k] = level_power(in, l);
    const QosReport r = fresh_report(in, a);
    // Pair terms only for pair k: compute_reward sums every pair, so build a
    // one-pair view.
    QosReport one;
    one.pair_rate = {r.pair_rate[k]};
    one.pair_mean_sinr = {r.pair_mean_sinr[k]};
    one.required_rate = {r.required_rate[k]};
    const RewardTerms t = compute_reward(one, in.qos, rc);
    const double value = ivue_terms(r) - base + t.reliability + t.latency;
    if (value > best.benefit) {
      best.benefit = value;
      best.level = l;
      best.feasible = r.latency_ok[k] && r.reliability_ok[k];
    }
  }
  return best;
}

double interference_free_rate(const CentralizedInput& in, std::size_t k, Mode mode) {
  const GainTable& g = *in.gains;
  const double snr = mode == Mode::V2V ? in.p_max_w * g.pair_pair(k, k, 0) / in.qos.noise_w
                                       : in.p_max_w * g.pair_bs(k, 0) / in.qos.noise_w;
  const double r = in.qos.w * std::log2(1.0 + snr);
  return mode == Mode::V2V ? r : 0.5 * r;
}

}  // namespace

CentralizedInput centralized_input(const Environment& env) {
  CentralizedInput in;
  in.gains = &env.mean_gains();
  in.num_ivues = env.num_ivues();
  in.num_rbs = env.config().num_rbs;
  in.power_levels = env.config().power_levels;
  in.p_max_w = env.config().p_max_w;
  in.ivue_power_w = env.config().ivue_power_w;
  in.qos = env.config().qos;
  in.reward = env.config().reward;
  return in;
}

CentralizedResult centralized_allocate(const CentralizedInput& in) {
  if (in.gains == nullptr) throw std::invalid_argument("centralized_allocate: no gains");
  const std::size_t pairs = in.gains->num_pairs();
  const auto f_count = static_cast<std::size_t>(in.num_rbs);
  CentralizedResult res;
  res.actions.assign(pairs, AgentAction{});
  res.pair_feasible.assign(pairs, false);

  std::vector<Mode> mode(pairs, Mode::V2V);
  for (std::size_t k = 0; k < pairs; ++k) {
    if (interference_free_rate(in, k, Mode::V2I) > interference_free_rate(in, k, Mode::V2V)) {
      mode[k] = Mode::V2I;
    }
  }

  std::vector<std::size_t> pending(pairs);
  std::iota(pending.begin(), pending.end(), 0);
  std::vector<char> v2i_taken(f_count, 0);
  while (!pending.empty()) {
    ++res.rounds;
    const std::size_t rows = pending.size();
    std::vector<Cell> cells(rows * f_count);
    std::vector<Mode> cell_mode(rows * f_count);
    std::vector<double> cost(rows * f_count);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t k = pending[r];
      for (std::size_t f = 0; f < f_count; ++f) {
        Mode md = mode[k];
        if (md == Mode::V2I && v2i_taken[f]) md = Mode::V2V;
        cell_mode[r * f_count + f] = md;
        cells[r * f_count + f] = evaluate_cell(in, k, static_cast<int>(f), md);
        cost[r * f_count + f] = -cells[r * f_count + f].benefit;
      }
    }
    const Assignment as = hungarian(cost, rows, f_count);
    std::vector<std::size_t> left;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t k = pending[r];
      if (as.col[r] < 0) {
        left.push_back(k);
        continue;
      }
      const auto f = static_cast<std::size_t>(as.col[r]);
      const Cell& c = cells[r * f_count + f];
      const Mode md = cell_mode[r * f_count + f];
      res.actions[k] = {static_cast<int>(f), md, c.level};
      res.pair_feasible[k] = c.feasible;
      if (md == Mode::V2I) v2i_taken[f] = 1;
    }
    pending = std::move(left);
  }
  res.infeasible = std::any_of(res.pair_feasible.begin(), res.pair_feasible.end(),
                               [](bool ok) { return !ok; });
  return res;
}

double allocation_objective(const CentralizedInput& in, const std::vector<AgentAction>& actions) {
  AllocationSnapshot a = empty_snapshot(in, actions.size());
  for (std::size_t k = 0; k < actions.size(); ++k) {
    a.rb[k] = actions[k].rb;
    a.mode[k] = actions[k].mode;
    a.p_v[k] = level_power(in, actions[k].power_level);
  }
  return compute_reward(fresh_report(in, a), in.qos, in.reward).total();
}

}  // namespace v2x

#pragma once

// Comparison schemes: sensing-based random selection, DRL without mode
// selection, and a centralized greedy-mode + Hungarian allocator.

#include <cstddef>
#include <vector>

#include "v2x/dqn.hpp"
#include "v2x/env.hpp"

namespace v2x {

enum class BaselineKind { Random, DrlNoModeSelection, Centralized };

// Uniform RB among the `pool` RBs with the least interference at the own
// receiver (ties to the lower index), V2V mode, maximum power level.
AgentAction random_select(const AgentObservation& obs, int power_levels, Rng& rng,
                          int pool = 5);

// The RB pool used by random_select, ascending interference.
std::vector<int> quietest_rbs(const std::vector<double>& interference, int pool);

// DQN over F * Np actions (no mode dimension).
DqnAgent drl_no_mode_agent(const DqnConfig& cfg, int num_rbs, int power_levels,
                           std::size_t obs_dim, std::uint64_t seed);

struct Assignment {
  std::vector<int> col;  // per row; -1 when the row went to padding
  double cost = 0.0;     // over real cells only
};

// Minimum-cost assignment. Rectangular inputs are padded to square with a
// sentinel cost; `cost` is row-major rows x cols.
Assignment hungarian(const std::vector<double>& cost, std::size_t rows, std::size_t cols);

struct CentralizedResult {
  std::vector<AgentAction> actions;  // per pair
  bool infeasible = false;           // some pair misses QoS on its RB at every level
  std::vector<bool> pair_feasible;
  int rounds = 0;                    // Hungarian rounds (K > F needs several)
};

struct CentralizedInput {
  const GainTable* gains = nullptr;  // large-scale (mean) gains
  std::size_t num_ivues = 0;
  int num_rbs = 0;
  int power_levels = 4;
  double p_max_w = 0.0;
  double ivue_power_w = 0.0;
  QosSpec qos;
  RewardConfig reward;
};

// (i) V2I mode iff its interference-free rate at P_max beats V2V mode;
// (ii)-(iii) each (pair, RB) cell takes its best power level against the
// RB's incumbent I-VUE only, and Hungarian assignment maximizes the summed
// cell benefit. Pairs beyond F are placed in further rounds; a V2I-mode pair
// never shares an RB with another V2I-mode pair.
CentralizedResult centralized_allocate(const CentralizedInput& in);

CentralizedInput centralized_input(const Environment& env);

// Penalty-relaxed objective for a full allocation on mean gains with fresh
// messages: the reward of the allocation.
double allocation_objective(const CentralizedInput& in, const std::vector<AgentAction>& actions);

}  // namespace v2x

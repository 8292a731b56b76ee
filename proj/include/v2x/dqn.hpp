#pragma once

// Per-agent DQN: replay memory, fixed target network, linear epsilon-greedy.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "v2x/env.hpp"
#include "v2x/nn.hpp"
#include "v2x/rng.hpp"

namespace v2x {

// Bit f set = RB f may be chosen.
using RbMask = std::uint64_t;
inline RbMask all_rbs(int num_rbs) {
  return num_rbs >= 64 ? ~RbMask{0} : (RbMask{1} << num_rbs) - 1;
}

struct DqnConfig {
  std::vector<std::size_t> hidden = {256};
  double discount = 0.70;
  AdamConfig adam;
  std::size_t memory_capacity = 3000;
  std::size_t batch_size = 8;
  int train_every = 2;             // agent steps between training steps
  int target_update_every = 30;    // training steps between target syncs
  double eps_initial = 1.0;
  double eps_final = 0.01;
  std::int64_t eps_steps = 1000;
  std::size_t prefill = 64;        // training starts at max(batch, prefill) transitions
  double reward_scale = 1.0;       // rewards are multiplied by this before storage
};

// [in, hidden..., out]
std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden,
                                     std::size_t out);

// Linear from eps_initial at step 0 to eps_final at eps_steps, flat after.
double epsilon_at(std::int64_t step, const DqnConfig& cfg);

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  RbMask next_mask = ~RbMask{0};
};

// Fixed-capacity FIFO ring.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return slots_.size(); }
  bool empty() const { return size_ == 0; }
  void clear();
  // i-th oldest transition.
  const Transition& at(std::size_t i) const;
  // Uniform with replacement.
  const Transition& sample(Rng& rng) const;

 private:
  std::vector<Transition> slots_;
  std::size_t head_ = 0;  // next write position
  std::size_t size_ = 0;
};

class DqnAgent {
 public:
  DqnAgent(DqnConfig cfg, ActionSpace space, std::size_t obs_dim, std::uint64_t seed);

  const DqnConfig& config() const { return cfg_; }
  const ActionSpace& action_space() const { return space_; }

  // Epsilon-greedy over the actions whose RB is in `mask`.
  int select_action(std::span<const double> obs, RbMask mask = ~RbMask{0});
  // Argmax over allowed actions, lowest index on ties.
  int greedy_action(std::span<const double> obs, RbMask mask = ~RbMask{0});
  std::vector<double> q_values(std::span<const double> obs);

  // r + gamma * max_a' Q_target(s', a') over the allowed a'.
  double compute_target(const Transition& t);

  // Stores the transition and, on training steps, runs one minibatch Adam
  // update. Returns the minibatch loss when training happened.
  std::optional<double> store_and_train(Transition t);
  void sync_target();

  double epsilon() const { return epsilon_at(steps_, cfg_); }
  std::int64_t steps() const { return steps_; }
  void set_steps(std::int64_t s) { steps_ = s; }
  std::int64_t train_steps() const { return train_steps_; }
  std::int64_t target_syncs() const { return target_syncs_; }
  // Transitions consumed by training since the last reset (B^k).
  std::int64_t samples_trained() const { return samples_trained_; }
  void reset_samples_trained() { samples_trained_ = 0; }

  QNetwork& online() { return online_; }
  const QNetwork& online() const { return online_; }
  const QNetwork& target() const { return target_; }
  const AdamState& adam() const { return adam_; }
  const ReplayMemory& memory() const { return memory_; }
  ReplayMemory& memory() { return memory_; }
  Rng& rng() { return rng_; }

  // Replaces both online and target weights (model download).
  void load_model(const QNetwork& net);

  // Model bytes followed by an agent trailer (counters, target weights and
  // Adam moments).
  std::vector<std::uint8_t> checkpoint() const;
  void restore(std::span<const std::uint8_t> bytes);

 private:
  bool allowed(int action, RbMask mask) const;

  DqnConfig cfg_;
  ActionSpace space_;
  std::vector<int> action_rb_;
  QNetwork online_, target_;
  AdamState adam_;
  ReplayMemory memory_;
  Rng rng_;
  Workspace ws_;
  std::vector<double> grad_;
  std::int64_t steps_ = 0;
  std::int64_t train_steps_ = 0;
  std::int64_t target_syncs_ = 0;
  std::int64_t samples_trained_ = 0;
};

}  // namespace v2x

#include "v2x/dqn.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <string>

#include "v2x/error.hpp"

namespace v2x {

double epsilon_at(std::int64_t step, const DqnConfig& cfg) {
  if (cfg.eps_steps <= 0 || step >= cfg.eps_steps) return cfg.eps_final;
  const double frac = static_cast<double>(step) / static_cast<double>(cfg.eps_steps);
  return cfg.eps_initial + (cfg.eps_final - cfg.eps_initial) * frac;
}

ReplayMemory::ReplayMemory(std::size_t capacity) : slots_(capacity) {
  if (capacity == 0) throw ConfigError("drl.memory_capacity", "must be > 0");
}

void ReplayMemory::push(Transition t) {
  slots_[head_] = std::move(t);
  head_ = (head_ + 1) % slots_.size();
  size_ = std::min(size_ + 1, slots_.size());
}

void ReplayMemory::clear() {
  head_ = 0;
  size_ = 0;
}

const Transition& ReplayMemory::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay index");
  const std::size_t oldest = (head_ + slots_.size() - size_) % slots_.size();
  return slots_[(oldest + i) % slots_.size()];
}

const Transition& ReplayMemory::sample(Rng& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  return at(pick(rng));
}

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden,
                                     std::size_t out) {
  std::vector<std::size_t> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

DqnAgent::DqnAgent(DqnConfig cfg, ActionSpace space, std::size_t obs_dim, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      space_(space),
      memory_(cfg_.memory_capacity),
      rng_(seed) {
  for (int a = 0; a < space_.size(); ++a) action_rb_.push_back(space_.rb_of(a));
  online_ = init_weights(layer_sizes(obs_dim, cfg_.hidden, static_cast<std::size_t>(space_.size())), rng_);
  target_ = online_;
  adam_ = AdamState(online_.param_count(), cfg_.adam);
  grad_.assign(online_.param_count(), 0.0);
}

bool DqnAgent::allowed(int action, RbMask mask) const {
  const int rb = action_rb_[static_cast<std::size_t>(action)];
  return rb < 64 && ((mask >> rb) & 1u) != 0;
}

std::vector<double> DqnAgent::q_values(std::span<const double> obs) {
  const auto q = forward(online_, obs, ws_);
  return {q.begin(), q.end()};
}

int DqnAgent::greedy_action(std::span<const double> obs, RbMask mask) {
  const auto q = forward(online_, obs, ws_);
  int best = -1;
  double best_q = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < space_.size(); ++a) {
    if (!allowed(a, mask)) continue;
    if (best < 0 || q[static_cast<std::size_t>(a)] > best_q) {
      best = a;
      best_q = q[static_cast<std::size_t>(a)];
    }
  }
  if (best < 0) throw InvalidActionError("RB mask leaves no admissible action");
  return best;
}

int DqnAgent::select_action(std::span<const double> obs, RbMask mask) {
  if (uniform01(rng_) < epsilon()) {
    std::vector<int> choices;
    for (int a = 0; a < space_.size(); ++a) {
      if (allowed(a, mask)) choices.push_back(a);
    }
    if (choices.empty()) throw InvalidActionError("RB mask leaves no admissible action");
    std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
    return choices[pick(rng_)];
  }
  return greedy_action(obs, mask);
}

double DqnAgent::compute_target(const Transition& t) {
  const auto q = forward(target_, t.next_state, ws_);
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < space_.size(); ++a) {
    if (allowed(a, t.next_mask)) best = std::max(best, q[static_cast<std::size_t>(a)]);
  }
  if (best == -std::numeric_limits<double>::infinity()) best = 0.0;
  return t.reward + cfg_.discount * best;
}

std::optional<double> DqnAgent::store_and_train(Transition t) {
  t.reward *= cfg_.reward_scale;
  memory_.push(std::move(t));
  ++steps_;
  const std::size_t ready = std::max(cfg_.batch_size, cfg_.prefill);
  if (memory_.size() < ready || steps_ % cfg_.train_every != 0) return std::nullopt;

  std::fill(grad_.begin(), grad_.end(), 0.0);
  const double scale = 1.0 / static_cast<double>(cfg_.batch_size);
  double loss = 0.0;
  for (std::size_t b = 0; b < cfg_.batch_size; ++b) {
    const Transition& tr = memory_.sample(rng_);
    const double y = compute_target(tr);
    loss += backward(online_, tr.state, static_cast<std::size_t>(tr.action), y, grad_, ws_, scale);
  }
  adam_.step(online_, grad_);
  ++train_steps_;
  samples_trained_ += static_cast<std::int64_t>(cfg_.batch_size);
  if (train_steps_ % cfg_.target_update_every == 0) sync_target();
  return loss * scale;
}

void DqnAgent::sync_target() {
  target_ = online_;
  ++target_syncs_;
}

void DqnAgent::load_model(const QNetwork& net) {
  if (!net.same_shape(online_)) throw ShapeMismatchError("downloaded model shape differs from agent");
  online_ = net;
  target_ = net;
}

namespace {
constexpr char kAgentMagic[8] = {'V', '2', 'X', 'A', 'G', 'N', 'T', '\0'};
constexpr std::uint32_t kAgentVersion = 1;
}  // namespace

std::vector<std::uint8_t> DqnAgent::checkpoint() const {
  std::vector<std::uint8_t> out = serialize(online_);
  out.insert(out.end(), std::begin(kAgentMagic), std::end(kAgentMagic));
  wire::put_u32(out, kAgentVersion);
  wire::put_u64(out, static_cast<std::uint64_t>(steps_));
  wire::put_u64(out, static_cast<std::uint64_t>(train_steps_));
  wire::put_u64(out, static_cast<std::uint64_t>(target_syncs_));
  wire::put_u64(out, static_cast<std::uint64_t>(adam_.step_count()));
  for (const double p : target_.params()) wire::put_f64(out, p);
  for (const double p : adam_.first_moment()) wire::put_f64(out, p);
  for (const double p : adam_.second_moment()) wire::put_f64(out, p);
  return out;
}

void DqnAgent::restore(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  QNetwork net = deserialize(bytes, &pos);
  if (!net.same_shape(online_)) throw ShapeMismatchError("checkpoint shape differs from agent");
  if (bytes.size() - pos < sizeof(kAgentMagic) ||
      std::memcmp(bytes.data() + pos, kAgentMagic, sizeof(kAgentMagic)) != 0) {
    throw CorruptModelError("missing agent trailer");
  }
  pos += sizeof(kAgentMagic);
  if (wire::get_u32(bytes, pos) != kAgentVersion) throw CorruptModelError("unsupported agent version");
  const auto steps = static_cast<std::int64_t>(wire::get_u64(bytes, pos));
  const auto train = static_cast<std::int64_t>(wire::get_u64(bytes, pos));
  const auto syncs = static_cast<std::int64_t>(wire::get_u64(bytes, pos));
  const auto adam_t = static_cast<std::int64_t>(wire::get_u64(bytes, pos));
  QNetwork target = net;
  for (double& p : target.params()) p = wire::get_f64(bytes, pos);
  std::vector<double> m(net.param_count()), v(net.param_count());
  for (double& p : m) p = wire::get_f64(bytes, pos);
  for (double& p : v) p = wire::get_f64(bytes, pos);
  if (pos != bytes.size()) throw ModelSizeError("trailing bytes after agent checkpoint");
  online_ = std::move(net);
  target_ = std::move(target);
  adam_.restore(adam_t, std::move(m), std::move(v));
  steps_ = steps;
  train_steps_ = train;
  target_syncs_ = syncs;
}

}  // namespace v2x

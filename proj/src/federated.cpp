#include "v2x/federated.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "v2x/error.hpp"
#include "v2x/simd/kernels.hpp"

namespace v2x {

QNetwork federated_average(std::span<const ModelSnapshot> snapshots) {
  if (snapshots.empty()) throw std::invalid_argument("federated_average: no snapshots");
  double total = 0.0;
  for (const auto& s : snapshots) {
    if (s.model == nullptr) throw std::invalid_argument("federated_average: null model");
    if (!s.model->same_shape(*snapshots.front().model)) {
      throw ShapeMismatchError("federated_average: member models differ in shape");
    }
    if (!(s.batch > 0.0)) throw std::invalid_argument("federated_average: batch count must be > 0");
    total += s.batch;
  }
  QNetwork out(snapshots.front().model->layer_sizes());
  auto acc = out.params();
  const auto& k = simd::active();
  for (const auto& s : snapshots) {
    const auto p = s.model->params();
    k.axpy(s.batch / total, p.data(), acc.data(), p.size());
  }
  return out;
}

std::vector<std::size_t> async_schedule(std::size_t cluster_size, std::int64_t start,
                                        std::size_t length) {
  if (cluster_size == 0) throw std::invalid_argument("async_schedule: empty cluster");
  std::vector<std::size_t> owner(length);
  for (std::size_t i = 0; i < length; ++i) {
    owner[i] = static_cast<std::size_t>((start + static_cast<std::int64_t>(i)) %
                                        static_cast<std::int64_t>(cluster_size));
  }
  return owner;
}

namespace {

std::vector<double> cluster_affinity(const SimilarityGraph& g, const ClusterAssignment& a,
                                     int vertex) {
  std::vector<double> score(a.num_clusters(), 0.0);
  for (std::size_t c = 0; c < a.num_clusters(); ++c) {
    for (const int v : a.members[c]) {
      if (v != vertex && static_cast<std::size_t>(v) < g.size()) {
        score[c] += g.weight(static_cast<std::size_t>(vertex), static_cast<std::size_t>(v));
      }
    }
  }
  return score;
}

double l2_distance(const QNetwork& a, const QNetwork& b) {
  double s = 0.0;
  const auto pa = a.params();
  const auto pb = b.params();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = pa[i] - pb[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

int nearest_cluster(const SimilarityGraph& g, const ClusterAssignment& a, int vertex) {
  const auto score = cluster_affinity(g, a, vertex);
  return static_cast<int>(std::max_element(score.begin(), score.end()) - score.begin());
}

DqnAgent bootstrap_newcomer(int vertex, const SimilarityGraph& g,
                            const std::optional<ClusterAssignment>& assignment,
                            std::span<const QNetwork> global_models, const DqnConfig& cfg,
                            const ActionSpace& space, std::size_t obs_dim, std::uint64_t seed,
                            int* cluster_out) {
  if (!assignment) throw NoClusteringError("newcomer arrived before the first clustering");
  const auto score = cluster_affinity(g, *assignment, vertex);
  int best = -1;
  for (std::size_t c = 0; c < score.size(); ++c) {
    if (c >= global_models.size() || global_models[c].param_count() == 0) continue;
    if (best < 0 || score[c] > score[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  if (best < 0) throw NoClusteringError("no cluster has a global model yet");
  DqnAgent agent(cfg, space, obs_dim, seed);
  agent.load_model(global_models[static_cast<std::size_t>(best)]);
  agent.set_steps(cfg.eps_steps);
  if (cluster_out != nullptr) *cluster_out = best;
  return agent;
}

FederatedSystem::FederatedSystem(Environment env, DqnConfig dqn, FederationConfig fed,
                                 std::uint64_t seed)
    : env_(std::move(env)),
      dqn_(std::move(dqn)),
      fed_(fed),
      seed_(seed),
      cluster_rng_(make_stream(seed, "kmeans")),
      upload_rng_(make_stream(seed, "upload")),
      pair_rng_(make_stream(seed, "newcomer")),
      space_(env_.action_space(true)) {
  if (fed_.num_clusters < 1) throw ConfigError("federation.num_clusters", "must be >= 1");
  if (fed_.round_subframes < 1) throw ConfigError("federation.round_subframes", "must be >= 1");
  if (fed_.clustering_period < 1) {
    throw ConfigError("federation.clustering_period", "must be >= 1");
  }
  if (!(fed_.upload_fraction > 0.0 && fed_.upload_fraction <= 1.0)) {
    throw ConfigError("federation.upload_fraction", "must be in (0, 1]");
  }
  const std::size_t obs = observation_size(env_.config().num_rbs);
  // Every member starts from the same broadcast model.
  Rng init_rng = make_stream(seed, "global-init");
  const QNetwork init = init_weights(
      layer_sizes(obs, dqn_.hidden, static_cast<std::size_t>(space_.size())), init_rng);
  for (std::size_t k = 0; k < env_.num_pairs(); ++k) {
    agents_.emplace_back(dqn_, space_, obs, stream_seed(seed, "agent-" + std::to_string(k)));
    agents_.back().load_model(init);
    federated_.push_back(1);
    current_.push_back(AgentAction{});
  }
}

const ClusterAssignment& FederatedSystem::assignment() const {
  if (!assignment_) throw NoClusteringError("clustering has not run yet");
  return *assignment_;
}

int FederatedSystem::cluster_of(std::size_t pair) const {
  const auto& a = assignment();
  return a.label[env_.num_ivues() + pair];
}

RbMask FederatedSystem::mask_of(std::size_t pair) const {
  const int f = env_.config().num_rbs;
  if (!fed_.mask_rbs || !assignment_) return all_rbs(f);
  RbMask m = 0;
  for (const int rb : assignment_->rbs[static_cast<std::size_t>(cluster_of(pair))]) {
    m |= RbMask{1} << rb;
  }
  return m == 0 ? all_rbs(f) : m;
}

void FederatedSystem::recluster() {
  graph_ = build_graph(vertex_gains(env_.large_scale()));
  const int c = std::min<int>(fed_.num_clusters, static_cast<int>(graph_.size()));
  ClusterAssignment a = spectral_partition(graph_, c, cluster_rng_, fed_.spectral);
  a.rbs = candidate_rbs(a, static_cast<int>(env_.num_ivues()), env_.config().num_rbs);
  assignment_ = std::move(a);
  refresh_globals();
}

void FederatedSystem::refresh_globals() {
  const auto& a = *assignment_;
  const std::size_t m = env_.num_ivues();
  global_.assign(a.num_clusters(), QNetwork{});
  for (std::size_t c = 0; c < a.num_clusters(); ++c) {
    std::vector<ModelSnapshot> snaps;
    for (const int v : a.members[c]) {
      if (static_cast<std::size_t>(v) < m) continue;
      const std::size_t k = static_cast<std::size_t>(v) - m;
      if (federated_[k]) snaps.push_back({&agents_[k].online(), 1.0});
    }
    if (!snaps.empty()) global_[c] = federated_average(snaps);
  }
}

StepResult FederatedSystem::step(const Observer& obs) {
  const std::int64_t t = env_.subframe();
  if (!assignment_ || t % fed_.clustering_period == 0) recluster();
  const auto& a = *assignment_;
  const std::size_t m = env_.num_ivues();
  const std::size_t k_count = env_.num_pairs();

  std::vector<char> acting(k_count, 0);
  std::vector<std::vector<double>> state(k_count);
  std::vector<int> chosen(k_count, 0);
  std::vector<RbMask> mask(k_count);
  for (std::size_t c = 0; c < a.num_clusters(); ++c) {
    std::size_t n = 0;
    for (const int v : a.members[c]) n += static_cast<std::size_t>(v) >= m ? 1 : 0;
    std::size_t i = 0;
    for (const int v : a.members[c]) {
      if (static_cast<std::size_t>(v) < m) continue;
      const std::size_t k = static_cast<std::size_t>(v) - m;
      acting[k] = !fed_.async_slots || acts_at(i, n, t);
      ++i;
    }
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    mask[k] = mask_of(k);
    if (!acting[k]) continue;
    state[k] = env_.observe_features(k);
    chosen[k] = agents_[k].select_action(state[k], mask[k]);
    current_[k] = space_.decode(chosen[k]);
  }

  StepResult r = env_.step(current_);

  for (std::size_t k = 0; k < k_count; ++k) {
    if (!acting[k]) continue;
    Transition tr;
    tr.state = std::move(state[k]);
    tr.action = chosen[k];
    tr.reward = r.reward;
    tr.next_state = env_.observe_features(k);
    tr.next_mask = mask[k];
    agents_[k].store_and_train(std::move(tr));
  }
  if (obs) obs(r, current_);
  if (env_.subframe() % fed_.round_subframes == 0) last_rounds_ = average();
  return r;
}

std::vector<CoordinationRound> FederatedSystem::run_round(const Observer& obs) {
  do {
    step(obs);
  } while (env_.subframe() % fed_.round_subframes != 0);
  return last_rounds_;
}

std::vector<CoordinationRound> FederatedSystem::average() {
  const auto& a = *assignment_;
  const std::size_t m = env_.num_ivues();
  std::vector<CoordinationRound> rounds;
  for (std::size_t c = 0; c < a.num_clusters(); ++c) {
    CoordinationRound cr;
    cr.round = round_;
    cr.cluster = static_cast<int>(c);
    std::vector<int> candidates;
    for (const int v : a.members[c]) {
      if (static_cast<std::size_t>(v) < m) continue;
      const int k = v - static_cast<int>(m);
      cr.members.push_back(k);
      if (federated_[static_cast<std::size_t>(k)]) candidates.push_back(k);
    }
    if (cr.members.empty()) continue;
    if (fed_.upload_fraction < 1.0 && !candidates.empty()) {
      const auto keep = static_cast<std::size_t>(
          std::ceil(fed_.upload_fraction * static_cast<double>(candidates.size())));
      std::shuffle(candidates.begin(), candidates.end(), upload_rng_);
      candidates.resize(keep);
      std::sort(candidates.begin(), candidates.end());
    }
    std::vector<ModelSnapshot> snaps;
    for (const int k : candidates) {
      const auto& ag = agents_[static_cast<std::size_t>(k)];
      if (ag.samples_trained() <= 0) continue;
      cr.uploaded.push_back(k);
      cr.batches.push_back(static_cast<double>(ag.samples_trained()));
      snaps.push_back({&ag.online(), cr.batches.back()});
    }
    if (!snaps.empty()) {
      QNetwork global = federated_average(snaps);
      for (const auto& s : snaps) cr.divergence += l2_distance(*s.model, global);
      cr.divergence /= static_cast<double>(snaps.size());
      for (const int k : cr.members) {
        if (federated_[static_cast<std::size_t>(k)]) agents_[static_cast<std::size_t>(k)].load_model(global);
      }
      global_[c] = std::move(global);
      cr.averaged = true;
    }
    for (const int k : cr.members) agents_[static_cast<std::size_t>(k)].reset_samples_trained();
    rounds.push_back(std::move(cr));
  }
  ++round_;
  return rounds;
}

int FederatedSystem::add_newcomer(NewcomerInit init) {
  if (!assignment_) throw NoClusteringError("newcomer arrived before the first clustering");
  const int k = env_.add_pair(pair_rng_);
  graph_ = build_graph(vertex_gains(env_.large_scale()));
  const int vertex = static_cast<int>(env_.num_ivues()) + k;
  const std::size_t obs = observation_size(env_.config().num_rbs);
  const std::uint64_t seed = stream_seed(seed_, "agent-" + std::to_string(k));
  int c = 0;
  if (init == NewcomerInit::Bootstrap) {
    agents_.push_back(bootstrap_newcomer(vertex, graph_, assignment_, global_, dqn_, space_, obs,
                                         seed, &c));
  } else {
    c = nearest_cluster(graph_, *assignment_, vertex);
    agents_.emplace_back(dqn_, space_, obs, seed);
  }
  federated_.push_back(init == NewcomerInit::Bootstrap ? 1 : 0);
  current_.push_back(AgentAction{});
  assignment_->label.push_back(c);
  assignment_->members[static_cast<std::size_t>(c)].push_back(vertex);
  return k;
}

}  // namespace v2x

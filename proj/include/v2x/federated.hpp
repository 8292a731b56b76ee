#pragma once

// Small-timescale coordination: batch-weighted federated averaging inside
// each cluster, asynchronous subframe slots and newcomer bootstrap.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "v2x/cluster.hpp"
#include "v2x/dqn.hpp"
#include "v2x/env.hpp"

namespace v2x {

struct ModelSnapshot {
  const QNetwork* model = nullptr;
  double batch = 0.0;  // B^k
};

// theta = sum_k (B^k / B) theta^k.
QNetwork federated_average(std::span<const ModelSnapshot> snapshots);

// Member i of an n-member cluster acts at subframes t with t % n == i.
inline bool acts_at(std::size_t member, std::size_t cluster_size, std::int64_t subframe) {
  return cluster_size <= 1 ||
         static_cast<std::size_t>(subframe % static_cast<std::int64_t>(cluster_size)) == member;
}

// Acting member per subframe over [start, start + length).
std::vector<std::size_t> async_schedule(std::size_t cluster_size, std::int64_t start,
                                        std::size_t length);

struct FederationConfig {
  int num_clusters = 5;
  int round_subframes = 100;       // averaging frequency
  int clustering_period = 1000;    // subframes between re-clusterings
  double upload_fraction = 1.0;    // share of members uploading each round
  bool async_slots = true;
  bool mask_rbs = true;
  SpectralOptions spectral;
};

struct CoordinationRound {
  int round = 0;
  int cluster = 0;
  std::vector<int> members;    // pair ids
  std::vector<int> uploaded;   // pair ids that contributed
  std::vector<double> batches; // B^k of the uploaders
  double divergence = 0.0;     // mean L2 distance of uploads to the global model
  bool averaged = false;
};

// Cluster whose members carry the largest summed edge weight to `vertex`;
// the lowest index wins ties. `vertex` itself is ignored.
int nearest_cluster(const SimilarityGraph& g, const ClusterAssignment& a, int vertex);

enum class NewcomerInit { Bootstrap, Scratch };

// Owns the environment and one agent per V2V pair, and runs the
// two-timescale loop one subframe at a time.
class FederatedSystem {
 public:
  using Observer = std::function<void(const StepResult&, std::span<const AgentAction>)>;

  FederatedSystem(Environment env, DqnConfig dqn, FederationConfig fed, std::uint64_t seed);

  Environment& env() { return env_; }
  const Environment& env() const { return env_; }
  std::vector<DqnAgent>& agents() { return agents_; }
  const std::vector<DqnAgent>& agents() const { return agents_; }
  const FederationConfig& config() const { return fed_; }
  bool clustered() const { return assignment_.has_value(); }
  const ClusterAssignment& assignment() const;
  const SimilarityGraph& graph() const { return graph_; }
  // Latest global model per cluster (empty network if none yet).
  const std::vector<QNetwork>& global_models() const { return global_; }
  const std::vector<CoordinationRound>& last_rounds() const { return last_rounds_; }
  int rounds_completed() const { return round_; }

  // Pair k's cluster and its position within the cluster.
  int cluster_of(std::size_t pair) const;
  RbMask mask_of(std::size_t pair) const;

  void recluster();

  // One subframe; clusters and averages on their period boundaries.
  StepResult step(const Observer& obs = {});

  // Steps until the next averaging boundary, then averages.
  std::vector<CoordinationRound> run_round(const Observer& obs = {});

  // Activates one more pair. Bootstrap: joins the nearest cluster with its
  // global model at final epsilon and takes part in averaging. Scratch: a
  // fresh local model that never takes part in averaging.
  int add_newcomer(NewcomerInit init);
  bool federated(std::size_t pair) const { return federated_[pair] != 0; }

 private:
  std::vector<CoordinationRound> average();
  void refresh_globals();

  Environment env_;
  DqnConfig dqn_;
  FederationConfig fed_;
  std::uint64_t seed_;
  Rng cluster_rng_;
  Rng upload_rng_;
  Rng pair_rng_;
  ActionSpace space_;
  std::vector<DqnAgent> agents_;
  std::vector<char> federated_;
  std::vector<AgentAction> current_;
  SimilarityGraph graph_;
  std::optional<ClusterAssignment> assignment_;
  std::vector<QNetwork> global_;
  std::vector<CoordinationRound> last_rounds_;
  int round_ = 0;
};

// Fresh agent carrying the global model of the newcomer's nearest cluster,
// epsilon at its final value and an empty replay memory. Throws
// NoClusteringError when `assignment` is empty.
DqnAgent bootstrap_newcomer(int vertex, const SimilarityGraph& g,
                            const std::optional<ClusterAssignment>& assignment,
                            std::span<const QNetwork> global_models, const DqnConfig& cfg,
                            const ActionSpace& space, std::size_t obs_dim, std::uint64_t seed,
                            int* cluster_out = nullptr);

}  // namespace v2x

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "v2x/error.hpp"
#include "v2x/federated.hpp"

using namespace v2x;

namespace {

QNetwork random_net(std::mt19937_64& rng, const std::vector<std::size_t>& sizes = {4, 6, 3}) {
  QNetwork n(sizes);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& p : n.params()) p = u(rng);
  return n;
}

std::vector<double> params_of(const QNetwork& n) { return {n.params().begin(), n.params().end()}; }

DqnConfig small_dqn() {
  DqnConfig c;
  c.hidden = {16};
  c.prefill = 8;
  return c;
}

FederatedSystem small_system(std::uint64_t seed, FederationConfig fed = {}) {
  fed.num_clusters = 3;
  return FederatedSystem(testutil::small_env(seed, 2, 6, 6), small_dqn(), fed, seed);
}

}  // namespace

TEST_SUITE("federated") {
  TEST_CASE("averaging weights") {
    std::mt19937_64 rng(1);
    const QNetwork a = random_net(rng), b = random_net(rng);
    const std::vector<ModelSnapshot> eq{{&a, 2.0}, {&b, 2.0}};
    const QNetwork mean = federated_average(eq);
    for (std::size_t i = 0; i < a.param_count(); ++i)
      CHECK(mean.params()[i] == doctest::Approx(0.5 * (a.params()[i] + b.params()[i])).epsilon(1e-15));

    const std::vector<ModelSnapshot> w{{&a, 1.0}, {&b, 3.0}};
    const QNetwork g = federated_average(w);
    const auto expect = oracle::weighted_mean({params_of(a), params_of(b)}, {1.0, 3.0});
    for (std::size_t i = 0; i < g.param_count(); ++i)
      CHECK(g.params()[i] == doctest::Approx(expect[i]).epsilon(1e-14));

    const std::vector<ModelSnapshot> one{{&a, 5.0}};
    CHECK(federated_average(one) == a);
  }

  TEST_CASE("averaging errors") {
    std::mt19937_64 rng(2);
    const QNetwork a = random_net(rng), b = random_net(rng, {4, 5, 3});
    CHECK_THROWS_AS(federated_average(std::vector<ModelSnapshot>{}), std::invalid_argument);
    CHECK_THROWS_AS(federated_average(std::vector<ModelSnapshot>{{&a, 1}, {&b, 1}}), ShapeMismatchError);
    CHECK_THROWS_AS(federated_average(std::vector<ModelSnapshot>{{&a, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(federated_average(std::vector<ModelSnapshot>{{nullptr, 1}}), std::invalid_argument);
  }

  TEST_CASE("averaging algebra") {
    std::mt19937_64 rng(3);
    const QNetwork a = random_net(rng), b = random_net(rng), c = random_net(rng);
    // Idempotent on identical inputs.
    CHECK(federated_average(std::vector<ModelSnapshot>{{&a, 1}, {&a, 7}, {&a, 2}}).params()[0] ==
          doctest::Approx(a.params()[0]).epsilon(1e-15));
    // Permutation invariant.
    const QNetwork p = federated_average(std::vector<ModelSnapshot>{{&a, 1}, {&b, 2}, {&c, 3}});
    const QNetwork q = federated_average(std::vector<ModelSnapshot>{{&c, 3}, {&a, 1}, {&b, 2}});
    for (std::size_t i = 0; i < p.param_count(); ++i)
      CHECK(p.params()[i] == doctest::Approx(q.params()[i]).epsilon(1e-14));
    // Linear in each snapshot.
    QNetwork a2 = a;
    for (std::size_t i = 0; i < a2.param_count(); ++i) a2.params()[i] += 2.0 * b.params()[i];
    const QNetwork r = federated_average(std::vector<ModelSnapshot>{{&a2, 1}, {&c, 3}});
    const QNetwork s = federated_average(std::vector<ModelSnapshot>{{&a, 1}, {&c, 3}});
    for (std::size_t i = 0; i < r.param_count(); ++i)
      CHECK(r.params()[i] - s.params()[i] == doctest::Approx(0.25 * 2.0 * b.params()[i]).epsilon(1e-12));
  }

  TEST_CASE("averaging one gradient step per member equals the weighted gradient step") {
    std::mt19937_64 rng(4);
    const QNetwork theta = random_net(rng, {5, 8, 4});
    const double beta = 1e-3;
    std::vector<QNetwork> local;
    std::vector<double> batch{8, 16, 24};
    std::vector<double> weighted(theta.param_count(), 0.0);
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t k = 0; k < 3; ++k) {
      std::vector<double> x(5);
      for (auto& v : x) v = u(rng);
      const auto g = backward(theta, x, k, u(rng));
      QNetwork t = theta;
      for (std::size_t i = 0; i < g.size(); ++i) {
        t.params()[i] -= beta * g[i];
        weighted[i] += batch[k] / 48.0 * g[i];
      }
      local.push_back(t);
    }
    std::vector<ModelSnapshot> snaps;
    for (std::size_t k = 0; k < 3; ++k) snaps.push_back({&local[k], batch[k]});
    const QNetwork avg = federated_average(snaps);
    for (std::size_t i = 0; i < avg.param_count(); ++i)
      CHECK(std::abs(avg.params()[i] - (theta.params()[i] - beta * weighted[i])) <= 1e-12);
  }

  TEST_CASE("asynchronous slots") {
    for (std::int64_t t = 0; t < 10; ++t) CHECK(acts_at(0, 1, t));
    std::vector<std::int64_t> slots;
    for (std::int64_t t = 0; t < 12; ++t)
      if (acts_at(2, 3, t)) slots.push_back(t);
    CHECK(slots == std::vector<std::int64_t>{2, 5, 8, 11});
    const auto owner = async_schedule(3, 0, 30);
    std::map<std::size_t, int> count;
    for (auto o : owner) ++count[o];
    CHECK(count.size() == 3);
    for (auto& [m, c] : count) CHECK(c == 10);
    CHECK(async_schedule(4, 6, 3) == std::vector<std::size_t>{2, 3, 0});
    CHECK_THROWS(async_schedule(0, 0, 3));
  }

  TEST_CASE("newcomer needs a clustering") {
    FederatedSystem sys = small_system(5);
    CHECK_FALSE(sys.clustered());
    CHECK_THROWS_AS(sys.assignment(), NoClusteringError);
    CHECK_THROWS_AS(sys.add_newcomer(NewcomerInit::Bootstrap), NoClusteringError);
    SimilarityGraph g{Matrix(3, 3)};
    CHECK_THROWS_AS(bootstrap_newcomer(2, g, std::nullopt, {}, small_dqn(), ActionSpace(2, 2), 4, 1),
                    NoClusteringError);
  }

  TEST_CASE("newcomer joins the adjacent cluster and copies its global model") {
    // Vertices 0..4; clusters {0,1}, {2,3}; vertex 4 is strongly tied to 3.
    Matrix w(5, 5);
    const auto set = [&](std::size_t i, std::size_t j, double v) { w(i, j) = w(j, i) = v; };
    set(0, 1, 1.0);
    set(2, 3, 1.0);
    set(4, 0, 0.1);
    set(4, 3, 0.9);
    const SimilarityGraph g{w};
    ClusterAssignment a = make_assignment({0, 0, 1, 1}, 2, 1, 4);
    CHECK(nearest_cluster(g, a, 4) == 1);
    std::mt19937_64 rng(6);
    const DqnConfig cfg = small_dqn();
    const ActionSpace space(4, 2);
    std::vector<QNetwork> globals{random_net(rng, {16, 16, 16}), random_net(rng, {16, 16, 16})};
    int cluster = -1;
    DqnAgent agent = bootstrap_newcomer(4, g, a, globals, cfg, space, 16, 9, &cluster);
    CHECK(cluster == 1);
    CHECK(agent.online() == globals[1]);
    CHECK(agent.target() == globals[1]);
    CHECK(agent.epsilon() == cfg.eps_final);
    CHECK(agent.memory().empty());

    // A cluster without a global model is skipped.
    globals[1] = QNetwork{};
    bootstrap_newcomer(4, g, a, globals, cfg, space, 16, 9, &cluster);
    CHECK(cluster == 0);
  }

  TEST_CASE("a round clusters, averages and redistributes") {
    FederatedSystem sys = small_system(7);
    const auto rounds = sys.run_round();
    CHECK(sys.env().subframe() == 100);
    CHECK(sys.rounds_completed() == 1);
    REQUIRE(sys.clustered());
    const auto& a = sys.assignment();
    std::size_t covered = 0;
    for (const auto& m : a.members) covered += m.size();
    CHECK(covered == 8);
    for (const auto& r : rounds) {
      CHECK(r.round == 0);
      for (int k : r.members) CHECK(sys.cluster_of(static_cast<std::size_t>(k)) == r.cluster);
      if (!r.averaged) continue;
      const QNetwork& global = sys.global_models()[static_cast<std::size_t>(r.cluster)];
      for (int k : r.members) {
        CHECK(sys.agents()[static_cast<std::size_t>(k)].online() == global);
        CHECK(sys.agents()[static_cast<std::size_t>(k)].target() == global);
        CHECK(sys.agents()[static_cast<std::size_t>(k)].samples_trained() == 0);
      }
      CHECK(r.uploaded.size() == r.batches.size());
      for (double b : r.batches) CHECK(b > 0.0);
      CHECK(r.divergence >= 0.0);
    }
  }

  TEST_CASE("asynchronous members act at the same long-run frequency") {
    FederatedSystem sys = small_system(8);
    sys.run_round();
    const auto& a = sys.assignment();
    const std::size_t m = sys.env().num_ivues();
    for (const auto& members : a.members) {
      std::vector<std::size_t> pairs;
      for (int v : members)
        if (static_cast<std::size_t>(v) >= m) pairs.push_back(static_cast<std::size_t>(v) - m);
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::int64_t expect = 0;
        for (std::int64_t t = 0; t < 100; ++t) expect += acts_at(i, pairs.size(), t) ? 1 : 0;
        CHECK(sys.agents()[pairs[i]].steps() == expect);
      }
    }
  }

  TEST_CASE("masks follow the candidate RB groups") {
    FederatedSystem sys = small_system(9);
    sys.step();
    const auto& a = sys.assignment();
    for (std::size_t k = 0; k < sys.env().num_pairs(); ++k) {
      const auto& rbs = a.rbs[static_cast<std::size_t>(sys.cluster_of(k))];
      RbMask expect = 0;
      for (int f : rbs) expect |= RbMask{1} << f;
      CHECK(sys.mask_of(k) == expect);
    }
  }

  TEST_CASE("partial upload") {
    FederationConfig fed;
    fed.upload_fraction = 0.5;
    fed.async_slots = false;
    FederatedSystem sys = small_system(10, fed);
    for (const auto& r : sys.run_round())
      CHECK(r.uploaded.size() <= static_cast<std::size_t>(std::ceil(0.5 * r.members.size())));
  }

  TEST_CASE("newcomers in a running system") {
    FederatedSystem sys = small_system(11);
    sys.run_round();
    FederatedSystem scratch = sys;
    const int k = sys.add_newcomer(NewcomerInit::Bootstrap);
    CHECK(k == 6);
    CHECK(sys.federated(6));
    const int c = sys.cluster_of(6);
    CHECK(sys.agents()[6].online() == sys.global_models()[static_cast<std::size_t>(c)]);
    CHECK(sys.agents()[6].epsilon() == small_dqn().eps_final);
    const int j = scratch.add_newcomer(NewcomerInit::Scratch);
    CHECK(j == 6);
    CHECK_FALSE(scratch.federated(6));
    CHECK_FALSE(scratch.agents()[6].online() == scratch.global_models()[static_cast<std::size_t>(scratch.cluster_of(6))]);
    sys.run_round();
    scratch.run_round();
    CHECK(sys.agents()[6].online() == sys.global_models()[static_cast<std::size_t>(sys.cluster_of(6))]);
  }

  TEST_CASE("determinism") {
    FederatedSystem a = small_system(12), b = small_system(12);
    for (int r = 0; r < 2; ++r) {
      a.run_round();
      b.run_round();
    }
    for (std::size_t k = 0; k < a.agents().size(); ++k) CHECK(a.agents()[k].online() == b.agents()[k].online());
  }

  TEST_CASE("invalid federation settings") {
    FederationConfig fed;
    fed.upload_fraction = 0.0;
    CHECK_THROWS_AS(FederatedSystem(testutil::small_env(1), small_dqn(), fed, 1), ConfigError);
    fed = {};
    fed.round_subframes = 0;
    CHECK_THROWS_AS(FederatedSystem(testutil::small_env(1), small_dqn(), fed, 1), ConfigError);
  }
}

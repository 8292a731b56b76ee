#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "v2x/cluster.hpp"
#include "v2x/error.hpp"
#include "v2x/scenario.hpp"

using namespace v2x;

namespace {

Matrix random_symmetric(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(rng);
  return a;
}

std::vector<double> flat(const SimilarityGraph& g) { return g.weight.data(); }

void check_partition(const ClusterAssignment& a, std::size_t n) {
  std::set<int> seen;
  for (std::size_t c = 0; c < a.num_clusters(); ++c) {
    CHECK_FALSE(a.members[c].empty());
    for (int v : a.members[c]) {
      CHECK(seen.insert(v).second);
      CHECK(a.label[static_cast<std::size_t>(v)] == static_cast<int>(c));
    }
  }
  CHECK(seen.size() == n);
}

// Two blocks of sizes s1, s2 with intra weights in [hi/2, hi] and inter
// weights in [0, lo].
SimilarityGraph planted(std::mt19937_64& rng, std::size_t s1, std::size_t s2, double hi, double lo) {
  const std::size_t n = s1 + s2;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> block(n);
  for (std::size_t i = 0; i < n; ++i) block[order[i]] = i < s1 ? 0 : 1;
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      g(i, j) = g(j, i) = block[i] == block[j] ? hi * (0.5 + 0.5 * u(rng)) : lo * u(rng);
  return build_graph(g);
}

}  // namespace

TEST_SUITE("cluster") {
  TEST_CASE("graph weights take the larger direction") {
    Matrix g(2, 2);
    g(0, 1) = 0.2;
    g(1, 0) = 0.5;
    const SimilarityGraph s = build_graph(g);
    CHECK(s.weight(0, 1) == 0.5);
    CHECK(s.weight(1, 0) == 0.5);
    std::mt19937_64 rng(1);
    Matrix h(4, 4);
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) h(i, j) = u(rng);
    const SimilarityGraph t = build_graph(h);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(t.weight(i, i) == 0.0);
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(t.weight(i, j) == t.weight(j, i));
        if (i != j) CHECK(t.weight(i, j) == std::max(h(i, j), h(j, i)));
      }
    }
  }

  TEST_CASE("vertex gains from a drop") {
    ScenarioConfig sc;
    const VehicleTopology top = generate_topology(sc, 42);
    Rng rng(1);
    const LargeScale ls = draw_large_scale(top, ChannelConfig{}, rng);
    const Matrix g = vertex_gains(ls);
    REQUIRE(g.rows() == 15);
    for (std::size_t i = 0; i < 15; ++i) {
      CHECK(g(i, i) == 0.0);
      for (std::size_t j = 0; j < 15; ++j) {
        CHECK(g(i, j) >= 0.0);
        CHECK(g(i, j) == g(j, i));
      }
    }
    // Pair vertex 5 sits at pair 0's transmitter.
    CHECK(g(0, 5) == doctest::Approx(ls.gain(ls.ivue(0), ls.tx(0))));
    CHECK(g(5, 6) == doctest::Approx(ls.gain(ls.tx(0), ls.tx(1))));
    const SimilarityGraph s = build_graph(g);
    CHECK(edge_list(s).find("0 5 ") != std::string::npos);
  }

  TEST_CASE("Jacobi on small matrices") {
    Matrix d(3, 3);
    d(0, 0) = 3;
    d(1, 1) = -1;
    d(2, 2) = 2;
    const EigenDecomposition e = jacobi_eigen(d);
    CHECK(e.values == std::vector<double>{-1, 2, 3});
    CHECK(std::abs(e.vectors(1, 0)) == 1.0);
    CHECK(std::abs(e.vectors(2, 1)) == 1.0);
    CHECK(std::abs(e.vectors(0, 2)) == 1.0);

    Matrix a(2, 2);
    a(0, 0) = a(1, 1) = 2;
    a(0, 1) = a(1, 0) = 1;
    const EigenDecomposition f = jacobi_eigen(a);
    CHECK(f.values[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.values[1] == doctest::Approx(3.0).epsilon(1e-14));

    Matrix ns(2, 2);
    ns(0, 1) = 1.0;
    CHECK_THROWS_AS(jacobi_eigen(ns), NotSymmetricError);
    CHECK_THROWS_AS(jacobi_eigen(Matrix(2, 3)), NotSymmetricError);
  }

  TEST_CASE("Jacobi residual, reconstruction and orthonormality") {
    std::mt19937_64 rng(2);
    for (std::size_t n : {2u, 5u, 10u, 25u, 60u}) {
      const Matrix a = random_symmetric(rng, n);
      const EigenDecomposition e = jacobi_eigen(a);
      CHECK(e.off_norm < 1e-10);
      for (std::size_t i = 1; i < n; ++i) CHECK(e.values[i - 1] <= e.values[i]);
      double recon = 0.0, ortho = 0.0, resid = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double r = 0.0, o = 0.0, av = 0.0;
          for (std::size_t c = 0; c < n; ++c) {
            r += e.vectors(i, c) * e.values[c] * e.vectors(j, c);
            o += e.vectors(c, i) * e.vectors(c, j);
            av += a(i, c) * e.vectors(c, j);
          }
          recon += (a(i, j) - r) * (a(i, j) - r);
          ortho += (o - (i == j ? 1.0 : 0.0)) * (o - (i == j ? 1.0 : 0.0));
          resid = std::max(resid, std::abs(av - e.values[j] * e.vectors(i, j)));
        }
      }
      CHECK(std::sqrt(recon) < 1e-8);
      CHECK(std::sqrt(ortho) < 1e-8);
      CHECK(resid < 1e-8);
    }
  }

  TEST_CASE("k-means separates obvious groups") {
    Matrix p(6, 2);
    const double pts[6][2] = {{0, 0}, {0.1, 0}, {0, 0.1}, {5, 5}, {5.1, 5}, {5, 5.1}};
    for (std::size_t i = 0; i < 6; ++i) {
      p(i, 0) = pts[i][0];
      p(i, 1) = pts[i][1];
    }
    Rng rng(3);
    double sse = 0.0;
    const auto label = kmeans(p, 2, rng, 20, 100, &sse);
    CHECK(label == std::vector<int>{0, 0, 0, 1, 1, 1});
    CHECK(sse == doctest::Approx(4 * (0.1 * 0.1 * 2 / 3.0)).epsilon(1e-9));
  }

  TEST_CASE("two disconnected triangles are recovered exactly") {
    Matrix g(6, 6);
    const std::vector<std::vector<int>> tri{{0, 2, 4}, {1, 3, 5}};
    for (const auto& t : tri)
      for (int a : t)
        for (int b : t)
          if (a != b) g(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) = 1.0;
    const SimilarityGraph s = build_graph(g);
    Rng rng(4);
    const ClusterAssignment a = spectral_partition(s, 2, rng);
    check_partition(a, 6);
    double best = 0.0;
    const auto oracle_label = oracle::best_partition(flat(s), 6, 2, &best);
    CHECK(a.label == oracle_label);
    CHECK(partition_objective(s, a.label) == doctest::Approx(best));
    CHECK(best == 12.0);
  }

  TEST_CASE("trivial cluster counts") {
    std::mt19937_64 rng(5);
    const SimilarityGraph s = planted(rng, 3, 4, 1.0, 0.1);
    Rng r(1);
    const ClusterAssignment one = spectral_partition(s, 1, r);
    CHECK(one.num_clusters() == 1);
    check_partition(one, 7);
    const ClusterAssignment all = spectral_partition(s, 7, r);
    CHECK(all.num_clusters() == 7);
    for (const auto& m : all.members) CHECK(m.size() == 1);
    check_partition(all, 7);
    CHECK_THROWS(spectral_partition(s, 0, r));
    CHECK_THROWS(spectral_partition(s, 8, r));
  }

  TEST_CASE("zero-degree vertex") {
    Matrix g(4, 4);
    g(0, 1) = g(1, 0) = 1.0;
    g(1, 2) = g(2, 1) = 1.0;
    const SimilarityGraph s = build_graph(g);
    Rng r(2);
    SpectralOptions strict;
    strict.degree_regularization = 0.0;
    CHECK_THROWS_AS(spectral_partition(s, 2, r, strict), DegenerateGraphError);
    const ClusterAssignment a = spectral_partition(s, 2, r);
    check_partition(a, 4);
  }

  TEST_CASE("planted two-block graphs reach the brute-force optimum") {
    std::mt19937_64 rng(6);
    int hits = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t s1 = 3 + rng() % 3, s2 = 3 + rng() % 3;
      const SimilarityGraph s = planted(rng, s1, s2, 1.0, 0.05);
      Rng r(static_cast<std::uint64_t>(trial));
      const ClusterAssignment a = spectral_partition(s, 2, r);
      check_partition(a, s1 + s2);
      double best = 0.0;
      oracle::best_partition(flat(s), s1 + s2, 2, &best);
      hits += partition_objective(s, a.label) >= best - 1e-9 ? 1 : 0;
    }
    CHECK(hits >= 95);
  }

  TEST_CASE("spectral partition is deterministic per seed") {
    std::mt19937_64 rng(7);
    const SimilarityGraph s = planted(rng, 6, 9, 1.0, 0.3);
    Rng a(11), b(11);
    CHECK(spectral_partition(s, 4, a).label == spectral_partition(s, 4, b).label);
  }

  TEST_CASE("candidate RB groups") {
    // M = 5 I-VUEs (vertices 0..4), pairs 5..9.
    ClusterAssignment a = make_assignment({0, 1, 1, 0, 2, 2, 0, 1, 2, 2}, 3, 5, 10);
    CHECK(a.members[0] == std::vector<int>{0, 3, 6});
    const auto rbs = candidate_rbs(a, 5, 10);
    CHECK(rbs[0] == std::vector<int>{1, 2, 4, 5, 6, 7, 8, 9});
    CHECK(rbs[2] == std::vector<int>{0, 1, 2, 3, 5, 6, 7, 8, 9});
    CHECK(a.rbs == rbs);

    // Cluster holding I-VUE 3 only: F minus RB 3.
    const auto b = make_assignment({0, 0, 0, 1, 0, 1, 1}, 2, 5, 10);
    CHECK(b.rbs[1].size() == 9);
    CHECK(std::find(b.rbs[1].begin(), b.rbs[1].end(), 3) == b.rbs[1].end());

    // No I-VUEs in the cluster: every RB; every I-VUE: F - M.
    const auto c = make_assignment({0, 0, 0, 0, 0, 1, 1}, 2, 5, 10);
    CHECK(c.rbs[1].size() == 10);
    CHECK(c.rbs[0].size() == 5);
  }

  TEST_CASE("partition objective counts ordered pairs") {
    Matrix g(3, 3);
    g(0, 1) = 2.0;
    g(1, 2) = 3.0;
    const SimilarityGraph s = build_graph(g);
    CHECK(partition_objective(s, {0, 0, 1}) == 4.0);
    CHECK(partition_objective(s, {0, 0, 0}) == 10.0);
    CHECK(oracle::intra_weight(flat(s), 3, {0, 0, 1}) == 4.0);
  }
}

#include "v2x/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "v2x/error.hpp"

namespace v2x {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition jacobi_eigen(const Matrix& input, int max_sweeps) {
  const std::size_t n = input.rows();
  if (input.cols() != n) throw NotSymmetricError("matrix is not square");
  double scale = 0.0;
  for (const double v : input.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(input(i, j) - input(j, i)) > 1e-12 * std::max(scale, 1e-300)) {
        throw NotSymmetricError("matrix is not symmetric");
      }
    }
  }

  Matrix a = input;
  Matrix v = Matrix::identity(n);
  EigenDecomposition out;
  double frob = 0.0;
  for (const double x : a.data()) frob += x * x;
  frob = std::sqrt(frob);

  for (out.sweeps = 0; out.sweeps < max_sweeps; ++out.sweeps) {
    const double off = off_diagonal_norm(a);
    if (off <= 1e-15 * frob || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  out.off_norm = off_diagonal_norm(a);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

SimilarityGraph build_graph(const Matrix& gains) {
  const std::size_t n = gains.rows();
  if (gains.cols() != n) throw DimensionError("gain matrix must be square");
  SimilarityGraph g{Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (j != k) g.weight(j, k) = std::max(gains(j, k), gains(k, j));
    }
  }
  return g;
}

Matrix vertex_gains(const LargeScale& ls) {
  const std::size_t n = ls.m + ls.k;
  Matrix g(n, n);
  const auto role = [&](std::size_t v) { return v < ls.m ? ls.ivue(v) : ls.tx(v - ls.m); };
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b) g(a, b) = ls.gain(role(a), role(b));
    }
  }
  return g;
}

double partition_objective(const SimilarityGraph& g, const std::vector<int>& label) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (i != j && label[i] == label[j]) s += g.weight(i, j);
    }
  }
  return s;
}

namespace {

double sq_dist(const Matrix& pts, std::size_t i, const std::vector<double>& c) {
  double s = 0.0;
  for (std::size_t d = 0; d < pts.cols(); ++d) {
    const double diff = pts(i, d) - c[d];
    s += diff * diff;
  }
  return s;
}

std::vector<int> kmeans_once(const Matrix& pts, int k, Rng& rng, int max_iter, double& sse) {
  const std::size_t n = pts.rows();
  const std::size_t dim = pts.cols();
  const auto ku = static_cast<std::size_t>(k);
  std::vector<std::vector<double>> centers;
  centers.reserve(ku);

  // k-means++ seeding.
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  const std::size_t f = first(rng);
  centers.emplace_back(&pts.data()[f * dim], &pts.data()[f * dim] + dim);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < ku) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(pts, i, centers.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        u -= d2[pick];
        if (u < 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    centers.emplace_back(&pts.data()[pick * dim], &pts.data()[pick * dim] + dim);
  }

  std::vector<int> label(n, -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(pts, i, centers[0]);
      for (std::size_t c = 1; c < ku; ++c) {
        const double d = sq_dist(pts, i, centers[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (label[i] != best) {
        label[i] = best;
        changed = true;
      }
    }
    // Empty clusters take the point farthest from its center.
    std::vector<std::size_t> count(ku, 0);
    for (const int l : label) ++count[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < ku; ++c) {
      if (count[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto li = static_cast<std::size_t>(label[i]);
        if (count[li] <= 1) continue;
        const double d = sq_dist(pts, i, centers[li]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far_d < 0.0) continue;
      --count[static_cast<std::size_t>(label[far])];
      label[far] = static_cast<int>(c);
      count[c] = 1;
      changed = true;
    }
    for (auto& c : centers) std::fill(c.begin(), c.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& c = centers[static_cast<std::size_t>(label[i])];
      for (std::size_t d = 0; d < dim; ++d) c[d] += pts(i, d);
    }
    for (std::size_t c = 0; c < ku; ++c) {
      if (count[c] == 0) continue;
      for (double& x : centers[c]) x /= static_cast<double>(count[c]);
    }
    if (!changed) break;
  }
  sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) sse += sq_dist(pts, i, centers[static_cast<std::size_t>(label[i])]);
  return label;
}

// Relabels clusters by first appearance so equal partitions compare equal.
std::vector<int> canonical(const std::vector<int>& label) {
  std::vector<int> map(label.size() + 1, -1);
  std::vector<int> out(label.size());
  int next = 0;
  for (std::size_t i = 0; i < label.size(); ++i) {
    auto& m = map[static_cast<std::size_t>(label[i])];
    if (m < 0) m = next++;
    out[i] = m;
  }
  return out;
}

}  // namespace

std::vector<int> kmeans(const Matrix& points, int k, Rng& rng, int restarts, int max_iter,
                        double* best_sse) {
  if (k < 1 || static_cast<std::size_t>(k) > points.rows()) {
    throw std::invalid_argument("kmeans: need 1 <= k <= number of points");
  }
  std::vector<int> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    double sse = 0.0;
    auto label = kmeans_once(points, k, rng, max_iter, sse);
    if (sse < best_score) {
      best_score = sse;
      best = std::move(label);
    }
  }
  if (best_sse != nullptr) *best_sse = best_score;
  return canonical(best);
}

std::vector<std::vector<int>> candidate_rbs(const ClusterAssignment& a, int num_ivues,
                                            int num_rbs) {
  std::vector<std::vector<int>> out;
  for (const auto& members : a.members) {
    std::vector<bool> blocked(static_cast<std::size_t>(num_rbs), false);
    for (const int v : members) {
      if (v < num_ivues && v < num_rbs) blocked[static_cast<std::size_t>(v)] = true;
    }
    std::vector<int> rbs;
    for (int f = 0; f < num_rbs; ++f) {
      if (!blocked[static_cast<std::size_t>(f)]) rbs.push_back(f);
    }
    out.push_back(std::move(rbs));
  }
  return out;
}

ClusterAssignment make_assignment(std::vector<int> label, int num_clusters, int num_ivues,
                                  int num_rbs) {
  ClusterAssignment a;
  a.label = std::move(label);
  a.members.assign(static_cast<std::size_t>(num_clusters), {});
  for (std::size_t v = 0; v < a.label.size(); ++v) {
    a.members[static_cast<std::size_t>(a.label[v])].push_back(static_cast<int>(v));
  }
  a.rbs = candidate_rbs(a, num_ivues, num_rbs);
  return a;
}

ClusterAssignment spectral_partition(const SimilarityGraph& g, int num_clusters, Rng& rng,
                                     const SpectralOptions& opt) {
  const std::size_t n = g.size();
  if (num_clusters < 1 || static_cast<std::size_t>(num_clusters) > n) {
    throw std::invalid_argument("spectral_partition: need 1 <= C <= vertex count");
  }
  std::vector<int> label(n, 0);
  if (num_clusters == 1) return make_assignment(label, 1, 0, 0);
  if (static_cast<std::size_t>(num_clusters) == n) {
    std::iota(label.begin(), label.end(), 0);
    return make_assignment(label, num_clusters, 0, 0);
  }

  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += g.weight(i, j);
    if (d <= 0.0 && opt.degree_regularization <= 0.0) {
      throw DegenerateGraphError("vertex " + std::to_string(i) + " has zero degree");
    }
    inv_sqrt_deg[i] = 1.0 / std::sqrt(d + opt.degree_regularization);
  }
  Matrix lap(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double norm = g.weight(i, j) * inv_sqrt_deg[i] * inv_sqrt_deg[j];
      lap(i, j) = (i == j ? 1.0 : 0.0) - norm;
    }
  }
  // Exact symmetry for the eigensolver.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) lap(j, i) = lap(i, j);
  }
  const EigenDecomposition eig = jacobi_eigen(lap);

  const auto c = static_cast<std::size_t>(num_clusters);
  Matrix emb(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      emb(i, j) = eig.vectors(i, j);
      norm += emb(i, j) * emb(i, j);
    }
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (std::size_t j = 0; j < c; ++j) emb(i, j) /= norm;
    }
  }
  label = kmeans(emb, num_clusters, rng, opt.kmeans_restarts, opt.kmeans_max_iter);
  return make_assignment(label, num_clusters, 0, 0);
}

std::string edge_list(const SimilarityGraph& g) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = i + 1; j < g.size(); ++j) {
      if (g.weight(i, j) > 0.0) os << i << ' ' << j << ' ' << g.weight(i, j) << '\n';
    }
  }
  return os.str();
}

}  // namespace v2x

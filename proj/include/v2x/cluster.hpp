#pragma once

// Large-timescale VUE clustering: similarity graph from large-scale gains,
// normalized-Laplacian spectral partition and candidate RB groups.
//
// Vertex order everywhere: I-VUEs 0..M-1, then V2V pairs M..M+K-1.

#include <cstddef>
#include <string>
#include <vector>

#include "v2x/channel.hpp"
#include "v2x/rng.hpp"

namespace v2x {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column i pairs with values[i]
  int sweeps = 0;
  double off_norm = 0.0;       // off-diagonal Frobenius norm at exit
};

// Cyclic Jacobi rotations. Throws NotSymmetricError unless |a_ij - a_ji| is
// within 1e-12 relative to the largest entry.
EigenDecomposition jacobi_eigen(const Matrix& a, int max_sweeps = 100);

struct SimilarityGraph {
  Matrix weight;  // symmetric, non-negative, zero diagonal

  std::size_t size() const { return weight.rows(); }
};

// w_jk = max(g_jk, g_kj) off the diagonal.
SimilarityGraph build_graph(const Matrix& gains);

// Linear large-scale gains between vertex locations; a V2V pair sits at its
// transmitter.
Matrix vertex_gains(const LargeScale& large);

struct ClusterAssignment {
  std::vector<int> label;                     // per vertex
  std::vector<std::vector<int>> members;      // per cluster, ascending vertex ids
  std::vector<std::vector<int>> rbs;          // per cluster candidate RB group

  std::size_t num_clusters() const { return members.size(); }
};

struct SpectralOptions {
  int kmeans_restarts = 20;
  int kmeans_max_iter = 100;
  double degree_regularization = 1e-12;  // 0 makes zero-degree vertices an error
};

// Sum of intra-cluster edge weights over ordered pairs (i, j), i != j.
double partition_objective(const SimilarityGraph& g, const std::vector<int>& label);

// k-means++ seeding and Lloyd iterations, best SSE over `restarts`.
std::vector<int> kmeans(const Matrix& points, int k, Rng& rng, int restarts = 20,
                        int max_iter = 100, double* best_sse = nullptr);

// Fills `rbs` from the labels: every RB except those of in-cluster I-VUEs.
ClusterAssignment spectral_partition(const SimilarityGraph& g, int num_clusters, Rng& rng,
                                     const SpectralOptions& opt = {});

std::vector<std::vector<int>> candidate_rbs(const ClusterAssignment& a, int num_ivues,
                                            int num_rbs);

// Builds members/rbs from labels.
ClusterAssignment make_assignment(std::vector<int> label, int num_clusters, int num_ivues,
                                  int num_rbs);

// Text dump: one "i j weight" line per undirected edge with positive weight.
std::string edge_list(const SimilarityGraph& g);

}  // namespace v2x

#pragma once

// Fully connected Q-network: ReLU hidden layers, identity output, MSE on the
// taken action, Adam, and a versioned binary checkpoint format.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "v2x/rng.hpp"

namespace v2x {

// All parameters live in one flat block. Layer l stores its weight matrix
// (out x in, row-major) followed by its bias vector.
class QNetwork {
 public:
  QNetwork() = default;
  // Zero-initialized network with the given layer sizes [d_in, h..., d_out].
  explicit QNetwork(std::vector<std::size_t> layer_sizes);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t param_count() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> biases(std::size_t layer);
  std::span<const double> biases(std::size_t layer) const;

  // Offset of layer l's weight block in params(); its biases follow.
  std::size_t layer_offset(std::size_t layer) const { return offsets_[layer]; }

  bool same_shape(const QNetwork& other) const { return sizes_ == other.sizes_; }

  friend bool operator==(const QNetwork&, const QNetwork&) = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

// Scratch buffers for forward/backward; reuse across calls to avoid
// allocation in the training loop.
struct Workspace {
  std::vector<std::vector<double>> pre;   // pre-activations per layer
  std::vector<std::vector<double>> post;  // activations per layer (post[0] = input)
  std::vector<double> delta, delta_prev;

  void prepare(const QNetwork& net);
};

// Glorot-uniform weights, zero biases.
QNetwork init_weights(const std::vector<std::size_t>& layer_sizes, Rng& rng);

// Throws DimensionError when input.size() != net.input_size().
std::vector<double> forward(const QNetwork& net, std::span<const double> input);
// Result stays valid in ws.post.back() until the next call.
std::span<const double> forward(const QNetwork& net, std::span<const double> input,
                                Workspace& ws);

// Gradient of scale * (target - Q(input)[action])^2 added into `grad`.
// Outputs other than `action` contribute nothing. Returns the unscaled
// squared error.
double backward(const QNetwork& net, std::span<const double> input, std::size_t action,
                double target, std::span<double> grad, Workspace& ws, double scale = 1.0);

// Convenience: gradient of (target - Q(input)[action])^2 alone.
std::vector<double> backward(const QNetwork& net, std::span<const double> input,
                             std::size_t action, double target);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t n, AdamConfig cfg);

  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return t_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

  void step(QNetwork& net, std::span<const double> grad);

  void restore(std::int64_t t, std::vector<double> m, std::vector<double> v);

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<double> m_, v_;
};

// Checkpoint: "V2XQNET\0" magic, u32 version, u32 layer-size count,
// u64 sizes, then the flat parameter block as little-endian binary64.
std::vector<std::uint8_t> serialize(const QNetwork& net);
// Throws CorruptModelError on a bad header and ModelSizeError when the
// parameter block is short or has trailing bytes. `consumed`, when given,
// receives the number of bytes read and trailing bytes are allowed.
QNetwork deserialize(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

void write_model(const std::filesystem::path& path, const QNetwork& net);
QNetwork read_model(const std::filesystem::path& path);

// Little-endian helpers shared with the agent checkpoint format.
namespace wire {
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f64(std::vector<std::uint8_t>& out, double v);
std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t& pos);
std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& pos);
double get_f64(std::span<const std::uint8_t> in, std::size_t& pos);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
}  // namespace wire

}  // namespace v2x

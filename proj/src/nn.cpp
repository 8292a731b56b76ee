#include "v2x/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "v2x/error.hpp"
#include "v2x/simd/kernels.hpp"

namespace v2x {

QNetwork::QNetwork(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw DimensionError("a network needs at least input and output sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw DimensionError("zero-width layer");
    offsets_.push_back(total);
    total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

std::span<double> QNetwork::weights(std::size_t l) {
  return {params_.data() + weight_offset(l), sizes_[l] * sizes_[l + 1]};
}
std::span<const double> QNetwork::weights(std::size_t l) const {
  return {params_.data() + weight_offset(l), sizes_[l] * sizes_[l + 1]};
}
std::span<double> QNetwork::biases(std::size_t l) {
  return {params_.data() + bias_offset(l), sizes_[l + 1]};
}
std::span<const double> QNetwork::biases(std::size_t l) const {
  return {params_.data() + bias_offset(l), sizes_[l + 1]};
}

void Workspace::prepare(const QNetwork& net) {
  const auto& s = net.layer_sizes();
  if (post.size() == s.size() && std::equal(post.begin(), post.end(), s.begin(),
                                            [](const auto& v, std::size_t n) { return v.size() == n; })) {
    return;
  }
  post.assign(s.size(), {});
  pre.assign(s.size(), {});
  for (std::size_t l = 0; l < s.size(); ++l) {
    post[l].assign(s[l], 0.0);
    pre[l].assign(s[l], 0.0);
  }
  const std::size_t widest = *std::max_element(s.begin(), s.end());
  delta.assign(widest, 0.0);
  delta_prev.assign(widest, 0.0);
}

QNetwork init_weights(const std::vector<std::size_t>& layer_sizes, Rng& rng) {
  QNetwork net(layer_sizes);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double fan_in = static_cast<double>(layer_sizes[l]);
    const double fan_out = static_cast<double>(layer_sizes[l + 1]);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& w : net.weights(l)) w = u(rng);
  }
  return net;
}

std::span<const double> forward(const QNetwork& net, std::span<const double> input,
                                Workspace& ws) {
  if (input.size() != net.input_size()) {
    throw DimensionError("network expects " + std::to_string(net.input_size()) +
                         " inputs, got " + std::to_string(input.size()));
  }
  ws.prepare(net);
  const auto& k = simd::active();
  std::copy(input.begin(), input.end(), ws.post[0].begin());
  const std::size_t layers = net.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = net.layer_sizes()[l];
    const std::size_t out = net.layer_sizes()[l + 1];
    k.gemv(net.weights(l).data(), ws.post[l].data(), net.biases(l).data(),
           ws.pre[l + 1].data(), out, in);
    if (l + 1 < layers) {
      k.relu(ws.pre[l + 1].data(), ws.post[l + 1].data(), out);
    } else {
      std::copy(ws.pre[l + 1].begin(), ws.pre[l + 1].end(), ws.post[l + 1].begin());
    }
  }
  return ws.post.back();
}

std::vector<double> forward(const QNetwork& net, std::span<const double> input) {
  Workspace ws;
  const auto out = forward(net, input, ws);
  return {out.begin(), out.end()};
}

double backward(const QNetwork& net, std::span<const double> input, std::size_t action,
                double target, std::span<double> grad, Workspace& ws, double scale) {
  if (grad.size() != net.param_count()) throw DimensionError("gradient buffer size mismatch");
  if (action >= net.output_size()) throw DimensionError("action index out of range");
  const auto out = forward(net, input, ws);
  const double err = target - out[action];
  const auto& k = simd::active();

  std::fill(ws.delta.begin(), ws.delta.begin() + static_cast<std::ptrdiff_t>(net.output_size()),
            0.0);
  ws.delta[action] = -2.0 * err * scale;

  for (std::size_t l = net.num_layers(); l-- > 0;) {
    const std::size_t in = net.layer_sizes()[l];
    const std::size_t outw = net.layer_sizes()[l + 1];
    double* gw = grad.data() + net.layer_offset(l);
    double* gb = gw + in * outw;
    k.outer_acc(ws.delta.data(), ws.post[l].data(), gw, outw, in);
    k.axpy(1.0, ws.delta.data(), gb, outw);
    if (l == 0) break;
    k.gemv_t(net.weights(l).data(), ws.delta.data(), ws.delta_prev.data(), outw, in);
    k.relu_mask(ws.pre[l].data(), ws.delta_prev.data(), in);
    std::swap(ws.delta, ws.delta_prev);
  }
  return err * err;
}

std::vector<double> backward(const QNetwork& net, std::span<const double> input,
                             std::size_t action, double target) {
  std::vector<double> grad(net.param_count(), 0.0);
  Workspace ws;
  backward(net, input, action, target, grad, ws);
  return grad;
}

AdamState::AdamState(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void AdamState::step(QNetwork& net, std::span<const double> grad) {
  if (grad.size() != m_.size() || net.param_count() != m_.size()) {
    throw DimensionError("Adam state does not match the network");
  }
  ++t_;
  const double m_corr = 1.0 / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
  const double v_corr = 1.0 / (1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
  simd::active().adam(net.params().data(), grad.data(), m_.data(), v_.data(), m_.size(),
                      cfg_.beta1, cfg_.beta2, cfg_.learning_rate, m_corr, v_corr,
                      cfg_.epsilon);
}

void AdamState::restore(std::int64_t t, std::vector<double> m, std::vector<double> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw ModelSizeError("Adam moments do not match the network");
  }
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

namespace wire {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw ModelSizeError("stream truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  pos += 4;
  return v;
}
std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw ModelSizeError("stream truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
  pos += 8;
  return v;
}
double get_f64(std::span<const std::uint8_t> in, std::size_t& pos) {
  return std::bit_cast<double>(get_u64(in, pos));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("short write to " + path.string());
}

}  // namespace wire

namespace {
constexpr char kMagic[8] = {'V', '2', 'X', 'Q', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxLayers = 64;
}  // namespace

std::vector<std::uint8_t> serialize(const QNetwork& net) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  wire::put_u32(out, kVersion);
  wire::put_u32(out, static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (const std::size_t s : net.layer_sizes()) wire::put_u64(out, s);
  out.reserve(out.size() + 8 * net.param_count());
  for (const double p : net.params()) wire::put_f64(out, p);
  return out;
}

QNetwork deserialize(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CorruptModelError("bad model magic");
  }
  std::size_t pos = sizeof(kMagic);
  const std::uint32_t version = wire::get_u32(bytes, pos);
  if (version != kVersion) throw CorruptModelError("unsupported model version " + std::to_string(version));
  const std::uint32_t n = wire::get_u32(bytes, pos);
  if (n < 2 || n > kMaxLayers) throw CorruptModelError("bad layer count " + std::to_string(n));
  std::vector<std::size_t> sizes;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint64_t s = wire::get_u64(bytes, pos);
    if (s == 0 || s > (1u << 24)) throw CorruptModelError("bad layer size");
    sizes.push_back(static_cast<std::size_t>(s));
  }
  QNetwork net(std::move(sizes));
  const std::size_t need = 8 * net.param_count();
  if (bytes.size() - pos < need) {
    throw ModelSizeError("parameter block truncated: need " + std::to_string(need) + " bytes, have " +
                         std::to_string(bytes.size() - pos));
  }
  for (double& p : net.params()) p = wire::get_f64(bytes, pos);
  if (consumed != nullptr) {
    *consumed = pos;
  } else if (pos != bytes.size()) {
    throw ModelSizeError("trailing bytes after parameter block");
  }
  return net;
}

void write_model(const std::filesystem::path& path, const QNetwork& net) {
  wire::write_file(path, serialize(net));
}

QNetwork read_model(const std::filesystem::path& path) { return deserialize(wire::read_file(path)); }

}  // namespace v2x

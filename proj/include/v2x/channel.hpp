#pragma once

// LOS state, path loss, log-normal shadowing and Rayleigh fast fading.
//
// Node numbering used by every gain tensor in the library:
//   transmitters: 0..M-1 are the I-VUEs, M..M+K-1 the V2V transmitters;
//   receivers:    0 is the BS, 1..K the V2V receivers.

#include <cstddef>
#include <vector>

#include "v2x/rng.hpp"
#include "v2x/scenario.hpp"

namespace v2x {

struct ChannelConfig {
  double shadow_std_los_db = 3.0;
  double shadow_std_nlos_db = 4.0;
  double min_distance = 3.0;      // clamp floor for the log terms
  double bs_los_radius = 150.0;   // V2I link is LOS inside this radius
  bool fast_fading = true;        // false: all fast-fade coefficients are 1
};

bool los_state(const Vehicle& a, const Vehicle& b);
bool v2i_los_state(const Vehicle& v, Point bs, const ChannelConfig& cfg);

double path_loss_v2v_db(double d, bool los, double d_min = 3.0);
double path_loss_v2i_db(double d, bool los, double d_min = 3.0);

struct LinkGain {
  double large_scale_db = 0.0;       // path loss + shadowing (a loss, in dB)
  std::vector<double> fast_fade;     // per-RB unit-mean exponential power
  bool los = false;

  double linear(std::size_t rb) const;
};

// Dense (M+K) x (K+1) x F tensor of linear power gains.
class GainTable {
 public:
  GainTable() = default;
  GainTable(std::size_t m, std::size_t k, std::size_t f);

  std::size_t num_ivues() const { return m_; }
  std::size_t num_pairs() const { return k_; }
  std::size_t num_rbs() const { return f_; }

  double& at(std::size_t tx, std::size_t rx, std::size_t rb) {
    return data_[(tx * (k_ + 1) + rx) * f_ + rb];
  }
  double at(std::size_t tx, std::size_t rx, std::size_t rb) const {
    return data_[(tx * (k_ + 1) + rx) * f_ + rb];
  }

  // h_{m,B}
  double ivue_bs(std::size_t m, std::size_t f) const { return at(m, 0, f); }
  // h_{k,B} = g_{k,B}
  double pair_bs(std::size_t k, std::size_t f) const { return at(m_ + k, 0, f); }
  // g_{j,k}; j == k gives h_k
  double pair_pair(std::size_t j, std::size_t k, std::size_t f) const {
    return at(m_ + j, 1 + k, f);
  }
  // g_{m,k}
  double ivue_pair(std::size_t m, std::size_t k, std::size_t f) const {
    return at(m, 1 + k, f);
  }

 private:
  std::size_t m_ = 0, k_ = 0, f_ = 0;
  std::vector<double> data_;
};

// Large-scale state of every role-holding vehicle, held for one clustering
// period. Role vehicles are ordered I-VUEs, V2V transmitters, V2V receivers.
struct LargeScale {
  std::size_t m = 0, k = 0;
  std::vector<int> role_vehicle;       // vehicle id per role index
  std::vector<double> loss_db;         // n x n, symmetric, diagonal 0
  std::vector<bool> los;               // n x n
  std::vector<double> bs_loss_db;      // n
  std::vector<bool> bs_los;            // n

  std::size_t size() const { return role_vehicle.size(); }
  double loss(std::size_t a, std::size_t b) const { return loss_db[a * size() + b]; }
  double gain(std::size_t a, std::size_t b) const;
  double bs_gain(std::size_t a) const;

  // Role-index helpers.
  std::size_t ivue(std::size_t m_idx) const { return m_idx; }
  std::size_t tx(std::size_t k_idx) const { return m + k_idx; }
  std::size_t rx(std::size_t k_idx) const { return m + k + k_idx; }

  // LinkGain for transmitter node -> receiver node (see numbering above)
  // carrying the given fast-fade vector.
  LinkGain link(std::size_t tx_node, std::size_t rx_node, std::vector<double> fade) const;
};

// Fast fading draw for one subframe: (M+K) x (K+1) x F coefficients.
struct FastFading {
  std::size_t m = 0, k = 0, f = 0;
  std::vector<double> coeff;

  double at(std::size_t tx, std::size_t rx, std::size_t rb) const {
    return coeff[(tx * (k + 1) + rx) * f + rb];
  }
};

struct ChannelRealization {
  LargeScale large;
  FastFading fast;

  // Instantaneous gains (large-scale x fast fading).
  GainTable instantaneous() const;
  // Fading-averaged gains (large-scale only), replicated over F RBs.
  GainTable mean() const;
};

LargeScale draw_large_scale(const VehicleTopology& topology, const ChannelConfig& cfg, Rng& rng);
FastFading draw_fast_fading(std::size_t m, std::size_t k, std::size_t f,
                            const ChannelConfig& cfg, Rng& rng);

ChannelRealization realize_channels(const VehicleTopology& topology, std::size_t num_rbs,
                                    const ChannelConfig& cfg, Rng& rng);

GainTable make_gain_table(const LargeScale& large, const FastFading* fast, std::size_t num_rbs);

}  // namespace v2x

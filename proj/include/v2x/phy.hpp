#pragma once

// SINR, achievable rate and QoS checks for I-VUEs and V2V pairs.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "v2x/channel.hpp"

namespace v2x {

enum class Mode : std::uint8_t { V2V = 0, V2I = 1 };

// One subframe's resource decision. RB m (m < M) belongs to I-VUE m.
struct AllocationSnapshot {
  std::size_t num_rbs = 0;
  std::vector<int> rb;          // per pair, -1 when no RB is allocated
  std::vector<Mode> mode;       // per pair
  std::vector<double> p_v;      // per pair, watts
  std::vector<double> p_i;      // per I-VUE, watts

  std::size_t num_pairs() const { return rb.size(); }
  std::size_t num_ivues() const { return p_i.size(); }
  bool a(std::size_t k, std::size_t f) const {
    return rb[k] >= 0 && static_cast<std::size_t>(rb[k]) == f;
  }
};

struct QosSpec {
  double r_min_ivue = 3.0 * 180e3;   // bps
  double msg_bits = 800.0 * 8.0;     // L
  double t_max = 10e-3;              // seconds
  double gamma_o = 1.9952623149688795;  // 3 dB, linear
  double p_o = 0.01;
  double w = 180e3;                  // Hz per RB
  double noise_w = 3.981071705534973e-15;  // -114 dBm
};

double ivue_sinr(std::size_t m, const AllocationSnapshot& alloc, const GainTable& g,
                 double noise_w);
double ivue_rate(std::size_t m, const AllocationSnapshot& alloc, const GainTable& g,
                 const QosSpec& qos);

// Receiver-side SINR of pair k on RB f in V2V mode. Every other transmitter
// on f interferes whatever its mode.
double v2v_mode_sinr(std::size_t k, std::size_t f, const AllocationSnapshot& alloc,
                     const GainTable& g, double noise_w);
// Uplink SINR of pair k on RB f in V2I mode. Co-channel V2V transmitters
// interfere at the BS; an I-VUE owning f does too.
double v2i_mode_sinr(std::size_t k, std::size_t f, const AllocationSnapshot& alloc,
                     const GainTable& g, double noise_w);

// Sum over RBs of the SINR of the pair's active mode.
double pair_sinr(std::size_t k, const AllocationSnapshot& alloc, const GainTable& g,
                 double noise_w);
// R_k = (1 - s_k) R^{v(V)} + s_k R^{v(I)}; V2I mode carries the 1/2 relay factor.
double v2v_pair_rate(std::size_t k, const AllocationSnapshot& alloc, const GainTable& g,
                     const QosSpec& qos);

// Mean SINR that caps Rayleigh outage Pr{gamma <= gamma_o} at p_o.
double effective_outage_threshold(const QosSpec& qos);

struct QosReport {
  std::vector<double> ivue_rate;       // bps, instantaneous
  std::vector<bool> ivue_ok;
  std::vector<double> pair_rate;       // bps, instantaneous
  std::vector<double> pair_mean_sinr;  // linear, fading-averaged
  std::vector<double> required_rate;   // L_r / T_r, bps
  std::vector<bool> latency_ok;
  std::vector<bool> reliability_ok;
};

// Rates use instantaneous gains; reliability uses the fading-averaged SINR.
// remaining_bits / remaining_time are per pair; remaining_time must be > 0.
QosReport check_qos(const AllocationSnapshot& alloc, const GainTable& instantaneous,
                    const GainTable& mean, const QosSpec& qos,
                    const std::vector<double>& remaining_bits,
                    const std::vector<double>& remaining_time);

}  // namespace v2x

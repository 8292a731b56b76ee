#include "v2x/phy.hpp"

#include <cmath>
#include <stdexcept>

namespace v2x {

double ivue_sinr(std::size_t m, const AllocationSnapshot& alloc, const GainTable& g,
                 double noise_w) {
  double interference = 0.0;
  // RB f belongs to I-VUE m iff f == m.
  for (std::size_t k = 0; k < alloc.num_pairs(); ++k) {
    if (alloc.a(k, m)) interference += alloc.p_v[k] * g.pair_bs(k, m);
  }
  return alloc.p_i[m] * g.ivue_bs(m, m) / (interference + noise_w);
}

double ivue_rate(std::size_t m, const AllocationSnapshot& alloc, const GainTable& g,
                 const QosSpec& qos) {
  return qos.w * std::log2(1.0 + ivue_sinr(m, alloc, g, qos.noise_w));
}

double v2v_mode_sinr(std::size_t k, std::size_t f, const AllocationSnapshot& alloc,
                     const GainTable& g, double noise_w) {
  if (!alloc.a(k, f)) return 0.0;
  double interference = 0.0;
  if (f < alloc.num_ivues()) interference += alloc.p_i[f] * g.ivue_pair(f, k, f);
  for (std::size_t j = 0; j < alloc.num_pairs(); ++j) {
    if (j != k && alloc.a(j, f)) interference += alloc.p_v[j] * g.pair_pair(j, k, f);
  }
  return alloc.p_v[k] * g.pair_pair(k, k, f) / (interference + noise_w);
}

double v2i_mode_sinr(std::size_t k, std::size_t f, const AllocationSnapshot& alloc,
                     const GainTable& g, double noise_w) {
  if (!alloc.a(k, f)) return 0.0;
  double interference = 0.0;
  if (f < alloc.num_ivues()) interference += alloc.p_i[f] * g.ivue_bs(f, f);
  for (std::size_t j = 0; j < alloc.num_pairs(); ++j) {
    if (j != k && alloc.a(j, f)) interference += alloc.p_v[j] * g.pair_bs(j, f);
  }
  return alloc.p_v[k] * g.pair_bs(k, f) / (interference + noise_w);
}

double pair_sinr(std::size_t k, const AllocationSnapshot& alloc, const GainTable& g,
                 double noise_w) {
  if (alloc.rb[k] < 0) return 0.0;
  const auto f = static_cast<std::size_t>(alloc.rb[k]);
  return alloc.mode[k] == Mode::V2V ? v2v_mode_sinr(k, f, alloc, g, noise_w)
                                    : v2i_mode_sinr(k, f, alloc, g, noise_w);
}

double v2v_pair_rate(std::size_t k, const AllocationSnapshot& alloc, const GainTable& g,
                     const QosSpec& qos) {
  double rate = 0.0;
  for (std::size_t f = 0; f < alloc.num_rbs; ++f) {
    if (!alloc.a(k, f)) continue;
    if (alloc.mode[k] == Mode::V2V) {
      rate += qos.w * std::log2(1.0 + v2v_mode_sinr(k, f, alloc, g, qos.noise_w));
    } else {
      rate += 0.5 * qos.w * std::log2(1.0 + v2i_mode_sinr(k, f, alloc, g, qos.noise_w));
    }
  }
  return rate;
}

double effective_outage_threshold(const QosSpec& qos) {
  if (!(qos.p_o > 0.0 && qos.p_o < 1.0)) {
    throw std::invalid_argument("effective_outage_threshold: p_o must lie in (0, 1)");
  }
  return qos.gamma_o / std::log(1.0 / (1.0 - qos.p_o));
}

QosReport check_qos(const AllocationSnapshot& alloc, const GainTable& inst,
                    const GainTable& mean, const QosSpec& qos,
                    const std::vector<double>& remaining_bits,
                    const std::vector<double>& remaining_time) {
  const std::size_t m_count = alloc.num_ivues();
  const std::size_t k_count = alloc.num_pairs();
  const double gamma_eff = effective_outage_threshold(qos);

  QosReport r;
  r.ivue_rate.resize(m_count);
  r.ivue_ok.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    r.ivue_rate[m] = ivue_rate(m, alloc, inst, qos);
    r.ivue_ok[m] = r.ivue_rate[m] >= qos.r_min_ivue;
  }
  r.pair_rate.resize(k_count);
  r.pair_mean_sinr.resize(k_count);
  r.required_rate.resize(k_count);
  r.latency_ok.resize(k_count);
  r.reliability_ok.resize(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!(remaining_time[k] > 0.0)) {
      throw std::invalid_argument("check_qos: remaining time must be > 0");
    }
    r.pair_rate[k] = v2v_pair_rate(k, alloc, inst, qos);
    r.pair_mean_sinr[k] = pair_sinr(k, alloc, mean, qos.noise_w);
    r.required_rate[k] = remaining_bits[k] / remaining_time[k];
    r.latency_ok[k] = r.pair_rate[k] >= r.required_rate[k];
    r.reliability_ok[k] = r.pair_mean_sinr[k] >= gamma_eff;
  }
  return r;
}

}  // namespace v2x

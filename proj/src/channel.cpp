#include "v2x/channel.hpp"

#include <algorithm>
#include <cmath>

#include "v2x/units.hpp"

namespace v2x {

bool los_state(const Vehicle& a, const Vehicle& b) { return a.street == b.street; }

bool v2i_los_state(const Vehicle& v, Point bs, const ChannelConfig& cfg) {
  return distance(v.pos, bs) <= cfg.bs_los_radius;
}

double path_loss_v2v_db(double d, bool los, double d_min) {
  const double dd = std::max(d, d_min);
  return los ? 44.23 + 16.7 * std::log10(dd) : 42.52 + 30.0 * std::log10(dd);
}

double path_loss_v2i_db(double d, bool los, double d_min) {
  const double dd = std::max(d, d_min);
  return los ? 38.40 + 21.0 * std::log10(dd) : 38.40 + 31.9 * std::log10(dd);
}

double LinkGain::linear(std::size_t rb) const {
  return db_to_linear(-large_scale_db) * fast_fade.at(rb);
}

GainTable::GainTable(std::size_t m, std::size_t k, std::size_t f)
    : m_(m), k_(k), f_(f), data_((m + k) * (k + 1) * f, 0.0) {}

double LargeScale::gain(std::size_t a, std::size_t b) const {
  return db_to_linear(-loss(a, b));
}

double LargeScale::bs_gain(std::size_t a) const { return db_to_linear(-bs_loss_db[a]); }

namespace {

// Role index of a transmitter node / receiver node.
std::size_t tx_role(const LargeScale& ls, std::size_t tx_node) {
  return tx_node < ls.m ? ls.ivue(tx_node) : ls.tx(tx_node - ls.m);
}

}  // namespace

LinkGain LargeScale::link(std::size_t tx_node, std::size_t rx_node,
                          std::vector<double> fade) const {
  LinkGain g;
  const std::size_t a = tx_role(*this, tx_node);
  if (rx_node == 0) {
    g.large_scale_db = bs_loss_db[a];
    g.los = bs_los[a];
  } else {
    const std::size_t b = rx(rx_node - 1);
    g.large_scale_db = loss(a, b);
    g.los = los[a * size() + b];
  }
  g.fast_fade = std::move(fade);
  return g;
}

LargeScale draw_large_scale(const VehicleTopology& topo, const ChannelConfig& cfg, Rng& rng) {
  LargeScale ls;
  ls.m = topo.i_vues.size();
  ls.k = topo.pairs.size();
  for (const int id : topo.i_vues) ls.role_vehicle.push_back(id);
  for (const V2vPair& p : topo.pairs) ls.role_vehicle.push_back(p.tx);
  for (const V2vPair& p : topo.pairs) ls.role_vehicle.push_back(p.rx);

  const std::size_t n = ls.size();
  ls.loss_db.assign(n * n, 0.0);
  ls.los.assign(n * n, true);
  ls.bs_loss_db.assign(n, 0.0);
  ls.bs_los.assign(n, false);

  std::normal_distribution<double> unit(0.0, 1.0);
  const Point bs = topo.layout.bs_position();
  for (std::size_t a = 0; a < n; ++a) {
    const Vehicle& va = topo.vehicle(ls.role_vehicle[a]);
    for (std::size_t b = a + 1; b < n; ++b) {
      const Vehicle& vb = topo.vehicle(ls.role_vehicle[b]);
      const bool los = los_state(va, vb);
      const double sigma = los ? cfg.shadow_std_los_db : cfg.shadow_std_nlos_db;
      const double pl = path_loss_v2v_db(distance(va.pos, vb.pos), los, cfg.min_distance);
      const double loss = pl + sigma * unit(rng);
      ls.loss_db[a * n + b] = ls.loss_db[b * n + a] = loss;
      ls.los[a * n + b] = ls.los[b * n + a] = los;
    }
    const bool los = v2i_los_state(va, bs, cfg);
    const double sigma = los ? cfg.shadow_std_los_db : cfg.shadow_std_nlos_db;
    ls.bs_loss_db[a] =
        path_loss_v2i_db(distance(va.pos, bs), los, cfg.min_distance) + sigma * unit(rng);
    ls.bs_los[a] = los;
  }
  return ls;
}

FastFading draw_fast_fading(std::size_t m, std::size_t k, std::size_t f,
                            const ChannelConfig& cfg, Rng& rng) {
  FastFading ff;
  ff.m = m;
  ff.k = k;
  ff.f = f;
  ff.coeff.assign((m + k) * (k + 1) * f, 1.0);
  if (cfg.fast_fading) {
    // |h|^2 of a unit-power Rayleigh amplitude.
    std::exponential_distribution<double> exp1(1.0);
    for (double& c : ff.coeff) c = exp1(rng);
  }
  return ff;
}

GainTable make_gain_table(const LargeScale& ls, const FastFading* fast, std::size_t num_rbs) {
  GainTable t(ls.m, ls.k, num_rbs);
  for (std::size_t tx = 0; tx < ls.m + ls.k; ++tx) {
    const std::size_t a = tx_role(ls, tx);
    for (std::size_t rx = 0; rx < ls.k + 1; ++rx) {
      const double loss = rx == 0 ? ls.bs_loss_db[a] : ls.loss(a, ls.rx(rx - 1));
      const double g = db_to_linear(-loss);
      for (std::size_t f = 0; f < num_rbs; ++f) {
        t.at(tx, rx, f) = fast != nullptr ? g * fast->at(tx, rx, f) : g;
      }
    }
  }
  return t;
}

GainTable ChannelRealization::instantaneous() const {
  return make_gain_table(large, &fast, fast.f);
}

GainTable ChannelRealization::mean() const { return make_gain_table(large, nullptr, fast.f); }

ChannelRealization realize_channels(const VehicleTopology& topology, std::size_t num_rbs,
                                    const ChannelConfig& cfg, Rng& rng) {
  ChannelRealization r;
  r.large = draw_large_scale(topology, cfg, rng);
  r.fast = draw_fast_fading(r.large.m, r.large.k, num_rbs, cfg, rng);
  return r;
}

}  // namespace v2x

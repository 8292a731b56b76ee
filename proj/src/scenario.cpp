#include "v2x/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "v2x/error.hpp"

namespace v2x {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool VehicleTopology::has_role(int id) const {
  if (std::find(i_vues.begin(), i_vues.end(), id) != i_vues.end()) return true;
  return std::any_of(pairs.begin(), pairs.end(),
                     [id](const V2vPair& p) { return p.tx == id || p.rx == id; });
}

namespace {

struct Lane {
  Street street;
  Heading heading;
  double offset;  // fixed coordinate (y for horizontal, x for vertical)
};

std::vector<Lane> lanes_of(const RoadLayout& layout) {
  const double c = layout.extent / 2.0;
  std::vector<Lane> lanes;
  for (int i = 0; i < layout.lanes_per_direction; ++i) {
    const double d = layout.lane_width * (i + 0.5);
    lanes.push_back({Street::Horizontal, Heading::PosX, c - d});
    lanes.push_back({Street::Horizontal, Heading::NegX, c + d});
    lanes.push_back({Street::Vertical, Heading::PosY, c + d});
    lanes.push_back({Street::Vertical, Heading::NegY, c - d});
  }
  return lanes;
}

std::vector<Vehicle> drop_vehicles(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<Vehicle> out;
  const double len = cfg.layout.extent;
  std::poisson_distribution<int> count(cfg.vehicle_density * len);
  std::uniform_real_distribution<double> along(0.0, len);
  for (const Lane& lane : lanes_of(cfg.layout)) {
    const int n = count(rng);
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (double& x : xs) x = along(rng);
    std::sort(xs.begin(), xs.end());
    for (const double s : xs) {
      Vehicle v;
      v.id = static_cast<int>(out.size());
      v.heading = lane.heading;
      v.street = lane.street;
      v.speed = cfg.speed;
      v.pos = lane.street == Street::Horizontal ? Point{s, lane.offset}
                                                : Point{lane.offset, s};
      out.push_back(v);
    }
  }
  return out;
}

// Farthest vehicle within range of `tx` that is not in `taken`.
int farthest_partner(const std::vector<Vehicle>& vehicles, int tx,
                     const std::vector<bool>& taken, double range) {
  int best = -1;
  double best_d = -1.0;
  const Point p = vehicles[static_cast<std::size_t>(tx)].pos;
  for (const Vehicle& v : vehicles) {
    if (v.id == tx || taken[static_cast<std::size_t>(v.id)]) continue;
    const double d = distance(p, v.pos);
    if (d <= range && d > best_d) {
      best_d = d;
      best = v.id;
    }
  }
  return best;
}

bool assign_roles(const ScenarioConfig& cfg, VehicleTopology& topo, Rng& rng) {
  const auto n = topo.vehicles.size();
  const auto needed = static_cast<std::size_t>(cfg.num_ivues + 2 * cfg.num_pairs);
  if (n < needed) return false;
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);

  std::vector<bool> taken(n, false);
  topo.i_vues.assign(ids.begin(), ids.begin() + cfg.num_ivues);
  const auto tx_begin = ids.begin() + cfg.num_ivues;
  const auto tx_end = tx_begin + cfg.num_pairs;
  for (auto it = ids.begin(); it != tx_end; ++it) taken[static_cast<std::size_t>(*it)] = true;

  topo.pairs.clear();
  for (auto it = tx_begin; it != tx_end; ++it) {
    const int rx = farthest_partner(topo.vehicles, *it, taken, cfg.broadcast_range);
    if (rx < 0) return false;
    taken[static_cast<std::size_t>(rx)] = true;
    topo.pairs.push_back({*it, rx});
  }
  return true;
}

double wrap(double s, double len) {
  double r = std::fmod(s, len);
  if (r < 0.0) r += len;
  return r;
}

}  // namespace

VehicleTopology generate_topology(const ScenarioConfig& cfg, std::uint64_t seed) {
  if (!(cfg.vehicle_density > 0.0)) throw ConfigError("scenario.vehicle_density", "must be > 0");
  if (cfg.num_ivues < 1) throw ConfigError("scenario.num_ivues", "must be >= 1");
  if (cfg.num_pairs < 1) throw ConfigError("scenario.num_pairs", "must be >= 1");

  Rng rng(seed);
  for (int attempt = 0; attempt < cfg.max_redraws; ++attempt) {
    VehicleTopology topo;
    topo.layout = cfg.layout;
    topo.vehicles = drop_vehicles(cfg, rng);
    if (assign_roles(cfg, topo, rng)) return topo;
  }
  throw InsufficientVehiclesError("could not fill " + std::to_string(cfg.num_ivues) +
                                  " I-VUE and " + std::to_string(cfg.num_pairs) +
                                  " V2V pair roles after " +
                                  std::to_string(cfg.max_redraws) + " drops");
}

VehicleTopology advance_mobility(const VehicleTopology& topology, double dt) {
  if (dt < 0.0) throw std::invalid_argument("advance_mobility: dt must be >= 0");
  VehicleTopology next = topology;
  const double len = topology.layout.extent;
  for (Vehicle& v : next.vehicles) {
    const double step = v.speed * dt;
    switch (v.heading) {
      case Heading::PosX: v.pos.x = wrap(v.pos.x + step, len); break;
      case Heading::NegX: v.pos.x = wrap(v.pos.x - step, len); break;
      case Heading::PosY: v.pos.y = wrap(v.pos.y + step, len); break;
      case Heading::NegY: v.pos.y = wrap(v.pos.y - step, len); break;
    }
  }
  return next;
}

int add_pair(VehicleTopology& topology, double broadcast_range, Rng& rng) {
  const auto n = topology.vehicles.size();
  std::vector<bool> taken(n, false);
  for (std::size_t i = 0; i < n; ++i) taken[i] = topology.has_role(static_cast<int>(i));
  std::vector<int> free;
  for (std::size_t i = 0; i < n; ++i) {
    if (!taken[i]) free.push_back(static_cast<int>(i));
  }
  std::shuffle(free.begin(), free.end(), rng);
  for (const int tx : free) {
    taken[static_cast<std::size_t>(tx)] = true;
    const int rx = farthest_partner(topology.vehicles, tx, taken, broadcast_range);
    if (rx >= 0) {
      topology.pairs.push_back({tx, rx});
      return static_cast<int>(topology.pairs.size()) - 1;
    }
    taken[static_cast<std::size_t>(tx)] = false;
  }
  throw InsufficientVehiclesError("no free vehicle can form a new V2V pair");
}

}  // namespace v2x

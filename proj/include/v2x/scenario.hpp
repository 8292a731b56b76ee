#pragma once

// Crossroad topology: vehicle drops, role assignment, V2V pairing and
// wrap-around mobility.

#include <cstdint>
#include <vector>

#include "v2x/rng.hpp"

namespace v2x {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

enum class Street : std::uint8_t { Horizontal, Vertical };
enum class Heading : std::uint8_t { PosX, NegX, PosY, NegY };

struct RoadLayout {
  double extent = 1000.0;  // square side, meters
  int lanes_per_direction = 2;
  double lane_width = 3.5;

  Point bs_position() const { return {extent / 2.0, extent / 2.0}; }
};

struct ScenarioConfig {
  RoadLayout layout;
  int num_ivues = 5;                  // M
  int num_pairs = 10;                 // K
  // Vehicles per meter of lane. 8 lanes x 1000 m x 0.025 = 200 expected
  // vehicles, at least 4 x (M + 2K) for K up to 20.
  double vehicle_density = 0.025;
  double broadcast_range = 150.0;     // meters
  double speed = 10.0;                // m/s (36 km/h)
  int max_redraws = 100;
};

struct Vehicle {
  int id = 0;
  Point pos;
  Heading heading = Heading::PosX;
  double speed = 0.0;
  Street street = Street::Horizontal;
};

struct V2vPair {
  int tx = 0;
  int rx = 0;
};

struct VehicleTopology {
  RoadLayout layout;
  std::vector<Vehicle> vehicles;  // vehicles[i].id == i
  std::vector<int> i_vues;
  std::vector<V2vPair> pairs;

  const Vehicle& vehicle(int id) const { return vehicles.at(static_cast<std::size_t>(id)); }
  // True when the vehicle holds any role.
  bool has_role(int id) const;
};

// Poisson drop on every lane, M I-VUEs and K transmitters drawn without
// replacement, each transmitter paired with the farthest free vehicle in
// broadcast range. Throws InsufficientVehiclesError after max_redraws failed
// attempts.
VehicleTopology generate_topology(const ScenarioConfig& config, std::uint64_t seed);

// Moves every vehicle speed * dt along its lane, wrapping at the region edge.
VehicleTopology advance_mobility(const VehicleTopology& topology, double dt);

// Activates one more V2V pair among vehicles without a role. Returns the new
// pair index. Throws InsufficientVehiclesError when no free vehicle has a
// free partner in range.
int add_pair(VehicleTopology& topology, double broadcast_range, Rng& rng);

}  // namespace v2x

#pragma once

#include "ssp/linalg_ad/types.hpp"

#include "json.hpp"

#include <vector>

namespace ssp::control {

// Waypoint sequence s*_0 .. s*_M with the advance test |s - s*_i|^exponent < delta.
class ReferencePath {
 public:
  // delta <= 0 selects 0.1 * (mean waypoint spacing)^2.
  explicit ReferencePath(std::vector<StateVector> waypoints, double delta = 0.0, double exponent = 2.0);

  const std::vector<StateVector>& waypoints() const { return waypoints_; }
  const StateVector& waypoint(int i) const { return waypoints_[static_cast<std::size_t>(i)]; }
  int last_index() const { return static_cast<int>(waypoints_.size()) - 1; }
  double delta() const { return delta_; }
  double exponent() const { return exponent_; }
  double mean_spacing() const;
  double length() const;

  // Euclidean distance from the leading `dims` entries of `point` to the polyline.
  double distance_to(const Vec& point, int dims) const;

 private:
  std::vector<StateVector> waypoints_;
  double delta_;
  double exponent_;
};

ReferencePath straight_path(const StateVector& start, const StateVector& end, double spacing,
                            double delta = 0.0);
// Closed paths in the x-y plane starting and ending at `start`; other entries are held.
ReferencePath circle_path(const StateVector& start, double length, double spacing, double delta = 0.0);
ReferencePath triangle_path(const StateVector& start, double length, double spacing, double delta = 0.0);

// {"type":"straight","start":[..],"end":[..],"spacing":..}
// {"type":"circle"|"triangle","start":[..],"length":..,"spacing":..}
// {"type":"waypoints","waypoints":[[..],..]}
// Optional "delta" and "exponent" on every variant.
ReferencePath path_from_json(const nlohmann::json& j);

struct WaypointSelection {
  StateVector target;
  int index = 0;
  bool terminal = false;
};

// Nearest waypoint at or after `current_index`, then advance past every
// waypoint that passes the threshold test. Past the last waypoint the final
// waypoint is returned with `terminal` set.
WaypointSelection select_waypoint(const ReferencePath& path, const StateVector& s, int current_index);

}  // namespace ssp::control

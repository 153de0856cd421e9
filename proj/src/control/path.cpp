#include "ssp/control/path.hpp"

#include <cmath>
#include <numbers>

namespace ssp::control {

namespace {

Vec vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int segment_count(double length, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("path: spacing must be positive");
  if (!(length > 0.0)) throw std::invalid_argument("path: length must be positive");
  return std::max(1, static_cast<int>(std::ceil(length / spacing - 1e-9)));
}

// Walks the closed polygon `corners` (x-y offsets from start) at uniform arc length.
std::vector<StateVector> closed_polygon(const StateVector& start, const std::vector<Eigen::Vector2d>& corners,
                                        double spacing) {
  double perimeter = 0.0;
  for (std::size_t i = 0; i < corners.size(); ++i) perimeter += (corners[(i + 1) % corners.size()] - corners[i]).norm();
  const int n = segment_count(perimeter, spacing);
  std::vector<StateVector> out;
  std::size_t edge = 0;
  double edge_start = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double arc = perimeter * k / n;
    Eigen::Vector2d a = corners[edge];
    Eigen::Vector2d b = corners[(edge + 1) % corners.size()];
    while (edge + 1 < corners.size() && arc > edge_start + (b - a).norm() + 1e-12) {
      edge_start += (b - a).norm();
      ++edge;
      a = corners[edge];
      b = corners[(edge + 1) % corners.size()];
    }
    const double frac = std::clamp((arc - edge_start) / (b - a).norm(), 0.0, 1.0);
    const Eigen::Vector2d p = a + frac * (b - a);
    StateVector s = start;
    s(0) += p.x();
    s(1) += p.y();
    out.push_back(s);
  }
  return out;
}

}  // namespace

ReferencePath::ReferencePath(std::vector<StateVector> waypoints, double delta, double exponent)
    : waypoints_(std::move(waypoints)), delta_(delta), exponent_(exponent) {
  if (waypoints_.size() < 2) throw std::invalid_argument("reference path: need at least two waypoints");
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    require_dims("reference path waypoint", waypoints_[i].size(), waypoints_.front().size());
    if ((waypoints_[i] - waypoints_[i - 1]).norm() == 0.0) {
      throw std::invalid_argument("reference path: waypoints " + std::to_string(i - 1) + " and " +
                                  std::to_string(i) + " coincide");
    }
  }
  if (!(exponent_ > 0.0)) throw std::invalid_argument("reference path: exponent must be positive");
  if (delta_ <= 0.0) delta_ = 0.1 * mean_spacing() * mean_spacing();
}

double ReferencePath::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < waypoints_.size(); ++i) total += (waypoints_[i] - waypoints_[i - 1]).norm();
  return total;
}

double ReferencePath::mean_spacing() const { return length() / static_cast<double>(waypoints_.size() - 1); }

double ReferencePath::distance_to(const Vec& point, int dims) const {
  const Vec p = point.head(dims);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < waypoints_.size(); ++i) {
    const Vec a = waypoints_[i - 1].head(dims);
    const Vec ab = waypoints_[i].head(dims) - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (p - (a + t * ab)).norm());
  }
  return best;
}

ReferencePath straight_path(const StateVector& start, const StateVector& end, double spacing, double delta) {
  require_dims("straight path end", end.size(), start.size());
  const int n = segment_count((end - start).head(std::min<Eigen::Index>(3, start.size())).norm(), spacing);
  std::vector<StateVector> pts;
  for (int k = 0; k <= n; ++k) pts.push_back(start + (end - start) * (static_cast<double>(k) / n));
  return ReferencePath(std::move(pts), delta);
}

ReferencePath circle_path(const StateVector& start, double length, double spacing, double delta) {
  if (start.size() < 2) throw DimensionError("circle path: state needs x and y");
  const int n = segment_count(length, spacing);
  const double radius = length / (2.0 * std::numbers::pi);
  std::vector<StateVector> pts;
  for (int k = 0; k <= n; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n;
    StateVector s = start;
    s(0) += radius * (std::cos(th) - 1.0);
    s(1) += radius * std::sin(th);
    pts.push_back(s);
  }
  return ReferencePath(std::move(pts), delta);
}

ReferencePath triangle_path(const StateVector& start, double length, double spacing, double delta) {
  if (start.size() < 2) throw DimensionError("triangle path: state needs x and y");
  const double side = length / 3.0;
  const std::vector<Eigen::Vector2d> corners{
      {0.0, 0.0}, {side, 0.0}, {0.5 * side, side * std::sqrt(3.0) / 2.0}};
  return ReferencePath(closed_polygon(start, corners, spacing), delta);
}

ReferencePath path_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  const double delta = j.value("delta", 0.0);
  const double exponent = j.value("exponent", 2.0);
  const double spacing = j.value("spacing", 0.005);
  ReferencePath path = [&] {
    if (type == "straight") return straight_path(vec_from(j.at("start")), vec_from(j.at("end")), spacing, delta);
    if (type == "circle") return circle_path(vec_from(j.at("start")), j.value("length", 0.75), spacing, delta);
    if (type == "triangle") return triangle_path(vec_from(j.at("start")), j.value("length", 0.30), spacing, delta);
    if (type == "waypoints") {
      std::vector<StateVector> pts;
      for (const auto& w : j.at("waypoints")) pts.push_back(vec_from(w));
      return ReferencePath(std::move(pts), delta);
    }
    throw std::invalid_argument("unknown path type '" + type + "' (expected straight|circle|triangle|waypoints)");
  }();
  return ReferencePath(path.waypoints(), path.delta(), exponent);
}

WaypointSelection select_waypoint(const ReferencePath& path, const StateVector& s, int current_index) {
  const int last = path.last_index();
  if (current_index < 0 || current_index > last) {
    throw std::out_of_range("select_waypoint: index " + std::to_string(current_index) + " outside [0, " +
                            std::to_string(last) + "]");
  }
  require_dims("select_waypoint state", s.size(), path.waypoint(0).size());
  int i = current_index;
  double best = (s - path.waypoint(i)).squaredNorm();
  for (int j = current_index + 1; j <= last; ++j) {
    const double d = (s - path.waypoint(j)).squaredNorm();
    if (d < best) {
      best = d;
      i = j;
    }
  }
  auto passes = [&](int k) { return std::pow((s - path.waypoint(k)).norm(), path.exponent()) < path.delta(); };
  while (i <= last && passes(i)) ++i;
  if (i > last) return {path.waypoint(last), last, true};
  return {path.waypoint(i), i, false};
}

}  // namespace ssp::control

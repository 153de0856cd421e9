#include "ssp/barriers/barriers.hpp"

#include <cmath>

namespace ssp::barriers {

namespace {

constexpr double kAxisPerturbation = 1e-9;

Vec vec_from_json(const nlohmann::json& j, const char* key) {
  const auto v = j.at(key).get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

double sign_or_zero(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Unit vector perpendicular to `v`, built from the least aligned basis axis.
Vec perpendicular(const Vec& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().minCoeff(&k);
  Eigen::Vector3d e = Eigen::Vector3d::Zero();
  e(k) = 1.0;
  const Eigen::Vector3d vv(v(0), v(1), v(2));
  return vv.cross(e).normalized();
}

}  // namespace

SphereZone::SphereZone(Vec center, double radius) : center_(std::move(center)), radius_(radius) {
  if (!(radius_ > 0.0)) throw std::invalid_argument("sphere zone: radius must be positive");
  if (center_.size() == 0) throw DimensionError("sphere zone: empty center");
}

BarrierEval SphereZone::evaluate(const Vec& x) const {
  require_dims("sphere zone point", x.size(), center_.size());
  const Vec d = x - center_;
  return BarrierEval{d.squaredNorm() - radius_ * radius_, 2.0 * d};
}

nlohmann::json SphereZone::to_json() const {
  return {{"type", "sphere"}, {"center", to_std(center_)}, {"radius", radius_}};
}

double smooth_max(double a, double b, double tau) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(tau * (a - m)) + std::exp(tau * (b - m))) / tau - std::log(2.0) / tau;
}

CylinderZone::CylinderZone(Vec point, Vec axis, double radius, double length, double tau)
    : point_(std::move(point)), axis_(std::move(axis)), radius_(radius), length_(length), tau_(tau) {
  require_dims("cylinder point", point_.size(), 3);
  require_dims("cylinder axis", axis_.size(), 3);
  if (std::abs(axis_.norm() - 1.0) > 1e-9) throw std::invalid_argument("cylinder zone: axis must be a unit vector");
  if (!(radius_ > 0.0) || !(length_ > 0.0)) {
    throw std::invalid_argument("cylinder zone: radius and length must be positive");
  }
  if (!(tau_ > 0.0)) throw std::invalid_argument("cylinder zone: tau must be positive");
}

CylinderComponents CylinderZone::components(const Vec& x) const {
  require_dims("cylinder point", x.size(), 3);
  const Vec u = x - point_;
  const double axial = u.dot(axis_);
  const Vec perp = u - axial * axis_;
  return CylinderComponents{perp.norm() - radius_, std::abs(axial) - 0.5 * length_};
}

double CylinderZone::hard_value(const Vec& x) const {
  const CylinderComponents c = components(x);
  return std::max(c.radial, c.vertical);
}

BarrierEval CylinderZone::evaluate(const Vec& x) const {
  const CylinderComponents c = components(x);
  BarrierEval out;
  out.value = smooth_max(c.radial, c.vertical, tau_);

  const Vec u = x - point_;
  const double axial = u.dot(axis_);
  Vec perp = u - axial * axis_;
  double perp_norm = perp.norm();
  if (perp_norm < kAxisPerturbation) {
    perp = perp + kAxisPerturbation * perpendicular(axis_);
    perp_norm = perp.norm();
    out.singular = true;
  }
  const Vec grad_radial = perp / perp_norm;
  const Vec grad_vertical = sign_or_zero(axial) * axis_;

  // softmax weights of the two components
  const double m = std::max(c.radial, c.vertical);
  const double er = std::exp(tau_ * (c.radial - m));
  const double ev = std::exp(tau_ * (c.vertical - m));
  const double wr = er / (er + ev);
  out.gradient = wr * grad_radial + (1.0 - wr) * grad_vertical;
  return out;
}

nlohmann::json CylinderZone::to_json() const {
  return {{"type", "cylinder"}, {"point", to_std(point_)}, {"axis", to_std(axis_)},
          {"radius", radius_},  {"length", length_},       {"tau", tau_}};
}

TaskSpaceBarrier::TaskSpaceBarrier(std::vector<Vec> demo_states, double radius)
    : radius_(radius), dim_(0) {
  if (demo_states.empty()) throw std::invalid_argument("task-space barrier: empty demonstration set");
  if (!(radius_ > 0.0)) throw std::invalid_argument("task-space barrier: radius must be positive");
  dim_ = static_cast<int>(demo_states.front().size());
  tree_ = KdTree(std::move(demo_states));
}

BarrierEval TaskSpaceBarrier::evaluate(const Vec& s) const {
  require_dims("task-space state", s.size(), dim_);
  const Neighbor nn = tree_.nearest(s);
  BarrierEval out;
  out.value = radius_ * radius_ - nn.distance_sq;
  out.gradient = -2.0 * (s - tree_.point(nn.index));
  out.nearest = nn.index;
  return out;
}

nlohmann::json TaskSpaceBarrier::to_json() const {
  return {{"type", "task_space"}, {"d", radius_}, {"n_states", tree_.size()}};
}

std::shared_ptr<const Barrier> zone_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "sphere") {
    return std::make_shared<SphereZone>(vec_from_json(j, "center"), j.at("radius").get<double>());
  }
  if (type == "cylinder") {
    return std::make_shared<CylinderZone>(vec_from_json(j, "point"), vec_from_json(j, "axis"),
                                          j.at("radius").get<double>(), j.at("length").get<double>(),
                                          j.value("tau", 200.0));
  }
  throw std::invalid_argument("unknown zone type '" + type + "' (expected sphere|cylinder)");
}

}  // namespace ssp::barriers

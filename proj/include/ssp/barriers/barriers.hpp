#pragma once

#include "ssp/barriers/kdtree.hpp"

#include "json.hpp"

#include <memory>
#include <string>
#include <vector>

namespace ssp::barriers {

struct BarrierEval {
  double value = 0.0;
  Vec gradient;
  bool singular = false;  // gradient evaluated at a perturbed point (non-smooth locus)
  int nearest = -1;       // task-space barrier: index of the closest demonstration state
};

// Differentiable scalar field with safe set {b >= 0}.
class Barrier {
 public:
  virtual ~Barrier() = default;
  virtual int dim() const = 0;
  virtual BarrierEval evaluate(const Vec& x) const = 0;
  // Value used to decide violations; equals evaluate().value unless the
  // barrier is a smoothed composite.
  virtual double hard_value(const Vec& x) const { return evaluate(x).value; }
  virtual std::string kind() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

// b(x) = |x - c|^2 - r^2
class SphereZone final : public Barrier {
 public:
  SphereZone(Vec center, double radius);

  int dim() const override { return static_cast<int>(center_.size()); }
  BarrierEval evaluate(const Vec& x) const override;
  std::string kind() const override { return "sphere"; }
  nlohmann::json to_json() const override;

  const Vec& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Vec center_;
  double radius_;
};

// log-sum-exp shifted down by ln(2)/tau, so max(a,b) - ln2/tau <= result <= max(a,b).
double smooth_max(double a, double b, double tau);

struct CylinderComponents {
  double radial = 0.0;    // |(x - c) x v| - r
  double vertical = 0.0;  // |(x - c) . v| - l/2
};

class CylinderZone final : public Barrier {
 public:
  CylinderZone(Vec point, Vec axis, double radius, double length, double tau = 200.0);

  int dim() const override { return 3; }
  BarrierEval evaluate(const Vec& x) const override;
  double hard_value(const Vec& x) const override;
  std::string kind() const override { return "cylinder"; }
  nlohmann::json to_json() const override;

  CylinderComponents components(const Vec& x) const;

  const Vec& point() const { return point_; }
  const Vec& axis() const { return axis_; }
  double radius() const { return radius_; }
  double length() const { return length_; }
  double tau() const { return tau_; }

 private:
  Vec point_;
  Vec axis_;
  double radius_;
  double length_;
  double tau_;
};

// b(s) = d^2 - |s - s_min|^2 where s_min is the nearest demonstration state.
// The gradient holds s_min fixed (valid inside a Voronoi cell).
class TaskSpaceBarrier final : public Barrier {
 public:
  TaskSpaceBarrier(std::vector<Vec> demo_states, double radius = 0.5);

  int dim() const override { return dim_; }
  BarrierEval evaluate(const Vec& s) const override;
  std::string kind() const override { return "task_space"; }
  nlohmann::json to_json() const override;

  double radius() const { return radius_; }
  const KdTree& index() const { return tree_; }

 private:
  KdTree tree_;
  double radius_;
  int dim_;
};

// {"type":"sphere","center":[..],"radius":..}
// {"type":"cylinder","point":[..],"axis":[..],"radius":..,"length":..,"tau":..}
std::shared_ptr<const Barrier> zone_from_json(const nlohmann::json& j);

}  // namespace ssp::barriers

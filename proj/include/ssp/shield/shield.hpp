#pragma once

#include "ssp/barriers/barriers.hpp"
#include "ssp/dynamics/model.hpp"
#include "ssp/dynamics/uncertainty.hpp"
#include "ssp/qp/qp.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ssp::shield {

enum class ModelBinding { FullState, PositionSubstate };

// How |db/ds| pairs with the derivative error bound.
enum class RobustNorm { LInf, PerDimension };

struct ShieldConstraint {
  std::shared_ptr<const barriers::Barrier> barrier;
  ModelBinding binding = ModelBinding::PositionSubstate;
  std::optional<double> gamma;  // falls back to ShieldConfig::gamma
  std::string name;
};

struct ShieldConfig {
  double gamma = 10.0;
  std::vector<ShieldConstraint> constraints;
  int vertex_budget = 64;  // box vertices evaluated, in addition to the center
  bool robust = true;
  RobustNorm norm = RobustNorm::LInf;
  Vec lb;
  Vec ub;
  double slack_penalty = 1e6;
  double infeasible_slack = 1e-6;
};

void validate(const ShieldConfig& cfg);

// G a <= h
struct ConstraintRow {
  Vec g;
  double h = 0.0;
};

// G = -L_g b(s), h = L_f b(s) - |grad b|_inf E_sdot + gamma b(s). With
// robust = false the E_sdot term is dropped.
ConstraintRow build_constraint(const barriers::Barrier& barrier, const dynamics::ControlAffineModel& model,
                               const StateVector& s, const dynamics::UncertaintyBounds& bounds, double gamma,
                               bool robust = true, RobustNorm norm = RobustNorm::LInf);

// Center of Y(s) = [s - E_s, s + E_s] first, then its vertices. Beyond
// `vertex_budget` vertices a golden-ratio sequence picks the subset.
std::vector<StateVector> state_box_points(const StateVector& s, double e_s, int vertex_budget = 64);

std::vector<ConstraintRow> robustify_over_state_box(const barriers::Barrier& barrier,
                                                    const dynamics::ControlAffineModel& model,
                                                    const StateVector& s,
                                                    const dynamics::UncertaintyBounds& bounds, double gamma,
                                                    bool robust = true, int vertex_budget = 64,
                                                    RobustNorm norm = RobustNorm::LInf);

struct ShieldModels {
  const dynamics::ControlAffineModel* full = nullptr;
  const dynamics::ControlAffineModel* position = nullptr;
};

struct ShieldBounds {
  dynamics::UncertaintyBounds full;
  dynamics::UncertaintyBounds position;
};

enum class FilterStatus { Ok, FilterInfeasible, SolverFailure };

std::string_view to_string(FilterStatus status);

struct FilterReport {
  ActionVector a_safe;
  bool intervened = false;
  std::vector<double> margins;  // hard barrier value per constraint at s
  double worst_margin = 0.0;
  double slack_used = 0.0;
  double solve_time = 0.0;  // seconds
  int rows = 0;
  FilterStatus status = FilterStatus::Ok;
  std::vector<int> nearest;  // task-space constraints: nearest demo index, else -1
};

// min |a - a_des|^2 over the robust rows of every constraint and the action box.
// Rows bound to the position substate act on the leading action entries;
// the remaining entries of their G row are zero.
FilterReport filter(const ActionVector& a_des, const StateVector& s, const ShieldConfig& cfg,
                    const ShieldModels& models, const ShieldBounds& bounds);

qp::QpProblem filter_problem(const ActionVector& a_des, const StateVector& s, const ShieldConfig& cfg,
                             const ShieldModels& models, const ShieldBounds& bounds);

struct InvarianceReport {
  std::vector<double> margins;  // min hard margin over barriers, per step
  double min_margin = 0.0;
  int argmin = 0;
  bool violation = false;
};

// Each barrier reads the leading dim() entries of every state.
InvarianceReport check_invariance(const std::vector<StateVector>& trajectory,
                                  const std::vector<std::shared_ptr<const barriers::Barrier>>& barriers);

// Sampled-data allowance: with b_ddot bounded by `curvature_bound` along the
// trajectory and gamma * dt <= 1, the sampled CBF condition keeps b >= -allowance.
double discretization_allowance(double curvature_bound, double dt, double gamma);

}  // namespace ssp::shield

#include "ssp/shield/shield.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace ssp::shield {

namespace {

double robust_term(const Vec& grad, const dynamics::UncertaintyBounds& bounds, RobustNorm norm) {
  if (norm == RobustNorm::LInf) return grad.lpNorm<Eigen::Infinity>() * bounds.e_sdot;
  if (bounds.per_dim_sdot.size() != grad.size()) {
    throw DimensionError("shield: per-dimension robust term needs per_dim_sdot of size " +
                         std::to_string(grad.size()));
  }
  return grad.cwiseAbs().dot(bounds.per_dim_sdot);
}

}  // namespace

void validate(const ShieldConfig& cfg) {
  if (!(cfg.gamma > 0.0)) throw std::invalid_argument("shield: gamma must be positive");
  if (cfg.constraints.empty()) throw std::invalid_argument("shield: at least one constraint is required");
  for (const auto& c : cfg.constraints) {
    if (!c.barrier) throw std::invalid_argument("shield: constraint '" + c.name + "' has no barrier");
    if (c.gamma && !(*c.gamma > 0.0)) throw std::invalid_argument("shield: constraint gamma must be positive");
  }
  if (cfg.vertex_budget < 0) throw std::invalid_argument("shield: vertex_budget must be nonnegative");
  if (!(cfg.slack_penalty > 0.0)) throw std::invalid_argument("shield: slack_penalty must be positive");
}

std::string_view to_string(FilterStatus status) {
  switch (status) {
    case FilterStatus::Ok: return "ok";
    case FilterStatus::FilterInfeasible: return "filter-infeasible";
    case FilterStatus::SolverFailure: return "solver-failure";
  }
  return "unknown";
}

ConstraintRow build_constraint(const barriers::Barrier& barrier, const dynamics::ControlAffineModel& model,
                               const StateVector& s, const dynamics::UncertaintyBounds& bounds, double gamma,
                               bool robust, RobustNorm norm) {
  if (!model.ready()) throw std::logic_error("build_constraint: model is not trained");
  require_dims("build_constraint barrier dim", barrier.dim(), model.n_state());
  Vec f;
  Mat g;
  model.evaluate(s, f, g);
  const barriers::BarrierEval b = barrier.evaluate(s);
  ConstraintRow row;
  row.g = -(b.gradient.transpose() * g).transpose();
  row.h = b.gradient.dot(f) + gamma * b.value;
  if (robust) row.h -= robust_term(b.gradient, bounds, norm);
  return row;
}

std::vector<StateVector> state_box_points(const StateVector& s, double e_s, int vertex_budget) {
  if (e_s < 0.0) throw std::invalid_argument("state box: E_s must be nonnegative");
  std::vector<StateVector> pts{s};
  if (e_s == 0.0 || vertex_budget == 0) return pts;
  const int n = static_cast<int>(s.size());
  const double total = std::ldexp(1.0, n);
  auto vertex = [&](std::uint64_t code) {
    StateVector y = s;
    for (int i = 0; i < n; ++i) y(i) += ((code >> i) & 1U) ? e_s : -e_s;
    return y;
  };
  if (total <= vertex_budget) {
    for (std::uint64_t code = 0; code < static_cast<std::uint64_t>(total); ++code) pts.push_back(vertex(code));
    return pts;
  }
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  std::vector<std::uint64_t> chosen;
  for (std::uint64_t j = 1; static_cast<int>(chosen.size()) < vertex_budget; ++j) {
    const double u = std::fmod(static_cast<double>(j) * phi, 1.0);
    const auto code = static_cast<std::uint64_t>(u * total);
    if (std::find(chosen.begin(), chosen.end(), code) == chosen.end()) chosen.push_back(code);
  }
  for (auto code : chosen) pts.push_back(vertex(code));
  return pts;
}

std::vector<ConstraintRow> robustify_over_state_box(const barriers::Barrier& barrier,
                                                    const dynamics::ControlAffineModel& model,
                                                    const StateVector& s,
                                                    const dynamics::UncertaintyBounds& bounds, double gamma,
                                                    bool robust, int vertex_budget, RobustNorm norm) {
  const double e_s = robust ? bounds.e_s : 0.0;
  std::vector<ConstraintRow> rows;
  for (const StateVector& y : state_box_points(s, e_s, vertex_budget)) {
    rows.push_back(build_constraint(barrier, model, y, bounds, gamma, robust, norm));
  }
  return rows;
}

qp::QpProblem filter_problem(const ActionVector& a_des, const StateVector& s, const ShieldConfig& cfg,
                             const ShieldModels& models, const ShieldBounds& bounds) {
  validate(cfg);
  if (!models.full) throw std::invalid_argument("shield: full-state model is required");
  const int m = models.full->n_action();
  require_dims("shield a_des", a_des.size(), m);
  require_dims("shield state", s.size(), models.full->n_state());
  if (!s.allFinite() || !a_des.allFinite()) throw std::invalid_argument("shield: non-finite state or action");
  if (cfg.lb.size() > 0) require_dims("shield lb", cfg.lb.size(), m);
  if (cfg.ub.size() > 0) require_dims("shield ub", cfg.ub.size(), m);
  if ((cfg.lb.size() > 0 && (a_des.array() < cfg.lb.array()).any()) ||
      (cfg.ub.size() > 0 && (a_des.array() > cfg.ub.array()).any())) {
    throw std::invalid_argument("shield: a_des lies outside the action box");
  }

  std::vector<ConstraintRow> rows;
  for (const auto& c : cfg.constraints) {
    const double gamma = c.gamma.value_or(cfg.gamma);
    const bool spatial = c.binding == ModelBinding::PositionSubstate;
    const dynamics::ControlAffineModel* model = spatial ? models.position : models.full;
    if (!model) throw std::invalid_argument("shield: constraint '" + c.name + "' needs a position model");
    if (model->n_action() > m) throw DimensionError("shield: substate model has more actions than the full model");
    const StateVector y = s.head(model->n_state());
    const auto& b = spatial ? bounds.position : bounds.full;
    for (auto& r : robustify_over_state_box(*c.barrier, *model, y, b, gamma, cfg.robust, cfg.vertex_budget,
                                            cfg.norm)) {
      Vec padded = Vec::Zero(m);
      padded.head(r.g.size()) = r.g;
      rows.push_back({padded, r.h});
    }
  }

  qp::QpProblem pb;
  pb.P = Mat::Identity(m, m);
  pb.q = -a_des;
  pb.G.resize(static_cast<Eigen::Index>(rows.size()), m);
  pb.h.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    pb.G.row(static_cast<Eigen::Index>(i)) = rows[i].g.transpose();
    pb.h(static_cast<Eigen::Index>(i)) = rows[i].h;
  }
  pb.lb = cfg.lb;
  pb.ub = cfg.ub;
  return pb;
}

FilterReport filter(const ActionVector& a_des, const StateVector& s, const ShieldConfig& cfg,
                    const ShieldModels& models, const ShieldBounds& bounds) {
  const auto t0 = std::chrono::steady_clock::now();
  const qp::QpProblem pb = filter_problem(a_des, s, cfg, models, bounds);
  const qp::QpSolution sol = qp::solve_with_slack(pb, cfg.slack_penalty);
  const auto t1 = std::chrono::steady_clock::now();

  FilterReport report;
  report.solve_time = std::chrono::duration<double>(t1 - t0).count();
  report.rows = pb.rows();
  report.slack_used = sol.slack_used;
  if (sol.status != qp::QpStatus::Optimal || !sol.x.allFinite()) {
    report.status = FilterStatus::SolverFailure;
    report.a_safe = a_des;
  } else {
    report.a_safe = sol.x;
    if (sol.slack_used > cfg.infeasible_slack) report.status = FilterStatus::FilterInfeasible;
  }
  report.intervened = (report.a_safe - a_des).norm() > 1e-9;

  report.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& c : cfg.constraints) {
    const StateVector y = s.head(c.barrier->dim());
    report.margins.push_back(c.barrier->hard_value(y));
    report.worst_margin = std::min(report.worst_margin, report.margins.back());
    report.nearest.push_back(c.barrier->kind() == "task_space" ? c.barrier->evaluate(y).nearest : -1);
  }
  return report;
}

InvarianceReport check_invariance(const std::vector<StateVector>& trajectory,
                                  const std::vector<std::shared_ptr<const barriers::Barrier>>& barriers) {
  InvarianceReport out;
  out.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : barriers) {
      if (trajectory[t].size() < b->dim()) throw DimensionError("check_invariance: state shorter than barrier");
      m = std::min(m, b->hard_value(trajectory[t].head(b->dim())));
    }
    out.margins.push_back(m);
    if (m < out.min_margin) {
      out.min_margin = m;
      out.argmin = static_cast<int>(t);
    }
  }
  out.violation = out.min_margin < 0.0;
  return out;
}

double discretization_allowance(double curvature_bound, double dt, double gamma) {
  if (curvature_bound < 0.0 || !(dt > 0.0) || !(gamma > 0.0)) {
    throw std::invalid_argument("discretization_allowance: need curvature >= 0, dt > 0, gamma > 0");
  }
  if (gamma * dt > 1.0) throw std::invalid_argument("discretization_allowance: requires gamma * dt <= 1");
  return 0.5 * curvature_bound * dt / gamma;
}

}  // namespace ssp::shield

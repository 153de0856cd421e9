#include "ssp/control/clf.hpp"

namespace ssp::control {

void validate(const ClfConfig& cfg) {
  if (!(cfg.c > 0.0)) throw std::invalid_argument("clf: c must be positive");
  if (!(cfg.beta > 0.0)) throw std::invalid_argument("clf: beta must be positive");
}

qp::QpProblem clf_problem(const dynamics::ControlAffineModel& model, const StateVector& s,
                          const StateVector& s_des, const ClfConfig& cfg) {
  validate(cfg);
  if (!model.ready()) throw std::logic_error("clf_action: model is not trained");
  require_dims("clf state", s.size(), model.n_state());
  require_dims("clf target", s_des.size(), model.n_state());
  Vec f;
  Mat g;
  model.evaluate(s, f, g);
  const Vec e = s - s_des;
  const double c2 = cfg.c * cfg.c;
  const double v = c2 * e.squaredNorm();

  qp::QpProblem pb;
  const int m = model.n_action();
  pb.P = Mat::Identity(m, m);
  pb.q = Vec::Zero(m);
  pb.G = (2.0 * c2 * e.transpose() * g);
  pb.h = Vec::Constant(1, -2.0 * c2 * e.dot(f) - cfg.beta * v);
  return pb;
}

ActionVector clf_action(const dynamics::ControlAffineModel& model, const StateVector& s,
                        const StateVector& s_des, const ClfConfig& cfg) {
  const qp::QpProblem pb = clf_problem(model, s, s_des, cfg);
  const qp::QpSolution sol = qp::solve(pb);
  if (sol.status != qp::QpStatus::Optimal) throw UncontrollableDescent();
  return sol.x;
}

}  // namespace ssp::control

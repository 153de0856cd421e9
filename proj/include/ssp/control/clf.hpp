#pragma once

#include "ssp/dynamics/model.hpp"
#include "ssp/qp/qp.hpp"

namespace ssp::control {

struct ClfConfig {
  double c = 1.0;
  double beta = 15.0;
};

void validate(const ClfConfig& cfg);

class UncontrollableDescent : public NumericalError {
 public:
  UncontrollableDescent() : NumericalError("uncontrollable descent direction") {}
};

// V = |c (s - s_des)|^2; min |a|^2 s.t. L_gV a <= -L_fV - beta V.
qp::QpProblem clf_problem(const dynamics::ControlAffineModel& model, const StateVector& s,
                          const StateVector& s_des, const ClfConfig& cfg);

ActionVector clf_action(const dynamics::ControlAffineModel& model, const StateVector& s,
                        const StateVector& s_des, const ClfConfig& cfg);

}  // namespace ssp::control

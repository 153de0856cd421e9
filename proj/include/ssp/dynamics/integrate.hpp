#pragma once

#include "ssp/dynamics/model.hpp"

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace ssp::dynamics {

enum class Integrator { Euler, Rk4 };

Integrator parse_integrator(std::string_view name);
std::string_view to_string(Integrator method);

// Generic vector field for fixed-step integration.
using Field = std::function<Vec(const Vec&)>;

Vec integrate_step(const Field& field, const Vec& s, double dt, Integrator method = Integrator::Rk4);

// One zero-order-hold step of the control-affine model.
Vec step(const ControlAffineModel& model, const StateVector& s, const ActionVector& a, double dt,
         Integrator method = Integrator::Rk4);

// Rollout of `horizon` steps. `actions` holds either one action (held for the
// whole horizon) or exactly `horizon` actions. Result includes s0 at index 0.
std::vector<StateVector> integrate(const ControlAffineModel& model, const StateVector& s0,
                                   std::span<const ActionVector> actions, int horizon, double dt,
                                   Integrator method = Integrator::Rk4);

}  // namespace ssp::dynamics

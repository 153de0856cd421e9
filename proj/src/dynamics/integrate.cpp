#include "ssp/dynamics/integrate.hpp"

#include <string>

namespace ssp::dynamics {

Integrator parse_integrator(std::string_view name) {
  if (name == "rk4") return Integrator::Rk4;
  if (name == "euler") return Integrator::Euler;
  throw std::invalid_argument("unknown integrator '" + std::string(name) + "' (expected rk4|euler)");
}

std::string_view to_string(Integrator method) {
  return method == Integrator::Rk4 ? "rk4" : "euler";
}

Vec integrate_step(const Field& field, const Vec& s, double dt, Integrator method) {
  if (method == Integrator::Euler) return s + dt * field(s);
  const Vec k1 = field(s);
  const Vec k2 = field(s + 0.5 * dt * k1);
  const Vec k3 = field(s + 0.5 * dt * k2);
  const Vec k4 = field(s + dt * k3);
  return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vec step(const ControlAffineModel& model, const StateVector& s, const ActionVector& a, double dt,
         Integrator method) {
  require_dims("step state", s.size(), model.n_state());
  require_dims("step action", a.size(), model.n_action());
  Vec f;
  Mat g;
  const Field field = [&](const Vec& x) {
    model.evaluate(x, f, g);
    return Vec(f + g * a);
  };
  return integrate_step(field, s, dt, method);
}

std::vector<StateVector> integrate(const ControlAffineModel& model, const StateVector& s0,
                                   std::span<const ActionVector> actions, int horizon, double dt,
                                   Integrator method) {
  if (horizon < 1) throw std::invalid_argument("integrate: horizon must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  if (actions.size() != 1 && actions.size() != static_cast<std::size_t>(horizon)) {
    throw DimensionError("integrate: expected 1 or " + std::to_string(horizon) + " actions, got " +
                         std::to_string(actions.size()));
  }
  std::vector<StateVector> traj;
  traj.reserve(static_cast<std::size_t>(horizon) + 1);
  traj.push_back(s0);
  for (int k = 0; k < horizon; ++k) {
    const ActionVector& a = actions.size() == 1 ? actions[0] : actions[static_cast<std::size_t>(k)];
    Vec next = step(model, traj.back(), a, dt, method);
    if (!next.allFinite()) {
      throw NumericalError("integrate: non-finite state at step " + std::to_string(k + 1));
    }
    traj.push_back(std::move(next));
  }
  return traj;
}

}  // namespace ssp::dynamics

#include "ssp/dynamics/uncertainty.hpp"

namespace ssp::dynamics {

namespace {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

TransitionError absorb(UncertaintyBounds& b, const ControlAffineModel& model, const Vec& s,
                       const Vec& a, const Vec& s_next, double dt, Integrator method) {
  const Vec sdot_star = (s_next - s) / dt;
  const Vec sdot_err = (sdot_star - model.eval_field(s, a)).cwiseAbs();
  const Vec s_err = (s_next - step(model, s, a, dt, method)).cwiseAbs();
  TransitionError e{sdot_err.sum(), s_err.sum()};
  b.e_sdot = std::max(b.e_sdot, e.sdot_l1);
  b.e_s = std::max(b.e_s, e.s_l1);
  b.per_dim_sdot = b.per_dim_sdot.cwiseMax(sdot_err);
  b.per_dim_s = b.per_dim_s.cwiseMax(s_err);
  return e;
}

}  // namespace

UncertaintyBounds UncertaintyBounds::zero(int n_state) {
  UncertaintyBounds b;
  b.per_dim_sdot = Vec::Zero(n_state);
  b.per_dim_s = Vec::Zero(n_state);
  return b;
}

nlohmann::json UncertaintyBounds::to_json() const {
  return {{"e_sdot", e_sdot},
          {"e_s", e_s},
          {"per_dim_sdot", to_std(per_dim_sdot)},
          {"per_dim_s", to_std(per_dim_s)}};
}

UncertaintyBounds UncertaintyBounds::from_json(const nlohmann::json& j) {
  UncertaintyBounds b;
  b.e_sdot = j.at("e_sdot").get<double>();
  b.e_s = j.at("e_s").get<double>();
  if (b.e_sdot < 0.0 || b.e_s < 0.0) throw std::invalid_argument("uncertainty bounds must be nonnegative");
  if (j.contains("per_dim_sdot")) b.per_dim_sdot = from_std(j["per_dim_sdot"].get<std::vector<double>>());
  if (j.contains("per_dim_s")) b.per_dim_s = from_std(j["per_dim_s"].get<std::vector<double>>());
  return b;
}

UncertaintyReport quantify_uncertainty_detailed(const ControlAffineModel& model,
                                                const Dataset& eval_set, Integrator method) {
  if (total_transitions(eval_set) == 0) {
    throw std::invalid_argument("quantify_uncertainty: evaluation set has no transitions");
  }
  UncertaintyReport report;
  report.bounds = UncertaintyBounds::zero(model.n_state());
  for (const auto& d : eval_set) {
    for (std::size_t t = 0; t < d.transitions(); ++t) {
      report.transitions.push_back(
          absorb(report.bounds, model, d.states[t], d.actions[t], d.states[t + 1], d.dt, method));
    }
  }
  return report;
}

UncertaintyBounds quantify_uncertainty(const ControlAffineModel& model, const Dataset& eval_set,
                                       Integrator method) {
  return quantify_uncertainty_detailed(model, eval_set, method).bounds;
}

OnlineUncertainty::OnlineUncertainty(int n_state) : bounds_(UncertaintyBounds::zero(n_state)) {}

TransitionError OnlineUncertainty::update(const ControlAffineModel& model, const StateVector& s,
                                          const ActionVector& a, const StateVector& s_next,
                                          double dt, Integrator method) {
  ++count_;
  return absorb(bounds_, model, s, a, s_next, dt, method);
}

UncertaintyBounds merge_max(const UncertaintyBounds& a, const UncertaintyBounds& b) {
  UncertaintyBounds out;
  out.e_sdot = std::max(a.e_sdot, b.e_sdot);
  out.e_s = std::max(a.e_s, b.e_s);
  auto vmax = [](const Vec& x, const Vec& y) -> Vec {
    if (x.size() == 0) return y;
    if (y.size() == 0) return x;
    require_dims("merge_max per-dim bounds", y.size(), x.size());
    return x.cwiseMax(y);
  };
  out.per_dim_sdot = vmax(a.per_dim_sdot, b.per_dim_sdot);
  out.per_dim_s = vmax(a.per_dim_s, b.per_dim_s);
  return out;
}

}  // namespace ssp::dynamics

#pragma once

#include "ssp/dynamics/demonstration.hpp"
#include "ssp/dynamics/integrate.hpp"
#include "ssp/dynamics/model.hpp"

#include "json.hpp"

#include <vector>

namespace ssp::dynamics {

// Worst-case L1 derivative error (e_sdot) and one-step state error (e_s) of a
// model over a set of transitions, plus coordinate-wise maxima.
struct UncertaintyBounds {
  double e_sdot = 0.0;
  double e_s = 0.0;
  Vec per_dim_sdot;
  Vec per_dim_s;

  static UncertaintyBounds zero(int n_state);
  nlohmann::json to_json() const;
  static UncertaintyBounds from_json(const nlohmann::json& j);
};

struct TransitionError {
  double sdot_l1 = 0.0;
  double s_l1 = 0.0;
};

struct UncertaintyReport {
  UncertaintyBounds bounds;
  std::vector<TransitionError> transitions;
};

// s_dot* is the forward difference (s_{t+1} - s_t) / dt; the one-step
// prediction integrates the model from the recorded s_t over dt.
UncertaintyReport quantify_uncertainty_detailed(const ControlAffineModel& model,
                                                const Dataset& eval_set,
                                                Integrator method = Integrator::Rk4);

UncertaintyBounds quantify_uncertainty(const ControlAffineModel& model, const Dataset& eval_set,
                                       Integrator method = Integrator::Rk4);

// Running-max variant fed with transitions observed during execution.
class OnlineUncertainty {
 public:
  explicit OnlineUncertainty(int n_state);

  TransitionError update(const ControlAffineModel& model, const StateVector& s,
                         const ActionVector& a, const StateVector& s_next, double dt,
                         Integrator method = Integrator::Rk4);

  const UncertaintyBounds& bounds() const { return bounds_; }
  std::size_t count() const { return count_; }

 private:
  UncertaintyBounds bounds_;
  std::size_t count_ = 0;
};

// Coordinate-wise max of two bound sets.
UncertaintyBounds merge_max(const UncertaintyBounds& a, const UncertaintyBounds& b);

}  // namespace ssp::dynamics

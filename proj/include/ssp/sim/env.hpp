#pragma once

#include "ssp/barriers/barriers.hpp"
#include "ssp/control/expert.hpp"
#include "ssp/dynamics/model.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace ssp::sim {

// Ground truth s_dot = A s + B a + w, with w redrawn every step, |w|_1 <= w_max.
struct EnvConfig {
  int n_state = 4;
  int n_action = 4;
  Mat A;
  Mat B;
  double w_max = 0.002;
  double dt = 0.1;
  Vec a_max;
  double obs_sigma = 2e-5;
  int horizon = 100;
  control::TaskSpec task;
  StateVector start;
  double start_jitter = 0.01;  // uniform, per position entry
  std::vector<std::shared_ptr<const barriers::Barrier>> zones;
  int position_dims = 3;
};

// Reach task from the origin to (0.35, 0, 0) with yaw held at zero.
EnvConfig default_reach_env();

// Same environment with a sphere zone straddling the straight start-goal segment.
EnvConfig default_zone_env();

void validate(const EnvConfig& cfg);

dynamics::LinearAffineModel ground_truth_model(const EnvConfig& cfg);

// One rk4 step of the ground truth with the disturbance held over the step.
StateVector ground_truth_step(const EnvConfig& cfg, const StateVector& s, const ActionVector& a, const Vec& w);

ActionVector clamp_action(const EnvConfig& cfg, const ActionVector& a);

// Independent stream for episode `index` of a run seeded with `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

class Env {
 public:
  Env(EnvConfig cfg, std::uint64_t seed);

  // Draws the jittered start; returns the observation.
  const StateVector& reset();
  const StateVector& step(const ActionVector& a);

  const EnvConfig& config() const { return cfg_; }
  const StateVector& state() const { return state_; }
  const StateVector& observation() const { return obs_; }
  const Vec& last_disturbance() const { return w_; }

 private:
  void observe();

  EnvConfig cfg_;
  std::mt19937_64 rng_;
  StateVector state_;
  StateVector obs_;
  Vec w_;
};

}  // namespace ssp::sim

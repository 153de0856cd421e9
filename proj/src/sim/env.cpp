#include "ssp/sim/env.hpp"

#include "ssp/dynamics/integrate.hpp"

namespace ssp::sim {

EnvConfig default_reach_env() {
  EnvConfig cfg;
  cfg.A = -0.01 * Mat::Identity(4, 4);
  cfg.B = Mat::Identity(4, 4);
  cfg.B(0, 1) = 0.05;
  cfg.B(1, 0) = -0.05;
  cfg.B(2, 2) = 0.9;
  cfg.a_max = Vec::Constant(4, 0.1);
  cfg.start = StateVector::Zero(4);
  cfg.task.kind = control::TaskKind::Reach;
  cfg.task.goal = StateVector::Zero(4);
  cfg.task.goal(0) = 0.35;
  cfg.task.gain = 2.0;
  cfg.task.a_max = cfg.a_max;
  cfg.task.tolerance = 0.005;
  return cfg;
}

EnvConfig default_zone_env() {
  EnvConfig cfg = default_reach_env();
  cfg.zones.push_back(std::make_shared<barriers::SphereZone>(Eigen::Vector3d(0.175, 0.01, 0.0), 0.04));
  return cfg;
}

void validate(const EnvConfig& cfg) {
  if (cfg.n_state <= 0 || cfg.n_action <= 0) throw std::invalid_argument("env: dimensions must be positive");
  require_dims("env A rows", cfg.A.rows(), cfg.n_state);
  require_dims("env A cols", cfg.A.cols(), cfg.n_state);
  require_dims("env B rows", cfg.B.rows(), cfg.n_state);
  require_dims("env B cols", cfg.B.cols(), cfg.n_action);
  require_dims("env a_max", cfg.a_max.size(), cfg.n_action);
  require_dims("env start", cfg.start.size(), cfg.n_state);
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("env: dt must be positive");
  if (cfg.w_max < 0.0) throw std::invalid_argument("env: w_max must be nonnegative");
  if (cfg.obs_sigma < 0.0) throw std::invalid_argument("env: obs_sigma must be nonnegative");
  if (cfg.start_jitter < 0.0) throw std::invalid_argument("env: start_jitter must be nonnegative");
  if (cfg.horizon < 1) throw std::invalid_argument("env: horizon must be at least 1");
  if ((cfg.a_max.array() <= 0.0).any()) throw std::invalid_argument("env: a_max must be positive");
  if (cfg.position_dims < 1 || cfg.position_dims > cfg.n_state) {
    throw std::invalid_argument("env: position_dims must be in [1, n_state]");
  }
  for (const auto& z : cfg.zones) {
    if (!z || z->dim() != cfg.position_dims) throw DimensionError("env: zone dimension must equal position_dims");
  }
}

dynamics::LinearAffineModel ground_truth_model(const EnvConfig& cfg) {
  return dynamics::LinearAffineModel(cfg.A, cfg.B);
}

StateVector ground_truth_step(const EnvConfig& cfg, const StateVector& s, const ActionVector& a, const Vec& w) {
  const Vec forcing = cfg.B * a + w;
  const dynamics::Field field = [&](const Vec& x) -> Vec { return cfg.A * x + forcing; };
  return dynamics::integrate_step(field, s, cfg.dt, dynamics::Integrator::Rk4);
}

ActionVector clamp_action(const EnvConfig& cfg, const ActionVector& a) {
  require_dims("env action", a.size(), cfg.n_action);
  return a.cwiseMax(-cfg.a_max).cwiseMin(cfg.a_max);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Env::Env(EnvConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
  validate(cfg_);
  reset();
}

const StateVector& Env::reset() {
  std::uniform_real_distribution<double> jitter(-cfg_.start_jitter, cfg_.start_jitter);
  state_ = cfg_.start;
  for (int i = 0; i < cfg_.position_dims; ++i) state_(i) += jitter(rng_);
  w_ = Vec::Zero(cfg_.n_state);
  observe();
  return obs_;
}

const StateVector& Env::step(const ActionVector& a) {
  const ActionVector u = clamp_action(cfg_, a);
  w_ = Vec::Zero(cfg_.n_state);
  if (cfg_.w_max > 0.0) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> radius(0.0, 1.0);
    for (int i = 0; i < cfg_.n_state; ++i) w_(i) = unit(rng_);
    const double l1 = w_.lpNorm<1>();
    const double r = radius(rng_);
    w_ = l1 > 0.0 ? Vec(w_ * (cfg_.w_max * r / l1)) : Vec(Vec::Zero(cfg_.n_state));
  }
  state_ = ground_truth_step(cfg_, state_, u, w_);
  observe();
  return obs_;
}

void Env::observe() {
  obs_ = state_;
  if (cfg_.obs_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg_.obs_sigma);
    for (int i = 0; i < cfg_.n_state; ++i) obs_(i) += noise(rng_);
  }
}

}  // namespace ssp::sim

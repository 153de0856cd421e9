#pragma once

#include "ssp/barriers/barriers.hpp"
#include "ssp/dynamics/integrate.hpp"
#include "ssp/dynamics/model.hpp"
#include "ssp/shield/shield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

namespace ssp::testing {

struct MinimalitySummary {
  int active_cases = 0;
  double max_projection_error = 0.0;
  int inactive_cases = 0;
  int inactive_changed = 0;  // a_safe differs from a_des in any bit
  int intervened_flag_errors = 0;
};

// Single sphere constraint on a random affine model without an action box.
// Active cases are compared with the closed-form half-space projection.
inline MinimalitySummary filter_minimality_suite(std::uint64_t seed, int per_kind) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MinimalitySummary out;
  while (out.active_cases < per_kind || out.inactive_cases < per_kind) {
    Mat a(3, 3), b(3, 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = 0.3 * n01(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = n01(rng);
    const dynamics::LinearAffineModel model(a, b);
    Vec center(3), s(3), a_des(3);
    for (int i = 0; i < 3; ++i) {
      center(i) = n01(rng);
      s(i) = n01(rng);
      a_des(i) = 2.0 * n01(rng);
    }
    const double dist = (s - center).norm();
    auto zone = std::make_shared<barriers::SphereZone>(center, dist * (0.3 + 0.6 * u(rng)));

    shield::ShieldConfig cfg;
    cfg.gamma = 0.5 + 10.0 * u(rng);
    cfg.constraints.push_back({zone, shield::ModelBinding::FullState, std::nullopt, "zone"});
    shield::ShieldBounds bounds{dynamics::UncertaintyBounds::zero(3), dynamics::UncertaintyBounds::zero(3)};
    bounds.full.e_sdot = 0.1 * u(rng);
    const shield::ShieldModels models{&model, nullptr};

    const shield::ConstraintRow row = shield::build_constraint(*zone, model, s, bounds.full, cfg.gamma);
    const double violation = row.g.dot(a_des) - row.h;
    const shield::FilterReport rep = shield::filter(a_des, s, cfg, models, bounds);
    if (violation > 1e-6 && out.active_cases < per_kind) {
      const Vec expected = a_des - (violation / row.g.squaredNorm()) * row.g;
      out.max_projection_error = std::max(out.max_projection_error, (rep.a_safe - expected).norm());
      out.intervened_flag_errors += rep.intervened ? 0 : 1;
      ++out.active_cases;
    } else if (violation < -1e-6 && out.inactive_cases < per_kind) {
      out.inactive_changed += (rep.a_safe.array() != a_des.array()).any() ? 1 : 0;
      out.intervened_flag_errors += rep.intervened ? 1 : 0;
      ++out.inactive_cases;
    }
  }
  return out;
}

struct InvarianceSummary {
  int rollouts = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  double max_allowance = 0.0;
  double min_allowance = std::numeric_limits<double>::infinity();
  int beyond_allowance = 0;     // rollouts whose margin fell below -allowance
  int hard_violations = 0;      // rollouts with any margin < 0
  int infeasible_steps = 0;
  double max_perturbation_l1 = 0.0;
  double e_sdot = 0.0;
};

// Learned field s_dot = A s + a; the true field adds a held perturbation eps
// with |eps|_1 <= E_sdot, chosen either at random or against the barrier
// gradient. The filter sees the learned model and E_sdot; the true system is
// integrated with substeps so margins are checked between samples too.
inline InvarianceSummary invariance_suite(std::uint64_t seed, int rollouts, double gamma = 5.0, double dt = 0.1) {
  constexpr int kSub = 10;
  constexpr int kSteps = 60;
  const double e_sdot = 0.02;
  const double a_max = 0.15;
  Mat a_mat(3, 3);
  a_mat << -0.05, 0.02, 0.0, -0.02, -0.05, 0.01, 0.0, 0.0, -0.03;
  const dynamics::LinearAffineModel learned(a_mat, Mat::Identity(3, 3));
  const double a_norm = a_mat.operatorNorm();

  Vec center(3);
  center << 0.15, 0.0, 0.0;
  const double radius = 0.05;
  auto zone = std::make_shared<barriers::SphereZone>(center, radius);
  Vec goal(3);
  goal << 0.3, 0.0, 0.0;

  // Demonstration cloud covering the workspace keeps the behavioral barrier satisfied.
  std::vector<Vec> cloud;
  for (int i = -2; i <= 8; ++i)
    for (int j = -4; j <= 4; ++j)
      for (int k = -4; k <= 4; ++k) cloud.push_back((Vec(3) << 0.05 * i, 0.05 * j, 0.05 * k).finished());
  auto task = std::make_shared<barriers::TaskSpaceBarrier>(cloud, 0.5);

  shield::ShieldConfig cfg;
  cfg.gamma = gamma;
  cfg.constraints.push_back({zone, shield::ModelBinding::FullState, std::nullopt, "zone"});
  cfg.constraints.push_back({task, shield::ModelBinding::FullState, std::nullopt, "task_space"});
  cfg.lb = Vec::Constant(3, -a_max);
  cfg.ub = Vec::Constant(3, a_max);
  shield::ShieldBounds bounds{dynamics::UncertaintyBounds::zero(3), dynamics::UncertaintyBounds::zero(3)};
  bounds.full.e_sdot = e_sdot;
  const shield::ShieldModels models{&learned, nullptr};

  InvarianceSummary out;
  out.e_sdot = e_sdot;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n01;
  for (int r = 0; r < rollouts; ++r) {
    const bool adversarial = r % 2 == 0;
    Vec s(3);
    do {
      s << 0.1 * u(rng) - 0.05, 0.04 * n01(rng), 0.04 * n01(rng);
    } while (zone->evaluate(s).value <= 0.0);

    double min_b = zone->hard_value(s);
    double curvature = 0.0;
    for (int t = 0; t < kSteps; ++t) {
      const Vec a_des = (2.0 * (goal - s)).cwiseMax(-a_max).cwiseMin(a_max);
      const shield::FilterReport rep = shield::filter(a_des, s, cfg, models, bounds);
      out.infeasible_steps += rep.status == shield::FilterStatus::Ok ? 0 : 1;

      Vec eps(3);
      if (adversarial) {
        // Spend the whole L1 budget on the coordinate that lowers b fastest.
        const Vec grad = zone->evaluate(s).gradient;
        Eigen::Index j = 0;
        grad.cwiseAbs().maxCoeff(&j);
        eps.setZero();
        eps(j) = grad(j) > 0.0 ? -e_sdot : e_sdot;
      } else {
        for (int i = 0; i < 3; ++i) eps(i) = n01(rng);
        eps *= e_sdot * u(rng) / eps.lpNorm<1>();
      }
      out.max_perturbation_l1 = std::max(out.max_perturbation_l1, eps.lpNorm<1>());
      const dynamics::LinearAffineModel truth(a_mat, Mat::Identity(3, 3), eps);

      for (int k = 0; k < kSub; ++k) {
        const Vec v = truth.eval_field(s, rep.a_safe);
        // |b_ddot| <= 2|v|^2 + 2|x - c| |A| |v| with the perturbation held over the step.
        curvature = std::max(curvature, 2.0 * v.squaredNorm() + 2.0 * (s - center).norm() * a_norm * v.norm());
        s = dynamics::step(truth, s, rep.a_safe, dt / kSub);
        min_b = std::min(min_b, zone->hard_value(s));
      }
    }
    const double allowance = shield::discretization_allowance(curvature, dt, gamma);
    out.max_allowance = std::max(out.max_allowance, allowance);
    out.min_allowance = std::min(out.min_allowance, allowance);
    out.min_margin = std::min(out.min_margin, min_b);
    out.beyond_allowance += min_b < -allowance ? 1 : 0;
    out.hard_violations += min_b < 0.0 ? 1 : 0;
    ++out.rollouts;
  }
  return out;
}

}  // namespace ssp::testing

#include "ssp/shield/shield.hpp"

#include "shield_suites.hpp"

#include "doctest.h"

#include <cmath>

using namespace ssp;
using namespace ssp::shield;

namespace {

Vec v3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

// b(y) = y on a 1-D state.
class LinearBarrier final : public barriers::Barrier {
 public:
  int dim() const override { return 1; }
  barriers::BarrierEval evaluate(const Vec& x) const override { return {x(0), Vec::Ones(1), false, -1}; }
  std::string kind() const override { return "linear"; }
  nlohmann::json to_json() const override { return {{"type", "linear"}}; }
};

const dynamics::LinearAffineModel& integrator3() {
  static const dynamics::LinearAffineModel m = dynamics::LinearAffineModel::integrator(3);
  return m;
}

ShieldConfig unit_sphere_config(double gamma) {
  ShieldConfig cfg;
  cfg.gamma = gamma;
  cfg.constraints.push_back(
      {std::make_shared<barriers::SphereZone>(Vec::Zero(3), 1.0), ModelBinding::FullState, std::nullopt, "sphere"});
  return cfg;
}

ShieldBounds zero_bounds(int n) { return {dynamics::UncertaintyBounds::zero(n), dynamics::UncertaintyBounds::zero(n)}; }

}  // namespace

TEST_CASE("CBF row from analytic Lie derivatives") {
  const barriers::SphereZone zone(Vec::Zero(3), 1.0);
  const dynamics::UncertaintyBounds none = dynamics::UncertaintyBounds::zero(3);
  const ConstraintRow row = build_constraint(zone, integrator3(), v3(2, 0, 0), none, 1.0);
  CHECK((row.g - v3(-4, 0, 0)).norm() < 1e-15);
  CHECK(row.h == doctest::Approx(3.0));

  dynamics::UncertaintyBounds e = none;
  e.e_sdot = 0.1;
  const ConstraintRow robust = build_constraint(zone, integrator3(), v3(2, 0, 0), e, 1.0);
  CHECK(row.h - robust.h == doctest::Approx(4.0 * 0.1));
  CHECK(build_constraint(zone, integrator3(), v3(2, 0, 0), e, 1.0, false).h == row.h);

  dynamics::UncertaintyBounds per = e;
  per.per_dim_sdot = v3(0.01, 0.05, 0.1);
  const ConstraintRow pd = build_constraint(zone, integrator3(), v3(2, 1, 0), per, 1.0, true, RobustNorm::PerDimension);
  const ConstraintRow plain = build_constraint(zone, integrator3(), v3(2, 1, 0), none, 1.0);
  CHECK(plain.h - pd.h == doctest::Approx(4.0 * 0.01 + 2.0 * 0.05));
}

TEST_CASE("far from the zone a = 0 is admissible") {
  const barriers::SphereZone zone(Vec::Zero(3), 0.1);
  Mat a = -0.2 * Mat::Identity(3, 3);
  const dynamics::LinearAffineModel m(a, Mat::Identity(3, 3));
  dynamics::UncertaintyBounds e = dynamics::UncertaintyBounds::zero(3);
  e.e_sdot = 0.05;
  CHECK(build_constraint(zone, m, v3(3, 1, 0), e, 10.0).h >= 0.0);
}

TEST_CASE("state box points") {
  CHECK(state_box_points(v3(1, 2, 3), 0.0).size() == 1);
  const auto pts = state_box_points(v3(1, 2, 3), 0.1);
  REQUIRE(pts.size() == 9);
  CHECK((pts[0] - v3(1, 2, 3)).norm() == 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK((pts[i] - v3(1, 2, 3)).lpNorm<Eigen::Infinity>() == doctest::Approx(0.1));

  const Vec s8 = Vec::Zero(8);
  const auto capped = state_box_points(s8, 0.1, 64);
  CHECK(capped.size() == 65);
  std::vector<Vec> seen(capped.begin() + 1, capped.end());
  for (std::size_t i = 0; i < seen.size(); ++i)
    for (std::size_t j = i + 1; j < seen.size(); ++j) CHECK((seen[i] - seen[j]).norm() > 0.0);
  CHECK(state_box_points(s8, 0.1, 64).back() == capped.back());
}

TEST_CASE("degenerate box gives the single row at s") {
  const barriers::SphereZone zone(Vec::Zero(3), 1.0);
  const auto none = dynamics::UncertaintyBounds::zero(3);
  const auto rows = robustify_over_state_box(zone, integrator3(), v3(2, 0.5, 0), none, 2.0);
  REQUIRE(rows.size() == 1);
  const ConstraintRow direct = build_constraint(zone, integrator3(), v3(2, 0.5, 0), none, 2.0);
  CHECK(rows[0].g == direct.g);
  CHECK(rows[0].h == direct.h);
}

TEST_CASE("monotone barrier binds at the lower box corner") {
  const LinearBarrier b;
  const auto m = dynamics::LinearAffineModel::integrator(1);
  dynamics::UncertaintyBounds e = dynamics::UncertaintyBounds::zero(1);
  e.e_s = 0.2;
  const auto rows = robustify_over_state_box(b, m, Vec::Constant(1, 1.0), e, 1.0);
  REQUIRE(rows.size() == 3);
  double min_h = 1e300;
  for (const auto& r : rows) min_h = std::min(min_h, r.h);
  CHECK(min_h == doctest::Approx(0.8));
}

TEST_CASE("more box vertices never enlarge the feasible set") {
  const barriers::SphereZone zone(v3(0.2, 0.1, 0), 0.1);
  Mat a = Mat::Zero(3, 3);
  a(0, 1) = 0.3;
  const dynamics::LinearAffineModel m(a, Mat::Identity(3, 3));
  dynamics::UncertaintyBounds e = dynamics::UncertaintyBounds::zero(3);
  e.e_s = 0.02;
  e.e_sdot = 0.01;
  const Vec s = v3(0.0, 0.05, 0.0);
  const auto few = robustify_over_state_box(zone, m, s, e, 5.0, true, 2);
  const auto all = robustify_over_state_box(zone, m, s, e, 5.0, true, 64);
  CHECK(all.size() > few.size());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 2000; ++i) {
    const Vec act = v3(u(rng), u(rng), u(rng));
    auto ok = [&](const std::vector<ConstraintRow>& rows) {
      for (const auto& r : rows)
        if (r.g.dot(act) > r.h) return false;
      return true;
    };
    if (ok(all)) CHECK(ok(few));
  }
}

TEST_CASE("filter projects onto the single active row") {
  const ShieldConfig cfg = unit_sphere_config(1.0);
  const ShieldModels models{&integrator3(), nullptr};
  const FilterReport r = filter(v3(-1, 0, 0), v3(2, 0, 0), cfg, models, zero_bounds(3));
  CHECK((r.a_safe - v3(-0.75, 0, 0)).norm() < 1e-12);
  CHECK(r.intervened);
  CHECK(r.status == FilterStatus::Ok);
  CHECK(r.worst_margin == doctest::Approx(3.0));
  REQUIRE(r.margins.size() == 1);

  const FilterReport idle = filter(v3(0.5, 0, 0), v3(2, 0, 0), cfg, models, zero_bounds(3));
  CHECK(idle.a_safe == v3(0.5, 0, 0));
  CHECK_FALSE(idle.intervened);
}

TEST_CASE("filter minimality suite") {
  const testing::MinimalitySummary s = testing::filter_minimality_suite(17, 50);
  CHECK(s.active_cases == 50);
  CHECK(s.inactive_cases == 50);
  CHECK(s.max_projection_error < 1e-8);
  CHECK(s.inactive_changed == 0);
  CHECK(s.intervened_flag_errors == 0);
}

TEST_CASE("position rows act on the leading action entries") {
  ShieldConfig cfg;
  cfg.gamma = 1.0;
  cfg.constraints.push_back({std::make_shared<barriers::SphereZone>(Vec::Zero(3), 1.0), ModelBinding::PositionSubstate,
                             std::nullopt, "sphere"});
  const auto full = dynamics::LinearAffineModel::integrator(4);
  const ShieldModels models{&full, &integrator3()};
  Vec s(4), a_des(4);
  s << 2, 0, 0, 0.3;
  a_des << -1, 0, 0, 0.7;
  const qp::QpProblem pb = filter_problem(a_des, s, cfg, models, zero_bounds(4));
  REQUIRE(pb.rows() == 1);
  CHECK(pb.G(0, 0) == doctest::Approx(-4.0));
  CHECK(pb.G(0, 3) == 0.0);
  ShieldBounds b = zero_bounds(4);
  b.position = dynamics::UncertaintyBounds::zero(3);
  const FilterReport r = filter(a_des, s, cfg, models, b);
  CHECK(r.a_safe(0) == doctest::Approx(-0.75));
  CHECK(r.a_safe(3) == 0.7);

  cfg.lb = Vec::Constant(4, -0.5);
  cfg.ub = Vec::Constant(4, 0.5);
  CHECK_THROWS_AS(filter_problem(a_des, s, cfg, models, b), std::invalid_argument);
  const ShieldModels no_position{&full, nullptr};
  cfg.lb.resize(0);
  cfg.ub.resize(0);
  CHECK_THROWS_AS(filter_problem(a_des, s, cfg, no_position, b), std::invalid_argument);
}

TEST_CASE("larger error bounds shrink the admissible set") {
  const ShieldConfig cfg = unit_sphere_config(1.0);
  const ShieldModels models{&integrator3(), nullptr};
  double prev = 0.0;
  for (double e : {0.0, 0.05, 0.1, 0.2, 0.4}) {
    ShieldBounds b = zero_bounds(3);
    b.full.e_sdot = e;
    b.full.e_s = 0.5 * e;
    const FilterReport r = filter(v3(-1, 0.2, 0), v3(1.8, 0.3, 0), cfg, models, b);
    const double moved = (r.a_safe - v3(-1, 0.2, 0)).norm();
    CHECK(moved >= prev - 1e-12);
    prev = moved;
  }
}

TEST_CASE("infeasible filter rows are reported") {
  ShieldConfig cfg = unit_sphere_config(1.0);
  cfg.lb = Vec::Constant(3, -0.05);
  cfg.ub = Vec::Constant(3, 0.05);
  const ShieldModels models{&integrator3(), nullptr};
  ShieldBounds b = zero_bounds(3);
  b.full.e_sdot = 5.0;
  const FilterReport r = filter(Vec::Zero(3), v3(1.01, 0, 0), cfg, models, b);
  CHECK(r.status == FilterStatus::FilterInfeasible);
  CHECK(r.slack_used > 1e-6);
  CHECK((r.a_safe.array().abs() <= 0.05 + 1e-12).all());
}

TEST_CASE("invariance check") {
  auto zone = std::make_shared<barriers::SphereZone>(v3(0.5, 0, 0), 0.1);
  std::vector<StateVector> outside{v3(0, 1, 0), v3(0.5, 1, 0), v3(1, 1, 0)};
  const InvarianceReport a = check_invariance(outside, {zone});
  CHECK_FALSE(a.violation);
  for (double m : a.margins) CHECK(m > 0.0);

  std::vector<StateVector> through;
  for (int i = 0; i <= 100; ++i) through.push_back(v3(0.01 * i, 0, 0));
  const InvarianceReport b = check_invariance(through, {zone});
  CHECK(b.violation);
  CHECK(b.min_margin == doctest::Approx(-0.01));
  CHECK(b.argmin == 50);
}

TEST_CASE("discretization allowance") {
  CHECK(discretization_allowance(2.0, 0.1, 5.0) == doctest::Approx(0.02));
  CHECK_THROWS_AS(discretization_allowance(1.0, 0.1, 20.0), std::invalid_argument);
  CHECK_THROWS_AS(discretization_allowance(-1.0, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("bounded perturbations stay within the allowance") {
  const testing::InvarianceSummary t = testing::invariance_suite(5, 20);
  CHECK(t.rollouts == 20);
  CHECK(t.max_perturbation_l1 <= t.e_sdot + 1e-15);
  CHECK(t.beyond_allowance == 0);
  CHECK(t.infeasible_steps == 0);
}

TEST_CASE("config validation") {
  ShieldConfig cfg;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = unit_sphere_config(0.0);
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = unit_sphere_config(1.0);
  cfg.constraints[0].gamma = -1.0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

#include "ssp/barriers/barriers.hpp"
#include "ssp/barriers/kdtree.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

using namespace ssp;
using namespace ssp::barriers;

namespace {

Vec v3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

Vec fd_gradient(const Barrier& b, const Vec& x, double eps = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec up = x, down = x;
    up(i) += eps;
    down(i) -= eps;
    g(i) = (b.evaluate(up).value - b.evaluate(down).value) / (2 * eps);
  }
  return g;
}

double rel_err(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(1e-8, std::max(a.norm(), b.norm())); }

}  // namespace

TEST_CASE("sphere value and gradient") {
  const SphereZone s(Vec::Zero(3), 1.0);
  const BarrierEval e = s.evaluate(v3(2, 0, 0));
  CHECK(e.value == doctest::Approx(3.0));
  CHECK((e.gradient - v3(4, 0, 0)).norm() < 1e-15);
  CHECK(std::abs(s.evaluate(v3(0, 0.6, 0.8)).value) < 1e-15);
}

TEST_CASE("sphere gradient matches finite differences") {
  const SphereZone s(v3(0.1, -0.2, 0.3), 0.4);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec x = v3(u(rng), u(rng), u(rng));
    worst = std::max(worst, (s.evaluate(x).gradient - fd_gradient(s, x)).lpNorm<Eigen::Infinity>());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("sphere sign is correct") {
  const SphereZone s(v3(0.5, 0.5, 0.5), 0.3);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const Vec x = v3(u(rng), u(rng), u(rng));
    CHECK(((s.evaluate(x).value > 0.0) == ((x - s.center()).norm() > 0.3)));
  }
}

TEST_CASE("smooth max is conservative") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (double tau : {1.0, 20.0, 200.0}) {
    for (int i = 0; i < 1000; ++i) {
      const double a = u(rng), b = u(rng);
      const double m = smooth_max(a, b, tau);
      CHECK(m <= std::max(a, b));
      CHECK(m >= std::max(a, b) - std::log(2.0) / tau - 1e-12);
    }
  }
  CHECK(smooth_max(1e3, 1e3, 200.0) == doctest::Approx(1e3).epsilon(1e-14));
  CHECK(smooth_max(1e3, 0.0, 200.0) == doctest::Approx(1e3 - std::log(2.0) / 200.0).epsilon(1e-14));
}

TEST_CASE("cylinder components and smooth value") {
  const CylinderZone c(Vec::Zero(3), v3(0, 0, 1), 1.0, 2.0);
  const double slack = std::log(2.0) / c.tau();
  auto check = [&](const Vec& x, double radial, double vertical) {
    const CylinderComponents k = c.components(x);
    CHECK(k.radial == doctest::Approx(radial));
    CHECK(k.vertical == doctest::Approx(vertical));
    const double hard = std::max(radial, vertical);
    CHECK(c.hard_value(x) == doctest::Approx(hard));
    const double b = c.evaluate(x).value;
    CHECK(b <= hard + 1e-15);
    CHECK(b >= hard - slack - 1e-15);
  };
  check(v3(2, 0, 0), 1.0, -1.0);
  check(v3(0, 0, 3), -1.0, 2.0);
  check(v3(0.5, 0, 0), -0.5, -1.0);
  CHECK(c.evaluate(v3(0.5, 0, 0)).value < 0.0);
}

TEST_CASE("cylinder gradient matches finite differences off the axis") {
  Vec axis = v3(1, 2, 2) / 3.0;
  const CylinderZone c(v3(0.1, 0.0, -0.1), axis, 0.3, 0.8, 20.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  int checked = 0;
  for (int i = 0; i < 200; ++i) {
    const Vec x = v3(u(rng), u(rng), u(rng));
    const Vec w = x - c.point();
    if ((w - w.dot(axis) * axis).norm() < 1e-3 || std::abs(w.dot(axis)) < 1e-3) continue;
    const BarrierEval e = c.evaluate(x);
    CHECK_FALSE(e.singular);
    worst = std::max(worst, rel_err(e.gradient, fd_gradient(c, x)));
    ++checked;
  }
  CHECK(checked > 150);
  CHECK(worst < 1e-5);
}

TEST_CASE("cylinder on the axis is flagged and finite") {
  const CylinderZone c(Vec::Zero(3), v3(0, 0, 1), 1.0, 2.0);
  const BarrierEval e = c.evaluate(v3(0, 0, 0.2));
  CHECK(e.singular);
  CHECK(e.gradient.allFinite());
  CHECK_THROWS_AS(CylinderZone(Vec::Zero(3), v3(0, 0, 2), 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("task-space barrier") {
  std::vector<Vec> demos{v3(0, 0, 0), v3(1, 0, 0), v3(0, 1, 0)};
  const TaskSpaceBarrier t(demos, 0.5);
  const BarrierEval at_demo = t.evaluate(v3(1, 0, 0));
  CHECK(at_demo.value == doctest::Approx(0.25));
  CHECK(at_demo.nearest == 1);
  CHECK(std::abs(t.evaluate(v3(1.5, 0, 0)).value) < 1e-15);

  // Equidistant from demos 0 and 1: the lower index wins.
  CHECK(t.evaluate(v3(0.5, -0.3, 0)).nearest == 0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.4, 1.4);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec x = v3(u(rng), u(rng), u(rng));
    const BarrierEval e = t.evaluate(x);
    CHECK((e.gradient + 2.0 * (x - demos[static_cast<std::size_t>(e.nearest)])).norm() < 1e-15);
    // Away from Voronoi boundaries the fixed-neighbour gradient is the true gradient.
    std::vector<double> d;
    for (const auto& p : demos) d.push_back((x - p).norm());
    std::sort(d.begin(), d.end());
    if (d[1] - d[0] > 1e-3) worst = std::max(worst, rel_err(e.gradient, fd_gradient(t, x)));
  }
  CHECK(worst < 1e-5);

  CHECK_THROWS_AS(TaskSpaceBarrier({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(TaskSpaceBarrier(demos, 0.0), std::invalid_argument);
}

TEST_CASE("kd-tree matches a linear scan") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;
  std::vector<Vec> pts;
  for (int i = 0; i < 500; ++i) {
    Vec p(4);
    for (int k = 0; k < 4; ++k) p(k) = std::round(4.0 * n01(rng)) / 4.0;  // lattice points force ties
    pts.push_back(p);
  }
  const KdTree tree(pts, 4);
  for (int q = 0; q < 1000; ++q) {
    Vec x(4);
    for (int k = 0; k < 4; ++k) x(k) = (q % 3 == 0) ? std::round(4.0 * n01(rng)) / 4.0 : n01(rng);
    const auto ref = linear_scan_k_nearest(pts, x, 5);
    const auto got = tree.k_nearest(x, 5);
    REQUIRE(got.size() == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(got[static_cast<std::size_t>(i)].index == ref[static_cast<std::size_t>(i)].index);
      CHECK(got[static_cast<std::size_t>(i)].distance_sq == ref[static_cast<std::size_t>(i)].distance_sq);
    }
    CHECK(tree.nearest(x).index == ref[0].index);
  }
}

TEST_CASE("zones parse from JSON") {
  const auto s = zone_from_json({{"type", "sphere"}, {"center", {0.1, 0.2, 0.3}}, {"radius", 0.05}});
  CHECK(s->kind() == "sphere");
  CHECK(s->evaluate(v3(0.1, 0.2, 0.3)).value == doctest::Approx(-0.0025));
  const auto c = zone_from_json(
      {{"type", "cylinder"}, {"point", {0, 0, 0}}, {"axis", {0, 0, 1}}, {"radius", 1.0}, {"length", 2.0}});
  CHECK(dynamic_cast<const CylinderZone&>(*c).tau() == 200.0);
  CHECK(zone_from_json(c->to_json())->hard_value(v3(2, 0, 0)) == doctest::Approx(1.0));
  CHECK_THROWS(zone_from_json({{"type", "cube"}}));
  CHECK_THROWS(zone_from_json({{"type", "sphere"}, {"center", {0, 0}}, {"radius", -1.0}}));
}

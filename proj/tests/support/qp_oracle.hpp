#pragma once

#include "ssp/qp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ssp::testing {

// Random strictly feasible instance in the box [-1, 1]^m with k rows.
inline qp::QpProblem random_feasible_qp(std::mt19937_64& rng, int m, int k) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  std::uniform_real_distribution<double> margin(0.05, 0.5);
  qp::QpProblem pb;
  Mat r(m, m);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = n01(rng);
  pb.P = r * r.transpose() + 0.2 * Mat::Identity(m, m);
  pb.q = Vec(m);
  for (int i = 0; i < m; ++i) pb.q(i) = 2.0 * n01(rng);
  Vec interior(m);
  for (int i = 0; i < m; ++i) interior(i) = u(rng);
  pb.G = Mat(k, m);
  pb.h = Vec(k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < m; ++i) pb.G(j, i) = n01(rng);
    pb.h(j) = pb.G.row(j).dot(interior) + margin(rng);
  }
  pb.lb = Vec::Constant(m, -1.0);
  pb.ub = Vec::Constant(m, 1.0);
  return pb;
}

inline double qp_objective(const qp::QpProblem& pb, const Vec& x) { return 0.5 * x.dot(pb.P * x) + pb.q.dot(x); }

// Best feasible point of a uniform grid over the box, refined around the
// incumbent. Finite box required.
inline double grid_search_objective(const qp::QpProblem& pb, int points = 41, int levels = 24) {
  const int m = pb.dim();
  Vec lo = pb.lb, hi = pb.ub;
  double best = std::numeric_limits<double>::infinity();
  Vec best_x = Vec::Zero(m);
  std::vector<int> idx(static_cast<std::size_t>(m));
  Vec x(m), gx(pb.rows()), px(m);
  for (int level = 0; level < levels; ++level) {
    const Vec step = (hi - lo) / (points - 1);
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      for (int i = 0; i < m; ++i) x(i) = lo(i) + step(i) * idx[static_cast<std::size_t>(i)];
      gx.noalias() = pb.G * x;
      if ((gx.array() <= pb.h.array()).all()) {
        px.noalias() = pb.P * x;
        const double f = 0.5 * x.dot(px) + pb.q.dot(x);
        if (f < best) {
          best = f;
          best_x = x;
        }
      }
      int d = 0;
      while (d < m && ++idx[static_cast<std::size_t>(d)] == points) idx[static_cast<std::size_t>(d++)] = 0;
      if (d == m) break;
    }
    // Halve the window around the incumbent.
    const Vec half = 0.25 * (hi - lo);
    lo = (best_x - half).cwiseMax(pb.lb);
    hi = (best_x + half).cwiseMin(pb.ub);
  }
  return best;
}

}  // namespace ssp::testing

namespace ssp::testing {

// Exact minimum by enumerating every candidate active set of at most dim()
// rows (general rows and finite box bounds), keeping feasible stationary points.
inline double enumeration_objective(const qp::QpProblem& pb) {
  const int m = pb.dim();
  std::vector<Vec> a_rows;
  std::vector<double> rhs;
  for (int i = 0; i < pb.rows(); ++i) {
    a_rows.push_back(pb.G.row(i).transpose());
    rhs.push_back(pb.h(i));
  }
  for (int j = 0; j < m; ++j) {
    if (pb.ub.size() > 0 && std::isfinite(pb.ub(j))) {
      a_rows.push_back(Vec::Unit(m, j));
      rhs.push_back(pb.ub(j));
    }
    if (pb.lb.size() > 0 && std::isfinite(pb.lb(j))) {
      a_rows.push_back(-Vec::Unit(m, j));
      rhs.push_back(-pb.lb(j));
    }
  }
  const int n = static_cast<int>(a_rows.size());
  auto feasible = [&](const Vec& x) {
    for (int i = 0; i < n; ++i) {
      if (a_rows[static_cast<std::size_t>(i)].dot(x) > rhs[static_cast<std::size_t>(i)] + 1e-9) return false;
    }
    return true;
  };
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> subset;
  auto visit = [&](auto&& self, int start) -> void {
    const int k = static_cast<int>(subset.size());
    Mat kkt = Mat::Zero(m + k, m + k);
    Vec b = Vec::Zero(m + k);
    kkt.topLeftCorner(m, m) = pb.P;
    b.head(m) = -pb.q;
    for (int j = 0; j < k; ++j) {
      const auto r = static_cast<std::size_t>(subset[static_cast<std::size_t>(j)]);
      kkt.block(0, m + j, m, 1) = a_rows[r];
      kkt.block(m + j, 0, 1, m) = a_rows[r].transpose();
      b(m + j) = rhs[r];
    }
    Eigen::FullPivLU<Mat> lu(kkt);
    if (lu.isInvertible()) {
      const Vec x = lu.solve(b).head(m);
      if (feasible(x)) best = std::min(best, qp_objective(pb, x));
    }
    if (k == m) return;
    for (int i = start; i < n; ++i) {
      subset.push_back(i);
      self(self, i + 1);
      subset.pop_back();
    }
  };
  visit(visit, 0);
  return best;
}

}  // namespace ssp::testing

#include "ssp/qp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssp::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDuplicateTol = 1e-12;

enum class RowKind { General, Lower, Upper };

// n'x >= b
struct Row {
  Vec n;
  double b = 0.0;
  double norm = 0.0;
  RowKind kind = RowKind::General;
  int index = 0;
};

std::vector<Row> standard_rows(const QpProblem& pb) {
  std::vector<Row> rows;
  const int m = pb.dim();
  for (int i = 0; i < pb.rows(); ++i) {
    Vec n = -pb.G.row(i).transpose();
    const double b = -pb.h(i);
    const bool duplicate = std::any_of(rows.begin(), rows.end(), [&](const Row& r) {
      return (r.n - n).lpNorm<Eigen::Infinity>() <= kDuplicateTol && std::abs(r.b - b) <= kDuplicateTol;
    });
    if (duplicate) continue;
    rows.push_back(Row{n, b, n.norm(), RowKind::General, i});
  }
  for (int j = 0; j < pb.lb.size(); ++j) {
    if (!std::isfinite(pb.lb(j))) continue;
    Vec n = Vec::Zero(m);
    n(j) = 1.0;
    rows.push_back(Row{n, pb.lb(j), 1.0, RowKind::Lower, j});
  }
  for (int j = 0; j < pb.ub.size(); ++j) {
    if (!std::isfinite(pb.ub(j))) continue;
    Vec n = Vec::Zero(m);
    n(j) = -1.0;
    rows.push_back(Row{n, -pb.ub(j), 1.0, RowKind::Upper, j});
  }
  return rows;
}

double objective(const QpProblem& pb, const Vec& x) { return 0.5 * x.dot(pb.P * x) + pb.q.dot(x); }

void fill_report(const QpProblem& pb, const std::vector<Row>& rows, const std::vector<int>& active,
                 const std::vector<double>& u, QpSolution& sol) {
  const int m = pb.dim();
  sol.multipliers = Vec::Zero(pb.rows());
  sol.lower_multipliers = Vec::Zero(pb.lb.size() > 0 ? m : 0);
  sol.upper_multipliers = Vec::Zero(pb.ub.size() > 0 ? m : 0);
  sol.active_set.clear();
  sol.active_lower.clear();
  sol.active_upper.clear();
  for (std::size_t k = 0; k < active.size(); ++k) {
    const Row& r = rows[static_cast<std::size_t>(active[k])];
    switch (r.kind) {
      case RowKind::General:
        sol.multipliers(r.index) = u[k];
        sol.active_set.push_back(r.index);
        break;
      case RowKind::Lower:
        sol.lower_multipliers(r.index) = u[k];
        sol.active_lower.push_back(r.index);
        break;
      case RowKind::Upper:
        sol.upper_multipliers(r.index) = u[k];
        sol.active_upper.push_back(r.index);
        break;
    }
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());
  std::sort(sol.active_lower.begin(), sol.active_lower.end());
  std::sort(sol.active_upper.begin(), sol.active_upper.end());
  sol.objective = objective(pb, sol.x);
}

}  // namespace

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIter: return "max_iter";
  }
  return "unknown";
}

double KktResidual::max() const { return std::max({stationarity, primal, dual, complementarity}); }

void validate(const QpProblem& pb) {
  const Eigen::Index m = pb.q.size();
  if (m == 0) throw DimensionError("qp: empty decision vector");
  require_dims("qp P rows", pb.P.rows(), m);
  require_dims("qp P cols", pb.P.cols(), m);
  if (pb.G.rows() > 0 || pb.G.cols() > 0) require_dims("qp G cols", pb.G.cols(), m);
  require_dims("qp h", pb.h.size(), pb.G.rows());
  if (pb.lb.size() > 0) require_dims("qp lb", pb.lb.size(), m);
  if (pb.ub.size() > 0) require_dims("qp ub", pb.ub.size(), m);
  if (!pb.P.allFinite() || !pb.q.allFinite() || !pb.G.allFinite() || !pb.h.allFinite()) {
    throw std::invalid_argument("qp: non-finite problem data");
  }
  if ((pb.P - pb.P.transpose()).lpNorm<Eigen::Infinity>() > 1e-10) {
    throw std::invalid_argument("qp: P is not symmetric");
  }
  if (pb.lb.size() > 0 && pb.ub.size() > 0 && (pb.lb.array() > pb.ub.array()).any()) {
    throw std::invalid_argument("qp: lb > ub");
  }
}

QpSolution solve(const QpProblem& pb) {
  validate(pb);
  const int m = pb.dim();
  Eigen::LLT<Mat> llt(pb.P);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("qp: P is not positive definite");
  const Mat l_inv = llt.matrixL().solve(Mat::Identity(m, m));

  const std::vector<Row> rows = standard_rows(pb);
  QpSolution sol;
  sol.x = llt.solve(-pb.q);

  for (const Row& r : rows) {
    if (r.norm == 0.0 && r.b > kDuplicateTol) {
      sol.status = QpStatus::Infeasible;
      fill_report(pb, rows, {}, {}, sol);
      return sol;
    }
  }

  std::vector<int> active;
  std::vector<double> u;
  std::vector<char> is_active(rows.size(), 0);
  const int max_iter = 50 + 10 * (static_cast<int>(rows.size()) + m);

  auto drop = [&](std::size_t k) {
    is_active[static_cast<std::size_t>(active[k])] = 0;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(k));
    u.erase(u.begin() + static_cast<std::ptrdiff_t>(k));
  };

  for (;;) {
    // Most violated constraint by normalized distance; strict '>' keeps the lowest index on ties.
    int p = -1;
    double worst = 0.0;
    const double x_scale = 1.0 + sol.x.lpNorm<Eigen::Infinity>();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (is_active[i] || rows[i].norm == 0.0) continue;
      const double v = (rows[i].b - rows[i].n.dot(sol.x)) / rows[i].norm;
      const double tol = 1e-12 * (x_scale + std::abs(rows[i].b) / rows[i].norm);
      if (v > tol && v > worst) {
        worst = v;
        p = static_cast<int>(i);
      }
    }
    if (p < 0) {
      sol.status = QpStatus::Optimal;
      break;
    }

    const Row& rp = rows[static_cast<std::size_t>(p)];
    double u_p = 0.0;
    bool added = false;
    while (!added) {
      if (++sol.iterations > max_iter) {
        sol.status = QpStatus::MaxIter;
        fill_report(pb, rows, active, u, sol);
        return sol;
      }
      const Vec d = l_inv * rp.n;
      Vec proj = d;
      Vec r;
      const auto k = static_cast<Eigen::Index>(active.size());
      if (k > 0) {
        Mat n_a(m, k);
        for (Eigen::Index j = 0; j < k; ++j) {
          n_a.col(j) = rows[static_cast<std::size_t>(active[static_cast<std::size_t>(j)])].n;
        }
        const Mat mk = l_inv * n_a;
        Eigen::HouseholderQR<Mat> qr(mk);
        const Mat q1 = qr.householderQ() * Mat::Identity(m, k);
        const Mat rk = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
        const Vec qd = q1.transpose() * d;
        proj = d - q1 * qd;
        r = rk.triangularView<Eigen::Upper>().solve(qd);
      }
      const bool dependent = proj.norm() <= 1e-12 * std::max(1.0, d.norm());
      const Vec z = dependent ? Vec::Zero(m) : Vec(l_inv.transpose() * proj);

      double t1 = kInf;
      std::size_t drop_k = 0;
      for (Eigen::Index j = 0; j < r.size(); ++j) {
        if (r(j) > 1e-14) {
          const double ratio = u[static_cast<std::size_t>(j)] / r(j);
          if (ratio < t1) {
            t1 = ratio;
            drop_k = static_cast<std::size_t>(j);
          }
        }
      }
      const double t2 = dependent ? kInf : (rp.b - rp.n.dot(sol.x)) / z.dot(rp.n);

      if (!std::isfinite(t1) && !std::isfinite(t2)) {
        sol.status = QpStatus::Infeasible;
        fill_report(pb, rows, active, u, sol);
        return sol;
      }
      const double t = std::min(t1, t2);
      sol.x += (std::isfinite(t2) ? t : 0.0) * z;
      for (Eigen::Index j = 0; j < r.size(); ++j) u[static_cast<std::size_t>(j)] -= t * r(j);
      u_p += t;
      if (t2 <= t1) {
        active.push_back(p);
        u.push_back(u_p);
        is_active[static_cast<std::size_t>(p)] = 1;
        added = true;
      } else {
        drop(drop_k);
      }
    }
  }
  fill_report(pb, rows, active, u, sol);
  return sol;
}

QpSolution solve_with_slack(const QpProblem& pb, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("solve_with_slack: rho must be positive");
  QpSolution direct = solve(pb);
  if (direct.status != QpStatus::Infeasible || pb.rows() == 0) return direct;

  const int m = pb.dim();
  QpProblem aug;
  aug.P = Mat::Zero(m + 1, m + 1);
  aug.P.topLeftCorner(m, m) = pb.P;
  aug.P(m, m) = 2.0 * rho;
  aug.q = Vec::Zero(m + 1);
  aug.q.head(m) = pb.q;
  aug.G = Mat::Zero(pb.rows(), m + 1);
  aug.G.leftCols(m) = pb.G;
  aug.G.col(m).setConstant(-1.0);
  aug.h = pb.h;
  aug.lb = Vec::Constant(m + 1, -kInf);
  aug.ub = Vec::Constant(m + 1, kInf);
  if (pb.lb.size() > 0) aug.lb.head(m) = pb.lb;
  if (pb.ub.size() > 0) aug.ub.head(m) = pb.ub;
  aug.lb(m) = 0.0;

  const QpSolution relaxed = solve(aug);
  QpSolution out;
  out.status = relaxed.status;
  out.iterations = direct.iterations + relaxed.iterations;
  out.x = relaxed.x.head(m);
  out.slack_used = std::max(0.0, relaxed.x(m));
  out.objective = objective(pb, out.x);
  out.active_set = relaxed.active_set;
  out.multipliers = relaxed.multipliers;
  out.lower_multipliers = pb.lb.size() > 0 ? Vec(relaxed.lower_multipliers.head(m)) : Vec();
  out.upper_multipliers = pb.ub.size() > 0 ? Vec(relaxed.upper_multipliers.head(m)) : Vec();
  for (int j : relaxed.active_lower) {
    if (j < m) out.active_lower.push_back(j);
  }
  for (int j : relaxed.active_upper) {
    if (j < m) out.active_upper.push_back(j);
  }
  return out;
}

KktResidual kkt_residual(const QpProblem& pb, const QpSolution& sol) {
  KktResidual res;
  const int m = pb.dim();
  Vec grad = pb.P * sol.x + pb.q;
  if (pb.rows() > 0) {
    const Vec slackness = pb.G * sol.x - pb.h;
    grad += pb.G.transpose() * sol.multipliers;
    for (int i = 0; i < pb.rows(); ++i) {
      res.primal = std::max(res.primal, slackness(i));
      res.dual = std::max(res.dual, -sol.multipliers(i));
      res.complementarity = std::max(res.complementarity, std::abs(sol.multipliers(i) * slackness(i)));
    }
  }
  for (int j = 0; j < m; ++j) {
    if (pb.lb.size() > 0) {
      const double mu = sol.lower_multipliers(j);
      grad(j) -= mu;
      res.dual = std::max(res.dual, -mu);
      if (std::isfinite(pb.lb(j))) {
        res.primal = std::max(res.primal, pb.lb(j) - sol.x(j));
        res.complementarity = std::max(res.complementarity, std::abs(mu * (sol.x(j) - pb.lb(j))));
      }
    }
    if (pb.ub.size() > 0) {
      const double mu = sol.upper_multipliers(j);
      grad(j) += mu;
      res.dual = std::max(res.dual, -mu);
      if (std::isfinite(pb.ub(j))) {
        res.primal = std::max(res.primal, sol.x(j) - pb.ub(j));
        res.complementarity = std::max(res.complementarity, std::abs(mu * (pb.ub(j) - sol.x(j))));
      }
    }
  }
  res.stationarity = grad.lpNorm<Eigen::Infinity>();
  return res;
}

namespace {

nlohmann::json mat_json(const Mat& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Infinite bounds are written as null.
nlohmann::json vec_json(const Vec& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      out.push_back(v(i));
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

Vec vec_from(const nlohmann::json& j, double null_value) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = j[i].is_null() ? null_value : j[i].get<double>();
  }
  return v;
}

Mat mat_from(const nlohmann::json& j, Eigen::Index cols) {
  Mat a(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    require_dims("qp json matrix row", static_cast<Eigen::Index>(j[i].size()), cols);
    for (std::size_t c = 0; c < j[i].size(); ++c) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return a;
}

}  // namespace

nlohmann::json to_json(const QpProblem& pb) {
  return {{"P", mat_json(pb.P)}, {"q", vec_json(pb.q)}, {"G", mat_json(pb.G)},
          {"h", vec_json(pb.h)}, {"lb", vec_json(pb.lb)}, {"ub", vec_json(pb.ub)}};
}

QpProblem problem_from_json(const nlohmann::json& j) {
  QpProblem pb;
  pb.q = vec_from(j.at("q"), 0.0);
  pb.P = mat_from(j.at("P"), pb.q.size());
  pb.G = mat_from(j.value("G", nlohmann::json::array()), pb.q.size());
  pb.h = vec_from(j.value("h", nlohmann::json::array()), 0.0);
  pb.lb = vec_from(j.value("lb", nlohmann::json::array()), -kInf);
  pb.ub = vec_from(j.value("ub", nlohmann::json::array()), kInf);
  validate(pb);
  return pb;
}

}  // namespace ssp::qp

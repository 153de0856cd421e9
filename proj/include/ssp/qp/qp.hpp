#pragma once

#include "ssp/linalg_ad/types.hpp"

#include "json.hpp"

#include <string_view>
#include <vector>

namespace ssp::qp {

// min 1/2 x'Px + q'x  s.t.  Gx <= h,  lb <= x <= ub.
// Empty lb/ub means no box; individual entries may be +-infinity.
struct QpProblem {
  Mat P;
  Vec q;
  Mat G;
  Vec h;
  Vec lb;
  Vec ub;

  int dim() const { return static_cast<int>(q.size()); }
  int rows() const { return static_cast<int>(G.rows()); }
};

enum class QpStatus { Optimal, Infeasible, MaxIter };

std::string_view to_string(QpStatus status);

struct QpSolution {
  Vec x;
  double objective = 0.0;
  QpStatus status = QpStatus::Infeasible;
  std::vector<int> active_set;    // rows of G active at x
  std::vector<int> active_lower;  // box coordinates at lb
  std::vector<int> active_upper;  // box coordinates at ub
  Vec multipliers;                // one per G row, >= 0
  Vec lower_multipliers;
  Vec upper_multipliers;
  double slack_used = 0.0;
  int iterations = 0;
};

struct KktResidual {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;  // magnitude of the most negative multiplier
  double complementarity = 0.0;

  double max() const;
};

// Throws DimensionError on inconsistent shapes and std::invalid_argument on
// non-finite data, an asymmetric P, or lb > ub.
void validate(const QpProblem& problem);

// Dual active-set method (Goldfarb-Idnani). P must be positive definite.
QpSolution solve(const QpProblem& problem);

// Returns solve() when feasible. Otherwise relaxes every G row by one shared
// slack xi >= 0 with penalty rho * xi^2; the box stays hard.
QpSolution solve_with_slack(const QpProblem& problem, double rho = 1e6);

KktResidual kkt_residual(const QpProblem& problem, const QpSolution& solution);

nlohmann::json to_json(const QpProblem& problem);
QpProblem problem_from_json(const nlohmann::json& j);

}  // namespace ssp::qp

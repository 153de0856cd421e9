#include "ssp/control/knn.hpp"

#include <cmath>

namespace ssp::control {

KnnExpertPolicy::KnnExpertPolicy(std::vector<StateVector> states, std::vector<ActionVector> actions,
                                 int neighbors)
    : actions_(std::move(actions)), neighbors_(neighbors) {
  if (states.empty()) throw std::invalid_argument("knn policy: empty dataset");
  if (states.size() != actions_.size()) throw DimensionError("knn policy: state/action count mismatch");
  if (neighbors_ < 1 || static_cast<std::size_t>(neighbors_) > states.size()) {
    throw std::invalid_argument("knn policy: neighbor count must be in [1, dataset size]");
  }
  for (const auto& a : actions_) require_dims("knn policy action", a.size(), actions_.front().size());
  tree_ = barriers::KdTree(std::move(states));
}

KnnExpertPolicy KnnExpertPolicy::from_dataset(const dynamics::Dataset& data, int neighbors) {
  std::vector<StateVector> states;
  std::vector<ActionVector> actions;
  for (const auto& d : data) {
    for (std::size_t t = 0; t < d.transitions(); ++t) {
      states.push_back(d.states[t]);
      actions.push_back(d.actions[t]);
    }
  }
  return KnnExpertPolicy(std::move(states), std::move(actions), neighbors);
}

KnnQuery KnnExpertPolicy::query(const StateVector& s) const {
  const auto nn = tree_.k_nearest(s, neighbors_);
  KnnQuery out;
  out.action = ActionVector::Zero(actions_.front().size());
  // Shifting by the nearest distance leaves the normalized weights unchanged.
  const double d0 = std::sqrt(nn.front().distance_sq);
  double total = 0.0;
  for (const auto& n : nn) {
    const double w = std::exp(-(std::sqrt(n.distance_sq) - d0));
    out.neighbors.push_back(n.index);
    out.weights.push_back(w);
    total += w;
  }
  for (std::size_t i = 0; i < nn.size(); ++i) {
    out.weights[i] /= total;
    out.action += out.weights[i] * actions_[static_cast<std::size_t>(nn[i].index)];
  }
  return out;
}

}  // namespace ssp::control

#pragma once

#include "ssp/barriers/kdtree.hpp"
#include "ssp/dynamics/demonstration.hpp"

#include <vector>

namespace ssp::control {

struct KnnQuery {
  ActionVector action;
  std::vector<int> neighbors;  // indices into the stored pairs, nearest first
  std::vector<double> weights;  // normalized exp(-|s - s_i|)
};

// a(s) = sum_i w_i a_i over the N nearest stored states.
class KnnExpertPolicy {
 public:
  KnnExpertPolicy(std::vector<StateVector> states, std::vector<ActionVector> actions, int neighbors = 5);
  // Every (s_t, a_t) pair of the dataset.
  static KnnExpertPolicy from_dataset(const dynamics::Dataset& data, int neighbors = 5);

  KnnQuery query(const StateVector& s) const;
  ActionVector act(const StateVector& s) const { return query(s).action; }

  int neighbors() const { return neighbors_; }
  std::size_t size() const { return actions_.size(); }
  const ActionVector& action(int i) const { return actions_[static_cast<std::size_t>(i)]; }

 private:
  barriers::KdTree tree_;
  std::vector<ActionVector> actions_;
  int neighbors_;
};

}  // namespace ssp::control

#pragma once

#include "ssp/linalg_ad/types.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace ssp::dynamics {

struct Demonstration {
  std::vector<StateVector> states;
  std::vector<ActionVector> actions;  // states.size() - 1 entries
  double dt = 0.1;

  std::size_t transitions() const { return actions.size(); }
};

using Dataset = std::vector<Demonstration>;

// Throws std::invalid_argument on NaN, ragged dimensions, or (when
// `max_speed` is given) a step with |ds|_inf > max_speed * dt + slack.
void validate(const Demonstration& demo, std::optional<double> max_speed = std::nullopt,
              double slack = 1e-6);
void validate(const Dataset& data, std::optional<double> max_speed = std::nullopt,
              double slack = 1e-6);

std::size_t total_transitions(const Dataset& data);

// First `position_dims` state entries and `linear_action_dims` action entries.
Dataset position_slice(const Dataset& data, int position_dims, int linear_action_dims);

// Deterministic split: the trailing `holdout_fraction` of trajectories is held out.
struct DatasetSplit {
  Dataset train;
  Dataset holdout;
};
DatasetSplit split_holdout(const Dataset& data, double holdout_fraction);

// JSON lines, one trajectory per line: {"dt":..,"states":[[..]],"actions":[[..]]}
void write_jsonl(const std::filesystem::path& path, const Dataset& data);
Dataset read_jsonl(const std::filesystem::path& path);

}  // namespace ssp::dynamics

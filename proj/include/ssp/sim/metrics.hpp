#pragma once

#include "ssp/sim/episode.hpp"

#include "json.hpp"

#include <optional>
#include <vector>

namespace ssp::sim {

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation across seed groups
  int count = 0;
};

struct MetricsSummary {
  Stat success_rate_with_violation;
  Stat success_rate_without_violation;
  Stat collision_rate;
  Stat inference_time_ms;
  std::optional<Stat> safe_margin;  // absent when no episode had a zone
  Stat tracking_dev;
  Stat sdot_error;
  Stat s_error;
  int episodes = 0;
  int groups = 0;
  int aborted = 0;
  int infeasible_steps = 0;

  nlohmann::json to_json() const;
};

// One inner vector per seed; rates are computed per group, then averaged.
MetricsSummary compute_metrics(const std::vector<std::vector<EpisodeResult>>& groups);

// Schema check of a summary JSON object; returns nothing or throws std::invalid_argument.
void validate_summary_json(const nlohmann::json& j);

}  // namespace ssp::sim

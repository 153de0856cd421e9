#pragma once

#include "ssp/control/clf.hpp"
#include "ssp/control/path.hpp"
#include "ssp/dynamics/train.hpp"
#include "ssp/shield/shield.hpp"
#include "ssp/sim/env.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssp::cli {

inline constexpr int kConfigVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingDependency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ThresholdFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PolicyKind { Clf, Knn, Scripted };

PolicyKind parse_policy(const std::string& name);
std::string to_string(PolicyKind kind);

struct PolicySettings {
  PolicyKind kind = PolicyKind::Clf;
  control::ClfConfig clf;
  int neighbors = 5;
  nlohmann::json path;  // null: straight segment from start to goal
  double path_spacing = 0.01;
};

struct ShieldSettings {
  bool enabled = true;
  double gamma = 10.0;
  std::optional<double> spatial_gamma;
  std::optional<double> behavioral_gamma;
  bool robust = true;
  shield::RobustNorm norm = shield::RobustNorm::LInf;
  int vertex_budget = 64;
  bool behavioral = true;
  double task_space_d = 0.5;
  bool online_uncertainty = false;
  double slack_penalty = 1e6;
};

struct RunSettings {
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int rollouts = 20;
  bool episode_logs = true;
};

struct SweepSettings {
  std::string param = "beta";
  std::vector<double> values{5, 10, 15, 20, 25};
};

struct ReportSettings {
  std::optional<double> max_collision_rate;
  std::optional<double> min_success_rate;
};

struct RunConfig {
  nlohmann::json raw;
  std::uint64_t seed = 7;
  sim::EnvConfig env;
  int demo_count = 100;
  double action_noise = 0.04;
  double max_expert_failure = 0.05;
  dynamics::NeuralOdeConfig model;
  dynamics::TrainConfig train;
  double holdout_fraction = 0.2;
  PolicySettings policy;
  ShieldSettings shield;
  RunSettings run;
  SweepSettings sweep;
  ReportSettings report;

  control::ReferencePath reference_path() const;
};

// The complete default document; every accepted key appears here.
nlohmann::json default_config_json();

// Overlays `overlay` onto `base`. Unknown keys and type mismatches raise
// ConfigError naming the JSON path. Arrays and free-form objects replace.
nlohmann::json merge_config(const nlohmann::json& base, const nlohmann::json& overlay);

// Structural and semantic checks; throws ConfigError.
RunConfig parse_config(const nlohmann::json& doc);

// default < file < SSP_SEED < overrides
RunConfig load_config(const std::optional<std::filesystem::path>& file, const nlohmann::json& overrides);

}  // namespace ssp::cli

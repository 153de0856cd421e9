#pragma once

#include "ssp/control/clf.hpp"
#include "ssp/control/knn.hpp"
#include "ssp/control/path.hpp"
#include "ssp/dynamics/demonstration.hpp"
#include "ssp/dynamics/uncertainty.hpp"
#include "ssp/shield/shield.hpp"
#include "ssp/sim/env.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ssp::sim {

struct EpisodeContext {
  int step = 0;
  bool object_latched = false;
};

class NominalPolicy {
 public:
  virtual ~NominalPolicy() = default;
  virtual void reset() {}
  virtual ActionVector act(const StateVector& obs, const EpisodeContext& ctx) = 0;
  virtual std::string name() const = 0;
  // Reference path of tracking policies, used for the deviation metric.
  virtual const control::ReferencePath* path() const { return nullptr; }
  virtual int waypoint_index() const { return -1; }
  // Path trackers report when the final waypoint has been passed.
  virtual bool terminal() const { return false; }
};

class ScriptedPolicy final : public NominalPolicy {
 public:
  explicit ScriptedPolicy(control::TaskSpec task) : task_(std::move(task)) {}
  ActionVector act(const StateVector& obs, const EpisodeContext& ctx) override;
  std::string name() const override { return "scripted"; }

 private:
  control::TaskSpec task_;
};

class KnnPolicy final : public NominalPolicy {
 public:
  explicit KnnPolicy(std::shared_ptr<const control::KnnExpertPolicy> expert) : expert_(std::move(expert)) {}
  ActionVector act(const StateVector& obs, const EpisodeContext& ctx) override;
  std::string name() const override { return "knn"; }

 private:
  std::shared_ptr<const control::KnnExpertPolicy> expert_;
};

// CLF tracker; the waypoint index is episode-local and never decreases.
class ClfPolicy final : public NominalPolicy {
 public:
  ClfPolicy(std::shared_ptr<const dynamics::ControlAffineModel> model, control::ReferencePath path,
            control::ClfConfig cfg);
  void reset() override {
    index_ = 0;
    terminal_ = false;
  }
  ActionVector act(const StateVector& obs, const EpisodeContext& ctx) override;
  std::string name() const override { return "clf"; }
  const control::ReferencePath* path() const override { return &path_; }
  int waypoint_index() const override { return index_; }
  bool terminal() const override { return terminal_; }

 private:
  std::shared_ptr<const dynamics::ControlAffineModel> model_;
  control::ReferencePath path_;
  control::ClfConfig cfg_;
  int index_ = 0;
  bool terminal_ = false;
};

struct ShieldStack {
  shield::ShieldConfig config;
  std::shared_ptr<const dynamics::ControlAffineModel> full;
  std::shared_ptr<const dynamics::ControlAffineModel> position;
  shield::ShieldBounds bounds;
  // Widen the bounds with a running max over transitions observed in the episode.
  bool online_uncertainty = false;
};

struct EpisodeOptions {
  // Learned model scored for the sdot/s error metrics; may be null.
  std::shared_ptr<const dynamics::ControlAffineModel> model;
  bool stop_on_success = true;
  bool keep_log = true;
};

struct StepLog {
  int t = 0;
  StateVector state;
  StateVector observation;
  ActionVector a_des;
  ActionVector a_safe;
  std::vector<double> margins;  // shield constraints, hard values
  double slack = 0.0;
  double solve_time_us = 0.0;
  bool intervened = false;
  int waypoint = -1;
};

struct EpisodeResult {
  bool success = false;
  bool collided = false;
  bool aborted = false;
  std::string abort_reason;
  double min_margin = 0.0;      // over the zones at the true state; +inf without zones
  double tracking_dev = 0.0;    // mean distance to the reference polyline
  int steps = 0;
  double wall_time = 0.0;       // seconds
  double inference_ms = 0.0;    // mean per-step policy + filter time
  int interventions = 0;
  int infeasible_steps = 0;
  int voronoi_switches = 0;     // nearest demo index changes of task-space constraints
  double max_step_excursion = 0.0;
  double sdot_error = 0.0;      // max L1 errors of the scored model over the episode
  double s_error = 0.0;
};

struct Episode {
  EpisodeResult result;
  std::vector<StepLog> log;
  std::vector<StateVector> trajectory;  // true states, including the start
};

Episode run_episode(NominalPolicy& policy, const ShieldStack* shield, const EnvConfig& env, std::uint64_t seed,
                    const EpisodeOptions& options = {});

void write_episode_csv(const std::filesystem::path& path, const Episode& episode);

struct DemoGeneration {
  dynamics::Dataset demos;
  int successes = 0;
};

// Scripted expert with Gaussian action noise; every trajectory runs the full horizon
// and stores observations with the applied (clamped) actions.
DemoGeneration generate_demos(const EnvConfig& env, int count, std::uint64_t seed, double action_noise = 0.04);

// Success predicate for the configured task at the true state.
bool task_success(const EnvConfig& env, const StateVector& s, bool object_latched);

}  // namespace ssp::sim

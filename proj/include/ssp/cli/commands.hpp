#pragma once

#include "ssp/cli/config.hpp"
#include "ssp/dynamics/model.hpp"
#include "ssp/sim/episode.hpp"
#include "ssp/sim/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>

namespace ssp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitMissing = 3;
inline constexpr int kExitThreshold = 4;

// File layout below --out.
struct Artifacts {
  std::filesystem::path out;

  std::filesystem::path demos() const { return out / "demos.jsonl"; }
  std::filesystem::path model() const { return out / "model.bin"; }
  std::filesystem::path position_model() const { return out / "model_position.bin"; }
  std::filesystem::path loss() const { return out / "loss.csv"; }
  std::filesystem::path position_loss() const { return out / "loss_position.csv"; }
  std::filesystem::path bounds() const { return out / "bounds.json"; }
  std::filesystem::path summary() const { return out / "summary.json"; }
  std::filesystem::path episodes() const { return out / "episodes"; }
  std::filesystem::path sweep(const std::string& param) const { return out / ("sweep_" + param + ".csv"); }
};

struct CommandContext {
  RunConfig config;
  Artifacts artifacts;
  std::ostream* log = nullptr;
};

struct TrainedModels {
  std::shared_ptr<const dynamics::NeuralOdeModel> full;
  std::shared_ptr<const dynamics::NeuralOdeModel> position;
};

// Throws MissingDependency naming the absent artifact.
dynamics::Dataset load_demos(const Artifacts& a);
TrainedModels load_models(const Artifacts& a);
shield::ShieldBounds load_bounds(const Artifacts& a);

dynamics::DatasetSplit split_demos(const RunConfig& cfg, const dynamics::Dataset& demos);

sim::ShieldStack make_shield_stack(const RunConfig& cfg, const TrainedModels& models,
                                   const shield::ShieldBounds& bounds, const dynamics::Dataset& train_demos);

std::unique_ptr<sim::NominalPolicy> make_policy(const RunConfig& cfg, const TrainedModels& models,
                                                const dynamics::Dataset& train_demos);

struct BatchResult {
  std::vector<std::vector<sim::EpisodeResult>> groups;
  sim::MetricsSummary summary;
};

// |seeds| groups of `rollouts` episodes; episode streams come from
// derive_seed(derive_seed(master, seed), i). Logs go to `log_dir` when set.
BatchResult run_batch(const RunConfig& cfg, sim::NominalPolicy& policy, const sim::ShieldStack* shield,
                      const TrainedModels& models, const std::filesystem::path* log_dir = nullptr);

int cmd_gen_demos(const CommandContext& ctx);
int cmd_train(const CommandContext& ctx);
int cmd_quantify(const CommandContext& ctx);
int cmd_run(const CommandContext& ctx);
int cmd_sweep(const CommandContext& ctx);
int cmd_report(const CommandContext& ctx);

// Parses argv, dispatches, and maps failures onto the exit codes above.
int run_cli(int argc, char** argv);

}  // namespace ssp::cli

#include "ssp/cli/commands.hpp"

#include "ssp/dynamics/train.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace ssp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ostream& out(const CommandContext& ctx) { return ctx.log ? *ctx.log : std::cout; }

void require_file(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) {
    throw MissingDependency("missing artifact " + p.string() + "; run `ssp " + producer + "` first");
  }
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << j.dump(2) << '\n';
}

json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  return json::parse(f);
}

// Upper bound on |s_{t+1} - s_t|_inf / dt for the validity check on recorded demos.
double plausible_speed(const sim::EnvConfig& env, const dynamics::Dataset& demos) {
  double reach = env.start.lpNorm<Eigen::Infinity>() + env.start_jitter;
  for (const auto& d : demos) {
    for (const auto& s : d.states) reach = std::max(reach, s.lpNorm<Eigen::Infinity>());
  }
  const double a_inf = env.a_max.maxCoeff();
  const double b_inf = env.B.cwiseAbs().rowwise().sum().maxCoeff();
  const double a_mat = env.A.cwiseAbs().rowwise().sum().maxCoeff();
  return b_inf * a_inf + a_mat * reach + env.w_max;
}

void check_thresholds(const CommandContext& ctx, const json& summary) {
  const ReportSettings& r = ctx.config.report;
  std::vector<std::string> failures;
  if (r.max_collision_rate) {
    const double v = summary["collision_rate"]["mean"].get<double>();
    if (v > *r.max_collision_rate) {
      failures.push_back("collision_rate " + std::to_string(v) + " > " + std::to_string(*r.max_collision_rate));
    }
  }
  if (r.min_success_rate) {
    const double v = summary["success_rate_without_violation"]["mean"].get<double>();
    if (v < *r.min_success_rate) {
      failures.push_back("success_rate_without_violation " + std::to_string(v) + " < " +
                         std::to_string(*r.min_success_rate));
    }
  }
  if (!failures.empty()) {
    std::string msg = "threshold failure:";
    for (const auto& f : failures) msg += " " + f + ";";
    throw ThresholdFailure(msg);
  }
}

std::string format_stat(const json& s, int precision) {
  if (s.is_null()) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << s["mean"].get<double>() << " +- " << s["std"].get<double>();
  return os.str();
}

void print_summary(std::ostream& os, const json& j) {
  os << "success w/ violation   " << format_stat(j["success_rate_with_violation"], 2) << '\n'
     << "success w/o violation  " << format_stat(j["success_rate_without_violation"], 2) << '\n'
     << "collision rate         " << format_stat(j["collision_rate"], 2) << '\n'
     << "inference time (ms)    " << format_stat(j["inference_time_ms"], 3) << '\n'
     << "safe margin            " << format_stat(j["safe_margin"], 6) << '\n'
     << "tracking deviation (m) " << format_stat(j["tracking_dev"], 6) << '\n';
}

}  // namespace

dynamics::Dataset load_demos(const Artifacts& a) {
  require_file(a.demos(), "gen-demos");
  return dynamics::read_jsonl(a.demos());
}

TrainedModels load_models(const Artifacts& a) {
  require_file(a.model(), "train");
  require_file(a.position_model(), "train");
  TrainedModels m;
  m.full = std::make_shared<dynamics::NeuralOdeModel>(dynamics::NeuralOdeModel::load(a.model()));
  m.position = std::make_shared<dynamics::NeuralOdeModel>(dynamics::NeuralOdeModel::load(a.position_model()));
  return m;
}

shield::ShieldBounds load_bounds(const Artifacts& a) {
  require_file(a.bounds(), "quantify");
  const json j = read_json(a.bounds());
  if (!j.contains("position")) throw std::runtime_error(a.bounds().string() + ": missing position bounds");
  return {dynamics::UncertaintyBounds::from_json(j), dynamics::UncertaintyBounds::from_json(j["position"])};
}

dynamics::DatasetSplit split_demos(const RunConfig& cfg, const dynamics::Dataset& demos) {
  return dynamics::split_holdout(demos, cfg.holdout_fraction);
}

sim::ShieldStack make_shield_stack(const RunConfig& cfg, const TrainedModels& models,
                                   const shield::ShieldBounds& bounds, const dynamics::Dataset& train_demos) {
  sim::ShieldStack stack;
  stack.full = models.full;
  stack.position = models.position;
  stack.bounds = bounds;
  stack.online_uncertainty = cfg.shield.online_uncertainty;
  shield::ShieldConfig& sc = stack.config;
  sc.gamma = cfg.shield.gamma;
  sc.robust = cfg.shield.robust;
  sc.norm = cfg.shield.norm;
  sc.vertex_budget = cfg.shield.vertex_budget;
  sc.slack_penalty = cfg.shield.slack_penalty;
  sc.lb = -cfg.env.a_max;
  sc.ub = cfg.env.a_max;
  for (std::size_t i = 0; i < cfg.env.zones.size(); ++i) {
    sc.constraints.push_back({cfg.env.zones[i], shield::ModelBinding::PositionSubstate, cfg.shield.spatial_gamma,
                              "zone" + std::to_string(i)});
  }
  if (cfg.shield.behavioral) {
    std::vector<StateVector> states;
    for (const auto& d : train_demos) states.insert(states.end(), d.states.begin(), d.states.end());
    sc.constraints.push_back({std::make_shared<barriers::TaskSpaceBarrier>(std::move(states), cfg.shield.task_space_d),
                              shield::ModelBinding::FullState, cfg.shield.behavioral_gamma, "task_space"});
  }
  shield::validate(sc);
  return stack;
}

std::unique_ptr<sim::NominalPolicy> make_policy(const RunConfig& cfg, const TrainedModels& models,
                                                const dynamics::Dataset& train_demos) {
  switch (cfg.policy.kind) {
    case PolicyKind::Clf:
      if (!models.full) throw MissingDependency("clf policy needs a trained model; run `ssp train` first");
      return std::make_unique<sim::ClfPolicy>(models.full, cfg.reference_path(), cfg.policy.clf);
    case PolicyKind::Knn:
      return std::make_unique<sim::KnnPolicy>(std::make_shared<control::KnnExpertPolicy>(
          control::KnnExpertPolicy::from_dataset(train_demos, cfg.policy.neighbors)));
    case PolicyKind::Scripted:
      return std::make_unique<sim::ScriptedPolicy>(cfg.env.task);
  }
  throw std::logic_error("unhandled policy kind");
}

BatchResult run_batch(const RunConfig& cfg, sim::NominalPolicy& policy, const sim::ShieldStack* shield,
                      const TrainedModels& models, const fs::path* log_dir) {
  BatchResult batch;
  sim::EpisodeOptions opts;
  opts.model = models.full;
  opts.keep_log = log_dir != nullptr;
  if (log_dir) fs::create_directories(*log_dir);
  for (std::uint64_t seed : cfg.run.seeds) {
    std::vector<sim::EpisodeResult> group;
    const std::uint64_t group_seed = sim::derive_seed(cfg.seed, seed);
    for (int i = 0; i < cfg.run.rollouts; ++i) {
      const sim::Episode ep =
          sim::run_episode(policy, shield, cfg.env, sim::derive_seed(group_seed, static_cast<std::uint64_t>(i)), opts);
      if (log_dir) {
        sim::write_episode_csv(*log_dir / ("seed" + std::to_string(seed) + "_ep" + std::to_string(i) + ".csv"), ep);
      }
      group.push_back(ep.result);
    }
    batch.groups.push_back(std::move(group));
  }
  batch.summary = sim::compute_metrics(batch.groups);
  return batch;
}

int cmd_gen_demos(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.config;
  fs::create_directories(ctx.artifacts.out);
  const sim::DemoGeneration gen = sim::generate_demos(cfg.env, cfg.demo_count, cfg.seed, cfg.action_noise);
  dynamics::validate(gen.demos, plausible_speed(cfg.env, gen.demos), 8.0 * cfg.env.obs_sigma + 1e-9);
  dynamics::write_jsonl(ctx.artifacts.demos(), gen.demos);
  out(ctx) << "wrote " << gen.demos.size() << " demonstrations to " << ctx.artifacts.demos().string() << '\n'
           << "expert successes: " << gen.successes << "/" << cfg.demo_count << '\n';
  const double failure = 1.0 - static_cast<double>(gen.successes) / cfg.demo_count;
  if (failure > cfg.max_expert_failure) {
    throw ThresholdFailure("scripted expert failed on " + std::to_string(cfg.demo_count - gen.successes) + " of " +
                           std::to_string(cfg.demo_count) + " trajectories (allowed rate " +
                           std::to_string(cfg.max_expert_failure) + "); check env.goal, env.horizon, env.a_max");
  }
  return kExitOk;
}

int cmd_train(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.config;
  const dynamics::Dataset demos = load_demos(ctx.artifacts);
  const dynamics::DatasetSplit split = split_demos(cfg, demos);
  const auto init = dynamics::NeuralOdeModel::initialize(cfg.model, cfg.train.seed);
  const dynamics::TrainResult full = dynamics::train(init, split.train, cfg.train);
  full.model.save(ctx.artifacts.model());
  dynamics::write_loss_csv(ctx.artifacts.loss(), full.loss_curve);
  out(ctx) << "full model: loss " << full.loss_curve.front() << " -> " << full.loss_curve.back() << '\n';
  const dynamics::TrainResult pos = dynamics::derive_position_model(full.model, split.train, cfg.train);
  pos.model.save(ctx.artifacts.position_model());
  dynamics::write_loss_csv(ctx.artifacts.position_loss(), pos.loss_curve);
  out(ctx) << "position model: loss " << pos.loss_curve.front() << " -> " << pos.loss_curve.back() << '\n';
  return kExitOk;
}

int cmd_quantify(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.config;
  const dynamics::Dataset demos = load_demos(ctx.artifacts);
  const TrainedModels models = load_models(ctx.artifacts);
  const dynamics::DatasetSplit split = split_demos(cfg, demos);
  const auto full = dynamics::quantify_uncertainty(*models.full, split.holdout, cfg.train.method);
  const auto pos = dynamics::quantify_uncertainty(
      *models.position,
      dynamics::position_slice(split.holdout, cfg.model.position_dims, cfg.model.linear_action_dims),
      cfg.train.method);
  json j = full.to_json();
  j["position"] = pos.to_json();
  j["holdout_trajectories"] = split.holdout.size();
  j["holdout_transitions"] = dynamics::total_transitions(split.holdout);
  write_json(ctx.artifacts.bounds(), j);
  out(ctx) << "E_sdot " << full.e_sdot << "  E_s " << full.e_s << "  (position: E_sdot " << pos.e_sdot << "  E_s "
           << pos.e_s << ")\n";
  return kExitOk;
}

namespace {

struct RunInputs {
  dynamics::Dataset train_demos;
  TrainedModels models;
  std::optional<sim::ShieldStack> stack;
};

RunInputs prepare_run(const RunConfig& cfg, const Artifacts& a) {
  RunInputs in;
  const bool needs_demos = cfg.policy.kind == PolicyKind::Knn || cfg.shield.enabled;
  if (needs_demos) in.train_demos = split_demos(cfg, load_demos(a)).train;
  if (cfg.policy.kind == PolicyKind::Clf || cfg.shield.enabled || fs::exists(a.model())) {
    in.models = load_models(a);
  }
  if (cfg.shield.enabled) in.stack = make_shield_stack(cfg, in.models, load_bounds(a), in.train_demos);
  return in;
}

json summary_json(const RunConfig& cfg, const BatchResult& batch) {
  json j = batch.summary.to_json();
  j["policy"] = to_string(cfg.policy.kind);
  j["shield"] = cfg.shield.enabled;
  j["gamma"] = cfg.shield.gamma;
  j["beta"] = cfg.policy.clf.beta;
  j["seed"] = cfg.seed;
  j["seeds"] = cfg.run.seeds;
  j["rollouts"] = cfg.run.rollouts;
  j["config_version"] = kConfigVersion;
  return j;
}

}  // namespace

int cmd_run(const CommandContext& ctx) {
  const RunConfig& cfg = ctx.config;
  fs::create_directories(ctx.artifacts.out);
  RunInputs in = prepare_run(cfg, ctx.artifacts);
  auto policy = make_policy(cfg, in.models, in.train_demos);
  const fs::path logs = ctx.artifacts.episodes();
  const BatchResult batch =
      run_batch(cfg, *policy, in.stack ? &*in.stack : nullptr, in.models, cfg.run.episode_logs ? &logs : nullptr);
  const json j = summary_json(cfg, batch);
  sim::validate_summary_json(j);
  write_json(ctx.artifacts.summary(), j);
  out(ctx) << policy->name() << (cfg.shield.enabled ? " + shield" : "") << ", " << batch.summary.episodes
           << " episodes\n";
  print_summary(out(ctx), j);
  check_thresholds(ctx, j);
  return kExitOk;
}

int cmd_sweep(const CommandContext& ctx) {
  RunConfig cfg = ctx.config;
  fs::create_directories(ctx.artifacts.out);
  if (cfg.sweep.param == "beta") cfg.policy.kind = PolicyKind::Clf;
  if (cfg.sweep.param == "gamma") cfg.shield.enabled = true;
  RunInputs in = prepare_run(cfg, ctx.artifacts);

  std::ofstream csv(ctx.artifacts.sweep(cfg.sweep.param));
  if (!csv) throw std::runtime_error("cannot write " + ctx.artifacts.sweep(cfg.sweep.param).string());
  csv << std::setprecision(10);
  csv << cfg.sweep.param
      << ",tracking_dev_mean,tracking_dev_std,safe_margin_mean,safe_margin_std,collision_rate,success_rate\n";
  for (double v : cfg.sweep.values) {
    if (cfg.sweep.param == "beta") cfg.policy.clf.beta = v;
    if (cfg.sweep.param == "gamma" && in.stack) in.stack->config.gamma = v;
    auto policy = make_policy(cfg, in.models, in.train_demos);
    const BatchResult b = run_batch(cfg, *policy, in.stack ? &*in.stack : nullptr, in.models);
    const auto& s = b.summary;
    csv << v << ',' << s.tracking_dev.mean << ',' << s.tracking_dev.std << ',';
    if (s.safe_margin) {
      csv << s.safe_margin->mean << ',' << s.safe_margin->std;
    } else {
      csv << ',';
    }
    csv << ',' << s.collision_rate.mean << ',' << s.success_rate_without_violation.mean << '\n';
    out(ctx) << cfg.sweep.param << "=" << v << "  tracking_dev " << s.tracking_dev.mean << "  safe_margin "
             << (s.safe_margin ? std::to_string(s.safe_margin->mean) : std::string("n/a")) << '\n';
  }
  out(ctx) << "wrote " << ctx.artifacts.sweep(cfg.sweep.param).string() << '\n';
  return kExitOk;
}

int cmd_report(const CommandContext& ctx) {
  require_file(ctx.artifacts.summary(), "run");
  const json j = read_json(ctx.artifacts.summary());
  sim::validate_summary_json(j);
  print_summary(out(ctx), j);
  check_thresholds(ctx, j);
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Safe imitation toolkit: learned dynamics, uncertainty bounds, and a robust CBF shield"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "artifact directory")->capture_default_str();
  app.add_option("--seed", seed, "master seed (overrides SSP_SEED and the config)");

  json overrides = json::object();
  auto* gen = app.add_subcommand("gen-demos", "generate scripted demonstrations");
  std::optional<int> n_demos;
  gen->add_option("--n", n_demos, "number of trajectories");

  auto* train = app.add_subcommand("train", "train the full and position dynamics models");
  std::optional<int> epochs;
  train->add_option("--epochs", epochs, "training epochs");

  app.add_subcommand("quantify", "compute uncertainty bounds on the held-out trajectories");

  std::optional<std::string> policy;
  std::optional<std::string> shield_mode;
  std::optional<double> gamma;
  std::optional<double> beta;
  std::optional<int> rollouts;
  std::vector<std::uint64_t> seeds;
  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--policy", policy, "clf|knn|scripted")->check(CLI::IsMember({"clf", "knn", "scripted"}));
    cmd->add_option("--shield", shield_mode, "on|off")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--gamma", gamma, "CBF gain");
    cmd->add_option("--beta", beta, "CLF gain");
    cmd->add_option("--rollouts", rollouts, "episodes per seed");
    cmd->add_option("--seeds", seeds, "comma-separated seed list")->delimiter(',');
  };
  auto* run = app.add_subcommand("run", "evaluate a policy stack in the simulator");
  add_run_flags(run);
  auto* sweep = app.add_subcommand("sweep", "sweep beta or gamma and write a CSV");
  add_run_flags(sweep);
  std::optional<std::string> param;
  std::vector<double> values;
  sweep->add_option("--param", param, "beta|gamma")->check(CLI::IsMember({"beta", "gamma"}));
  sweep->add_option("--values", values, "comma-separated values")->delimiter(',');

  auto* report = app.add_subcommand("report", "print summary.json and check thresholds");
  std::optional<double> max_collision;
  std::optional<double> min_success;
  report->add_option("--max-collision-rate", max_collision, "fail (exit 4) above this collision rate");
  report->add_option("--min-success-rate", min_success, "fail (exit 4) below this success rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (seed) overrides["seed"] = *seed;
  if (n_demos) overrides["demos"]["count"] = *n_demos;
  if (epochs) overrides["train"]["epochs"] = *epochs;
  if (policy) overrides["policy"]["type"] = *policy;
  if (shield_mode) overrides["shield"]["enabled"] = (*shield_mode == "on");
  if (gamma) overrides["shield"]["gamma"] = *gamma;
  if (beta) overrides["policy"]["beta"] = *beta;
  if (rollouts) overrides["run"]["rollouts"] = *rollouts;
  if (!seeds.empty()) overrides["run"]["seeds"] = seeds;
  if (param) overrides["sweep"]["param"] = *param;
  if (!values.empty()) overrides["sweep"]["values"] = values;
  if (max_collision) overrides["report"]["max_collision_rate"] = *max_collision;
  if (min_success) overrides["report"]["min_success_rate"] = *min_success;

  try {
    CommandContext ctx;
    ctx.config = load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path), overrides);
    ctx.artifacts.out = out_dir;
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "gen-demos") return cmd_gen_demos(ctx);
    if (name == "train") return cmd_train(ctx);
    if (name == "quantify") return cmd_quantify(ctx);
    if (name == "run") return cmd_run(ctx);
    if (name == "sweep") return cmd_sweep(ctx);
    if (name == "report") return cmd_report(ctx);
    std::cerr << "unknown command " << name << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MissingDependency& e) {
    std::cerr << "missing dependency: " << e.what() << '\n';
    return kExitMissing;
  } catch (const ThresholdFailure& e) {
    std::cerr << e.what() << '\n';
    return kExitThreshold;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace ssp::cli

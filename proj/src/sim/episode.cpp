#include "ssp/sim/episode.hpp"

#include "ssp/dynamics/integrate.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace ssp::sim {

namespace {

using Clock = std::chrono::steady_clock;

double zone_margin(const EnvConfig& env, const StateVector& s) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& z : env.zones) m = std::min(m, z->hard_value(s.head(z->dim())));
  return m;
}

bool near_position(const EnvConfig& env, const StateVector& s, const StateVector& target) {
  const int p = env.position_dims;
  return (s.head(p) - target.head(p)).norm() <= env.task.tolerance;
}

}  // namespace

ActionVector ScriptedPolicy::act(const StateVector& obs, const EpisodeContext& ctx) {
  return control::scripted_expert(task_, obs, ctx.object_latched);
}

ActionVector KnnPolicy::act(const StateVector& obs, const EpisodeContext&) { return expert_->act(obs); }

ClfPolicy::ClfPolicy(std::shared_ptr<const dynamics::ControlAffineModel> model, control::ReferencePath path,
                     control::ClfConfig cfg)
    : model_(std::move(model)), path_(std::move(path)), cfg_(cfg) {
  if (!model_) throw std::invalid_argument("clf policy: model is required");
  control::validate(cfg_);
}

ActionVector ClfPolicy::act(const StateVector& obs, const EpisodeContext&) {
  const control::WaypointSelection sel = control::select_waypoint(path_, obs, index_);
  index_ = sel.index;
  terminal_ = terminal_ || sel.terminal;
  return control::clf_action(*model_, obs, sel.target, cfg_);
}

bool task_success(const EnvConfig& env, const StateVector& s, bool object_latched) {
  switch (env.task.kind) {
    case control::TaskKind::Reach: return near_position(env, s, env.task.goal);
    case control::TaskKind::Transport: return object_latched && near_position(env, s, env.task.goal);
    case control::TaskKind::PathFollow: return false;  // decided by the tracker's terminal flag
  }
  return false;
}

Episode run_episode(NominalPolicy& policy, const ShieldStack* shield, const EnvConfig& cfg, std::uint64_t seed,
                    const EpisodeOptions& options) {
  const auto start_time = Clock::now();
  Env env(cfg, seed);
  policy.reset();

  Episode ep;
  EpisodeResult& res = ep.result;
  ep.trajectory.push_back(env.state());
  res.min_margin = zone_margin(cfg, env.state());

  const control::ReferencePath* path = policy.path();
  double dev_sum = 0.0;
  int dev_count = 0;
  if (path) {
    dev_sum += path->distance_to(env.state(), cfg.position_dims);
    ++dev_count;
  }

  std::optional<dynamics::OnlineUncertainty> online_full;
  std::optional<dynamics::OnlineUncertainty> online_pos;
  if (shield && shield->online_uncertainty) {
    online_full.emplace(shield->full->n_state());
    if (shield->position) online_pos.emplace(shield->position->n_state());
  }
  std::vector<int> last_nearest;

  EpisodeContext ctx;
  double inference_total = 0.0;
  for (int t = 0; t < cfg.horizon; ++t) {
    ctx.step = t;
    const StateVector obs = env.observation();
    const StateVector s_prev = env.state();

    const auto t0 = Clock::now();
    ActionVector a_nom;
    try {
      a_nom = policy.act(obs, ctx);
    } catch (const std::exception& e) {
      res.aborted = true;
      res.abort_reason = std::string("policy error: ") + e.what();
      break;
    }
    if (a_nom.size() != cfg.n_action || !a_nom.allFinite()) {
      res.aborted = true;
      res.abort_reason = "policy produced a non-finite action at step " + std::to_string(t);
      break;
    }
    const ActionVector a_des = clamp_action(cfg, a_nom);
    ActionVector a = a_des;
    StepLog log;
    if (shield) {
      shield::ShieldBounds bounds = shield->bounds;
      if (online_full) bounds.full = dynamics::merge_max(bounds.full, online_full->bounds());
      if (online_pos) bounds.position = dynamics::merge_max(bounds.position, online_pos->bounds());
      const shield::ShieldModels models{shield->full.get(), shield->position.get()};
      const shield::FilterReport rep = shield::filter(a_des, obs, shield->config, models, bounds);
      a = rep.a_safe;
      log.margins = rep.margins;
      log.slack = rep.slack_used;
      log.solve_time_us = rep.solve_time * 1e6;
      log.intervened = rep.intervened;
      res.interventions += rep.intervened ? 1 : 0;
      res.infeasible_steps += rep.status != shield::FilterStatus::Ok ? 1 : 0;
      if (!last_nearest.empty()) {
        for (std::size_t i = 0; i < rep.nearest.size(); ++i) {
          if (rep.nearest[i] >= 0 && rep.nearest[i] != last_nearest[i]) ++res.voronoi_switches;
        }
      }
      last_nearest = rep.nearest;
    }
    inference_total += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

    const StateVector obs_next = env.step(a);
    const StateVector& s = env.state();
    const ActionVector applied = clamp_action(cfg, a);
    ep.trajectory.push_back(s);
    res.steps = t + 1;
    res.max_step_excursion = std::max(res.max_step_excursion, (s - s_prev).head(cfg.position_dims).norm());

    if (options.model) {
      const Vec sdot_star = (s - s_prev) / cfg.dt;
      res.sdot_error = std::max(res.sdot_error, (sdot_star - options.model->eval_field(s_prev, applied)).lpNorm<1>());
      res.s_error = std::max(res.s_error, (s - dynamics::step(*options.model, s_prev, applied, cfg.dt)).lpNorm<1>());
    }
    if (online_full) online_full->update(*shield->full, obs, applied, obs_next, cfg.dt);
    if (online_pos) {
      const int p = shield->position->n_state();
      const int q = shield->position->n_action();
      online_pos->update(*shield->position, obs.head(p), applied.head(q), obs_next.head(p), cfg.dt);
    }

    res.min_margin = std::min(res.min_margin, zone_margin(cfg, s));
    if (path) {
      dev_sum += path->distance_to(s, cfg.position_dims);
      ++dev_count;
    }
    if (cfg.task.kind == control::TaskKind::Transport && !ctx.object_latched &&
        near_position(cfg, s, cfg.task.object)) {
      ctx.object_latched = true;
    }

    if (options.keep_log) {
      log.t = t;
      log.state = s_prev;
      log.observation = obs;
      log.a_des = a_des;
      log.a_safe = applied;
      log.waypoint = policy.waypoint_index();
      ep.log.push_back(std::move(log));
    }

    const bool done = cfg.task.kind == control::TaskKind::PathFollow ? policy.terminal()
                                                                      : task_success(cfg, s, ctx.object_latched);
    if (done) {
      res.success = true;
      if (options.stop_on_success) break;
    }
  }

  res.collided = res.min_margin < 0.0;
  if (res.aborted) res.success = false;
  res.tracking_dev = dev_count > 0 ? dev_sum / dev_count : 0.0;
  res.inference_ms = res.steps > 0 ? inference_total / res.steps : 0.0;
  res.wall_time = std::chrono::duration<double>(Clock::now() - start_time).count();
  return ep;
}

void write_episode_csv(const std::filesystem::path& path, const Episode& episode) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write episode log " + path.string());
  out << std::setprecision(17);
  if (episode.log.empty()) {
    out << "t\n";
    return;
  }
  const StepLog& first = episode.log.front();
  out << "t";
  for (Eigen::Index i = 0; i < first.state.size(); ++i) out << ",s" << i;
  for (Eigen::Index i = 0; i < first.a_des.size(); ++i) out << ",a_des" << i;
  for (Eigen::Index i = 0; i < first.a_safe.size(); ++i) out << ",a_safe" << i;
  for (std::size_t i = 0; i < first.margins.size(); ++i) out << ",margin" << i;
  out << ",slack,solve_time_us,intervened,waypoint\n";
  for (const StepLog& l : episode.log) {
    out << l.t;
    for (Eigen::Index i = 0; i < l.state.size(); ++i) out << ',' << l.state(i);
    for (Eigen::Index i = 0; i < l.a_des.size(); ++i) out << ',' << l.a_des(i);
    for (Eigen::Index i = 0; i < l.a_safe.size(); ++i) out << ',' << l.a_safe(i);
    for (double m : l.margins) out << ',' << m;
    out << ',' << l.slack << ',' << l.solve_time_us << ',' << (l.intervened ? 1 : 0) << ',' << l.waypoint << '\n';
  }
}

DemoGeneration generate_demos(const EnvConfig& cfg, int count, std::uint64_t seed, double action_noise) {
  if (count < 1) throw std::invalid_argument("generate_demos: count must be at least 1");
  if (cfg.n_action != cfg.n_state) throw DimensionError("generate_demos: scripted expert needs n_action == n_state");
  DemoGeneration gen;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t episode_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    Env env(cfg, episode_seed);
    std::mt19937_64 noise_rng(derive_seed(episode_seed, 0xA5A5));
    std::normal_distribution<double> noise(0.0, action_noise > 0.0 ? action_noise : 1.0);
    dynamics::Demonstration demo;
    demo.dt = cfg.dt;
    demo.states.push_back(env.observation());
    bool latched = false;
    bool reached = false;
    for (int t = 0; t < cfg.horizon; ++t) {
      ActionVector a = control::scripted_expert(cfg.task, env.observation(), latched);
      if (action_noise > 0.0) {
        for (Eigen::Index k = 0; k < a.size(); ++k) a(k) += noise(noise_rng);
      }
      a = clamp_action(cfg, a);
      env.step(a);
      demo.actions.push_back(a);
      demo.states.push_back(env.observation());
      if (cfg.task.kind == control::TaskKind::Transport && !latched &&
          near_position(cfg, env.state(), cfg.task.object)) {
        latched = true;
      }
      reached = reached || task_success(cfg, env.state(), latched);
    }
    gen.successes += reached ? 1 : 0;
    gen.demos.push_back(std::move(demo));
  }
  return gen;
}

}  // namespace ssp::sim

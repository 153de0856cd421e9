// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "ssp/cli/commands.hpp"
#include "ssp/cli/config.hpp"
#include "ssp/dynamics/train.hpp"
#include "ssp/dynamics/uncertainty.hpp"
#include "ssp/qp/qp.hpp"

#include "audits.hpp"
#include "qp_oracle.hpp"
#include "shield_suites.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#ifndef SSP_BINARY
#error "SSP_BINARY must name the ssp executable"
#endif

using namespace ssp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Line {
  int id;
  std::string name;
  double limit_s;
  bool pass;
  double seconds;
  std::string detail;
};

std::vector<Line> g_lines;
std::string g_report;

// Prints and keeps a copy for acceptance_report.txt in the working directory.
void emit(const std::string& text) {
  std::fputs(text.c_str(), stdout);
  std::fflush(stdout);
  g_report += text;
}

void run(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool in_time = secs <= limit_s;
  if (!in_time) o.detail += "; over the " + std::to_string(static_cast<int>(limit_s)) + " s limit";
  const bool pass = o.pass && in_time;
  char head[96];
  std::snprintf(head, sizeof head, "%s  [%2d] %-28s %7.2fs  ", pass ? "PASS" : "FAIL", id, name.c_str(), secs);
  emit(head + o.detail + "\n");
  g_lines.push_back({id, name, limit_s, pass, secs, o.detail});
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// Demos, models and bounds exactly as the CLI pipeline produces them with the default config.
struct Setup {
  cli::RunConfig cfg;
  dynamics::DatasetSplit split;
  cli::TrainedModels models;
  shield::ShieldBounds bounds;
  std::vector<double> loss_curve;
  double train_seconds = 0.0;
  int expert_successes = 0;
};

Setup build_setup() {
  Setup s;
  s.cfg = cli::parse_config(cli::default_config_json());
  const cli::RunConfig& c = s.cfg;
  const sim::DemoGeneration gen = sim::generate_demos(c.env, c.demo_count, c.seed, c.action_noise);
  s.expert_successes = gen.successes;
  s.split = cli::split_demos(c, gen.demos);

  const auto t0 = Clock::now();
  const dynamics::TrainResult full =
      dynamics::train(dynamics::NeuralOdeModel::initialize(c.model, c.train.seed), s.split.train, c.train);
  s.train_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  s.loss_curve = full.loss_curve;
  const dynamics::TrainResult pos = dynamics::derive_position_model(full.model, s.split.train, c.train);
  s.models.full = std::make_shared<dynamics::NeuralOdeModel>(full.model);
  s.models.position = std::make_shared<dynamics::NeuralOdeModel>(pos.model);

  s.bounds.full = dynamics::quantify_uncertainty(*s.models.full, s.split.holdout, c.train.method);
  s.bounds.position = dynamics::quantify_uncertainty(
      *s.models.position, dynamics::position_slice(s.split.holdout, c.model.position_dims, c.model.linear_action_dims),
      c.train.method);
  return s;
}

double min_margin(const cli::BatchResult& b) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& g : b.groups) {
    for (const auto& r : g) m = std::min(m, r.min_margin);
  }
  return m;
}

int collisions(const cli::BatchResult& b) {
  int n = 0;
  for (const auto& g : b.groups) {
    for (const auto& r : g) n += r.collided ? 1 : 0;
  }
  return n;
}

Outcome safety_invariance(const Setup& s) {
  std::string detail;
  bool pass = true;
  for (cli::PolicyKind kind : {cli::PolicyKind::Knn, cli::PolicyKind::Clf}) {
    cli::RunConfig cfg = s.cfg;
    cfg.policy.kind = kind;
    auto policy = cli::make_policy(cfg, s.models, s.split.train);
    const sim::ShieldStack stack = cli::make_shield_stack(cfg, s.models, s.bounds, s.split.train);
    const cli::BatchResult raw = cli::run_batch(cfg, *policy, nullptr, s.models);
    const cli::BatchResult shielded = cli::run_batch(cfg, *policy, &stack, s.models);
    const int n = raw.summary.episodes;
    const int hits = collisions(raw);
    const int shielded_hits = collisions(shielded);
    const double margin = min_margin(shielded);
    pass = pass && hits >= 0.9 * n && shielded_hits == 0 && margin > 0.0;
    detail += cli::to_string(kind) + ": unfiltered " + std::to_string(hits) + "/" + std::to_string(n) +
              ", shielded " + std::to_string(shielded_hits) + "/" + std::to_string(shielded.summary.episodes) +
              " (min margin " + fmt(margin) + "); ";
  }
  return {pass, detail};
}

Outcome gamma_trend(const Setup& s) {
  cli::RunConfig cfg = s.cfg;
  cfg.policy.kind = cli::PolicyKind::Clf;
  sim::ShieldStack stack = cli::make_shield_stack(cfg, s.models, s.bounds, s.split.train);
  std::vector<double> margins;
  std::string detail = "mean margin:";
  for (double gamma : {5.0, 10.0, 15.0, 20.0, 25.0}) {
    stack.config.gamma = gamma;
    auto policy = cli::make_policy(cfg, s.models, s.split.train);
    const cli::BatchResult b = cli::run_batch(cfg, *policy, &stack, s.models);
    if (!b.summary.safe_margin) return {false, "no zone margin recorded"};
    margins.push_back(b.summary.safe_margin->mean);
    detail += " " + fmt(gamma) + "->" + fmt(margins.back());
  }
  bool monotone = true;
  for (std::size_t i = 1; i < margins.size(); ++i) monotone = monotone && margins[i] <= margins[i - 1];
  return {monotone && margins.back() < margins.front(), detail};
}

Outcome beta_trend(const Setup& s) {
  cli::RunConfig cfg = s.cfg;
  cfg.policy.kind = cli::PolicyKind::Clf;
  cfg.env.zones.clear();
  cfg.env.task.kind = control::TaskKind::PathFollow;
  const std::vector<double> betas{5.0, 10.0, 15.0, 20.0, 25.0};
  std::vector<double> devs;
  std::string detail = "mean deviation:";
  for (double beta : betas) {
    cfg.policy.clf.beta = beta;
    auto policy = cli::make_policy(cfg, s.models, s.split.train);
    const cli::BatchResult b = cli::run_batch(cfg, *policy, nullptr, s.models);
    devs.push_back(b.summary.tracking_dev.mean);
    detail += " " + fmt(beta) + "->" + fmt(devs.back());
  }
  const auto arg = static_cast<std::size_t>(std::min_element(devs.begin(), devs.end()) - devs.begin());
  detail += "; argmin beta " + fmt(betas[arg]);
  return {arg != 0 && arg + 1 != betas.size(), detail};
}

Outcome invariance_property() {
  const testing::InvarianceSummary t = testing::invariance_suite(5, 100);
  const bool pass = t.rollouts == 100 && t.beyond_allowance == 0 && t.max_perturbation_l1 <= t.e_sdot;
  return {pass, std::to_string(t.rollouts) + " rollouts, min b " + fmt(t.min_margin) + ", allowance [" +
                    fmt(t.min_allowance) + ", " + fmt(t.max_allowance) + "], beyond allowance " +
                    std::to_string(t.beyond_allowance) + ", b < 0 in " + std::to_string(t.hard_violations) +
                    ", max |eps|_1 " + fmt(t.max_perturbation_l1) + " <= E_sdot " + fmt(t.e_sdot)};
}

Outcome qp_oracle() {
  std::mt19937_64 rng(2025);
  double worst_gap = 0.0;
  double worst_kkt = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + trial % 3;
    const qp::QpProblem pb = testing::random_feasible_qp(rng, m, trial % 7);
    const qp::QpSolution sol = qp::solve(pb);
    if (sol.status != qp::QpStatus::Optimal) return {false, "solver failed on trial " + std::to_string(trial)};
    const double gap = testing::grid_search_objective(pb) - sol.objective;
    worst_gap = std::max(worst_gap, std::abs(gap));
    worst_kkt = std::max(worst_kkt, qp::kkt_residual(pb, sol).max());
    ok = ok && gap >= -1e-9;  // the grid only ever sees feasible points
  }
  ok = ok && worst_gap <= 1e-3 && worst_kkt <= 1e-7;
  return {ok, "max |grid - solver| " + fmt(worst_gap) + ", max KKT residual " + fmt(worst_kkt)};
}

Outcome gradient_audits() {
  const double ad_err = testing::mlp_gradient_audit(20);
  const testing::BarrierAudit b = testing::barrier_gradient_audit(1000, 17);
  const bool pass = ad_err < 1e-4 && b.sphere < 1e-4 && b.cylinder < 1e-4 && b.task_space < 1e-4;
  return {pass, "autodiff " + fmt(ad_err) + ", sphere " + fmt(b.sphere) + ", cylinder " + fmt(b.cylinder) +
                    ", task-space " + fmt(b.task_space)};
}

Outcome integrator_order() {
  const double rk4 = testing::convergence_ratio(dynamics::Integrator::Rk4);
  const double euler = testing::convergence_ratio(dynamics::Integrator::Euler);
  const bool pass = rk4 >= 12.0 && rk4 <= 20.0 && euler >= 1.8 && euler <= 2.2;
  return {pass, "rk4 ratio " + fmt(rk4) + ", euler ratio " + fmt(euler)};
}

Outcome dynamics_learning(const Setup& s) {
  const cli::RunConfig& c = s.cfg;
  const auto untrained = dynamics::NeuralOdeModel::initialize(c.model, c.train.seed);
  const double e_untrained = dynamics::quantify_uncertainty(untrained, s.split.holdout, c.train.method).e_s;
  const double e_trained = s.bounds.full.e_s;

  const auto t0 = Clock::now();
  const dynamics::TrainResult again = dynamics::train(untrained, s.split.train, c.train);
  const double second = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool same = again.loss_curve == s.loss_curve;
  const bool fast = std::max(s.train_seconds, second) <= 180.0;
  const bool pass = e_trained < 0.1 * e_untrained && same && fast && c.train.epochs == 200;
  return {pass, "held-out E_s " + fmt(e_trained) + " vs untrained " + fmt(e_untrained) + " (ratio " +
                    fmt(e_trained / e_untrained) + "), loss curves " + (same ? "bitwise equal" : "DIFFER") +
                    ", 200 epochs in " + fmt(s.train_seconds) + " s / " + fmt(second) + " s"};
}

Outcome filter_minimality() {
  const testing::MinimalitySummary m = testing::filter_minimality_suite(99, 100);
  const bool pass = m.active_cases == 100 && m.max_projection_error < 1e-8 && m.inactive_cases == 100 &&
                    m.inactive_changed == 0 && m.intervened_flag_errors == 0;
  return {pass, std::to_string(m.active_cases) + " active (max error " + fmt(m.max_projection_error) + "), " +
                    std::to_string(m.inactive_cases) + " inactive (" + std::to_string(m.inactive_changed) +
                    " changed)"};
}

Outcome end_to_end() {
  const fs::path out = fs::temp_directory_path() / ("ssp_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(out);
  const std::string bin = SSP_BINARY;
  const std::string log = (out.string() + ".log");
  std::string detail;
  for (const char* cmd : {"gen-demos", "train", "quantify", "run"}) {
    const std::string line = "env -u SSP_SEED \"" + bin + "\" --out \"" + out.string() + "\" " + cmd + " >>\"" +
                             log + "\" 2>&1";
    const int rc = std::system(line.c_str());
    const int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    if (code != 0) return {false, std::string(cmd) + " exited with " + std::to_string(code) + " (see " + log + ")"};
  }
  std::ifstream in(out / "summary.json");
  if (!in) return {false, "summary.json missing"};
  const nlohmann::json j = nlohmann::json::parse(in);
  sim::validate_summary_json(j);
  detail = "exit 0 for all stages, summary valid: " + std::to_string(j["episodes"].get<int>()) +
           " episodes, collision rate " + fmt(j["collision_rate"]["mean"].get<double>());
  fs::remove_all(out);
  fs::remove(log);
  return {true, detail};
}

}  // namespace

int main() {
  std::printf("preparing demos, models and bounds from the default config...\n");
  std::fflush(stdout);
  const auto t0 = Clock::now();
  const Setup setup = build_setup();
  char buf[256];
  std::snprintf(buf, sizeof buf, "setup done in %.1fs: expert %d/%d, E_sdot %.4g, E_s %.4g (position %.4g, %.4g)\n",
                std::chrono::duration<double>(Clock::now() - t0).count(), setup.expert_successes,
                setup.cfg.demo_count, setup.bounds.full.e_sdot, setup.bounds.full.e_s, setup.bounds.position.e_sdot,
                setup.bounds.position.e_s);
  emit(buf);

  run(1, "safety invariance", 120, [&] { return safety_invariance(setup); });
  run(2, "gamma trend", 120, [&] { return gamma_trend(setup); });
  run(3, "beta trend", 120, [&] { return beta_trend(setup); });
  run(4, "forward invariance suite", 60, invariance_property);
  run(5, "qp oracle equivalence", 10, qp_oracle);
  run(6, "gradient audits", 10, gradient_audits);
  run(7, "integrator order", 5, integrator_order);
  run(8, "dynamics learning", 360, [&] { return dynamics_learning(setup); });
  run(9, "filter minimality", 10, filter_minimality);
  run(10, "end-to-end pipeline", 300, end_to_end);

  const auto failed = std::count_if(g_lines.begin(), g_lines.end(), [](const Line& l) { return !l.pass; });
  std::snprintf(buf, sizeof buf, "%zu/%zu criteria passed\n", g_lines.size() - static_cast<std::size_t>(failed),
                g_lines.size());
  emit(buf);
  std::ofstream("acceptance_report.txt") << g_report;
  return failed == 0 ? 0 : 1;
}

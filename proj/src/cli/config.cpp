#include "ssp/cli/config.hpp"

#include <cstdlib>
#include <fstream>

namespace ssp::cli {

namespace {

using nlohmann::json;

json mat_json(const Mat& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

const char* type_name(const json& j) { return j.type_name(); }

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return !a.is_number_integer() || b.is_number_integer();
  return a.type() == b.type();
}

json merge_at(const json& base, const json& overlay, const std::string& where) {
  if (base.is_null()) return overlay;  // free-form slot
  if (!same_kind(base, overlay)) {
    throw ConfigError("config " + where + ": expected " + type_name(base) + ", got " + type_name(overlay));
  }
  if (!base.is_object()) return overlay;
  json out = base;
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string key_path = where + "/" + it.key();
    if (!base.contains(it.key())) throw ConfigError("config " + key_path + ": unknown key");
    out[it.key()] = merge_at(base[it.key()], it.value(), key_path);
  }
  return out;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config " + where + ": " + what);
}

Vec vec_at(const json& j, const std::string& where, Eigen::Index expected) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(where, "expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  if (expected >= 0 && v.size() != expected) {
    fail(where, "expected " + std::to_string(expected) + " entries, got " + std::to_string(v.size()));
  }
  return v;
}

Mat mat_at(const json& j, const std::string& where, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    fail(where, "expected " + std::to_string(rows) + " rows");
  }
  Mat a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    a.row(i) = vec_at(j[static_cast<std::size_t>(i)], where + "/" + std::to_string(i), cols).transpose();
  }
  return a;
}

double positive(const json& j, const std::string& where) {
  const double v = j.get<double>();
  if (!(v > 0.0)) fail(where, "must be positive");
  return v;
}

double nonnegative(const json& j, const std::string& where) {
  const double v = j.get<double>();
  if (!(v >= 0.0)) fail(where, "must be nonnegative");
  return v;
}

int positive_int(const json& j, const std::string& where) {
  const int v = j.get<int>();
  if (v < 1) fail(where, "must be at least 1");
  return v;
}

std::optional<double> optional_positive(const json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_number()) fail(where, "expected a number or null");
  return positive(j, where);
}

std::optional<double> optional_unit(const json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_number()) fail(where, "expected a number or null");
  const double v = j.get<double>();
  if (v < 0.0 || v > 1.0) fail(where, "must lie in [0, 1]");
  return v;
}

}  // namespace

PolicyKind parse_policy(const std::string& name) {
  if (name == "clf") return PolicyKind::Clf;
  if (name == "knn") return PolicyKind::Knn;
  if (name == "scripted") return PolicyKind::Scripted;
  throw ConfigError("config /policy/type: unknown policy '" + name + "' (expected clf|knn|scripted)");
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Clf: return "clf";
    case PolicyKind::Knn: return "knn";
    case PolicyKind::Scripted: return "scripted";
  }
  return "unknown";
}

json default_config_json() {
  const sim::EnvConfig env = sim::default_zone_env();
  json zones = json::array();
  for (const auto& z : env.zones) zones.push_back(z->to_json());
  return {
      {"version", kConfigVersion},
      {"seed", 7},
      {"env",
       {{"task", "reach"},
        {"n_state", env.n_state},
        {"n_action", env.n_action},
        {"position_dims", env.position_dims},
        {"A", mat_json(env.A)},
        {"B", mat_json(env.B)},
        {"w_max", env.w_max},
        {"dt", env.dt},
        {"a_max", vec_json(env.a_max)},
        {"obs_sigma", env.obs_sigma},
        {"horizon", env.horizon},
        {"start", vec_json(env.start)},
        {"start_jitter", env.start_jitter},
        {"goal", vec_json(env.task.goal)},
        {"object", nullptr},
        {"expert_gain", env.task.gain},
        {"tolerance", env.task.tolerance},
        {"zones", zones}}},
      {"demos", {{"count", 100}, {"action_noise", 0.04}, {"max_failure_rate", 0.05}}},
      {"model", {{"hidden", 64}, {"position_dims", 3}, {"linear_action_dims", 3}}},
      {"train",
       {{"epochs", 200},
        {"batch", 20},
        {"rollout", 10},
        {"lr", 1e-3},
        {"rms_decay", 0.99},
        {"rms_eps", 1e-8},
        {"seed", nullptr},
        {"holdout", 0.2},
        {"integrator", "rk4"},
        {"batches_per_epoch", 0}}},
      {"policy",
       {{"type", "clf"}, {"beta", 15.0}, {"c", 1.0}, {"neighbors", 5}, {"path", nullptr}, {"path_spacing", 0.01}}},
      {"shield",
       {{"enabled", true},
        {"gamma", 10.0},
        {"spatial_gamma", nullptr},
        {"behavioral_gamma", nullptr},
        {"robust", true},
        {"norm", "linf"},
        {"vertex_budget", 64},
        {"behavioral", true},
        {"task_space_d", 0.5},
        {"online_uncertainty", false},
        {"slack_penalty", 1e6}}},
      {"run", {{"seeds", {0, 1, 2}}, {"rollouts", 20}, {"episode_logs", true}}},
      {"sweep", {{"param", "beta"}, {"values", {5.0, 10.0, 15.0, 20.0, 25.0}}}},
      {"report", {{"max_collision_rate", nullptr}, {"min_success_rate", nullptr}}},
  };
}

json merge_config(const json& base, const json& overlay) {
  if (!overlay.is_object()) throw ConfigError("config: top level must be an object");
  return merge_at(base, overlay, "");
}

control::ReferencePath RunConfig::reference_path() const {
  if (policy.path.is_null()) return control::straight_path(env.start, env.task.goal, policy.path_spacing);
  return control::path_from_json(policy.path);
}

RunConfig parse_config(const json& doc) {
  RunConfig c;
  c.raw = doc;
  if (doc.at("version").get<int>() != kConfigVersion) {
    fail("/version", "unsupported version " + doc["version"].dump() + " (expected " +
                         std::to_string(kConfigVersion) + ")");
  }
  if (!doc.at("seed").is_number_integer() || doc["seed"].get<long long>() < 0) {
    fail("/seed", "expected a nonnegative integer");
  }
  c.seed = doc["seed"].get<std::uint64_t>();

  const json& e = doc.at("env");
  sim::EnvConfig& env = c.env;
  env.n_state = positive_int(e["n_state"], "/env/n_state");
  env.n_action = positive_int(e["n_action"], "/env/n_action");
  env.position_dims = positive_int(e["position_dims"], "/env/position_dims");
  env.A = mat_at(e["A"], "/env/A", env.n_state, env.n_state);
  env.B = mat_at(e["B"], "/env/B", env.n_state, env.n_action);
  env.w_max = nonnegative(e["w_max"], "/env/w_max");
  env.dt = positive(e["dt"], "/env/dt");
  env.a_max = vec_at(e["a_max"], "/env/a_max", env.n_action);
  if ((env.a_max.array() <= 0.0).any()) fail("/env/a_max", "entries must be positive");
  env.obs_sigma = nonnegative(e["obs_sigma"], "/env/obs_sigma");
  env.horizon = positive_int(e["horizon"], "/env/horizon");
  env.start = vec_at(e["start"], "/env/start", env.n_state);
  env.start_jitter = nonnegative(e["start_jitter"], "/env/start_jitter");
  try {
    env.task.kind = control::parse_task(e["task"].get<std::string>());
  } catch (const std::invalid_argument& ex) {
    fail("/env/task", ex.what());
  }
  env.task.goal = vec_at(e["goal"], "/env/goal", env.n_state);
  if (env.task.kind == control::TaskKind::Transport) {
    if (e["object"].is_null()) fail("/env/object", "transport tasks need an object position");
    env.task.object = vec_at(e["object"], "/env/object", env.n_state);
  } else if (!e["object"].is_null()) {
    env.task.object = vec_at(e["object"], "/env/object", env.n_state);
  }
  env.task.gain = positive(e["expert_gain"], "/env/expert_gain");
  env.task.tolerance = positive(e["tolerance"], "/env/tolerance");
  env.task.a_max = env.a_max;
  env.task.position_dims = env.position_dims;
  if (!e["zones"].is_array()) fail("/env/zones", "expected an array");
  for (std::size_t i = 0; i < e["zones"].size(); ++i) {
    try {
      env.zones.push_back(barriers::zone_from_json(e["zones"][i]));
    } catch (const std::exception& ex) {
      fail("/env/zones/" + std::to_string(i), ex.what());
    }
  }
  try {
    sim::validate(env);
  } catch (const std::exception& ex) {
    fail("/env", ex.what());
  }

  const json& d = doc.at("demos");
  c.demo_count = positive_int(d["count"], "/demos/count");
  c.action_noise = nonnegative(d["action_noise"], "/demos/action_noise");
  c.max_expert_failure = nonnegative(d["max_failure_rate"], "/demos/max_failure_rate");

  const json& m = doc.at("model");
  c.model.n_state = env.n_state;
  c.model.n_action = env.n_action;
  c.model.dt = env.dt;
  c.model.hidden = positive_int(m["hidden"], "/model/hidden");
  c.model.position_dims = positive_int(m["position_dims"], "/model/position_dims");
  c.model.linear_action_dims = positive_int(m["linear_action_dims"], "/model/linear_action_dims");
  if (c.model.position_dims > env.n_state) fail("/model/position_dims", "exceeds n_state");
  if (c.model.linear_action_dims > env.n_action) fail("/model/linear_action_dims", "exceeds n_action");
  if (c.model.position_dims != env.position_dims) fail("/model/position_dims", "must equal /env/position_dims");

  const json& t = doc.at("train");
  c.train.epochs = positive_int(t["epochs"], "/train/epochs");
  c.train.batch = positive_int(t["batch"], "/train/batch");
  c.train.rollout = positive_int(t["rollout"], "/train/rollout");
  c.train.lr = positive(t["lr"], "/train/lr");
  c.train.rms_decay = positive(t["rms_decay"], "/train/rms_decay");
  if (c.train.rms_decay >= 1.0) fail("/train/rms_decay", "must be below 1");
  c.train.rms_eps = positive(t["rms_eps"], "/train/rms_eps");
  if (!t["seed"].is_null() && (!t["seed"].is_number_integer() || t["seed"].get<long long>() < 0)) {
    fail("/train/seed", "expected a nonnegative integer or null");
  }
  c.train.seed = t["seed"].is_null() ? c.seed + 1 : t["seed"].get<std::uint64_t>();
  c.holdout_fraction = positive(t["holdout"], "/train/holdout");
  if (c.holdout_fraction >= 1.0) fail("/train/holdout", "must be below 1");
  try {
    c.train.method = dynamics::parse_integrator(t["integrator"].get<std::string>());
  } catch (const std::invalid_argument& ex) {
    fail("/train/integrator", ex.what());
  }
  c.train.batches_per_epoch = t["batches_per_epoch"].get<int>();
  if (c.train.batches_per_epoch < 0) fail("/train/batches_per_epoch", "must be nonnegative");

  const json& p = doc.at("policy");
  c.policy.kind = parse_policy(p["type"].get<std::string>());
  c.policy.clf.beta = positive(p["beta"], "/policy/beta");
  c.policy.clf.c = positive(p["c"], "/policy/c");
  c.policy.neighbors = positive_int(p["neighbors"], "/policy/neighbors");
  c.policy.path = p["path"];
  c.policy.path_spacing = positive(p["path_spacing"], "/policy/path_spacing");
  if (!c.policy.path.is_null() && !c.policy.path.is_object()) fail("/policy/path", "expected an object or null");
  try {
    const control::ReferencePath path = c.reference_path();
    require_dims("path waypoint", path.waypoint(0).size(), env.n_state);
  } catch (const std::exception& ex) {
    fail("/policy/path", ex.what());
  }

  const json& s = doc.at("shield");
  c.shield.enabled = s["enabled"].get<bool>();
  c.shield.gamma = positive(s["gamma"], "/shield/gamma");
  c.shield.spatial_gamma = optional_positive(s["spatial_gamma"], "/shield/spatial_gamma");
  c.shield.behavioral_gamma = optional_positive(s["behavioral_gamma"], "/shield/behavioral_gamma");
  c.shield.robust = s["robust"].get<bool>();
  const std::string norm = s["norm"].get<std::string>();
  if (norm == "linf") {
    c.shield.norm = shield::RobustNorm::LInf;
  } else if (norm == "per_dim") {
    c.shield.norm = shield::RobustNorm::PerDimension;
  } else {
    fail("/shield/norm", "expected linf|per_dim, got '" + norm + "'");
  }
  c.shield.vertex_budget = s["vertex_budget"].get<int>();
  if (c.shield.vertex_budget < 0) fail("/shield/vertex_budget", "must be nonnegative");
  c.shield.behavioral = s["behavioral"].get<bool>();
  c.shield.task_space_d = positive(s["task_space_d"], "/shield/task_space_d");
  c.shield.online_uncertainty = s["online_uncertainty"].get<bool>();
  c.shield.slack_penalty = positive(s["slack_penalty"], "/shield/slack_penalty");
  if (c.shield.enabled && env.zones.empty() && !c.shield.behavioral) {
    fail("/shield", "enabled without zones or behavioral constraint");
  }

  const json& r = doc.at("run");
  c.run.seeds.clear();
  for (const auto& v : r["seeds"]) {
    if (!v.is_number_integer() || v.get<long long>() < 0) fail("/run/seeds", "expected nonnegative integers");
    c.run.seeds.push_back(v.get<std::uint64_t>());
  }
  if (c.run.seeds.empty()) fail("/run/seeds", "must not be empty");
  c.run.rollouts = positive_int(r["rollouts"], "/run/rollouts");
  c.run.episode_logs = r["episode_logs"].get<bool>();

  const json& w = doc.at("sweep");
  c.sweep.param = w["param"].get<std::string>();
  if (c.sweep.param != "beta" && c.sweep.param != "gamma") fail("/sweep/param", "expected beta|gamma");
  c.sweep.values.clear();
  if (!w["values"].is_array()) fail("/sweep/values", "expected an array");
  for (const auto& v : w["values"]) {
    if (!v.is_number() || !(v.get<double>() > 0.0)) fail("/sweep/values", "expected positive numbers");
    c.sweep.values.push_back(v.get<double>());
  }
  if (c.sweep.values.empty()) fail("/sweep/values", "must not be empty");

  const json& rep = doc.at("report");
  c.report.max_collision_rate = optional_unit(rep["max_collision_rate"], "/report/max_collision_rate");
  c.report.min_success_rate = optional_unit(rep["min_success_rate"], "/report/min_success_rate");
  return c;
}

RunConfig load_config(const std::optional<std::filesystem::path>& file, const json& overrides) {
  json doc = default_config_json();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("config file " + file->string() + " cannot be opened");
    json user;
    try {
      user = json::parse(in);
    } catch (const json::parse_error& ex) {
      throw ConfigError("config file " + file->string() + ": " + ex.what());
    }
    doc = merge_config(doc, user);
  }
  if (const char* env_seed = std::getenv("SSP_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env_seed, &used);
      if (used != std::string(env_seed).size()) throw std::invalid_argument("trailing characters");
      doc["seed"] = v;
    } catch (const std::exception&) {
      throw ConfigError(std::string("SSP_SEED must be a nonnegative integer, got '") + env_seed + "'");
    }
  }
  if (!overrides.is_null()) doc = merge_config(doc, overrides);
  try {
    return parse_config(doc);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }
}

}  // namespace ssp::cli

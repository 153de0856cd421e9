#include "ssp/sim/metrics.hpp"

#include <cmath>

namespace ssp::sim {

namespace {

Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  s.count = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

nlohmann::json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

constexpr const char* kStatKeys[] = {"success_rate_with_violation", "success_rate_without_violation",
                                     "collision_rate", "inference_time_ms", "sdot_error", "s_error"};

}  // namespace

MetricsSummary compute_metrics(const std::vector<std::vector<EpisodeResult>>& groups) {
  std::vector<double> with_v, without_v, collide, infer, margin, dev, sdot, s_err;
  MetricsSummary out;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    double n_with = 0, n_without = 0, n_coll = 0, t_inf = 0, d = 0, e1 = 0, e2 = 0, m = 0;
    int n_margin = 0;
    for (const auto& r : g) {
      n_with += r.success ? 1 : 0;
      n_without += (r.success && !r.collided) ? 1 : 0;
      n_coll += r.collided ? 1 : 0;
      t_inf += r.inference_ms;
      d += r.tracking_dev;
      e1 += r.sdot_error;
      e2 += r.s_error;
      if (std::isfinite(r.min_margin)) {
        m += r.min_margin;
        ++n_margin;
      }
      out.aborted += r.aborted ? 1 : 0;
      out.infeasible_steps += r.infeasible_steps;
    }
    const double n = static_cast<double>(g.size());
    with_v.push_back(n_with / n);
    without_v.push_back(n_without / n);
    collide.push_back(n_coll / n);
    infer.push_back(t_inf / n);
    dev.push_back(d / n);
    sdot.push_back(e1 / n);
    s_err.push_back(e2 / n);
    if (n_margin > 0) margin.push_back(m / n_margin);
    out.episodes += static_cast<int>(g.size());
    ++out.groups;
  }
  if (out.episodes == 0) throw std::invalid_argument("compute_metrics: empty batch");
  out.success_rate_with_violation = stat_of(with_v);
  out.success_rate_without_violation = stat_of(without_v);
  out.collision_rate = stat_of(collide);
  out.inference_time_ms = stat_of(infer);
  if (!margin.empty()) out.safe_margin = stat_of(margin);
  out.tracking_dev = stat_of(dev);
  out.sdot_error = stat_of(sdot);
  out.s_error = stat_of(s_err);
  return out;
}

nlohmann::json MetricsSummary::to_json() const {
  nlohmann::json j;
  j["success_rate_with_violation"] = stat_json(success_rate_with_violation);
  j["success_rate_without_violation"] = stat_json(success_rate_without_violation);
  j["collision_rate"] = stat_json(collision_rate);
  j["inference_time_ms"] = stat_json(inference_time_ms);
  j["safe_margin"] = safe_margin ? stat_json(*safe_margin) : nlohmann::json(nullptr);
  j["tracking_dev"] = stat_json(tracking_dev);
  j["sdot_error"] = stat_json(sdot_error);
  j["s_error"] = stat_json(s_error);
  j["episodes"] = episodes;
  j["groups"] = groups;
  j["aborted"] = aborted;
  j["infeasible_steps"] = infeasible_steps;
  return j;
}

void validate_summary_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("summary: not an object");
  auto check_stat = [&](const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("summary: missing ") + key);
    const auto& s = j.at(key);
    if (!s.is_object() || !s.contains("mean") || !s.contains("std") || !s["mean"].is_number() ||
        !s["std"].is_number()) {
      throw std::invalid_argument(std::string("summary: ") + key + " must be {mean, std}");
    }
  };
  for (const char* key : kStatKeys) check_stat(key);
  check_stat("tracking_dev");
  if (!j.contains("safe_margin")) throw std::invalid_argument("summary: missing safe_margin");
  if (!j["safe_margin"].is_null()) check_stat("safe_margin");
  for (const char* key : {"success_rate_with_violation", "success_rate_without_violation", "collision_rate"}) {
    const double v = j[key]["mean"].get<double>();
    if (v < 0.0 || v > 1.0) throw std::invalid_argument(std::string("summary: ") + key + " outside [0, 1]");
  }
  if (!j.contains("episodes") || !j["episodes"].is_number_integer() || j["episodes"].get<int>() < 1) {
    throw std::invalid_argument("summary: episodes must be a positive integer");
  }
}

}  // namespace ssp::sim

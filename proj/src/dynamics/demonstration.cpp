#include "ssp/dynamics/demonstration.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <string>

namespace ssp::dynamics {

void validate(const Demonstration& demo, std::optional<double> max_speed, double slack) {
  if (demo.states.empty()) throw std::invalid_argument("demonstration: no states");
  if (demo.actions.size() + 1 != demo.states.size()) {
    throw std::invalid_argument("demonstration: " + std::to_string(demo.states.size()) +
                                " states need " + std::to_string(demo.states.size() - 1) +
                                " actions, got " + std::to_string(demo.actions.size()));
  }
  if (!(demo.dt > 0.0)) throw std::invalid_argument("demonstration: dt must be positive");
  const auto n = demo.states.front().size();
  const auto m = demo.actions.empty() ? 0 : demo.actions.front().size();
  for (std::size_t t = 0; t < demo.states.size(); ++t) {
    const Vec& s = demo.states[t];
    if (s.size() != n) throw DimensionError("demonstration: ragged state at t=" + std::to_string(t));
    if (!s.allFinite()) throw std::invalid_argument("demonstration: non-finite state at t=" + std::to_string(t));
    if (t + 1 < demo.states.size()) {
      const Vec& a = demo.actions[t];
      if (a.size() != m) throw DimensionError("demonstration: ragged action at t=" + std::to_string(t));
      if (!a.allFinite()) throw std::invalid_argument("demonstration: non-finite action at t=" + std::to_string(t));
      if (max_speed) {
        const double jump = (demo.states[t + 1] - s).lpNorm<Eigen::Infinity>();
        if (jump > *max_speed * demo.dt + slack) {
          throw std::invalid_argument("demonstration: implausible state jump " + std::to_string(jump) +
                                      " at t=" + std::to_string(t));
        }
      }
    }
  }
}

void validate(const Dataset& data, std::optional<double> max_speed, double slack) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      validate(data[i], max_speed, slack);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("trajectory " + std::to_string(i) + ": " + e.what());
    }
  }
}

std::size_t total_transitions(const Dataset& data) {
  std::size_t n = 0;
  for (const auto& d : data) n += d.transitions();
  return n;
}

Dataset position_slice(const Dataset& data, int position_dims, int linear_action_dims) {
  if (position_dims <= 0 || linear_action_dims <= 0) {
    throw std::invalid_argument("position_slice: position substate not configured");
  }
  Dataset out;
  out.reserve(data.size());
  for (const auto& d : data) {
    Demonstration p;
    p.dt = d.dt;
    for (const auto& s : d.states) {
      if (s.size() < position_dims) throw DimensionError("position_slice: state shorter than position block");
      p.states.push_back(s.head(position_dims));
    }
    for (const auto& a : d.actions) {
      if (a.size() < linear_action_dims) throw DimensionError("position_slice: action shorter than linear block");
      p.actions.push_back(a.head(linear_action_dims));
    }
    out.push_back(std::move(p));
  }
  return out;
}

DatasetSplit split_holdout(const Dataset& data, double holdout_fraction) {
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) {
    throw std::invalid_argument("split_holdout: fraction must be in [0, 1)");
  }
  const auto n = data.size();
  auto n_hold = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
  if (holdout_fraction > 0.0 && n_hold == 0 && n > 1) n_hold = 1;
  DatasetSplit split;
  split.train.assign(data.begin(), data.end() - static_cast<std::ptrdiff_t>(n_hold));
  split.holdout.assign(data.end() - static_cast<std::ptrdiff_t>(n_hold), data.end());
  return split;
}

namespace {

nlohmann::json rows_to_json(const std::vector<Vec>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) arr.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  return arr;
}

std::vector<Vec> rows_from_json(const nlohmann::json& arr) {
  std::vector<Vec> rows;
  rows.reserve(arr.size());
  for (const auto& r : arr) {
    const auto v = r.get<std::vector<double>>();
    rows.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  return rows;
}

}  // namespace

void write_jsonl(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& d : data) {
    nlohmann::json line;
    line["dt"] = d.dt;
    line["states"] = rows_to_json(d.states);
    line["actions"] = rows_to_json(d.actions);
    os << line.dump() << '\n';
  }
}

Dataset read_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open demonstrations " + path.string());
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Demonstration d;
      d.dt = j.at("dt").get<double>();
      d.states = rows_from_json(j.at("states"));
      d.actions = rows_from_json(j.at("actions"));
      data.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return data;
}

}  // namespace ssp::dynamics

#include "ssp/control/expert.hpp"

#include <string>

namespace ssp::control {

TaskKind parse_task(std::string_view name) {
  if (name == "reach") return TaskKind::Reach;
  if (name == "transport") return TaskKind::Transport;
  if (name == "path-follow" || name == "path_follow") return TaskKind::PathFollow;
  throw std::invalid_argument("unknown task '" + std::string(name) + "' (expected reach|transport|path-follow)");
}

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Reach: return "reach";
    case TaskKind::Transport: return "transport";
    case TaskKind::PathFollow: return "path-follow";
  }
  return "unknown";
}

ActionVector scripted_expert(const TaskSpec& task, const StateVector& s, bool object_latched) {
  if (task.kind == TaskKind::PathFollow) {
    throw std::invalid_argument("scripted expert: path-follow tasks use the CLF tracker");
  }
  require_dims("scripted expert state", s.size(), task.goal.size());
  require_dims("scripted expert a_max", task.a_max.size(), s.size());
  const bool to_object = task.kind == TaskKind::Transport && !object_latched;
  if (to_object) require_dims("scripted expert object", task.object.size(), s.size());
  const StateVector& target = to_object ? task.object : task.goal;
  const Vec raw = task.gain * (target - s);
  return raw.cwiseMax(-task.a_max).cwiseMin(task.a_max);
}

}  // namespace ssp::control

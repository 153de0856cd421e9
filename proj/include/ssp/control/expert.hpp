#pragma once

#include "ssp/linalg_ad/types.hpp"

#include <string_view>

namespace ssp::control {

enum class TaskKind { Reach, Transport, PathFollow };

TaskKind parse_task(std::string_view name);
std::string_view to_string(TaskKind kind);

struct TaskSpec {
  TaskKind kind = TaskKind::Reach;
  StateVector goal;
  StateVector object;  // transport only
  double gain = 1.5;
  Vec a_max;           // per action entry
  double tolerance = 0.005;
  int position_dims = 3;
};

// Saturated proportional law a = clip(gain * (target - s), +-a_max). The
// target is the object until `object_latched`, then the goal. Action entry i
// drives state entry i, so the action and state dimensions must agree.
ActionVector scripted_expert(const TaskSpec& task, const StateVector& s, bool object_latched = false);

}  // namespace ssp::control

#include "ssp/dynamics/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

namespace ssp::dynamics {

namespace {

using ad::Tape;
using ad::Var;

Var field_on_tape(Tape& tape, const ad::MlpVars& vars, Var states, Var actions, int n_state) {
  return tape.control_affine(ad::forward_mlp(tape, vars, states), actions, n_state);
}

Var step_on_tape(Tape& tape, const ad::MlpVars& vars, Var s, Var a, int n_state, double dt,
                 Integrator method) {
  const Var k1 = field_on_tape(tape, vars, s, a, n_state);
  if (method == Integrator::Euler) return tape.axpy(s, dt, k1);
  const Var k2 = field_on_tape(tape, vars, tape.axpy(s, 0.5 * dt, k1), a, n_state);
  const Var k3 = field_on_tape(tape, vars, tape.axpy(s, 0.5 * dt, k2), a, n_state);
  const Var k4 = field_on_tape(tape, vars, tape.axpy(s, dt, k3), a, n_state);
  const Var acc = tape.add(tape.axpy(tape.axpy(k1, 2.0, k2), 2.0, k3), k4);
  return tape.axpy(s, dt / 6.0, acc);
}

void check_segments(const Dataset& data, std::span<const Segment> segments, int rollout) {
  if (segments.empty()) throw std::invalid_argument("rollout loss: no segments");
  if (rollout < 1) throw std::invalid_argument("rollout loss: rollout must be >= 1");
  for (const auto& seg : segments) {
    if (seg.trajectory >= data.size() ||
        seg.start + static_cast<std::size_t>(rollout) >= data[seg.trajectory].states.size()) {
      throw std::out_of_range("rollout loss: segment exceeds trajectory");
    }
  }
}

// Records the batched multi-step rollout loss; returns the scalar loss node.
Var record_loss(Tape& tape, const ad::MlpVars& vars, const NeuralOdeModel& model,
                const Dataset& data, std::span<const Segment> segments, int rollout,
                Integrator method) {
  const int n = model.n_state();
  const int m = model.n_action();
  const auto batch = static_cast<Eigen::Index>(segments.size());
  const double dt = data[segments[0].trajectory].dt;

  auto gather_states = [&](std::size_t offset) {
    Mat out(n, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto& seg = segments[static_cast<std::size_t>(b)];
      out.col(b) = data[seg.trajectory].states[seg.start + offset];
    }
    return out;
  };
  auto gather_actions = [&](std::size_t offset) {
    Mat out(m, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto& seg = segments[static_cast<std::size_t>(b)];
      out.col(b) = data[seg.trajectory].actions[seg.start + offset];
    }
    return out;
  };

  Var s = tape.constant(gather_states(0));
  Var total{};
  for (int t = 0; t < rollout; ++t) {
    const auto off = static_cast<std::size_t>(t);
    const Var a = tape.constant(gather_actions(off));
    s = step_on_tape(tape, vars, s, a, n, dt, method);
    const Var err = tape.sum(tape.abs(tape.sub(s, tape.constant(gather_states(off + 1)))));
    total = t == 0 ? err : tape.add(total, err);
  }
  return tape.scale(total, 1.0 / (static_cast<double>(batch) * rollout));
}

void check_model_data(const NeuralOdeModel& model, const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("train: dataset is empty");
  for (const auto& d : data) {
    if (d.states.empty() || d.actions.empty()) throw std::invalid_argument("train: empty trajectory");
    require_dims("train state", d.states.front().size(), model.n_state());
    require_dims("train action", d.actions.front().size(), model.n_action());
  }
}

struct RmsState {
  Mat w1, w2;
  Vec b1, b2;
};

template <typename T>
void rms_update(T& param, T& cache, const T& grad, const TrainConfig& c) {
  cache = c.rms_decay * cache + (1.0 - c.rms_decay) * grad.cwiseProduct(grad);
  param.array() -= c.lr * grad.array() / (cache.array().sqrt() + c.rms_eps);
}

}  // namespace

double rollout_loss(const NeuralOdeModel& model, const Dataset& data,
                    std::span<const Segment> segments, int rollout, Integrator method) {
  check_model_data(model, data);
  check_segments(data, segments, rollout);
  Tape tape;
  const ad::MlpVars vars{tape.constant(model.params().w1), tape.constant(model.params().b1),
                         tape.constant(model.params().w2), tape.constant(model.params().b2)};
  return tape.scalar_value(record_loss(tape, vars, model, data, segments, rollout, method));
}

LossGradient rollout_loss_gradient(const NeuralOdeModel& model, const Dataset& data,
                                   std::span<const Segment> segments, int rollout,
                                   Integrator method) {
  check_model_data(model, data);
  check_segments(data, segments, rollout);
  Tape tape;
  const ad::MlpVars vars = ad::record_params(tape, model.params());
  const Var loss = record_loss(tape, vars, model, data, segments, rollout, method);
  const ad::Gradients grads = tape.backward(loss);
  ad::MlpParams g;
  g.w1 = grads[vars.w1];
  g.b1 = grads[vars.b1].col(0);
  g.w2 = grads[vars.w2];
  g.b2 = grads[vars.b2].col(0);
  return LossGradient{tape.scalar_value(loss), g.flatten()};
}

TrainResult train(NeuralOdeModel model, const Dataset& data, const TrainConfig& config) {
  check_model_data(model, data);
  if (config.epochs < 1 || config.batch < 1 || config.rollout < 1) {
    throw std::invalid_argument("train: epochs, batch and rollout must be positive");
  }
  if (!(config.lr > 0.0)) throw std::invalid_argument("train: learning rate must be positive");

  std::vector<Segment> candidates;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto len = data[i].states.size();
    if (len <= static_cast<std::size_t>(config.rollout)) {
      throw std::invalid_argument("train: trajectory " + std::to_string(i) + " has " +
                                  std::to_string(len) + " states, needs more than rollout " +
                                  std::to_string(config.rollout));
    }
    for (std::size_t s = 0; s + static_cast<std::size_t>(config.rollout) < len; ++s) {
      candidates.push_back(Segment{i, s});
    }
  }

  int batches = config.batches_per_epoch;
  if (batches <= 0) {
    const auto per_batch = static_cast<std::size_t>(config.batch) * static_cast<std::size_t>(config.rollout);
    batches = static_cast<int>((total_transitions(data) + per_batch - 1) / per_batch);
    batches = std::max(batches, 1);
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);

  ad::MlpParams params = model.params();
  RmsState cache{Mat::Zero(params.w1.rows(), params.w1.cols()),
                 Mat::Zero(params.w2.rows(), params.w2.cols()), Vec::Zero(params.b1.size()),
                 Vec::Zero(params.b2.size())};

  std::vector<Segment> batch(static_cast<std::size_t>(config.batch));
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(config.epochs));
  Tape tape;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int it = 0; it < batches; ++it) {
      for (auto& seg : batch) seg = candidates[pick(rng)];
      tape.clear();
      const ad::MlpVars vars = ad::record_params(tape, params);
      const Var loss = record_loss(tape, vars, model, data, batch, config.rollout, config.method);
      const double value = tape.scalar_value(loss);
      if (!std::isfinite(value)) {
        throw TrainingDiverged(epoch, "train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
      }
      const ad::Gradients grads = tape.backward(loss);
      rms_update(params.w1, cache.w1, Mat(grads[vars.w1]), config);
      rms_update(params.w2, cache.w2, Mat(grads[vars.w2]), config);
      rms_update(params.b1, cache.b1, Vec(grads[vars.b1].col(0)), config);
      rms_update(params.b2, cache.b2, Vec(grads[vars.b2].col(0)), config);
      epoch_loss += value;
    }
    curve.push_back(epoch_loss / batches);
  }

  model.set_params(std::move(params));
  model.mark_trained();
  return TrainResult{std::move(model), std::move(curve)};
}

TrainResult derive_position_model(const NeuralOdeModel& full, const Dataset& data,
                                  const TrainConfig& config) {
  const NeuralOdeConfig& fc = full.config();
  if (fc.position_dims <= 0 || fc.linear_action_dims <= 0 || fc.position_dims > fc.n_state ||
      fc.linear_action_dims > fc.n_action) {
    throw std::invalid_argument("derive_position_model: position substate not configured");
  }
  NeuralOdeConfig pc = fc;
  pc.n_state = fc.position_dims;
  pc.n_action = fc.linear_action_dims;
  const Dataset slice = position_slice(data, fc.position_dims, fc.linear_action_dims);
  NeuralOdeModel init = NeuralOdeModel::initialize(pc, full.seed() + 1);
  return train(std::move(init), slice, config);
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& curve) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << "epoch,loss\n" << std::setprecision(17);
  for (std::size_t i = 0; i < curve.size(); ++i) os << i << ',' << curve[i] << '\n';
}

}  // namespace ssp::dynamics

#pragma once

#include "ssp/dynamics/demonstration.hpp"
#include "ssp/dynamics/integrate.hpp"
#include "ssp/dynamics/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ssp::dynamics {

struct TrainConfig {
  int epochs = 200;
  int batch = 20;
  int rollout = 10;
  double lr = 1e-3;
  double rms_decay = 0.99;
  double rms_eps = 1e-8;
  std::uint64_t seed = 0;
  Integrator method = Integrator::Rk4;
  // 0 selects ceil(transitions / (batch * rollout)), i.e. every transition
  // is visited once per epoch in expectation.
  int batches_per_epoch = 0;
};

struct TrainResult {
  NeuralOdeModel model;
  std::vector<double> loss_curve;  // mean batch loss per epoch
};

class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(int epoch, const std::string& what)
      : NumericalError(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// Start index `start` of trajectory `trajectory`; covers states [start, start + rollout].
struct Segment {
  std::size_t trajectory = 0;
  std::size_t start = 0;
};

// L = 1/(B h) sum_j sum_t |s_hat_t - s_t|_1 with s_hat fed back through the model.
double rollout_loss(const NeuralOdeModel& model, const Dataset& data,
                    std::span<const Segment> segments, int rollout,
                    Integrator method = Integrator::Rk4);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // MlpParams::flatten() layout
};

LossGradient rollout_loss_gradient(const NeuralOdeModel& model, const Dataset& data,
                                   std::span<const Segment> segments, int rollout,
                                   Integrator method = Integrator::Rk4);

TrainResult train(NeuralOdeModel model, const Dataset& data, const TrainConfig& config);

// Position-only model on the leading position/linear-velocity block, trained
// with the same configuration. Throws if the position block is not configured.
TrainResult derive_position_model(const NeuralOdeModel& full, const Dataset& data,
                                  const TrainConfig& config);

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& curve);

}  // namespace ssp::dynamics

#pragma once

#include "ssp/linalg_ad/mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>

namespace ssp::dynamics {

// s_dot = f(s) + g(s) a
class ControlAffineModel {
 public:
  virtual ~ControlAffineModel() = default;

  virtual int n_state() const = 0;
  virtual int n_action() const = 0;

  // Drift f(s) and control matrix g(s) (n_state x n_action) in one pass.
  virtual void evaluate(const Vec& s, Vec& drift, Mat& control) const = 0;

  // False until a learned model has been trained or loaded.
  virtual bool ready() const { return true; }

  Vec drift(const Vec& s) const;
  Mat control_matrix(const Vec& s) const;
  Vec eval_field(const StateVector& s, const ActionVector& a) const;
};

// f(s) = A s + c, g(s) = B. Used for ground truth and injected test fields.
class LinearAffineModel final : public ControlAffineModel {
 public:
  LinearAffineModel(Mat a, Mat b, Vec c = Vec());

  int n_state() const override { return static_cast<int>(a_.rows()); }
  int n_action() const override { return static_cast<int>(b_.cols()); }
  void evaluate(const Vec& s, Vec& drift, Mat& control) const override;

  const Mat& a() const { return a_; }
  const Mat& b() const { return b_; }
  const Vec& c() const { return c_; }

  static LinearAffineModel integrator(int n);

 private:
  Mat a_;
  Mat b_;
  Vec c_;
};

struct NeuralOdeConfig {
  int n_state = 4;
  int n_action = 4;
  int hidden = 64;
  double dt = 0.1;
  int position_dims = 3;       // leading state entries that are end-effector position
  int linear_action_dims = 3;  // leading action entries that are linear velocity
};

// Control-affine Neural ODE. The MLP output (n_state * (1 + n_action)) is split
// into f (first n_state entries) and g (the rest, row-major n_state x n_action).
class NeuralOdeModel final : public ControlAffineModel {
 public:
  NeuralOdeModel(NeuralOdeConfig config, ad::MlpParams params, std::uint64_t seed = 0);

  static NeuralOdeModel initialize(const NeuralOdeConfig& config, std::uint64_t seed);

  int n_state() const override { return config_.n_state; }
  int n_action() const override { return config_.n_action; }
  void evaluate(const Vec& s, Vec& drift, Mat& control) const override;
  bool ready() const override { return trained_; }

  const NeuralOdeConfig& config() const { return config_; }
  const ad::MlpParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  double dt() const { return config_.dt; }

  void set_params(ad::MlpParams params);
  void mark_trained(bool trained = true) { trained_ = trained; }

  void save(const std::filesystem::path& path) const;
  static NeuralOdeModel load(const std::filesystem::path& path);

 private:
  NeuralOdeConfig config_;
  ad::MlpParams params_;
  std::uint64_t seed_ = 0;
  bool trained_ = false;
};

}  // namespace ssp::dynamics

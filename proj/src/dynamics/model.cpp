#include "ssp/dynamics/model.hpp"

namespace ssp::dynamics {

Vec ControlAffineModel::drift(const Vec& s) const {
  Vec f;
  Mat g;
  evaluate(s, f, g);
  return f;
}

Mat ControlAffineModel::control_matrix(const Vec& s) const {
  Vec f;
  Mat g;
  evaluate(s, f, g);
  return g;
}

Vec ControlAffineModel::eval_field(const StateVector& s, const ActionVector& a) const {
  require_dims("eval_field state", s.size(), n_state());
  require_dims("eval_field action", a.size(), n_action());
  Vec f;
  Mat g;
  evaluate(s, f, g);
  return f + g * a;
}

LinearAffineModel::LinearAffineModel(Mat a, Mat b, Vec c)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
  if (a_.rows() != a_.cols()) throw DimensionError("linear model: A must be square");
  require_dims("linear model B rows", b_.rows(), a_.rows());
  if (c_.size() == 0) c_ = Vec::Zero(a_.rows());
  require_dims("linear model offset", c_.size(), a_.rows());
}

void LinearAffineModel::evaluate(const Vec& s, Vec& drift, Mat& control) const {
  require_dims("linear model state", s.size(), n_state());
  drift = a_ * s + c_;
  control = b_;
}

LinearAffineModel LinearAffineModel::integrator(int n) {
  return LinearAffineModel(Mat::Zero(n, n), Mat::Identity(n, n));
}

namespace {

int output_dim(const NeuralOdeConfig& c) { return c.n_state * (1 + c.n_action); }

void validate(const NeuralOdeConfig& c) {
  if (c.n_state <= 0 || c.n_action <= 0 || c.hidden <= 0) {
    throw DimensionError("neural ode: dimensions must be positive");
  }
  if (!(c.dt > 0.0)) throw std::invalid_argument("neural ode: dt must be positive");
}

}  // namespace

NeuralOdeModel::NeuralOdeModel(NeuralOdeConfig config, ad::MlpParams params, std::uint64_t seed)
    : config_(config), params_(std::move(params)), seed_(seed) {
  validate(config_);
  require_dims("neural ode input", params_.input_dim(), config_.n_state);
  require_dims("neural ode output", params_.output_dim(), output_dim(config_));
}

NeuralOdeModel NeuralOdeModel::initialize(const NeuralOdeConfig& config, std::uint64_t seed) {
  validate(config);
  return NeuralOdeModel(
      config, ad::MlpParams::random(config.n_state, config.hidden, output_dim(config), seed), seed);
}

void NeuralOdeModel::evaluate(const Vec& s, Vec& drift, Mat& control) const {
  require_dims("neural ode state", s.size(), config_.n_state);
  const Vec out = ad::forward_mlp(params_, s);
  const int n = config_.n_state;
  const int m = config_.n_action;
  drift = out.head(n);
  control.resize(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) control(i, j) = out(n + i * m + j);
}

void NeuralOdeModel::set_params(ad::MlpParams params) {
  require_dims("neural ode input", params.input_dim(), config_.n_state);
  require_dims("neural ode output", params.output_dim(), output_dim(config_));
  params_ = std::move(params);
}

void NeuralOdeModel::save(const std::filesystem::path& path) const {
  nlohmann::json extra;
  extra["model"] = {{"n_state", config_.n_state},
                    {"n_action", config_.n_action},
                    {"hidden", config_.hidden},
                    {"dt", config_.dt},
                    {"position_dims", config_.position_dims},
                    {"linear_action_dims", config_.linear_action_dims},
                    {"trained", trained_}};
  ad::write_param_file(path, params_, seed_, extra);
}

NeuralOdeModel NeuralOdeModel::load(const std::filesystem::path& path) {
  ad::ParamFile file = ad::read_param_file(path);
  const auto& m = file.header.at("model");
  NeuralOdeConfig config;
  config.n_state = m.at("n_state").get<int>();
  config.n_action = m.at("n_action").get<int>();
  config.hidden = m.at("hidden").get<int>();
  config.dt = m.at("dt").get<double>();
  config.position_dims = m.value("position_dims", 3);
  config.linear_action_dims = m.value("linear_action_dims", 3);
  NeuralOdeModel model(config, std::move(file.params), file.header.value("seed", std::uint64_t{0}));
  model.mark_trained(m.value("trained", false));
  return model;
}

}  // namespace ssp::dynamics

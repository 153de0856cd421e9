#include "ssp/linalg_ad/mlp.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace ssp::ad {

std::size_t MlpParams::size() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for (Eigen::Index r = 0; r < w1.rows(); ++r)
    for (Eigen::Index c = 0; c < w1.cols(); ++c) flat.push_back(w1(r, c));
  for (Eigen::Index i = 0; i < b1.size(); ++i) flat.push_back(b1(i));
  for (Eigen::Index r = 0; r < w2.rows(); ++r)
    for (Eigen::Index c = 0; c < w2.cols(); ++c) flat.push_back(w2(r, c));
  for (Eigen::Index i = 0; i < b2.size(); ++i) flat.push_back(b2(i));
  return flat;
}

MlpParams MlpParams::unflatten(int input, int hidden, int output, std::span<const double> flat) {
  MlpParams p = zeros(input, hidden, output);
  if (flat.size() != p.size()) {
    throw DimensionError("mlp: flat parameter vector has " + std::to_string(flat.size()) +
                         " entries, expected " + std::to_string(p.size()));
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < p.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < p.w1.cols(); ++c) p.w1(r, c) = flat[k++];
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1(i) = flat[k++];
  for (Eigen::Index r = 0; r < p.w2.rows(); ++r)
    for (Eigen::Index c = 0; c < p.w2.cols(); ++c) p.w2(r, c) = flat[k++];
  for (Eigen::Index i = 0; i < p.b2.size(); ++i) p.b2(i) = flat[k++];
  return p;
}

MlpParams MlpParams::zeros(int input, int hidden, int output) {
  if (input <= 0 || hidden <= 0 || output <= 0) {
    throw DimensionError("mlp: layer dimensions must be positive");
  }
  MlpParams p;
  p.w1 = Mat::Zero(hidden, input);
  p.b1 = Vec::Zero(hidden);
  p.w2 = Mat::Zero(output, hidden);
  p.b2 = Vec::Zero(output);
  return p;
}

MlpParams MlpParams::random(int input, int hidden, int output, std::uint64_t seed) {
  MlpParams p = zeros(input, hidden, output);
  std::mt19937_64 rng(seed);
  const double k1 = 1.0 / std::sqrt(static_cast<double>(input));
  const double k2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> u1(-k1, k1);
  std::uniform_real_distribution<double> u2(-k2, k2);
  for (Eigen::Index r = 0; r < p.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < p.w1.cols(); ++c) p.w1(r, c) = u1(rng);
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1(i) = u1(rng);
  for (Eigen::Index r = 0; r < p.w2.rows(); ++r)
    for (Eigen::Index c = 0; c < p.w2.cols(); ++c) p.w2(r, c) = u2(rng);
  for (Eigen::Index i = 0; i < p.b2.size(); ++i) p.b2(i) = u2(rng);
  return p;
}

MlpVars record_params(Tape& tape, const MlpParams& params) {
  return MlpVars{tape.parameter(params.w1), tape.parameter(params.b1), tape.parameter(params.w2),
                 tape.parameter(params.b2)};
}

Var forward_mlp(Tape& tape, const MlpVars& vars, Var input) {
  const Var pre = tape.add_column(tape.matmul(vars.w1, input), vars.b1);
  const Var hidden = tape.gelu(pre);
  return tape.add_column(tape.matmul(vars.w2, hidden), vars.b2);
}

Vec forward_mlp(const MlpParams& params, const Vec& input, Tape* record) {
  require_dims("mlp input", input.size(), params.input_dim());
  if (record != nullptr) {
    const MlpVars vars = record_params(*record, params);
    const Var out = forward_mlp(*record, vars, record->constant(input));
    return record->value(out).col(0);
  }
  Vec hidden = params.w1 * input + params.b1;
  for (Eigen::Index i = 0; i < hidden.size(); ++i) hidden(i) = gelu(hidden(i));
  return params.w2 * hidden + params.b2;
}

namespace {

void write_le_doubles(std::ostream& os, const std::vector<double>& values) {
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

std::vector<double> read_le_doubles(std::istream& is, std::size_t count) {
  std::vector<double> values(count);
  for (std::size_t k = 0; k < count; ++k) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) {
      throw std::runtime_error("parameter file: blob truncated at value " + std::to_string(k));
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    values[k] = std::bit_cast<double>(bits);
  }
  return values;
}

}  // namespace

void write_param_file(const std::filesystem::path& path, const MlpParams& params,
                      std::uint64_t seed, const nlohmann::json& extra) {
  nlohmann::json header = extra;
  header["format"] = "ssp-mlp";
  header["format_version"] = 1;
  header["layer_dims"] = {params.input_dim(), params.hidden_dim(), params.output_dim()};
  header["activation"] = "gelu_tanh";
  header["seed"] = seed;
  header["n_params"] = params.size();
  header["byte_order"] = "little";

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << header.dump() << '\n';
  write_le_doubles(os, params.flatten());
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

ParamFile read_param_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open parameter file " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("parameter file " + path.string() + " is empty");
  ParamFile file;
  file.header = nlohmann::json::parse(line);
  if (file.header.value("format", "") != "ssp-mlp") {
    throw std::runtime_error("parameter file " + path.string() + " has unknown format");
  }
  const auto dims = file.header.at("layer_dims").get<std::vector<int>>();
  if (dims.size() != 3) throw std::runtime_error("parameter file: layer_dims must have 3 entries");
  const auto count = file.header.at("n_params").get<std::size_t>();
  const std::vector<double> flat = read_le_doubles(is, count);
  file.params = MlpParams::unflatten(dims[0], dims[1], dims[2], flat);
  return file;
}

}  // namespace ssp::ad

#pragma once

#include "ssp/linalg_ad/tape.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ssp::ad {

// One-hidden-layer perceptron: out = W2 * gelu(W1 * in + b1) + b2.
struct MlpParams {
  Mat w1;  // hidden x input
  Vec b1;  // hidden
  Mat w2;  // output x hidden
  Vec b2;  // output

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int output_dim() const { return static_cast<int>(w2.rows()); }
  std::size_t size() const;

  // Flat layout: W1 row-major, b1, W2 row-major, b2.
  std::vector<double> flatten() const;
  static MlpParams unflatten(int input, int hidden, int output, std::span<const double> flat);

  static MlpParams zeros(int input, int hidden, int output);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static MlpParams random(int input, int hidden, int output, std::uint64_t seed);
};

struct MlpVars {
  Var w1, b1, w2, b2;
};

MlpVars record_params(Tape& tape, const MlpParams& params);

// Batched forward on the tape; `input` holds one sample per column.
Var forward_mlp(Tape& tape, const MlpVars& vars, Var input);

// Single-sample forward. When `record` is given, every intermediate is
// recorded on it (parameters as trainable leaves).
Vec forward_mlp(const MlpParams& params, const Vec& input, Tape* record = nullptr);

// Parameter file: one line of JSON header, then the flat parameter vector as
// little-endian IEEE-754 doubles.
struct ParamFile {
  nlohmann::json header;
  MlpParams params;
};

void write_param_file(const std::filesystem::path& path, const MlpParams& params,
                      std::uint64_t seed, const nlohmann::json& extra = nlohmann::json::object());
ParamFile read_param_file(const std::filesystem::path& path);

}  // namespace ssp::ad

#pragma once

#include "dialact/tensor.hpp"

#include <cstdint>
#include <vector>

namespace dialact {

struct AdamState {
  std::vector<std::vector<double>> m;  // first moments, one array per parameter
  std::vector<std::vector<double>> v;  // second moments
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-3;

  // Zero moments shaped like `params`.
  static AdamState for_params(const ParamList& params, double learning_rate, double beta1 = 0.9,
                              double beta2 = 0.999, double epsilon = 1e-8);
};

// One bias-corrected Adam step on every parameter using its grad buffer.
// Lazily shapes empty moment arrays; throws ShapeError if existing moments
// do not match.
void adam_update(const ParamList& params, AdamState& state);

// Value form: returns the updated parameters and leaves the inputs alone.
struct AdamResult {
  std::vector<double> params;
  AdamState state;
};
AdamResult adam_update(const std::vector<double>& params, const std::vector<double>& grads,
                       const AdamState& state);

}  // namespace dialact

#include "dialact/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace dialact {

void zero_grads(const ParamList& params) {
  for (const auto& p : params) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

double grad_norm(const ParamList& params) {
  double sq = 0.0;
  for (const auto& p : params)
    for (double g : p.grad) sq += g * g;
  return std::sqrt(sq);
}

double clip_grad_norm(const ParamList& params, double max_norm) {
  const double norm = grad_norm(params);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& p : params)
      for (double& g : p.grad) g *= scale;
  }
  return norm;
}

}  // namespace dialact

#include "dialact/adam.hpp"

#include "dialact/errors.hpp"

#include <cmath>
#include <string>

namespace dialact {

namespace {

void step_array(std::span<double> param, std::span<const double> grad, std::vector<double>& m,
                std::vector<double>& v, const AdamState& s, double bc1, double bc2) {
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double g = grad[k];
    m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * g;
    v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * g * g;
    const double m_hat = m[k] / bc1;
    const double v_hat = v[k] / bc2;
    param[k] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
  }
}

}  // namespace

AdamState AdamState::for_params(const ParamList& params, double learning_rate, double beta1,
                                double beta2, double epsilon) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  for (const auto& p : params) {
    s.m.emplace_back(p.size(), 0.0);
    s.v.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_update(const ParamList& params, AdamState& state) {
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam_update: state tracks " + std::to_string(state.m.size()) +
                     " arrays, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (p.grad.size() != p.value.size() || state.m[i].size() != p.size() ||
        state.v[i].size() != p.size())
      throw ShapeError("adam_update: shape mismatch for " + p.name);
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i)
    step_array(params[i].value, params[i].grad, state.m[i], state.v[i], state, bc1, bc2);
}

AdamResult adam_update(const std::vector<double>& params, const std::vector<double>& grads,
                       const AdamState& state) {
  if (params.size() != grads.size()) throw ShapeError("adam_update: params/grads length mismatch");
  AdamResult out{params, state};
  std::vector<double> g = grads;
  ParamList list{{"x", params.size(), 1, std::span<double>(out.params), std::span<double>(g)}};
  adam_update(list, out.state);
  return out;
}

}  // namespace dialact

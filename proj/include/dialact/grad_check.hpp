#pragma once

#include "dialact/tensor.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace dialact {

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;   // at worst_index
  double numeric = 0.0;    // at worst_index
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;

  bool passed(double tol) const { return max_rel_error < tol; }
};

// Compares the analytic gradients already stored in each ParamRef's grad
// span against central differences of loss_fn, perturbing the value spans in
// place (restored afterwards). Relative error per coordinate is
// |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(const std::function<double()>& loss_fn, const ParamList& params,
                           double eps = 1e-5);

// Same check for a loss given as a sum of terms. Differences are taken per
// term and then summed, so large terms a coordinate does not touch add no
// rounding noise to the numeric derivative.
GradCheckReport grad_check_terms(const std::function<std::vector<double>()>& terms_fn,
                                 const ParamList& params, double eps = 1e-5);

}  // namespace dialact

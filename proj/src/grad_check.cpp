#include "dialact/grad_check.hpp"

#include "dialact/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dialact {

GradCheckReport grad_check(const std::function<double()>& loss_fn, const ParamList& params,
                           double eps) {
  return grad_check_terms([&] { return std::vector<double>{loss_fn()}; }, params, eps);
}

GradCheckReport grad_check_terms(const std::function<std::vector<double>()>& terms_fn,
                                 const ParamList& params, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw InvalidArgument("grad_check: eps must be positive and finite");
  const std::vector<double> base = terms_fn();
  if (base.empty()) throw InvalidArgument("grad_check: loss has no terms");
  if (terms_fn() != base)
    throw PreconditionError("grad_check: loss function is not deterministic");

  GradCheckReport report;
  for (const auto& p : params) {
    ParamCheck pc;
    pc.name = p.name;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double saved = p.value[k];
      p.value[k] = saved + eps;
      const std::vector<double> up = terms_fn();
      p.value[k] = saved - eps;
      const std::vector<double> down = terms_fn();
      p.value[k] = saved;
      if (up.size() != base.size() || down.size() != base.size())
        throw PreconditionError("grad_check: number of loss terms changed");

      double diff = 0.0;
      for (std::size_t i = 0; i < up.size(); ++i) diff += up[i] - down[i];
      const double numeric = diff / (2.0 * eps);
      const double analytic = p.grad[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      double err = std::abs(analytic - numeric) / denom;
      if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
      if (err > pc.max_rel_error || k == 0) {
        pc.max_rel_error = err;
        pc.worst_index = k;
        pc.analytic = analytic;
        pc.numeric = numeric;
      }
      ++report.coordinates;
    }
    if (pc.max_rel_error > report.max_rel_error || report.params.empty()) {
      report.max_rel_error = pc.max_rel_error;
      report.worst_param = pc.name;
      report.worst_index = pc.worst_index;
    }
    report.params.push_back(std::move(pc));
  }
  return report;
}

}  // namespace dialact

#pragma once

#include "dialact/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace dialact::testing {

// Central-difference oracle, independent of the library's checker.
inline double max_rel_error(const std::function<double()>& f, const ParamList& params, double eps = 1e-5) {
  double worst = 0.0;
  for (const auto& p : params)
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double saved = p.value[k];
      p.value[k] = saved + eps;
      const double up = f();
      p.value[k] = saved - eps;
      const double down = f();
      p.value[k] = saved;
      const double n = (up - down) / (2.0 * eps);
      const double a = p.grad[k];
      worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}));
    }
  return worst;
}

// Same oracle for a loss given as a sum of terms; differences are taken per
// term before summing, which keeps rounding noise at the scale of one term.
inline double max_rel_error_terms(const std::function<std::vector<double>()>& f, const ParamList& params,
                                  double eps = 1e-5) {
  double worst = 0.0;
  for (const auto& p : params)
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double saved = p.value[k];
      p.value[k] = saved + eps;
      const auto up = f();
      p.value[k] = saved - eps;
      const auto down = f();
      p.value[k] = saved;
      double diff = 0.0;
      for (std::size_t i = 0; i < up.size(); ++i) diff += up[i] - down[i];
      const double n = diff / (2.0 * eps);
      const double a = p.grad[k];
      worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}));
    }
  return worst;
}

inline std::vector<double> terms_of(const Mat& m) { return {m.data(), m.data() + m.size()}; }
inline std::vector<double> terms_of(const Vec& v) { return {v.data(), v.data() + v.size()}; }

inline void fill_random(const ParamList& params, std::mt19937_64& gen, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (const auto& p : params)
    for (double& v : p.value) v = u(gen);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dialact_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dialact::testing

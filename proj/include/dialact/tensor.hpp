#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dialact {

// Row-major so a block of consecutive rows is one contiguous range, which
// lets gate blocks and checkpoint arrays be addressed as flat spans.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

// A named parameter array paired with its gradient buffer.
struct ParamRef {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<double> value;
  std::span<double> grad;

  std::size_t size() const { return value.size(); }
};

using ParamList = std::vector<ParamRef>;

inline std::span<double> as_span(Mat& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> as_span(Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

inline void add_param(ParamList& out, std::string name, Mat& value, Mat& grad) {
  out.push_back({std::move(name), static_cast<std::size_t>(value.rows()),
                 static_cast<std::size_t>(value.cols()), as_span(value), as_span(grad)});
}

inline void add_param(ParamList& out, std::string name, Vec& value, Vec& grad) {
  out.push_back({std::move(name), static_cast<std::size_t>(value.size()), 1, as_span(value),
                 as_span(grad)});
}

void zero_grads(const ParamList& params);
double grad_norm(const ParamList& params);
// Scales all gradients so the global L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(const ParamList& params, double max_norm);

}  // namespace dialact

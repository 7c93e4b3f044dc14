#pragma once

#include "dialact/grad_check.hpp"
#include "dialact/joint_model.hpp"
#include "dialact/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dialact {

// Problem sizes for the joint-model gradient check.
struct GradCheckDims {
  int vocab = 12;
  int embed = 8;
  int hidden = 8;
  int M = 5;
  int N = 3;
  int K = 4;
  int T = 6;  // max utterance length
  int I = 3;  // window length
  int batch = 2;

  ModelDims model() const { return {vocab, embed, hidden, M, N, K}; }
};

// "embed=8,hidden=8,M=5" style overrides on top of the defaults.
GradCheckDims parse_gradcheck_dims(const std::string& text);

struct GradCheckOptions {
  double eps = 1e-5;
  double weight_jitter = 1.0;  // uniform noise added to every initialized parameter
  LossWeights weights;
  // Perturbs the analytic gradient of every parameter whose name contains
  // this string (negative control).
  std::optional<std::string> corrupt_param;
  // Restricts the check to parameters whose name starts with this prefix.
  std::string only_prefix;
};

// Random session of `length` turns with valid labels for the given sizes.
EncodedSession random_session(Rng& rng, const GradCheckDims& dims, std::size_t length);

// Every scalar term of the joint window loss (one per token, intent label and
// action label), weighted, in inference mode. Their sum is the objective.
std::vector<double> joint_loss_terms(const EncodedSession& session, const DialogWindow& window,
                                     const JointParams& p, const LossWeights& weights = {});

// Joint model with random weights (biases included) on a random batch of
// windows, checked against central differences of the batch-mean loss.
GradCheckReport joint_grad_check(const GradCheckDims& dims, std::uint64_t seed, const GradCheckOptions& opts = {});

}  // namespace dialact

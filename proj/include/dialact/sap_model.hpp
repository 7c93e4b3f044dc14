#pragma once

#include "dialact/lstm.hpp"
#include "dialact/rng.hpp"
#include "dialact/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace dialact {

struct SapDims {
  Eigen::Index input_dim = 0;  // M + N
  Eigen::Index hidden_dim = 32;
  Eigen::Index num_actions = 0;  // K
};

// biLSTM over the per-turn feature history with one-vs-all sigmoid outputs
// read from both directions at the last position.
struct SapParams {
  LstmParams sap_fwd;
  LstmParams sap_bwd;
  Mat w_act_fwd;  // K x H
  Mat w_act_bwd;  // K x H
  Vec b_act;      // K

  static SapParams zeros(const SapDims& dims);
  static SapParams init(const SapDims& dims, Rng& rng);

  SapDims dims() const;
  void collect(SapParams& grad, const std::string& prefix, ParamList& out);
};

struct TurnFeature {
  Vec values;
  bool is_padding = false;

  static TurnFeature padding(Eigen::Index dim) { return {Vec::Zero(dim), true}; }
};

struct SapOutput {
  Vec probs;  // K
  BiLstmTrace trace;
};

// history must hold exactly history_len turns and its last turn must not be
// padding.
SapOutput sap_forward(std::span<const TurnFeature> history, const SapParams& p,
                      std::size_t history_len);

// Accumulates parameter gradients and returns d(history) as I x (M+N).
Mat sap_backward(const SapOutput& out, const SapParams& p, const Vec& d_logits, SapParams& grad);

// Binary aggregate of an utterance's tag types (positions 0..M-1) and
// intents (positions M..M+N-1).
TurnFeature encode_oracle_turn(std::span<const int> tags, std::span<const int> intents,
                               Eigen::Index num_tags, Eigen::Index num_intents);

double sap_loss(const Vec& probs, const Vec& gold_actions);

}  // namespace dialact

#pragma once

#include "dialact/functional.hpp"
#include "dialact/lstm.hpp"
#include "dialact/rng.hpp"
#include "dialact/tensor.hpp"

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace dialact {

struct NluDims {
  Eigen::Index vocab_size = 0;
  Eigen::Index embed_dim = 32;
  Eigen::Index hidden_dim = 32;
  Eigen::Index num_tags = 0;     // M
  Eigen::Index num_intents = 0;  // N

  Eigen::Index feature_dim() const { return num_tags + num_intents; }
};

// Multi-task NLU network: shared embedding + biLSTM trunk feeding a per-token
// softmax tagger, an intent LSTM with one-vs-all sigmoids, and a feature LSTM
// whose final hidden (size M+N) is the turn representation handed to SAP.
struct NluParams {
  Mat embedding;  // vocab x embed
  LstmParams trunk_fwd;
  LstmParams trunk_bwd;
  Mat w_tag_fwd;  // M x H
  Mat w_tag_bwd;  // M x H
  Vec b_tag;      // M
  LstmParams intent_lstm;   // 2H -> H
  Mat w_int;                // N x H
  Vec b_int;                // N
  LstmParams feature_lstm;  // 2H -> M+N

  static NluParams zeros(const NluDims& dims);
  static NluParams init(const NluDims& dims, Rng& rng);

  NluDims dims() const;
  void collect(NluParams& grad, const std::string& prefix, ParamList& out);
};

struct NluTrace {
  std::vector<int> word_ids;
  Mat emb_mask;     // T x E dropout mask
  Mat emb;          // T x E after dropout
  BiLstmTrace trunk;
  Mat concat_mask;  // T x 2H dropout mask
  Mat concat;       // T x 2H after dropout
  LstmTrace intent;
  LstmTrace feature;
};

struct NluOutput {
  Mat tag_probs;     // T x M, rows are distributions
  Vec intent_probs;  // N
  Vec feature;       // M+N
  NluTrace trace;
};

NluOutput nlu_forward(std::span<const int> word_ids, const NluParams& p, bool training,
                      double dropout_rate, Rng& rng);

// Accumulates parameter gradients given gradients w.r.t. the tag logits
// (T x M), intent logits (N) and the feature vector (M+N). Any of them may be
// empty to mean zero.
void nlu_backward(const NluOutput& out, const NluParams& p, const Mat& d_tag_logits,
                  const Vec& d_intent_logits, const Vec& d_feature, NluParams& grad);

// Per-token argmax, lowest index on ties.
std::vector<int> decode_tags(const Mat& tag_probs);

// { k : probs[k] >= threshold }, ascending.
std::vector<int> decode_multilabel(const Vec& probs, double threshold);

struct NluLoss {
  double tag = 0.0;
  double intent = 0.0;
};

NluLoss nlu_loss(const NluOutput& out, std::span<const int> gold_tags, const Vec& gold_intents);

struct NluLossGrad {
  Mat d_tag_logits;
  Vec d_intent_logits;
};

NluLossGrad nlu_loss_grad(const NluOutput& out, std::span<const int> gold_tags,
                          const Vec& gold_intents);

}  // namespace dialact

#pragma once

#include "dialact/corpus.hpp"
#include "dialact/nlu_model.hpp"
#include "dialact/rng.hpp"
#include "dialact/sap_model.hpp"

#include <string>

namespace dialact {

struct ModelDims {
  Eigen::Index vocab_size = 0;
  Eigen::Index embed_dim = 32;
  Eigen::Index hidden_dim = 32;
  Eigen::Index num_tags = 0;     // M
  Eigen::Index num_intents = 0;  // N
  Eigen::Index num_actions = 0;  // K

  NluDims nlu() const { return {vocab_size, embed_dim, hidden_dim, num_tags, num_intents}; }
  SapDims sap() const { return {num_tags + num_intents, hidden_dim, num_actions}; }
  static ModelDims from_vocabs(const VocabSet& v, Eigen::Index embed_dim, Eigen::Index hidden_dim);
};

// SAP stacked over a history of NLU units.
struct JointParams {
  NluParams nlu;
  SapParams sap;

  static JointParams zeros(const ModelDims& dims);
  static JointParams init(const ModelDims& dims, Rng& nlu_rng, Rng& sap_rng);
  JointParams zeros_like() const { return zeros(dims()); }

  ModelDims dims() const;
  void collect_nlu(JointParams& grad, ParamList& out, const std::string& prefix = "nlu/");
  void collect_sap(JointParams& grad, ParamList& out, const std::string& prefix = "sap/");
  void collect(JointParams& grad, ParamList& out);
};

struct LossComponents {
  double act = 0.0;
  double tag = 0.0;
  double intent = 0.0;

  double total() const { return act + tag + intent; }
  LossComponents& operator+=(const LossComponents& o) {
    act += o.act;
    tag += o.tag;
    intent += o.intent;
    return *this;
  }
};

// Multipliers on each loss term; a zero weight removes that term from the
// objective and its gradient.
struct LossWeights {
  double act = 1.0;
  double tag = 1.0;
  double intent = 1.0;

  double apply(const LossComponents& l) const { return act * l.act + tag * l.tag + intent * l.intent; }
};

struct StepContext {
  bool training = false;
  double dropout_rate = 0.0;
  LossWeights weights;
};

Vec label_bits(std::span<const int> labels, Eigen::Index size);

TurnFeature oracle_feature(const EncodedExample& ex, Eigen::Index num_tags, Eigen::Index num_intents);

// End-to-end step over one window: NLU forward on every non-padding turn,
// SAP over the resulting feature history, and (if grad != nullptr) exact
// gradients for all parameters, with the SAP input gradient flowing back
// into each NLU unit. Returns the unweighted loss components.
LossComponents joint_step(const EncodedSession& session, const DialogWindow& window, const JointParams& p,
                          JointParams* grad, const StepContext& ctx, Rng& rng);

// NLU-only step on one utterance (tag + intent loss).
LossComponents nlu_step(const EncodedExample& ex, const NluParams& p, NluParams* grad, const StepContext& ctx,
                        Rng& rng);

// SAP-only step on gold oracle encodings.
LossComponents sap_step(const EncodedSession& session, const DialogWindow& window, const SapParams& p,
                        SapParams* grad, Eigen::Index num_tags, Eigen::Index num_intents);

}  // namespace dialact

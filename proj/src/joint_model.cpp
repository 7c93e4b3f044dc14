#include "dialact/joint_model.hpp"

#include "dialact/errors.hpp"

namespace dialact {

ModelDims ModelDims::from_vocabs(const VocabSet& v, Eigen::Index embed_dim, Eigen::Index hidden_dim) {
  return {v.words.size(), embed_dim, hidden_dim, v.num_tags(), v.num_intents(), v.num_actions()};
}

JointParams JointParams::zeros(const ModelDims& d) { return {NluParams::zeros(d.nlu()), SapParams::zeros(d.sap())}; }

JointParams JointParams::init(const ModelDims& d, Rng& nlu_rng, Rng& sap_rng) {
  return {NluParams::init(d.nlu(), nlu_rng), SapParams::init(d.sap(), sap_rng)};
}

ModelDims JointParams::dims() const {
  const NluDims n = nlu.dims();
  return {n.vocab_size, n.embed_dim, n.hidden_dim, n.num_tags, n.num_intents, sap.w_act_fwd.rows()};
}

void JointParams::collect_nlu(JointParams& grad, ParamList& out, const std::string& prefix) {
  nlu.collect(grad.nlu, prefix, out);
}

void JointParams::collect_sap(JointParams& grad, ParamList& out, const std::string& prefix) {
  sap.collect(grad.sap, prefix, out);
}

void JointParams::collect(JointParams& grad, ParamList& out) {
  collect_nlu(grad, out);
  collect_sap(grad, out);
}

Vec label_bits(std::span<const int> labels, Eigen::Index size) {
  Vec bits = Vec::Zero(size);
  for (int l : labels) {
    if (l < 0 || l >= size) throw InvalidArgument("label id " + std::to_string(l) + " out of range");
    bits[l] = 1.0;
  }
  return bits;
}

TurnFeature oracle_feature(const EncodedExample& ex, Eigen::Index num_tags, Eigen::Index num_intents) {
  return encode_oracle_turn(ex.tag_types, ex.intents, num_tags, num_intents);
}

namespace {

void check_window(const EncodedSession& session, const DialogWindow& w) {
  if (w.turns.empty()) throw PreconditionError("window is empty");
  if (w.target() < 0) throw PreconditionError("window target is padding");
  for (int t : w.turns)
    if (t >= static_cast<int>(session.size()))
      throw PreconditionError("window references turn " + std::to_string(t) + " beyond session of " +
                              std::to_string(session.size()));
}

}  // namespace

LossComponents joint_step(const EncodedSession& session, const DialogWindow& window, const JointParams& p,
                          JointParams* grad, const StepContext& ctx, Rng& rng) {
  check_window(session, window);
  const auto M = p.nlu.w_tag_fwd.rows();
  const auto N = p.nlu.w_int.rows();
  const auto K = p.sap.w_act_fwd.rows();
  const std::size_t I = window.turns.size();

  LossComponents loss;
  std::vector<NluOutput> nlu(I);
  std::vector<TurnFeature> history(I);
  for (std::size_t i = 0; i < I; ++i) {
    const int t = window.turns[i];
    if (t < 0) {
      history[i] = TurnFeature::padding(M + N);
      continue;
    }
    const auto& ex = session[static_cast<std::size_t>(t)];
    nlu[i] = nlu_forward(ex.words, p.nlu, ctx.training, ctx.dropout_rate, rng);
    const NluLoss l = nlu_loss(nlu[i], ex.tags, label_bits(ex.intents, N));
    loss.tag += l.tag;
    loss.intent += l.intent;
    history[i] = {nlu[i].feature, false};
  }
  const auto& target = session[static_cast<std::size_t>(window.target())];
  const Vec gold_actions = label_bits(target.actions, K);
  const SapOutput sap = sap_forward(history, p.sap, I);
  loss.act = sap_loss(sap.probs, gold_actions);

  if (grad) {
    const Vec d_act = ctx.weights.act * multilabel_bce_grad(sap.probs, gold_actions);
    const Mat d_history = sap_backward(sap, p.sap, d_act, grad->sap);
    for (std::size_t i = 0; i < I; ++i) {
      const int t = window.turns[i];
      if (t < 0) continue;
      const auto& ex = session[static_cast<std::size_t>(t)];
      NluLossGrad g = nlu_loss_grad(nlu[i], ex.tags, label_bits(ex.intents, N));
      g.d_tag_logits *= ctx.weights.tag;
      g.d_intent_logits *= ctx.weights.intent;
      nlu_backward(nlu[i], p.nlu, g.d_tag_logits, g.d_intent_logits,
                   d_history.row(static_cast<Eigen::Index>(i)).transpose(), grad->nlu);
    }
  }
  return loss;
}

LossComponents nlu_step(const EncodedExample& ex, const NluParams& p, NluParams* grad, const StepContext& ctx,
                        Rng& rng) {
  const auto N = p.w_int.rows();
  const NluOutput out = nlu_forward(ex.words, p, ctx.training, ctx.dropout_rate, rng);
  const Vec gold = label_bits(ex.intents, N);
  const NluLoss l = nlu_loss(out, ex.tags, gold);
  if (grad) {
    NluLossGrad g = nlu_loss_grad(out, ex.tags, gold);
    g.d_tag_logits *= ctx.weights.tag;
    g.d_intent_logits *= ctx.weights.intent;
    nlu_backward(out, p, g.d_tag_logits, g.d_intent_logits, Vec(), *grad);
  }
  return {0.0, l.tag, l.intent};
}

LossComponents sap_step(const EncodedSession& session, const DialogWindow& window, const SapParams& p,
                        SapParams* grad, Eigen::Index num_tags, Eigen::Index num_intents) {
  check_window(session, window);
  std::vector<TurnFeature> history;
  history.reserve(window.turns.size());
  for (int t : window.turns)
    history.push_back(t < 0 ? TurnFeature::padding(num_tags + num_intents)
                            : oracle_feature(session[static_cast<std::size_t>(t)], num_tags, num_intents));
  const Vec gold = label_bits(session[static_cast<std::size_t>(window.target())].actions, p.w_act_fwd.rows());
  const SapOutput out = sap_forward(history, p, history.size());
  const double l = sap_loss(out.probs, gold);
  if (grad) sap_backward(out, p, multilabel_bce_grad(out.probs, gold), *grad);
  return {l, 0.0, 0.0};
}

}  // namespace dialact

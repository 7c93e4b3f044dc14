#include "dialact/sap_model.hpp"

#include "dialact/errors.hpp"
#include "dialact/functional.hpp"

#include <cmath>
#include <string>

namespace dialact {

SapParams SapParams::zeros(const SapDims& d) {
  if (d.input_dim <= 0 || d.hidden_dim <= 0 || d.num_actions <= 0)
    throw InvalidArgument("SapParams: all dimensions must be > 0");
  return {LstmParams::zeros(d.input_dim, d.hidden_dim), LstmParams::zeros(d.input_dim, d.hidden_dim),
          Mat::Zero(d.num_actions, d.hidden_dim), Mat::Zero(d.num_actions, d.hidden_dim),
          Vec::Zero(d.num_actions)};
}

SapParams SapParams::init(const SapDims& d, Rng& rng) {
  SapParams p = zeros(d);
  p.sap_fwd.init_uniform(rng);
  p.sap_bwd.init_uniform(rng);
  const double s = std::sqrt(6.0 / static_cast<double>(d.num_actions + d.hidden_dim));
  for (Mat* m : {&p.w_act_fwd, &p.w_act_bwd})
    for (Eigen::Index k = 0; k < m->size(); ++k) m->data()[k] = rng.uniform(-s, s);
  return p;
}

SapDims SapParams::dims() const {
  return {sap_fwd.input_dim(), sap_fwd.hidden_dim(), w_act_fwd.rows()};
}

void SapParams::collect(SapParams& g, const std::string& prefix, ParamList& out) {
  sap_fwd.collect(g.sap_fwd, prefix + "sap_fwd/", out);
  sap_bwd.collect(g.sap_bwd, prefix + "sap_bwd/", out);
  add_param(out, prefix + "W_act_fwd", w_act_fwd, g.w_act_fwd);
  add_param(out, prefix + "W_act_bwd", w_act_bwd, g.w_act_bwd);
  add_param(out, prefix + "b_act", b_act, g.b_act);
}

SapOutput sap_forward(std::span<const TurnFeature> history, const SapParams& p,
                      std::size_t history_len) {
  if (history.size() != history_len)
    throw ShapeError("sap_forward: history holds " + std::to_string(history.size()) +
                     " turns, expected " + std::to_string(history_len));
  if (history.empty()) throw ShapeError("sap_forward: empty history");
  if (history.back().is_padding)
    throw InvalidArgument("sap_forward: the current (last) turn cannot be padding");
  const auto I = static_cast<Eigen::Index>(history.size());
  const auto F = p.sap_fwd.input_dim();
  Mat x(I, F);
  for (Eigen::Index i = 0; i < I; ++i) {
    const auto& turn = history[static_cast<std::size_t>(i)];
    if (turn.values.size() != F)
      throw ShapeError("sap_forward: turn feature length " + std::to_string(turn.values.size()) +
                       ", expected " + std::to_string(F));
    x.row(i) = turn.values.transpose();
  }
  SapOutput out;
  const BiLstmOutput h = bilstm(x, p.sap_fwd, p.sap_bwd, &out.trace);
  const Vec logits = p.w_act_fwd * h.fwd.row(I - 1).transpose() +
                     p.w_act_bwd * h.bwd.row(I - 1).transpose() + p.b_act;
  out.probs = sigmoid_vec(logits);
  return out;
}

Mat sap_backward(const SapOutput& out, const SapParams& p, const Vec& d_logits, SapParams& grad) {
  if (d_logits.size() != p.w_act_fwd.rows()) throw ShapeError("sap_backward: gradient length mismatch");
  const auto I = out.trace.fwd.h.rows();
  const auto H = p.sap_fwd.hidden_dim();
  const RowVec hf = out.trace.fwd.h.row(I - 1);
  const RowVec hb = out.trace.bwd.h.row(I - 1);
  grad.w_act_fwd.noalias() += d_logits * hf;
  grad.w_act_bwd.noalias() += d_logits * hb;
  grad.b_act += d_logits;
  Mat d_fwd = Mat::Zero(I, H);
  Mat d_bwd = Mat::Zero(I, H);
  d_fwd.row(I - 1) = (p.w_act_fwd.transpose() * d_logits).transpose();
  d_bwd.row(I - 1) = (p.w_act_bwd.transpose() * d_logits).transpose();
  return bilstm_backward(out.trace, p.sap_fwd, p.sap_bwd, d_fwd, d_bwd, grad.sap_fwd, grad.sap_bwd);
}

TurnFeature encode_oracle_turn(std::span<const int> tags, std::span<const int> intents,
                               Eigen::Index num_tags, Eigen::Index num_intents) {
  TurnFeature f{Vec::Zero(num_tags + num_intents), false};
  for (int t : tags) {
    if (t < 0 || t >= num_tags) throw InvalidArgument("encode_oracle_turn: tag id " + std::to_string(t) + " out of range");
    f.values[t] = 1.0;
  }
  for (int n : intents) {
    if (n < 0 || n >= num_intents)
      throw InvalidArgument("encode_oracle_turn: intent id " + std::to_string(n) + " out of range");
    f.values[num_tags + n] = 1.0;
  }
  return f;
}

double sap_loss(const Vec& probs, const Vec& gold_actions) { return multilabel_bce(probs, gold_actions); }

}  // namespace dialact

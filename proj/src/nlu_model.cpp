#include "dialact/nlu_model.hpp"

#include "dialact/errors.hpp"

#include <cmath>
#include <string>

namespace dialact {

namespace {

void fill_glorot(Mat& m, Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-s, s);
}

}  // namespace

NluParams NluParams::zeros(const NluDims& d) {
  if (d.vocab_size <= 0 || d.embed_dim <= 0 || d.hidden_dim <= 0 || d.num_tags <= 0 ||
      d.num_intents <= 0)
    throw InvalidArgument("NluParams: all dimensions must be > 0");
  NluParams p;
  p.embedding = Mat::Zero(d.vocab_size, d.embed_dim);
  p.trunk_fwd = LstmParams::zeros(d.embed_dim, d.hidden_dim);
  p.trunk_bwd = LstmParams::zeros(d.embed_dim, d.hidden_dim);
  p.w_tag_fwd = Mat::Zero(d.num_tags, d.hidden_dim);
  p.w_tag_bwd = Mat::Zero(d.num_tags, d.hidden_dim);
  p.b_tag = Vec::Zero(d.num_tags);
  p.intent_lstm = LstmParams::zeros(2 * d.hidden_dim, d.hidden_dim);
  p.w_int = Mat::Zero(d.num_intents, d.hidden_dim);
  p.b_int = Vec::Zero(d.num_intents);
  p.feature_lstm = LstmParams::zeros(2 * d.hidden_dim, d.feature_dim());
  return p;
}

NluParams NluParams::init(const NluDims& d, Rng& rng) {
  NluParams p = zeros(d);
  fill_glorot(p.embedding, rng);
  p.trunk_fwd.init_uniform(rng);
  p.trunk_bwd.init_uniform(rng);
  fill_glorot(p.w_tag_fwd, rng);
  fill_glorot(p.w_tag_bwd, rng);
  p.intent_lstm.init_uniform(rng);
  fill_glorot(p.w_int, rng);
  p.feature_lstm.init_uniform(rng);
  return p;
}

NluDims NluParams::dims() const {
  return {embedding.rows(), embedding.cols(), trunk_fwd.hidden_dim(), w_tag_fwd.rows(),
          w_int.rows()};
}

void NluParams::collect(NluParams& g, const std::string& prefix, ParamList& out) {
  add_param(out, prefix + "embedding", embedding, g.embedding);
  trunk_fwd.collect(g.trunk_fwd, prefix + "trunk_fwd/", out);
  trunk_bwd.collect(g.trunk_bwd, prefix + "trunk_bwd/", out);
  add_param(out, prefix + "W_tag_fwd", w_tag_fwd, g.w_tag_fwd);
  add_param(out, prefix + "W_tag_bwd", w_tag_bwd, g.w_tag_bwd);
  add_param(out, prefix + "b_tag", b_tag, g.b_tag);
  intent_lstm.collect(g.intent_lstm, prefix + "intent_lstm/", out);
  add_param(out, prefix + "W_int", w_int, g.w_int);
  add_param(out, prefix + "b_int", b_int, g.b_int);
  feature_lstm.collect(g.feature_lstm, prefix + "feature_lstm/", out);
}

NluOutput nlu_forward(std::span<const int> word_ids, const NluParams& p, bool training,
                      double dropout_rate, Rng& rng) {
  const auto T = static_cast<Eigen::Index>(word_ids.size());
  if (T == 0) throw InvalidArgument("nlu_forward: empty utterance");
  const auto E = p.embedding.cols();
  const auto H = p.trunk_fwd.hidden_dim();
  const auto M = p.w_tag_fwd.rows();

  NluOutput out;
  NluTrace& tr = out.trace;
  tr.word_ids.assign(word_ids.begin(), word_ids.end());

  tr.emb.resize(T, E);
  for (Eigen::Index t = 0; t < T; ++t) {
    const int id = word_ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= p.embedding.rows())
      throw InvalidArgument("nlu_forward: token id " + std::to_string(id) + " outside vocab of " +
                            std::to_string(p.embedding.rows()));
    tr.emb.row(t) = p.embedding.row(id);
  }
  tr.emb_mask = dropout_mask(T, E, dropout_rate, training, rng);
  tr.emb = tr.emb.cwiseProduct(tr.emb_mask);

  const BiLstmOutput trunk = bilstm(tr.emb, p.trunk_fwd, p.trunk_bwd, &tr.trunk);
  tr.concat.resize(T, 2 * H);
  tr.concat.leftCols(H) = trunk.fwd;
  tr.concat.rightCols(H) = trunk.bwd;
  tr.concat_mask = dropout_mask(T, 2 * H, dropout_rate, training, rng);
  tr.concat = tr.concat.cwiseProduct(tr.concat_mask);

  Mat logits = tr.concat.leftCols(H) * p.w_tag_fwd.transpose();
  logits.noalias() += tr.concat.rightCols(H) * p.w_tag_bwd.transpose();
  logits.rowwise() += p.b_tag.transpose();
  out.tag_probs.resize(T, M);
  for (Eigen::Index t = 0; t < T; ++t) out.tag_probs.row(t) = softmax(logits.row(t).transpose()).transpose();

  const Mat int_h = run_lstm(tr.concat, p.intent_lstm, false, &tr.intent);
  out.intent_probs = sigmoid_vec(p.w_int * int_h.row(T - 1).transpose() + p.b_int);

  const Mat feat_h = run_lstm(tr.concat, p.feature_lstm, false, &tr.feature);
  out.feature = feat_h.row(T - 1).transpose();
  return out;
}

void nlu_backward(const NluOutput& out, const NluParams& p, const Mat& d_tag_logits,
                  const Vec& d_intent_logits, const Vec& d_feature, NluParams& grad) {
  const NluTrace& tr = out.trace;
  const auto T = tr.concat.rows();
  const auto H = p.trunk_fwd.hidden_dim();

  Mat d_concat = Mat::Zero(T, 2 * H);
  if (d_tag_logits.size() > 0) {
    if (d_tag_logits.rows() != T || d_tag_logits.cols() != p.w_tag_fwd.rows())
      throw ShapeError("nlu_backward: tag gradient shape mismatch");
    grad.w_tag_fwd.noalias() += d_tag_logits.transpose() * tr.concat.leftCols(H);
    grad.w_tag_bwd.noalias() += d_tag_logits.transpose() * tr.concat.rightCols(H);
    grad.b_tag += d_tag_logits.colwise().sum().transpose();
    d_concat.leftCols(H).noalias() += d_tag_logits * p.w_tag_fwd;
    d_concat.rightCols(H).noalias() += d_tag_logits * p.w_tag_bwd;
  }
  if (d_intent_logits.size() > 0) {
    if (d_intent_logits.size() != p.w_int.rows())
      throw ShapeError("nlu_backward: intent gradient length mismatch");
    const RowVec h_last = tr.intent.h.row(T - 1);
    grad.w_int.noalias() += d_intent_logits * h_last;
    grad.b_int += d_intent_logits;
    Mat d_h = Mat::Zero(T, p.intent_lstm.hidden_dim());
    d_h.row(T - 1) = (p.w_int.transpose() * d_intent_logits).transpose();
    d_concat += run_lstm_backward(tr.intent, p.intent_lstm, d_h, grad.intent_lstm);
  }
  if (d_feature.size() > 0) {
    if (d_feature.size() != p.feature_lstm.hidden_dim())
      throw ShapeError("nlu_backward: feature gradient length mismatch");
    Mat d_h = Mat::Zero(T, p.feature_lstm.hidden_dim());
    d_h.row(T - 1) = d_feature.transpose();
    d_concat += run_lstm_backward(tr.feature, p.feature_lstm, d_h, grad.feature_lstm);
  }
  d_concat = d_concat.cwiseProduct(tr.concat_mask);
  Mat d_emb = bilstm_backward(tr.trunk, p.trunk_fwd, p.trunk_bwd, d_concat.leftCols(H),
                              d_concat.rightCols(H), grad.trunk_fwd, grad.trunk_bwd);
  d_emb = d_emb.cwiseProduct(tr.emb_mask);
  for (Eigen::Index t = 0; t < T; ++t) grad.embedding.row(tr.word_ids[static_cast<std::size_t>(t)]) += d_emb.row(t);
}

std::vector<int> decode_tags(const Mat& tag_probs) {
  std::vector<int> ids(static_cast<std::size_t>(tag_probs.rows()));
  for (Eigen::Index t = 0; t < tag_probs.rows(); ++t)
    ids[static_cast<std::size_t>(t)] = static_cast<int>(argmax(tag_probs.row(t).transpose()));
  return ids;
}

std::vector<int> decode_multilabel(const Vec& probs, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw InvalidArgument("decode_multilabel: threshold must be in [0, 1]");
  std::vector<int> labels;
  for (Eigen::Index k = 0; k < probs.size(); ++k)
    if (probs[k] >= threshold) labels.push_back(static_cast<int>(k));
  return labels;
}

NluLoss nlu_loss(const NluOutput& out, std::span<const int> gold_tags, const Vec& gold_intents) {
  if (static_cast<Eigen::Index>(gold_tags.size()) != out.tag_probs.rows())
    throw ShapeError("nlu_loss: " + std::to_string(gold_tags.size()) + " gold tags for " +
                     std::to_string(out.tag_probs.rows()) + " tokens");
  NluLoss loss;
  for (Eigen::Index t = 0; t < out.tag_probs.rows(); ++t) {
    const int gold = gold_tags[static_cast<std::size_t>(t)];
    if (gold < 0) throw InvalidArgument("nlu_loss: negative tag id");
    loss.tag += categorical_ce(out.tag_probs.row(t).transpose(), static_cast<std::size_t>(gold));
  }
  loss.intent = multilabel_bce(out.intent_probs, gold_intents);
  return loss;
}

NluLossGrad nlu_loss_grad(const NluOutput& out, std::span<const int> gold_tags,
                          const Vec& gold_intents) {
  if (static_cast<Eigen::Index>(gold_tags.size()) != out.tag_probs.rows())
    throw ShapeError("nlu_loss_grad: tag length mismatch");
  NluLossGrad g;
  g.d_tag_logits.resize(out.tag_probs.rows(), out.tag_probs.cols());
  for (Eigen::Index t = 0; t < out.tag_probs.rows(); ++t)
    g.d_tag_logits.row(t) = categorical_ce_grad(out.tag_probs.row(t).transpose(),
                                                static_cast<std::size_t>(gold_tags[static_cast<std::size_t>(t)]))
                                .transpose();
  g.d_intent_logits = multilabel_bce_grad(out.intent_probs, gold_intents);
  return g;
}

}  // namespace dialact

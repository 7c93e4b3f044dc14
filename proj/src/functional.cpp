#include "dialact/functional.hpp"

#include "dialact/errors.hpp"

#include <cmath>
#include <string>

namespace dialact {

namespace {

void require_finite(const Vec& v, const char* op) {
  if (!v.allFinite()) throw InvalidArgument(std::string(op) + ": non-finite input");
}

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw InvalidArgument("dropout: rate must be in [0, 1), got " + std::to_string(rate));
}

}  // namespace

Vec softmax(const Vec& logits) {
  if (logits.size() == 0) throw InvalidArgument("softmax: empty input");
  require_finite(logits, "softmax");
  const double mx = logits.maxCoeff();
  Vec e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vec sigmoid_vec(const Vec& logits) {
  require_finite(logits, "sigmoid");
  Vec out(logits.size());
  for (Eigen::Index k = 0; k < logits.size(); ++k) out[k] = sigmoid(logits[k]);
  return out;
}

std::size_t argmax(const Eigen::Ref<const Vec>& v) {
  std::size_t best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k)
    if (v[k] > v[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(k);
  return best;
}

double categorical_ce(const Vec& probs, std::size_t target) {
  if (target >= static_cast<std::size_t>(probs.size()))
    throw InvalidArgument("categorical_ce: target " + std::to_string(target) + " out of range");
  return -std::log(std::max(probs[static_cast<Eigen::Index>(target)], kProbFloor));
}

Vec categorical_ce_grad(const Vec& probs, std::size_t target) {
  if (target >= static_cast<std::size_t>(probs.size()))
    throw InvalidArgument("categorical_ce_grad: target out of range");
  const auto t = static_cast<Eigen::Index>(target);
  // Below the floor the loss is constant.
  if (probs[t] < kProbFloor) return Vec::Zero(probs.size());
  Vec g = probs;
  g[t] -= 1.0;
  return g;
}

double multilabel_bce(const Vec& probs, const Vec& targets) {
  if (probs.size() != targets.size())
    throw ShapeError("multilabel_bce: " + std::to_string(probs.size()) + " probs vs " +
                     std::to_string(targets.size()) + " targets");
  double loss = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    const double p = probs[k];
    const double t = targets[k];
    if (t != 0.0) loss -= t * std::log(std::max(p, kProbFloor));
    if (t != 1.0) loss -= (1.0 - t) * std::log(std::max(1.0 - p, kProbFloor));
  }
  return loss;
}

Vec multilabel_bce_grad(const Vec& probs, const Vec& targets) {
  if (probs.size() != targets.size()) throw ShapeError("multilabel_bce_grad: length mismatch");
  Vec g = Vec::Zero(probs.size());
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    const double p = probs[k];
    const double t = targets[k];
    if (t != 0.0 && p >= kProbFloor) g[k] -= t * (1.0 - p);
    if (t != 1.0 && 1.0 - p >= kProbFloor) g[k] += (1.0 - t) * p;
  }
  return g;
}

Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, bool training, Rng& rng) {
  check_rate(rate);
  Mat mask = Mat::Ones(rows, cols);
  if (!training || rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    mask.data()[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

Vec dropout(const Vec& v, double rate, bool training, Rng& rng) {
  const Mat mask = dropout_mask(v.size(), 1, rate, training, rng);
  return v.cwiseProduct(Eigen::Map<const Vec>(mask.data(), mask.size()));
}

}  // namespace dialact

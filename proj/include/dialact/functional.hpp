#pragma once

#include "dialact/rng.hpp"
#include "dialact/tensor.hpp"

#include <cstddef>
#include <vector>

namespace dialact {

// Floor applied to probabilities inside log() by both losses.
inline constexpr double kProbFloor = 1e-12;

// Numerically stable softmax (max-subtracted). Throws InvalidArgument on
// empty or non-finite input.
Vec softmax(const Vec& logits);

// Elementwise logistic function. Throws InvalidArgument on non-finite input.
Vec sigmoid_vec(const Vec& logits);
double sigmoid(double z);

// Index of the largest entry, lowest index on ties.
std::size_t argmax(const Eigen::Ref<const Vec>& v);

// -log(max(probs[target], floor)).
double categorical_ce(const Vec& probs, std::size_t target);

// Gradient of categorical_ce(softmax(z), target) with respect to z.
Vec categorical_ce_grad(const Vec& probs, std::size_t target);

// Sum over labels of -[t ln p + (1-t) ln(1-p)] with the same floor.
double multilabel_bce(const Vec& probs, const Vec& targets);

// Gradient of multilabel_bce(sigmoid(z), targets) with respect to z.
Vec multilabel_bce_grad(const Vec& probs, const Vec& targets);

// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
// 1/(1-rate). Returns all-ones when !training or rate == 0.
Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, bool training, Rng& rng);

// Applies inverted dropout to a vector. Identity when !training or rate == 0.
Vec dropout(const Vec& v, double rate, bool training, Rng& rng);

}  // namespace dialact

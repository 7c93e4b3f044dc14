#pragma once

#include "dialact/tensor.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dialact {

struct PrfCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  // 0 when nothing was predicted / nothing was gold.
  double precision() const { return tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0; }
  double recall() const { return tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
  double f1() const {
    const double p = precision();
    const double r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }

  PrfCounts& operator+=(const PrfCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const PrfCounts&) const = default;
};

using TagSeq = std::vector<int>;
using LabelSet = std::vector<int>;  // ascending, unique

struct TagCounting {
  int outside = -1;           // id of the O tag
  bool all_tokens = false;    // ablation: treat O as a positive class too
};

// Token-level micro counts. With the default convention only non-O tags are
// positives: TP = pred == gold != O, FP = pred != O && pred != gold,
// FN = gold != O && pred != gold.
PrfCounts token_prf(std::span<const TagSeq> pred, std::span<const TagSeq> gold, const TagCounting& how);

// Micro counts over label instances; `excluded` (e.g. the NULL action) is
// ignored on both sides when set.
PrfCounts set_prf(std::span<const LabelSet> pred, std::span<const LabelSet> gold,
                  std::optional<int> excluded = std::nullopt);

// Fraction of frames whose prediction equals gold exactly.
double frame_accuracy(std::span<const TagSeq> pred, std::span<const TagSeq> gold);
double frame_accuracy_sets(std::span<const LabelSet> pred, std::span<const LabelSet> gold);

// Threshold grid {0.000, 0.005, ..., 1.000}.
inline constexpr int kThresholdSteps = 200;
inline double grid_threshold(int k) { return static_cast<double>(k) / kThresholdSteps; }

// Lowest grid threshold maximizing frame accuracy of decode_multilabel.
double tune_threshold(std::span<const Vec> probs, std::span<const LabelSet> gold);

struct TaskScores {
  PrfCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double frame_accuracy = 0.0;
  std::int64_t frames = 0;

  static TaskScores from(const PrfCounts& c, double frame_acc, std::int64_t frames);
};

struct EvalReport {
  std::optional<TaskScores> tags;
  std::optional<TaskScores> intents;
  std::optional<TaskScores> actions;
  std::optional<double> nlu_frame_accuracy;  // tags and intents both exact
  double intent_threshold = 0.5;
  double action_threshold = 0.5;
  // Intent threshold used to encode NLU output for the action model, when it
  // differs from intent_threshold (per-task snapshots).
  std::optional<double> action_intent_threshold;

  // Layout follows the usual results tables: SAP {F1,P,R,FrmAcc},
  // UST/UIP {F1,Precision,Recall,FrmAcc}, NLU {FrmAcc}.
  nlohmann::ordered_json to_json() const;
};

}  // namespace dialact

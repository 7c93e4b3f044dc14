#include "dialact/metrics.hpp"

#include "dialact/errors.hpp"

#include <algorithm>
#include <string>

namespace dialact {

namespace {

template <class A, class B>
void require_aligned(const A& a, const B& b, const char* op) {
  if (a.size() != b.size())
    throw ShapeError(std::string(op) + ": " + std::to_string(a.size()) + " predictions vs " +
                     std::to_string(b.size()) + " gold frames");
}

}  // namespace

PrfCounts token_prf(std::span<const TagSeq> pred, std::span<const TagSeq> gold, const TagCounting& how) {
  require_aligned(pred, gold, "token_prf");
  PrfCounts c;
  for (std::size_t f = 0; f < pred.size(); ++f) {
    require_aligned(pred[f], gold[f], "token_prf (tokens)");
    for (std::size_t t = 0; t < pred[f].size(); ++t) {
      const int p = pred[f][t];
      const int g = gold[f][t];
      const bool p_pos = how.all_tokens || p != how.outside;
      const bool g_pos = how.all_tokens || g != how.outside;
      if (p == g) {
        if (g_pos) ++c.tp;
      } else {
        if (p_pos) ++c.fp;
        if (g_pos) ++c.fn;
      }
    }
  }
  return c;
}

PrfCounts set_prf(std::span<const LabelSet> pred, std::span<const LabelSet> gold, std::optional<int> excluded) {
  require_aligned(pred, gold, "set_prf");
  PrfCounts c;
  for (std::size_t f = 0; f < pred.size(); ++f) {
    const auto& p = pred[f];
    const auto& g = gold[f];
    std::size_t i = 0, j = 0;
    while (i < p.size() || j < g.size()) {
      if (j == g.size() || (i < p.size() && p[i] < g[j])) {
        if (p[i] != excluded) ++c.fp;
        ++i;
      } else if (i == p.size() || g[j] < p[i]) {
        if (g[j] != excluded) ++c.fn;
        ++j;
      } else {
        if (p[i] != excluded) ++c.tp;
        ++i;
        ++j;
      }
    }
  }
  return c;
}

double frame_accuracy(std::span<const TagSeq> pred, std::span<const TagSeq> gold) {
  require_aligned(pred, gold, "frame_accuracy");
  if (pred.empty()) return 0.0;
  std::size_t exact = 0;
  for (std::size_t f = 0; f < pred.size(); ++f) exact += pred[f] == gold[f];
  return static_cast<double>(exact) / static_cast<double>(pred.size());
}

double frame_accuracy_sets(std::span<const LabelSet> pred, std::span<const LabelSet> gold) {
  return frame_accuracy(pred, gold);
}

double tune_threshold(std::span<const Vec> probs, std::span<const LabelSet> gold) {
  require_aligned(probs, gold, "tune_threshold");
  if (probs.empty()) throw InvalidArgument("tune_threshold: empty dev data");
  int best_k = 0;
  std::size_t best_exact = 0;
  LabelSet decoded;
  for (int k = 0; k <= kThresholdSteps; ++k) {
    const double t = grid_threshold(k);
    std::size_t exact = 0;
    for (std::size_t f = 0; f < probs.size(); ++f) {
      decoded.clear();
      for (Eigen::Index j = 0; j < probs[f].size(); ++j)
        if (probs[f][j] >= t) decoded.push_back(static_cast<int>(j));
      exact += decoded == gold[f];
    }
    if (k == 0 || exact > best_exact) {
      best_exact = exact;
      best_k = k;
    }
  }
  return grid_threshold(best_k);
}

TaskScores TaskScores::from(const PrfCounts& c, double frame_acc, std::int64_t frames) {
  return {c, c.precision(), c.recall(), c.f1(), frame_acc, frames};
}

namespace {

nlohmann::ordered_json task_json(const TaskScores& s, bool short_names) {
  nlohmann::ordered_json j;
  j["F1"] = s.f1;
  j[short_names ? "P" : "Precision"] = s.precision;
  j[short_names ? "R" : "Recall"] = s.recall;
  j["FrmAcc"] = s.frame_accuracy;
  j["TP"] = s.counts.tp;
  j["FP"] = s.counts.fp;
  j["FN"] = s.counts.fn;
  j["frames"] = s.frames;
  return j;
}

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  if (actions) j["SAP"] = task_json(*actions, true);
  if (tags) j["UST"] = task_json(*tags, false);
  if (intents) j["UIP"] = task_json(*intents, false);
  if (nlu_frame_accuracy) j["NLU"] = {{"FrmAcc", *nlu_frame_accuracy}};
  j["thresholds"] = {{"intent", intent_threshold}, {"action", action_threshold}};
  if (action_intent_threshold) j["thresholds"]["action_intent"] = *action_intent_threshold;
  return j;
}

}  // namespace dialact

#pragma once

#include "dialact/config.hpp"
#include "dialact/corpus.hpp"
#include "dialact/joint_model.hpp"
#include "dialact/metrics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dialact {

struct Dataset {
  std::vector<EncodedSession> sessions;
};

// Per-utterance model outputs, indexed [session][turn].
struct NluPrediction {
  TagSeq tags;
  Vec intent_probs;
  Vec feature;
};

struct Predictions {
  std::vector<std::vector<NluPrediction>> nlu;  // empty in oracle-sap mode
  std::vector<std::vector<Vec>> action_probs;
};

// Inference-mode NLU over every utterance. parallelism > 1 fans out over
// sessions; results do not depend on it.
std::vector<std::vector<NluPrediction>> predict_nlu(const NluParams& p, const Dataset& data, int parallelism = 1);

// SAP over every window. Turn inputs depend on the mode: continuous NLU
// features (joint), encodings of decoded NLU output at intent_threshold
// (pipeline) or gold encodings (oracle-sap).
std::vector<std::vector<Vec>> predict_actions(const JointParams& p, Mode mode, const Dataset& data,
                                              const std::vector<std::vector<NluPrediction>>& nlu,
                                              std::size_t window_length, double intent_threshold);

struct ScoringOptions {
  int outside_tag = -1;
  bool tags_all_tokens = false;
  std::optional<int> excluded_action;
};

ScoringOptions scoring_options(const TrainConfig& cfg, const VocabSet& v);

// Fills tag / intent / nlu scores from NLU predictions.
void score_nlu(const std::vector<std::vector<NluPrediction>>& nlu, const Dataset& data, double intent_threshold,
               const ScoringOptions& opts, EvalReport& report);
void score_actions(const std::vector<std::vector<Vec>>& action_probs, const Dataset& data, double action_threshold,
                   const ScoringOptions& opts, EvalReport& report);

// Decodes and scores every task the mode supports with fixed thresholds.
EvalReport evaluate(const JointParams& p, const Dataset& data, double intent_threshold, double action_threshold,
                    Mode mode, const TrainConfig& cfg, const ScoringOptions& opts, int parallelism = 1);

// Tunes the intent threshold, then the action threshold, on `data`.
EvalReport tune_and_evaluate(const JointParams& p, const Dataset& data, Mode mode, const TrainConfig& cfg,
                             const ScoringOptions& opts, int parallelism = 1);

struct EpochLog {
  int epoch = 0;
  LossComponents mean_loss;
  EvalReport dev;
  double seconds = 0.0;

  // Deterministic record (no wall-clock field).
  nlohmann::ordered_json to_json() const;
};

struct TrainLog {
  std::vector<EpochLog> epochs;

  std::string to_jsonl() const;
};

// Best dev epoch + threshold for one task.
struct TaskSelection {
  int epoch = 0;
  double threshold = 0.5;
  double intent_threshold = 0.5;  // feeds the pipeline's SAP encoding
  double dev_frame_accuracy = -1.0;
  std::optional<JointParams> params;
};

struct TrainResult {
  JointParams final_params;
  TaskSelection tags;
  TaskSelection intents;
  TaskSelection actions;
  TrainLog log;
};

struct TrainOptions {
  std::optional<JointParams> init;  // resume from these instead of a fresh init
  std::function<void(const EpochLog&)> on_epoch;
  int parallelism = 1;
};

TrainResult train(const TrainConfig& cfg, const VocabSet& vocabs, const Dataset& train_set, const Dataset& dev_set,
                  const TrainOptions& opts = {});

struct TaskThresholds {
  double intent = 0.5;
  double action = 0.5;
  double action_intent = 0.5;  // pipeline encoding of NLU output for the action model
};

TaskThresholds selected_thresholds(const TrainResult& result);

// Each task is decoded with its own selected snapshot (the final parameters
// when nothing was selected).
EvalReport evaluate_tasks(const TrainResult& result, const Dataset& data, const TaskThresholds& thresholds,
                          const TrainConfig& cfg, const ScoringOptions& opts, int parallelism = 1);

// Tunes each task's thresholds on `dev` with that task's snapshot.
TaskThresholds tune_tasks(const TrainResult& result, const Dataset& dev, const TrainConfig& cfg,
                          int parallelism = 1);

// evaluate_tasks at the thresholds stored with the selection.
EvalReport evaluate_selected(const TrainResult& result, const Dataset& data, const TrainConfig& cfg,
                             const ScoringOptions& opts, int parallelism = 1);

// Checkpoints: named arrays under final/, select/tags/, select/intents/,
// select/actions/ plus metadata echoing config, vocabs and vocab digests.
void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg, const VocabSet& vocabs,
                     const TrainResult& result);

struct LoadedCheckpoint {
  TrainConfig config;
  VocabSet vocabs;
  TrainResult result;  // log is empty
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Throws ValidationError when the vocab digests differ.
void require_same_vocabs(const VocabSet& expected, const VocabSet& actual);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dialact

#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

namespace dialact {

enum class Mode { kJoint, kPipeline, kOracleSap };

std::string to_string(Mode m);
Mode parse_mode(const std::string& s);  // "joint" | "pipeline" | "oracle-sap"

// How many turns a window holds: kTotal = I turns including the current one;
// kMinusOne = I-1 turns (at least one).
enum class HistoryReading { kTotal, kMinusOne };

struct TrainConfig {
  Mode mode = Mode::kJoint;
  int batch_size = 32;
  int epochs = 300;
  int history_I = 5;
  HistoryReading history_reading = HistoryReading::kTotal;
  int embed_dim = 512;
  int hidden_dim = 256;
  double dropout_rate = 0.5;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  double grad_clip = 5.0;
  int max_utterance_len = 64;
  bool exclude_null_in_f1 = false;  // leave the NULL action out of SAP P/R/F1
  bool tags_all_tokens = false;     // count O as a positive in tag P/R/F1

  // Desk-scale defaults for the synthetic corpus.
  static TrainConfig desk();
  // Full-size model: 512 / 256 / 0.5 / 300 epochs / batch 32 / I=5.
  static TrainConfig full();
  static TrainConfig preset(const std::string& name);  // "desk" | "full"

  std::size_t window_length() const;

  // Throws InvalidArgument on out-of-range fields.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  // Overrides only the fields present in j; unknown keys are rejected.
  void merge_json(const nlohmann::json& j);
};

}  // namespace dialact

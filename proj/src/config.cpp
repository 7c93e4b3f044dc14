#include "dialact/config.hpp"

#include "dialact/errors.hpp"

#include <algorithm>
#include <set>

namespace dialact {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kJoint:
      return "joint";
    case Mode::kPipeline:
      return "pipeline";
    case Mode::kOracleSap:
      return "oracle-sap";
  }
  return "joint";
}

Mode parse_mode(const std::string& s) {
  if (s == "joint") return Mode::kJoint;
  if (s == "pipeline") return Mode::kPipeline;
  if (s == "oracle-sap" || s == "oracle") return Mode::kOracleSap;
  throw InvalidArgument("unknown mode '" + s + "' (expected joint, pipeline or oracle-sap)");
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.embed_dim = 32;
  c.hidden_dim = 32;
  c.epochs = 40;
  c.learning_rate = 5e-3;
  c.dropout_rate = 0.2;
  return c;
}

TrainConfig TrainConfig::full() { return TrainConfig{}; }

TrainConfig TrainConfig::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "full") return full();
  throw InvalidArgument("unknown preset '" + name + "' (expected desk or full)");
}

std::size_t TrainConfig::window_length() const {
  const int n = history_reading == HistoryReading::kTotal ? history_I : std::max(1, history_I - 1);
  return static_cast<std::size_t>(n);
}

void TrainConfig::validate() const {
  if (history_I < 1) throw InvalidArgument("config: history_I must be >= 1");
  if (batch_size < 1) throw InvalidArgument("config: batch_size must be >= 1");
  if (epochs < 0) throw InvalidArgument("config: epochs must be >= 0");
  if (embed_dim < 1 || hidden_dim < 1) throw InvalidArgument("config: dimensions must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidArgument("config: dropout_rate must be in [0, 1)");
  if (!(learning_rate >= 0.0)) throw InvalidArgument("config: learning_rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw InvalidArgument("config: betas must be in [0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("config: epsilon must be > 0");
  if (!(grad_clip >= 0.0)) throw InvalidArgument("config: grad_clip must be >= 0 (0 disables)");
  if (max_utterance_len < 1) throw InvalidArgument("config: max_utterance_len must be >= 1");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["mode"] = to_string(mode);
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["history_I"] = history_I;
  j["history_reading"] = history_reading == HistoryReading::kTotal ? "total" : "minus_one";
  j["embed_dim"] = embed_dim;
  j["hidden_dim"] = hidden_dim;
  j["dropout_rate"] = dropout_rate;
  j["learning_rate"] = learning_rate;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["epsilon"] = epsilon;
  j["seed"] = seed;
  j["grad_clip"] = grad_clip;
  j["max_utterance_len"] = max_utterance_len;
  j["exclude_null_in_f1"] = exclude_null_in_f1;
  j["tags_all_tokens"] = tags_all_tokens;
  return j;
}

void TrainConfig::merge_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  static const std::set<std::string> known = {
      "mode",    "batch_size", "epochs",   "history_I", "history_reading",   "embed_dim",
      "hidden_dim", "dropout_rate", "learning_rate", "beta1", "beta2", "epsilon",
      "seed",    "grad_clip",  "max_utterance_len", "exclude_null_in_f1", "tags_all_tokens", "preset"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw InvalidArgument("config: unknown field '" + key + "'");
  try {
    if (j.contains("mode")) mode = parse_mode(j["mode"].get<std::string>());
    if (j.contains("batch_size")) batch_size = j["batch_size"].get<int>();
    if (j.contains("epochs")) epochs = j["epochs"].get<int>();
    if (j.contains("history_I")) history_I = j["history_I"].get<int>();
    if (j.contains("history_reading")) {
      const auto r = j["history_reading"].get<std::string>();
      if (r == "total") history_reading = HistoryReading::kTotal;
      else if (r == "minus_one") history_reading = HistoryReading::kMinusOne;
      else throw InvalidArgument("config: history_reading must be 'total' or 'minus_one'");
    }
    if (j.contains("embed_dim")) embed_dim = j["embed_dim"].get<int>();
    if (j.contains("hidden_dim")) hidden_dim = j["hidden_dim"].get<int>();
    if (j.contains("dropout_rate")) dropout_rate = j["dropout_rate"].get<double>();
    if (j.contains("learning_rate")) learning_rate = j["learning_rate"].get<double>();
    if (j.contains("beta1")) beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) beta2 = j["beta2"].get<double>();
    if (j.contains("epsilon")) epsilon = j["epsilon"].get<double>();
    if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
    if (j.contains("grad_clip")) grad_clip = j["grad_clip"].get<double>();
    if (j.contains("max_utterance_len")) max_utterance_len = j["max_utterance_len"].get<int>();
    if (j.contains("exclude_null_in_f1")) exclude_null_in_f1 = j["exclude_null_in_f1"].get<bool>();
    if (j.contains("tags_all_tokens")) tags_all_tokens = j["tags_all_tokens"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: wrong field type: ") + e.what());
  }
}

}  // namespace dialact

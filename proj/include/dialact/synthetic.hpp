#pragma once

#include "dialact/corpus.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dialact {

struct SlotSpec {
  std::vector<std::string> values;   // may be multi-word
  std::vector<std::string> heldout;  // dev/test-only values
};

struct IntentSpec {
  std::string domain;  // empty = shared across domains
  std::vector<std::string> templates;  // "{slot}" placeholders
  double weight = 1.0;
  bool needs_history = false;  // never opens a session
};

// Adds `actions` when every present condition holds for the current turn
// (and, for prev_intent, the previous turn of the same session).
struct ActionRule {
  std::string intent;
  std::optional<std::string> prev_intent;
  std::optional<std::string> has_slot;
  std::optional<std::string> missing_slot;
  std::optional<std::pair<std::string, std::string>> slot_value;
  std::vector<std::string> actions;
};

struct GenSpec {
  std::vector<std::string> domains;
  std::map<std::string, SlotSpec> slots;
  std::map<std::string, IntentSpec> intents;
  std::vector<std::string> actions;
  std::vector<ActionRule> rules;
  std::vector<std::string> default_actions;
  bool history_dependence = true;

  std::size_t train_utterances = 2000;
  std::size_t dev_utterances = 400;
  std::size_t test_utterances = 400;
  std::size_t session_min = 4;
  std::size_t session_max = 10;

  double opening_greet_rate = 0.5;
  double closing_thank_rate = 0.5;
  double multi_intent_rate = 0.15;
  double filler_rate = 0.2;
  std::vector<std::string> fillers;
  std::vector<std::string> heldout_fillers;
  double unseen_filler_rate = 0.03;  // dev/test
  double unseen_value_rate = 0.03;   // dev/test, per slot value with a held-out list
  double nlu_label_noise = 0.0;      // train only: fraction of utterances with a corrupted tag or intent
};

GenSpec default_gen_spec();
nlohmann::ordered_json gen_spec_to_json(const GenSpec& spec);
// Throws ValidationError naming the offending field.
GenSpec gen_spec_from_json(const nlohmann::json& j);
void validate_gen_spec(const GenSpec& spec);

// The semantics the action mapping reads: intents plus slot -> values.
struct TurnSemantics {
  std::set<std::string> intents;
  std::map<std::string, std::set<std::string>> slots;
};

std::set<std::string> apply_rules(const GenSpec& spec, const TurnSemantics& current,
                                  const TurnSemantics* previous);

struct SyntheticCorpus {
  std::vector<Session> train;
  std::vector<Session> dev;
  std::vector<Session> test;
  nlohmann::ordered_json manifest;
};

SyntheticCorpus gen_synthetic(const GenSpec& spec, std::uint64_t seed);

// Writes train.jsonl, dev.jsonl, test.jsonl and manifest.json into dir.
void write_synthetic(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace dialact

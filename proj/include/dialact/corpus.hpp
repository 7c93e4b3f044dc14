#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace dialact {

// One user utterance with its annotations and the system's response.
struct Example {
  std::string session_id;
  int turn_index = 0;
  std::vector<std::string> words;
  std::vector<std::string> tags;  // IOB, same length as words
  std::set<std::string> intents;
  std::set<std::string> actions;

  bool operator==(const Example&) const = default;
};

struct Session {
  std::string id;
  std::vector<Example> turns;  // ascending turn_index

  bool operator==(const Session&) const = default;
};

struct ParseOptions {
  // Repair orphan I-x to B-x instead of rejecting the record.
  bool lenient_iob = false;
  // Receives repair notices when non-null.
  std::vector<std::string>* warnings = nullptr;
};

// One JSON object per line: {"session","turn","words","tags","intents","actions"}.
// Blank lines are skipped. Sessions keep first-appearance order; turns are
// sorted by index.
std::vector<Session> parse_corpus(const std::filesystem::path& path, const ParseOptions& opts = {});
std::vector<Session> parse_corpus(std::istream& in, const ParseOptions& opts = {});
Example parse_record(const std::string& line, long line_no, const ParseOptions& opts = {});

std::string serialize_example(const Example& ex);
std::string serialize_corpus(const std::vector<Session>& sessions);
void write_corpus(const std::filesystem::path& path, const std::vector<Session>& sessions);

// Checks O | B-x | I-x and that I-x continues a B-x/I-x span. In repair mode
// orphan I-x becomes B-x (appending a warning); otherwise throws
// ValidationError.
void validate_iob(std::vector<std::string>& tags, bool repair, long line_no = 0,
                  std::vector<std::string>* warnings = nullptr);

// Dense token->id map. Id 0 is reserved for UNK and, for word vocabs, id 1
// for PAD.
class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kPad = 1;
  static constexpr const char* kUnkToken = "<unk>";
  static constexpr const char* kPadToken = "<pad>";

  explicit Vocab(bool with_pad = false);
  static Vocab from_tokens(const std::vector<std::string>& tokens, bool with_pad);

  int add(const std::string& token);
  int id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  bool has_pad() const { return with_pad_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::uint64_t digest() const;

  bool operator==(const Vocab& o) const { return tokens_ == o.tokens_ && with_pad_ == o.with_pad_; }

 private:
  bool with_pad_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct VocabSet {
  Vocab words{true};
  Vocab tags;
  Vocab intents;
  Vocab actions;

  int num_tags() const { return tags.size(); }        // M
  int num_intents() const { return intents.size(); }  // N
  int num_actions() const { return actions.size(); }  // K
  int outside_tag() const { return tags.id("O"); }

  nlohmann::ordered_json to_json() const;
  static VocabSet from_json(const nlohmann::json& j);
  nlohmann::ordered_json digests() const;

  bool operator==(const VocabSet&) const = default;
};

// Every train token is kept, ids in first-occurrence order.
VocabSet build_vocabs(const std::vector<Session>& train);

struct EncodedExample {
  std::vector<int> words;
  std::vector<int> tags;
  std::vector<int> tag_types;  // distinct tag ids, ascending
  std::vector<int> intents;    // ascending
  std::vector<int> actions;    // ascending
};

using EncodedSession = std::vector<EncodedExample>;

// Unseen tokens and labels map to UNK. Utterances longer than max_len are
// truncated.
EncodedExample encode_example(const Example& ex, const VocabSet& v, std::size_t max_len = 0);
std::vector<EncodedSession> encode_sessions(const std::vector<Session>& sessions, const VocabSet& v,
                                            std::size_t max_len = 0);

// A length-I history ending at one utterance. turns[k] indexes into the
// session or is -1 for left padding.
struct DialogWindow {
  std::size_t session = 0;
  std::vector<int> turns;

  int target() const { return turns.back(); }
};

// One window per utterance: window t covers max(0, t-I+1)..t, left-padded.
std::vector<DialogWindow> make_windows(std::size_t session_index, std::size_t session_length,
                                       std::size_t history);
std::vector<DialogWindow> make_windows(const std::vector<EncodedSession>& sessions,
                                       std::size_t history);

std::size_t count_utterances(const std::vector<Session>& sessions);

}  // namespace dialact

#include "dialact/corpus.hpp"

#include "dialact/digest.hpp"
#include "dialact/errors.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace dialact {

namespace {

using json = nlohmann::json;

std::vector<std::string> string_array(const json& j, const char* field, long line_no) {
  if (!j.contains(field)) throw ParseError(std::string("missing field '") + field + "'", line_no);
  const json& a = j.at(field);
  if (!a.is_array()) throw ParseError(std::string("field '") + field + "' must be an array", line_no);
  std::vector<std::string> out;
  out.reserve(a.size());
  for (const auto& e : a) {
    if (!e.is_string())
      throw ParseError(std::string("field '") + field + "' must contain strings", line_no);
    out.push_back(e.get<std::string>());
  }
  return out;
}


}  // namespace

void validate_iob(std::vector<std::string>& tags, bool repair, long line_no,
                  std::vector<std::string>* warnings) {
  std::string open;  // slot type of the span in progress, "" outside
  for (std::size_t t = 0; t < tags.size(); ++t) {
    std::string& tag = tags[t];
    if (tag == "O") {
      open.clear();
      continue;
    }
    const bool begin = tag.rfind("B-", 0) == 0;
    const bool inside = tag.rfind("I-", 0) == 0;
    if ((!begin && !inside) || tag.size() <= 2)
      throw ValidationError("tag '" + tag + "' at position " + std::to_string(t) +
                                " is not O, B-x or I-x",
                            line_no);
    const std::string type = tag.substr(2);
    if (inside && open != type) {
      if (!repair)
        throw ValidationError("orphan '" + tag + "' at position " + std::to_string(t) +
                                  (open.empty() ? " follows O or starts the utterance"
                                                : " follows a '" + open + "' span"),
                              line_no);
      if (warnings)
        warnings->push_back((line_no > 0 ? "line " + std::to_string(line_no) + ": " : std::string()) +
                            "repaired orphan '" + tag + "' at position " + std::to_string(t) + " to B-" + type);
      tag = "B-" + type;
    }
    open = type;
  }
}

Example parse_record(const std::string& line, long line_no, const ParseOptions& opts) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError("record must be a JSON object", line_no);
  Example ex;
  if (!j.contains("session") || !j["session"].is_string())
    throw ParseError("field 'session' must be a string", line_no);
  ex.session_id = j["session"].get<std::string>();
  if (!j.contains("turn") || !j["turn"].is_number_integer() || j["turn"].get<long>() < 0)
    throw ParseError("field 'turn' must be a non-negative integer", line_no);
  ex.turn_index = j["turn"].get<int>();
  ex.words = string_array(j, "words", line_no);
  ex.tags = string_array(j, "tags", line_no);
  const auto intents = string_array(j, "intents", line_no);
  const auto actions = string_array(j, "actions", line_no);
  ex.intents = {intents.begin(), intents.end()};
  ex.actions = {actions.begin(), actions.end()};
  if (ex.words.size() != ex.tags.size())
    throw ValidationError(std::to_string(ex.words.size()) + " words but " +
                              std::to_string(ex.tags.size()) + " tags",
                          line_no);
  if (ex.words.empty()) throw ValidationError("utterance has no words", line_no);
  validate_iob(ex.tags, opts.lenient_iob, line_no, opts.warnings);
  return ex;
}

std::vector<Session> parse_corpus(std::istream& in, const ParseOptions& opts) {
  std::vector<Session> sessions;
  std::map<std::string, std::size_t> index;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Example ex = parse_record(line, line_no, opts);
    auto [it, inserted] = index.try_emplace(ex.session_id, sessions.size());
    if (inserted) sessions.push_back({ex.session_id, {}});
    auto& turns = sessions[it->second].turns;
    for (const auto& other : turns)
      if (other.turn_index == ex.turn_index)
        throw ValidationError("duplicate turn " + std::to_string(ex.turn_index) + " in session '" +
                                  ex.session_id + "'",
                              line_no);
    turns.push_back(std::move(ex));
  }
  for (auto& s : sessions)
    std::stable_sort(s.turns.begin(), s.turns.end(),
                     [](const Example& a, const Example& b) { return a.turn_index < b.turn_index; });
  return sessions;
}

std::vector<Session> parse_corpus(const std::filesystem::path& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open corpus file " + path.string());
  return parse_corpus(in, opts);
}

std::string serialize_example(const Example& ex) {
  nlohmann::ordered_json j;
  j["session"] = ex.session_id;
  j["turn"] = ex.turn_index;
  j["words"] = ex.words;
  j["tags"] = ex.tags;
  j["intents"] = std::vector<std::string>(ex.intents.begin(), ex.intents.end());
  j["actions"] = std::vector<std::string>(ex.actions.begin(), ex.actions.end());
  return j.dump();
}

std::string serialize_corpus(const std::vector<Session>& sessions) {
  std::string out;
  for (const auto& s : sessions)
    for (const auto& ex : s.turns) {
      out += serialize_example(ex);
      out += '\n';
    }
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<Session>& sessions) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << serialize_corpus(sessions);
}

Vocab::Vocab(bool with_pad) : with_pad_(with_pad) {
  add(kUnkToken);
  if (with_pad) add(kPadToken);
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens, bool with_pad) {
  Vocab v(with_pad);
  const std::size_t reserved = with_pad ? 2 : 1;
  if (tokens.size() < reserved || tokens[0] != kUnkToken || (with_pad && tokens[1] != kPadToken))
    throw ValidationError("vocab: reserved tokens missing");
  for (std::size_t i = reserved; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw ValidationError("vocab: duplicate token '" + tokens[i] + "'");
    v.add(tokens[i]);
  }
  return v;
}

int Vocab::add(const std::string& token) {
  auto [it, inserted] = index_.try_emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int Vocab::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::uint64_t Vocab::digest() const {
  std::uint64_t h = fnv1a64(with_pad_ ? "pad\n" : "nopad\n");
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

nlohmann::ordered_json VocabSet::to_json() const {
  nlohmann::ordered_json j;
  j["words"] = words.tokens();
  j["tags"] = tags.tokens();
  j["intents"] = intents.tokens();
  j["actions"] = actions.tokens();
  return j;
}

VocabSet VocabSet::from_json(const nlohmann::json& j) {
  VocabSet v;
  v.words = Vocab::from_tokens(j.at("words").get<std::vector<std::string>>(), true);
  v.tags = Vocab::from_tokens(j.at("tags").get<std::vector<std::string>>(), false);
  v.intents = Vocab::from_tokens(j.at("intents").get<std::vector<std::string>>(), false);
  v.actions = Vocab::from_tokens(j.at("actions").get<std::vector<std::string>>(), false);
  return v;
}

nlohmann::ordered_json VocabSet::digests() const {
  nlohmann::ordered_json j;
  j["words"] = hex64(words.digest());
  j["tags"] = hex64(tags.digest());
  j["intents"] = hex64(intents.digest());
  j["actions"] = hex64(actions.digest());
  return j;
}

VocabSet build_vocabs(const std::vector<Session>& train) {
  if (count_utterances(train) == 0) throw InvalidArgument("build_vocabs: empty train split");
  VocabSet v;
  for (const auto& s : train)
    for (const auto& ex : s.turns) {
      for (const auto& w : ex.words) v.words.add(w);
      for (const auto& t : ex.tags) v.tags.add(t);
      for (const auto& n : ex.intents) v.intents.add(n);
      for (const auto& a : ex.actions) v.actions.add(a);
    }
  return v;
}

EncodedExample encode_example(const Example& ex, const VocabSet& v, std::size_t max_len) {
  EncodedExample e;
  const std::size_t T = max_len > 0 ? std::min(max_len, ex.words.size()) : ex.words.size();
  for (std::size_t t = 0; t < T; ++t) {
    e.words.push_back(v.words.id(ex.words[t]));
    e.tags.push_back(v.tags.id(ex.tags[t]));
  }
  e.tag_types = e.tags;
  std::sort(e.tag_types.begin(), e.tag_types.end());
  e.tag_types.erase(std::unique(e.tag_types.begin(), e.tag_types.end()), e.tag_types.end());
  for (const auto& n : ex.intents) e.intents.push_back(v.intents.id(n));
  for (const auto& a : ex.actions) e.actions.push_back(v.actions.id(a));
  for (auto* labels : {&e.intents, &e.actions}) {
    std::sort(labels->begin(), labels->end());
    labels->erase(std::unique(labels->begin(), labels->end()), labels->end());
  }
  return e;
}

std::vector<EncodedSession> encode_sessions(const std::vector<Session>& sessions, const VocabSet& v,
                                            std::size_t max_len) {
  std::vector<EncodedSession> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) {
    EncodedSession es;
    es.reserve(s.turns.size());
    for (const auto& ex : s.turns) es.push_back(encode_example(ex, v, max_len));
    out.push_back(std::move(es));
  }
  return out;
}

std::vector<DialogWindow> make_windows(std::size_t session_index, std::size_t session_length,
                                       std::size_t history) {
  if (history == 0) throw InvalidArgument("make_windows: history length must be >= 1");
  std::vector<DialogWindow> windows;
  windows.reserve(session_length);
  for (std::size_t t = 0; t < session_length; ++t) {
    DialogWindow w{session_index, std::vector<int>(history, -1)};
    for (std::size_t k = 0; k < history; ++k) {
      // slot k holds utterance t - (history - 1 - k)
      const std::size_t back = history - 1 - k;
      if (back <= t) w.turns[k] = static_cast<int>(t - back);
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

std::vector<DialogWindow> make_windows(const std::vector<EncodedSession>& sessions,
                                       std::size_t history) {
  std::vector<DialogWindow> all;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    auto w = make_windows(s, sessions[s].size(), history);
    all.insert(all.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return all;
}

std::size_t count_utterances(const std::vector<Session>& sessions) {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.turns.size();
  return n;
}

}  // namespace dialact

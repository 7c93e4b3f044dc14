#include "dialact/synthetic.hpp"

#include "dialact/digest.hpp"
#include "dialact/errors.hpp"
#include "dialact/rng.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dialact {

namespace {

using ojson = nlohmann::ordered_json;

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

ActionRule rule(std::string intent, std::vector<std::string> actions) {
  ActionRule r;
  r.intent = std::move(intent);
  r.actions = std::move(actions);
  return r;
}

ActionRule with_prev(ActionRule r, std::string prev) {
  r.prev_intent = std::move(prev);
  return r;
}
ActionRule with_slot(ActionRule r, std::string slot) {
  r.has_slot = std::move(slot);
  return r;
}
ActionRule without_slot(ActionRule r, std::string slot) {
  r.missing_slot = std::move(slot);
  return r;
}
ActionRule with_value(ActionRule r, std::string slot, std::string value) {
  r.slot_value = std::make_pair(std::move(slot), std::move(value));
  return r;
}

}  // namespace

GenSpec default_gen_spec() {
  GenSpec s;
  s.domains = {"food", "hotel", "transport"};

  s.slots["cuisine"] = {{"chinese", "indian", "malay", "japanese", "thai", "western", "dim sum", "chicken rice"},
                        {"peranakan", "korean"}};
  s.slots["area"] = {{"orchard", "chinatown", "little india", "bugis", "sentosa", "marina bay", "clarke quay"},
                     {"jurong", "tampines"}};
  s.slots["price"] = {{"cheap", "moderate", "expensive"}, {}};
  s.slots["hotel_name"] = {{"raffles hotel", "fullerton hotel", "shangri la", "hotel fort canning", "parkroyal"},
                           {"capella", "hotel jen"}};
  s.slots["stars"] = {{"three star", "four star", "five star"}, {}};
  s.slots["nights"] = {{"two", "three", "four", "five", "six"}, {}};
  s.slots["destination"] = {{"the airport", "the zoo", "night safari", "gardens by the bay", "universal studios", "changi"},
                            {"east coast park"}};
  s.slots["time"] = {{"morning", "afternoon", "evening", "tonight", "tomorrow morning"}, {}};
  s.slots["transport_mode"] = {{"bus", "taxi", "mrt", "train"}, {}};

  s.intents["greet"] = {"", {"hello", "hi there", "good day", "hello there"}, 0.2, false};
  s.intents["thank"] = {"", {"thank you", "thanks a lot", "great thanks", "thank you very much"}, 0.3, false};
  s.intents["confirm"] = {"", {"yes", "yes please", "that sounds good", "okay sure", "yes that works"}, 0.8, true};
  s.intents["deny"] = {"", {"no", "no thanks", "not really", "i do not like that"}, 0.4, true};
  s.intents["wait"] = {"", {"let me think", "hold on", "one moment please"}, 0.3, false};
  s.intents["request_restaurant"] = {
      "food",
      {"i am looking for {cuisine} food", "any {price} {cuisine} restaurant in {area}",
       "where can i find {cuisine} food near {area}", "i want a {price} place to eat",
       "recommend a {cuisine} restaurant in {area}", "is there a {price} restaurant around {area}"},
      1.0,
      false};
  s.intents["ask_price"] = {"food", {"how much does it cost", "is it {price}", "what is the price range there"}, 0.6, false};
  s.intents["request_hotel"] = {
      "hotel",
      {"i need a hotel in {area}", "any {stars} hotel", "can you suggest a {price} hotel near {area}",
       "i am looking for a place to stay", "is there a {stars} hotel around {area}"},
      1.0,
      false};
  s.intents["book_hotel"] = {
      "hotel",
      {"i would like to book {hotel_name} for {nights} nights", "please reserve {hotel_name}",
       "book a room at {hotel_name} for {nights} nights", "can i stay at {hotel_name}"},
      1.0,
      false};
  s.intents["request_route"] = {
      "transport",
      {"how do i get to {destination}", "i want to go to {destination} by {transport_mode} in the {time}",
       "how can i reach {destination} {time}", "can i take a {transport_mode} to {destination}"},
      1.0,
      false};
  s.intents["ask_time"] = {"transport",
                           {"what time does the {transport_mode} leave", "how long does it take to reach {destination}"},
                           0.6,
                           false};

  s.actions = {"NULL",      "FOL_OPENING",    "FOL_THANK", "FOL_ACK",  "FOL_CONFIRM", "QST_WHERE",   "QST_WHEN",
               "QST_HOW_LONG", "QST_ALTERNATIVE", "RES_RECOMMEND", "RES_INFO", "RES_LUXURY", "RES_ROUTE"};

  s.rules = {
      rule("greet", {"FOL_OPENING"}),
      rule("thank", {"FOL_THANK"}),
      without_slot(rule("request_restaurant", {"QST_WHERE"}), "area"),
      with_slot(rule("request_restaurant", {"RES_RECOMMEND"}), "area"),
      with_value(rule("request_restaurant", {"RES_LUXURY"}), "price", "expensive"),
      rule("ask_price", {"RES_INFO"}),
      without_slot(rule("request_hotel", {"QST_WHERE"}), "area"),
      with_slot(rule("request_hotel", {"RES_RECOMMEND"}), "area"),
      with_value(rule("request_hotel", {"RES_LUXURY"}), "price", "expensive"),
      without_slot(rule("book_hotel", {"QST_HOW_LONG"}), "nights"),
      with_slot(rule("book_hotel", {"FOL_CONFIRM"}), "nights"),
      without_slot(rule("request_route", {"QST_WHEN"}), "time"),
      with_slot(rule("request_route", {"RES_ROUTE"}), "time"),
      rule("ask_time", {"RES_INFO"}),
      with_prev(rule("confirm", {"FOL_CONFIRM"}), "request_restaurant"),
      with_prev(rule("confirm", {"QST_HOW_LONG"}), "request_hotel"),
      with_prev(rule("confirm", {"FOL_ACK"}), "book_hotel"),
      with_prev(rule("confirm", {"RES_ROUTE"}), "request_route"),
      rule("deny", {"FOL_ACK"}),
      with_prev(rule("deny", {"QST_ALTERNATIVE"}), "request_restaurant"),
      with_prev(rule("deny", {"QST_ALTERNATIVE"}), "request_hotel"),
      with_prev(rule("deny", {"QST_ALTERNATIVE"}), "request_route"),
  };
  s.default_actions = {"NULL"};
  s.fillers = {"um", "so", "well", "actually"};
  s.heldout_fillers = {"erm", "hmm", "uh"};
  return s;
}

ojson gen_spec_to_json(const GenSpec& s) {
  ojson j;
  j["domains"] = s.domains;
  ojson slots = ojson::object();
  for (const auto& [name, slot] : s.slots) slots[name] = {{"values", slot.values}, {"heldout", slot.heldout}};
  j["slots"] = slots;
  ojson intents = ojson::object();
  for (const auto& [name, in] : s.intents)
    intents[name] = {{"domain", in.domain},
                     {"templates", in.templates},
                     {"weight", in.weight},
                     {"needs_history", in.needs_history}};
  j["intents"] = intents;
  j["actions"] = s.actions;
  ojson rules = ojson::array();
  for (const auto& r : s.rules) {
    ojson jr;
    jr["intent"] = r.intent;
    if (r.prev_intent) jr["prev_intent"] = *r.prev_intent;
    if (r.has_slot) jr["has_slot"] = *r.has_slot;
    if (r.missing_slot) jr["missing_slot"] = *r.missing_slot;
    if (r.slot_value) jr["slot_value"] = {{"slot", r.slot_value->first}, {"value", r.slot_value->second}};
    jr["actions"] = r.actions;
    rules.push_back(jr);
  }
  j["rules"] = rules;
  j["default_actions"] = s.default_actions;
  j["history_dependence"] = s.history_dependence;
  j["splits"] = {{"train", s.train_utterances}, {"dev", s.dev_utterances}, {"test", s.test_utterances}};
  j["session_length"] = {{"min", s.session_min}, {"max", s.session_max}};
  j["opening_greet_rate"] = s.opening_greet_rate;
  j["closing_thank_rate"] = s.closing_thank_rate;
  j["multi_intent_rate"] = s.multi_intent_rate;
  j["filler_rate"] = s.filler_rate;
  j["fillers"] = s.fillers;
  j["heldout_fillers"] = s.heldout_fillers;
  j["unseen_filler_rate"] = s.unseen_filler_rate;
  j["unseen_value_rate"] = s.unseen_value_rate;
  j["nlu_label_noise"] = s.nlu_label_noise;
  return j;
}

namespace {

using json = nlohmann::json;

const json& field(const json& j, const std::string& path, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError(path + (path.empty() ? "" : ".") + key + ": missing field");
  return j.at(key);
}

template <class T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ValidationError(path + ": wrong type");
  }
}

template <class T>
T optional_field(const json& j, const std::string& path, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return get_as<T>(j.at(key), path + "." + key);
}

}  // namespace

GenSpec gen_spec_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("spec: must be a JSON object");
  GenSpec s;
  s.domains = get_as<std::vector<std::string>>(field(j, "", "domains"), "domains");
  const json& slots = field(j, "", "slots");
  if (!slots.is_object()) throw ValidationError("slots: must be an object");
  for (const auto& [name, js] : slots.items()) {
    const std::string path = "slots." + name;
    SlotSpec slot;
    slot.values = get_as<std::vector<std::string>>(field(js, path, "values"), path + ".values");
    slot.heldout = optional_field<std::vector<std::string>>(js, path, "heldout", {});
    s.slots[name] = std::move(slot);
  }
  const json& intents = field(j, "", "intents");
  if (!intents.is_object()) throw ValidationError("intents: must be an object");
  for (const auto& [name, ji] : intents.items()) {
    const std::string path = "intents." + name;
    IntentSpec in;
    in.domain = optional_field<std::string>(ji, path, "domain", "");
    in.templates = get_as<std::vector<std::string>>(field(ji, path, "templates"), path + ".templates");
    in.weight = optional_field<double>(ji, path, "weight", 1.0);
    in.needs_history = optional_field<bool>(ji, path, "needs_history", false);
    s.intents[name] = std::move(in);
  }
  s.actions = get_as<std::vector<std::string>>(field(j, "", "actions"), "actions");
  const json& rules = field(j, "", "rules");
  if (!rules.is_array()) throw ValidationError("rules: must be an array");
  for (std::size_t k = 0; k < rules.size(); ++k) {
    const std::string path = "rules[" + std::to_string(k) + "]";
    const json& jr = rules[k];
    ActionRule r;
    r.intent = get_as<std::string>(field(jr, path, "intent"), path + ".intent");
    if (jr.contains("prev_intent")) r.prev_intent = get_as<std::string>(jr["prev_intent"], path + ".prev_intent");
    if (jr.contains("has_slot")) r.has_slot = get_as<std::string>(jr["has_slot"], path + ".has_slot");
    if (jr.contains("missing_slot")) r.missing_slot = get_as<std::string>(jr["missing_slot"], path + ".missing_slot");
    if (jr.contains("slot_value")) {
      const json& sv = jr["slot_value"];
      r.slot_value = std::make_pair(get_as<std::string>(field(sv, path + ".slot_value", "slot"), path + ".slot_value.slot"),
                                    get_as<std::string>(field(sv, path + ".slot_value", "value"), path + ".slot_value.value"));
    }
    r.actions = get_as<std::vector<std::string>>(field(jr, path, "actions"), path + ".actions");
    s.rules.push_back(std::move(r));
  }
  s.default_actions = optional_field<std::vector<std::string>>(j, "", "default_actions", {"NULL"});
  s.history_dependence = optional_field<bool>(j, "", "history_dependence", true);
  if (j.contains("splits")) {
    const json& sp = j["splits"];
    s.train_utterances = optional_field<std::size_t>(sp, "splits", "train", s.train_utterances);
    s.dev_utterances = optional_field<std::size_t>(sp, "splits", "dev", s.dev_utterances);
    s.test_utterances = optional_field<std::size_t>(sp, "splits", "test", s.test_utterances);
  }
  if (j.contains("session_length")) {
    const json& sl = j["session_length"];
    s.session_min = optional_field<std::size_t>(sl, "session_length", "min", s.session_min);
    s.session_max = optional_field<std::size_t>(sl, "session_length", "max", s.session_max);
  }
  s.opening_greet_rate = optional_field<double>(j, "", "opening_greet_rate", s.opening_greet_rate);
  s.closing_thank_rate = optional_field<double>(j, "", "closing_thank_rate", s.closing_thank_rate);
  s.multi_intent_rate = optional_field<double>(j, "", "multi_intent_rate", s.multi_intent_rate);
  s.filler_rate = optional_field<double>(j, "", "filler_rate", s.filler_rate);
  s.fillers = optional_field<std::vector<std::string>>(j, "", "fillers", {});
  s.heldout_fillers = optional_field<std::vector<std::string>>(j, "", "heldout_fillers", {});
  s.unseen_filler_rate = optional_field<double>(j, "", "unseen_filler_rate", s.unseen_filler_rate);
  s.unseen_value_rate = optional_field<double>(j, "", "unseen_value_rate", s.unseen_value_rate);
  s.nlu_label_noise = optional_field<double>(j, "", "nlu_label_noise", s.nlu_label_noise);
  validate_gen_spec(s);
  return s;
}

void validate_gen_spec(const GenSpec& s) {
  if (s.domains.size() < 2) throw ValidationError("domains: at least two domains required");
  const std::set<std::string> domains(s.domains.begin(), s.domains.end());
  const std::set<std::string> actions(s.actions.begin(), s.actions.end());
  if (actions.empty()) throw ValidationError("actions: empty inventory");
  if (s.slots.empty()) throw ValidationError("slots: empty inventory");
  for (const auto& [name, slot] : s.slots) {
    if (slot.values.empty()) throw ValidationError("slots." + name + ".values: empty");
    for (const auto& v : slot.values)
      if (split_words(v).empty()) throw ValidationError("slots." + name + ".values: blank value");
  }
  if (s.intents.empty()) throw ValidationError("intents: empty inventory");
  for (const auto& [name, in] : s.intents) {
    const std::string path = "intents." + name;
    if (!in.domain.empty() && !domains.count(in.domain))
      throw ValidationError(path + ".domain: unknown domain '" + in.domain + "'");
    if (in.templates.empty()) throw ValidationError(path + ".templates: empty");
    if (!(in.weight >= 0.0)) throw ValidationError(path + ".weight: must be >= 0");
    for (const auto& tmpl : in.templates) {
      const auto words = split_words(tmpl);
      if (words.empty()) throw ValidationError(path + ".templates: blank template");
      for (const auto& w : words)
        if (w.size() > 2 && w.front() == '{' && w.back() == '}' && !s.slots.count(w.substr(1, w.size() - 2)))
          throw ValidationError(path + ".templates: unknown slot " + w);
    }
  }
  for (const auto& d : s.domains) {
    bool any = false;
    for (const auto& [name, in] : s.intents) any = any || (in.domain == d && in.weight > 0.0);
    if (!any) throw ValidationError("domains: domain '" + d + "' has no intents");
  }
  auto check_actions = [&](const std::vector<std::string>& list, const std::string& path) {
    for (const auto& a : list)
      if (!actions.count(a)) throw ValidationError(path + ": unknown action '" + a + "'");
  };
  for (std::size_t k = 0; k < s.rules.size(); ++k) {
    const auto& r = s.rules[k];
    const std::string path = "rules[" + std::to_string(k) + "]";
    if (!s.intents.count(r.intent)) throw ValidationError(path + ".intent: unknown intent '" + r.intent + "'");
    if (r.prev_intent && !s.intents.count(*r.prev_intent))
      throw ValidationError(path + ".prev_intent: unknown intent '" + *r.prev_intent + "'");
    if (r.has_slot && !s.slots.count(*r.has_slot))
      throw ValidationError(path + ".has_slot: unknown slot '" + *r.has_slot + "'");
    if (r.missing_slot && !s.slots.count(*r.missing_slot))
      throw ValidationError(path + ".missing_slot: unknown slot '" + *r.missing_slot + "'");
    if (r.slot_value) {
      const auto it = s.slots.find(r.slot_value->first);
      if (it == s.slots.end())
        throw ValidationError(path + ".slot_value.slot: unknown slot '" + r.slot_value->first + "'");
      const auto& vals = it->second.values;
      if (std::find(vals.begin(), vals.end(), r.slot_value->second) == vals.end())
        throw ValidationError(path + ".slot_value.value: '" + r.slot_value->second + "' is not a value of " +
                              r.slot_value->first);
    }
    if (r.actions.empty()) throw ValidationError(path + ".actions: empty");
    check_actions(r.actions, path + ".actions");
  }
  if (s.default_actions.empty()) throw ValidationError("default_actions: empty");
  check_actions(s.default_actions, "default_actions");
  if (s.train_utterances == 0 || s.dev_utterances == 0 || s.test_utterances == 0)
    throw ValidationError("splits: every split needs at least one utterance");
  if (s.session_min == 0 || s.session_min > s.session_max)
    throw ValidationError("session_length: need 1 <= min <= max");
  const std::pair<const char*, double> rates[] = {
      {"opening_greet_rate", s.opening_greet_rate}, {"closing_thank_rate", s.closing_thank_rate},
      {"multi_intent_rate", s.multi_intent_rate},   {"filler_rate", s.filler_rate},
      {"unseen_filler_rate", s.unseen_filler_rate}, {"unseen_value_rate", s.unseen_value_rate},
      {"nlu_label_noise", s.nlu_label_noise}};
  for (const auto& [name, rate] : rates)
    if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError(std::string(name) + ": must be in [0, 1]");
  if (s.filler_rate > 0.0 && s.fillers.empty()) throw ValidationError("fillers: empty but filler_rate > 0");
  if (s.opening_greet_rate > 0.0 && !s.intents.count("greet"))
    throw ValidationError("opening_greet_rate: no 'greet' intent");
  if (s.closing_thank_rate > 0.0 && !s.intents.count("thank"))
    throw ValidationError("closing_thank_rate: no 'thank' intent");
}

std::set<std::string> apply_rules(const GenSpec& spec, const TurnSemantics& cur, const TurnSemantics* prev) {
  std::set<std::string> out;
  for (const auto& r : spec.rules) {
    if (!cur.intents.count(r.intent)) continue;
    if (r.prev_intent) {
      if (!spec.history_dependence || !prev || !prev->intents.count(*r.prev_intent)) continue;
    }
    if (r.has_slot && !cur.slots.count(*r.has_slot)) continue;
    if (r.missing_slot && cur.slots.count(*r.missing_slot)) continue;
    if (r.slot_value) {
      const auto it = cur.slots.find(r.slot_value->first);
      if (it == cur.slots.end() || !it->second.count(r.slot_value->second)) continue;
    }
    out.insert(r.actions.begin(), r.actions.end());
  }
  if (out.empty()) out.insert(spec.default_actions.begin(), spec.default_actions.end());
  return out;
}

namespace {

enum class Split { kTrain, kDev, kTest };

class Generator {
 public:
  Generator(const GenSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  std::vector<Session> split(Split which, std::size_t utterances, const std::string& prefix) {
    std::vector<Session> sessions;
    std::size_t produced = 0;
    while (produced < utterances) {
      std::size_t len = spec_.session_min +
                        static_cast<std::size_t>(rng_.below(spec_.session_max - spec_.session_min + 1));
      len = std::min(len, utterances - produced);
      char id[32];
      std::snprintf(id, sizeof(id), "%s-%05zu", prefix.c_str(), sessions.size());
      sessions.push_back(session(which, id, len));
      produced += len;
    }
    return sessions;
  }

 private:
  std::string sample_intent(const std::string& domain, bool first, const std::string& exclude,
                            bool domain_only) {
    std::vector<std::pair<std::string, double>> pool;
    double total = 0.0;
    for (const auto& [name, in] : spec_.intents) {
      if (name == exclude) continue;
      if (!in.domain.empty() && in.domain != domain) continue;
      if (domain_only && in.domain.empty()) continue;
      if (first && in.needs_history) continue;
      if (in.weight <= 0.0) continue;
      pool.emplace_back(name, in.weight);
      total += in.weight;
    }
    if (pool.empty()) return {};
    double u = rng_.uniform() * total;
    for (const auto& [name, w] : pool) {
      if (u < w) return name;
      u -= w;
    }
    return pool.back().first;
  }

  std::string pick_value(const SlotSpec& slot, Split which) {
    if (which != Split::kTrain && !slot.heldout.empty() && rng_.bernoulli(spec_.unseen_value_rate))
      return rng_.pick(slot.heldout);
    return rng_.pick(slot.values);
  }

  void realize(const std::string& intent, Split which, Example& ex, TurnSemantics& sem) {
    const auto& tmpl = rng_.pick(spec_.intents.at(intent).templates);
    for (const auto& w : split_words(tmpl)) {
      if (w.size() > 2 && w.front() == '{' && w.back() == '}') {
        const std::string slot = w.substr(1, w.size() - 2);
        const std::string value = pick_value(spec_.slots.at(slot), which);
        sem.slots[slot].insert(value);
        bool begin = true;
        for (const auto& vw : split_words(value)) {
          ex.words.push_back(vw);
          ex.tags.push_back((begin ? "B-" : "I-") + slot);
          begin = false;
        }
      } else {
        ex.words.push_back(w);
        ex.tags.push_back("O");
      }
    }
  }

  void corrupt(Example& ex) {
    if (rng_.bernoulli(0.5)) {
      // Relabel one slot span to another slot type, or mark one O token as a
      // slot when the utterance has none.
      std::vector<std::size_t> starts;
      for (std::size_t t = 0; t < ex.tags.size(); ++t)
        if (ex.tags[t].rfind("B-", 0) == 0) starts.push_back(t);
      std::vector<std::string> slot_names;
      for (const auto& [name, _] : spec_.slots) slot_names.push_back(name);
      if (starts.empty()) {
        const std::size_t t = static_cast<std::size_t>(rng_.below(ex.tags.size()));
        ex.tags[t] = "B-" + rng_.pick(slot_names);
        return;
      }
      const std::size_t start = rng_.pick(starts);
      const std::string old = ex.tags[start].substr(2);
      std::vector<std::string> others;
      for (const auto& n : slot_names)
        if (n != old) others.push_back(n);
      if (others.empty()) return;
      const std::string repl = rng_.pick(others);
      ex.tags[start] = "B-" + repl;
      for (std::size_t t = start + 1; t < ex.tags.size() && ex.tags[t] == "I-" + old; ++t) ex.tags[t] = "I-" + repl;
    } else {
      std::vector<std::string> current(ex.intents.begin(), ex.intents.end());
      std::vector<std::string> others;
      for (const auto& [name, _] : spec_.intents)
        if (!ex.intents.count(name)) others.push_back(name);
      if (others.empty()) return;
      ex.intents.erase(rng_.pick(current));
      ex.intents.insert(rng_.pick(others));
    }
  }

  Session session(Split which, const std::string& id, std::size_t len) {
    Session s{id, {}};
    const std::string domain = rng_.pick(spec_.domains);
    TurnSemantics prev;
    for (std::size_t t = 0; t < len; ++t) {
      std::string primary;
      if (t == 0 && spec_.opening_greet_rate > 0.0 && rng_.bernoulli(spec_.opening_greet_rate)) {
        primary = "greet";
      } else if (t > 0 && t + 1 == len && spec_.closing_thank_rate > 0.0 && rng_.bernoulli(spec_.closing_thank_rate)) {
        primary = "thank";
      } else {
        primary = sample_intent(domain, t == 0, "", false);
      }
      std::vector<std::string> order{primary};
      if (rng_.bernoulli(spec_.multi_intent_rate)) {
        const std::string second = sample_intent(domain, false, primary, true);
        if (!second.empty()) order.push_back(second);
      }

      Example ex;
      ex.session_id = id;
      ex.turn_index = static_cast<int>(t);
      TurnSemantics sem;
      if (spec_.filler_rate > 0.0 && rng_.bernoulli(spec_.filler_rate)) {
        ex.words.push_back(rng_.pick(spec_.fillers));
        ex.tags.push_back("O");
      }
      if (which != Split::kTrain && !spec_.heldout_fillers.empty() && rng_.bernoulli(spec_.unseen_filler_rate)) {
        ex.words.insert(ex.words.begin(), rng_.pick(spec_.heldout_fillers));
        ex.tags.insert(ex.tags.begin(), "O");
      }
      for (std::size_t k = 0; k < order.size(); ++k) {
        if (k > 0) {
          ex.words.push_back("and");
          ex.tags.push_back("O");
        }
        realize(order[k], which, ex, sem);
        sem.intents.insert(order[k]);
      }
      ex.intents = sem.intents;
      ex.actions = apply_rules(spec_, sem, t > 0 ? &prev : nullptr);
      if (which == Split::kTrain && spec_.nlu_label_noise > 0.0 && rng_.bernoulli(spec_.nlu_label_noise)) corrupt(ex);
      s.turns.push_back(std::move(ex));
      prev = std::move(sem);
    }
    return s;
  }

  const GenSpec& spec_;
  Rng rng_;
};

ojson split_summary(const std::vector<Session>& sessions) {
  ojson j;
  j["sessions"] = sessions.size();
  j["utterances"] = count_utterances(sessions);
  j["digest"] = hex64(fnv1a64(serialize_corpus(sessions)));
  return j;
}

}  // namespace

SyntheticCorpus gen_synthetic(const GenSpec& spec, std::uint64_t seed) {
  validate_gen_spec(spec);
  Generator gen(spec, seed);
  SyntheticCorpus c;
  c.train = gen.split(Split::kTrain, spec.train_utterances, "train");
  c.dev = gen.split(Split::kDev, spec.dev_utterances, "dev");
  c.test = gen.split(Split::kTest, spec.test_utterances, "test");

  const VocabSet v = build_vocabs(c.train);
  ojson& m = c.manifest;
  m["generator"] = "dialact-synthetic";
  m["format_version"] = 1;
  m["seed"] = seed;
  m["splits"] = {{"train", split_summary(c.train)}, {"dev", split_summary(c.dev)}, {"test", split_summary(c.test)}};
  m["M"] = v.num_tags();
  m["N"] = v.num_intents();
  m["K"] = v.num_actions();
  m["vocab_words"] = v.words.size();
  m["vocab_digests"] = v.digests();
  ojson mapping;
  const ojson spec_json = gen_spec_to_json(spec);
  mapping["history_dependence"] = spec.history_dependence;
  mapping["rules"] = spec_json["rules"];
  mapping["default_actions"] = spec.default_actions;
  m["mapping"] = mapping;
  m["spec"] = spec_json;
  return c;
}

void write_synthetic(const SyntheticCorpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_corpus(dir / "train.jsonl", c.train);
  write_corpus(dir / "dev.jsonl", c.dev);
  write_corpus(dir / "test.jsonl", c.test);
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write manifest in " + dir.string());
  out << c.manifest.dump(2) << '\n';
}

}  // namespace dialact

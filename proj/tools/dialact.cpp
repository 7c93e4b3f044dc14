#include "dialact/checkpoint.hpp"
#include "dialact/config.hpp"
#include "dialact/corpus.hpp"
#include "dialact/diagnostics.hpp"
#include "dialact/digest.hpp"
#include "dialact/errors.hpp"
#include "dialact/synthetic.hpp"
#include "dialact/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace dialact;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kInternal = 1, kUser = 2, kNumerical = 3 };

struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool quiet() {
  const char* v = std::getenv("DIALACT_LOG");
  return v && std::string(v) == "quiet";
}

void info(const std::string& msg) {
  if (!quiet()) std::cerr << msg << '\n';
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UserError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw UserError("cannot write " + p.string());
  out << text;
  if (!out) throw UserError("write failed: " + p.string());
}

nlohmann::json read_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw UserError(p.string() + ": " + e.what());
  }
}

std::string file_digest(const fs::path& p) { return hex64(fnv1a64(read_file(p))); }

fs::path split_path(const fs::path& dir, const std::string& split) {
  const fs::path p = dir / (split + ".jsonl");
  if (!fs::exists(p)) throw UserError("missing data file " + p.string());
  return p;
}

struct LoadedData {
  VocabSet vocabs;
  Dataset train, dev;
};

bool lenient_iob = false;

std::vector<Session> read_split(const fs::path& dir, const std::string& split) {
  std::vector<std::string> warnings;
  ParseOptions opts;
  opts.lenient_iob = lenient_iob;
  opts.warnings = &warnings;
  auto sessions = parse_corpus(split_path(dir, split), opts);
  for (const auto& w : warnings) info(split + ".jsonl: " + w);
  return sessions;
}

Dataset encode_split(const fs::path& dir, const std::string& split, const VocabSet& v, int max_len) {
  return {encode_sessions(read_split(dir, split), v, static_cast<std::size_t>(max_len))};
}

// --- gen-data -------------------------------------------------------------

int cmd_gen_data(const std::string& spec_path, const std::string& out, std::uint64_t seed,
                 const std::string& default_spec_out) {
  if (!default_spec_out.empty()) {
    write_file(default_spec_out, gen_spec_to_json(default_gen_spec()).dump(2) + "\n");
    info("wrote default spec to " + default_spec_out);
    if (out.empty()) return kOk;
  }
  if (out.empty()) throw UserError("--out is required");
  const GenSpec spec = spec_path.empty() ? default_gen_spec() : gen_spec_from_json(read_json(spec_path));
  const SyntheticCorpus corpus = gen_synthetic(spec, seed);
  fs::create_directories(out);
  write_synthetic(corpus, out);
  for (const char* split : {"train", "dev", "test"}) {
    const auto& s = corpus.manifest["splits"][split];
    std::cout << split << ": " << s["sessions"] << " sessions, " << s["utterances"] << " utterances, digest "
              << s["digest"].get<std::string>() << '\n';
  }
  return kOk;
}

// --- train ----------------------------------------------------------------

struct TrainFlags {
  std::string config, data, out, mode, preset, init_checkpoint, replay;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<double> lr;
  int parallelism = 1;
};

TrainConfig resolve_config(const TrainFlags& f, ojson& sources) {
  nlohmann::json file = nlohmann::json::object();
  if (!f.config.empty()) file = read_json(f.config);
  std::string preset = "desk";
  if (file.is_object() && file.contains("preset")) preset = file["preset"].get<std::string>();
  if (!f.preset.empty()) preset = f.preset;
  TrainConfig cfg = TrainConfig::preset(preset);
  sources["preset"] = preset;

  cfg.merge_json(file);
  if (!f.config.empty()) sources["file"] = {{"path", f.config}, {"values", file}};

  ojson env = ojson::object();
  if (const char* s = std::getenv("DIALACT_SEED")) {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(s, &used);
      if (used != std::string(s).size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UserError(std::string("DIALACT_SEED is not an unsigned integer: ") + s);
    }
    env["DIALACT_SEED"] = s;
  }
  sources["environment"] = env;

  ojson flags = ojson::object();
  if (!f.mode.empty()) {
    cfg.mode = parse_mode(f.mode);
    flags["mode"] = f.mode;
  }
  if (f.seed) {
    cfg.seed = *f.seed;
    flags["seed"] = *f.seed;
  }
  if (f.epochs) {
    cfg.epochs = *f.epochs;
    flags["epochs"] = *f.epochs;
  }
  if (f.lr) {
    cfg.learning_rate = *f.lr;
    flags["learning_rate"] = *f.lr;
  }
  sources["flags"] = flags;
  cfg.validate();
  return cfg;
}

void print_epoch(const EpochLog& e, Mode mode) {
  if (quiet()) return;
  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(4);
  line << "epoch " << e.epoch << " loss " << e.mean_loss.total();
  if (mode != Mode::kOracleSap && e.dev.tags)
    line << " | dev tag F1 " << e.dev.tags->f1 << " FrmAcc " << e.dev.tags->frame_accuracy << " | int F1 "
         << e.dev.intents->f1 << " FrmAcc " << e.dev.intents->frame_accuracy;
  if (e.dev.actions) line << " | act F1 " << e.dev.actions->f1 << " FrmAcc " << e.dev.actions->frame_accuracy;
  line.precision(2);
  line << " (" << e.seconds << "s)";
  std::cout << line.str() << std::endl;
}

int cmd_train(TrainFlags f) {
  ojson sources;
  TrainConfig cfg;
  if (!f.replay.empty()) {
    const nlohmann::json m = read_json(f.replay);
    cfg = TrainConfig::desk();
    cfg.merge_json(m.at("config"));
    cfg.validate();
    f.data = m.at("data").at("dir").get<std::string>();
    for (const char* split : {"train", "dev"})
      if (file_digest(split_path(f.data, split)) != m.at("data").at(split).get<std::string>())
        throw UserError(std::string("replay: ") + split + " split digest differs from the manifest");
    if (m.contains("init_checkpoint") && !m["init_checkpoint"].is_null()) {
      f.init_checkpoint = m["init_checkpoint"]["path"].get<std::string>();
      if (file_digest(f.init_checkpoint) != m["init_checkpoint"]["digest"].get<std::string>())
        throw UserError("replay: init checkpoint digest differs from the manifest");
    }
    sources["replay"] = f.replay;
  } else {
    cfg = resolve_config(f, sources);
  }
  if (f.data.empty()) throw UserError("--data is required");
  if (f.out.empty()) throw UserError("--out is required");
  if (f.parallelism < 1) throw UserError("--parallelism must be >= 1");

  const auto train_sessions = read_split(f.data, "train");
  LoadedData data;
  std::optional<LoadedCheckpoint> init;
  if (!f.init_checkpoint.empty()) {
    init = load_checkpoint(f.init_checkpoint);
    data.vocabs = init->vocabs;
    require_same_vocabs(init->vocabs, build_vocabs(train_sessions));
  } else {
    data.vocabs = build_vocabs(train_sessions);
  }
  const auto max_len = static_cast<std::size_t>(cfg.max_utterance_len);
  data.train = {encode_sessions(train_sessions, data.vocabs, max_len)};
  data.dev = encode_split(f.data, "dev", data.vocabs, cfg.max_utterance_len);

  fs::create_directories(f.out);
  const fs::path ckpt = fs::path(f.out) / "checkpoint.bin";
  const fs::path log_path = fs::path(f.out) / "train_log.jsonl";
  const fs::path timing_path = fs::path(f.out) / "timing.jsonl";

  ojson manifest;
  manifest["tool"] = "dialact";
  manifest["version"] = kVersion;
  manifest["command"] = "train";
  manifest["config"] = cfg.to_json();
  manifest["config_sources"] = sources;
  manifest["seed"] = cfg.seed;
  manifest["data"] = {{"dir", fs::absolute(f.data).string()},
                      {"train", file_digest(split_path(f.data, "train"))},
                      {"dev", file_digest(split_path(f.data, "dev"))}};
  manifest["vocab_digests"] = data.vocabs.digests();
  manifest["init_checkpoint"] =
      f.init_checkpoint.empty()
          ? ojson(nullptr)
          : ojson{{"path", fs::absolute(f.init_checkpoint).string()}, {"digest", file_digest(f.init_checkpoint)}};
  manifest["outputs"] = {{"checkpoint", fs::absolute(ckpt).string()},
                         {"train_log", fs::absolute(log_path).string()},
                         {"timing", fs::absolute(timing_path).string()}};
  manifest["parallelism"] = f.parallelism;
  write_file(fs::path(f.out) / "run_manifest.json", manifest.dump(2) + "\n");

  info("mode " + to_string(cfg.mode) + ", " + std::to_string(count_utterances(train_sessions)) +
       " train utterances, vocab " + std::to_string(data.vocabs.words.size()) + ", seed " +
       std::to_string(cfg.seed));
  if (cfg.mode == Mode::kOracleSap)
    info("oracle-sap: word inputs are not read; the action model sees gold tag/intent encodings only");

  TrainOptions opts;
  opts.parallelism = f.parallelism;
  if (init) opts.init = init->result.final_params;
  std::ofstream timing(timing_path);
  opts.on_epoch = [&](const EpochLog& e) {
    print_epoch(e, cfg.mode);
    timing << ojson{{"epoch", e.epoch}, {"seconds", e.seconds}}.dump() << '\n';
  };
  const TrainResult result = train(cfg, data.vocabs, data.train, data.dev, opts);
  write_file(log_path, result.log.to_jsonl());
  save_checkpoint(ckpt, cfg, data.vocabs, result);
  info("wrote " + ckpt.string());
  return kOk;
}

// --- eval -----------------------------------------------------------------

struct EvalFlags {
  std::string checkpoint, data, split = "test", thresholds = "selected";
  std::optional<double> t_intent, t_action, t_action_intent;
  int parallelism = 1;
};

int cmd_eval(const EvalFlags& f) {
  if (f.parallelism < 1) throw UserError("--parallelism must be >= 1");
  for (const auto& t : {f.t_intent, f.t_action, f.t_action_intent})
    if (t && !(*t >= 0.0 && *t <= 1.0)) throw UserError("thresholds must be in [0, 1]");
  const LoadedCheckpoint ck = load_checkpoint(f.checkpoint);
  require_same_vocabs(ck.vocabs, build_vocabs(read_split(f.data, "train")));
  const int max_len = ck.config.max_utterance_len;
  const Dataset data = encode_split(f.data, f.split, ck.vocabs, max_len);
  TaskThresholds th;
  if (f.thresholds == "selected") {
    th = selected_thresholds(ck.result);
  } else if (f.thresholds == "tune") {
    th = tune_tasks(ck.result, encode_split(f.data, "dev", ck.vocabs, max_len), ck.config, f.parallelism);
  } else if (f.thresholds == "fixed") {
    if (!f.t_intent || !f.t_action) throw UserError("--thresholds fixed needs --threshold-intent and --threshold-action");
    th = {*f.t_intent, *f.t_action, f.t_action_intent.value_or(*f.t_intent)};
  } else {
    throw UserError("--thresholds must be selected, tune or fixed");
  }
  const EvalReport report =
      evaluate_tasks(ck.result, data, th, ck.config, scoring_options(ck.config, ck.vocabs), f.parallelism);
  ojson out = report.to_json();
  out["mode"] = to_string(ck.config.mode);
  out["split"] = f.split;
  std::cout << out.dump(2) << std::endl;
  return kOk;
}

// --- predict --------------------------------------------------------------

// Reads {"session","turn","words"} records (labels optional) and writes one
// prediction per utterance.
int cmd_predict(const std::string& checkpoint, const std::string& input, const std::string& output) {
  const LoadedCheckpoint ck = load_checkpoint(checkpoint);
  const auto& v = ck.vocabs;
  std::ifstream in(input);
  if (!in) throw UserError("cannot read " + input);
  std::vector<Session> sessions;
  std::map<std::string, std::size_t> index;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      Example ex;
      ex.session_id = j.at("session").get<std::string>();
      ex.turn_index = j.at("turn").get<int>();
      ex.words = j.at("words").get<std::vector<std::string>>();
      if (ex.words.empty()) throw ValidationError("empty utterance", line_no);
      ex.tags.assign(ex.words.size(), "O");
      auto [it, fresh] = index.emplace(ex.session_id, sessions.size());
      if (fresh) sessions.push_back({ex.session_id, {}});
      sessions[it->second].turns.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  for (auto& s : sessions)
    std::stable_sort(s.turns.begin(), s.turns.end(),
                     [](const Example& a, const Example& b) { return a.turn_index < b.turn_index; });

  const Dataset data{encode_sessions(sessions, v, static_cast<std::size_t>(ck.config.max_utterance_len))};
  const TaskThresholds th = selected_thresholds(ck.result);
  const auto& r = ck.result;
  const JointParams& tag_p = r.tags.params ? *r.tags.params : r.final_params;
  const JointParams& int_p = r.intents.params ? *r.intents.params : r.final_params;
  const JointParams& act_p = r.actions.params ? *r.actions.params : r.final_params;
  std::vector<std::vector<NluPrediction>> tag_nlu, int_nlu, act_nlu;
  if (ck.config.mode != Mode::kOracleSap) {
    tag_nlu = predict_nlu(tag_p.nlu, data);
    int_nlu = predict_nlu(int_p.nlu, data);
    act_nlu = predict_nlu(act_p.nlu, data);
  } else {
    throw UserError("predict needs a joint or pipeline checkpoint (oracle-sap reads gold annotations)");
  }
  const auto actions = predict_actions(act_p, ck.config.mode, data, act_nlu, ck.config.window_length(), th.action_intent);

  std::ostringstream out;
  for (std::size_t s = 0; s < sessions.size(); ++s)
    for (std::size_t t = 0; t < sessions[s].turns.size(); ++t) {
      const auto& ex = sessions[s].turns[t];
      ojson rec;
      rec["session"] = ex.session_id;
      rec["turn"] = ex.turn_index;
      rec["words"] = ex.words;
      std::vector<std::string> tags;
      for (int id : tag_nlu[s][t].tags) tags.push_back(v.tags.token(id));
      tags.resize(ex.words.size(), "O");
      rec["tags"] = tags;
      std::vector<std::string> intents, acts;
      for (int id : decode_multilabel(int_nlu[s][t].intent_probs, th.intent)) intents.push_back(v.intents.token(id));
      for (int id : decode_multilabel(actions[s][t], th.action)) acts.push_back(v.actions.token(id));
      std::sort(intents.begin(), intents.end());
      std::sort(acts.begin(), acts.end());
      rec["intents"] = intents;
      rec["actions"] = acts;
      out << rec.dump() << '\n';
    }
  if (output.empty() || output == "-")
    std::cout << out.str();
  else
    write_file(output, out.str());
  return kOk;
}

// --- gradcheck ------------------------------------------------------------

int cmd_gradcheck(const std::string& dims_text, std::uint64_t seed, const std::string& corrupt, bool verbose) {
  const GradCheckDims dims = parse_gradcheck_dims(dims_text);
  GradCheckOptions opts;
  if (!corrupt.empty()) opts.corrupt_param = corrupt;
  const auto t0 = std::chrono::steady_clock::now();
  const GradCheckReport r = joint_grad_check(dims, seed, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = r.passed(1e-4);
  ojson out;
  out["passed"] = ok;
  out["max_rel_error"] = r.max_rel_error;
  out["worst_param"] = r.worst_param;
  out["worst_index"] = r.worst_index;
  out["coordinates"] = r.coordinates;
  out["seconds"] = secs;
  if (verbose) {
    ojson per = ojson::array();
    for (const auto& p : r.params)
      per.push_back({{"name", p.name}, {"max_rel_error", p.max_rel_error}, {"index", p.worst_index},
                     {"analytic", p.analytic}, {"numeric", p.numeric}});
    out["params"] = per;
  }
  std::cout << out.dump(2) << std::endl;
  if (!ok) std::cerr << "gradient check failed: " << r.worst_param << " [" << r.worst_index << "] relative error "
                     << r.max_rel_error << '\n';
  return ok ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint NLU and system-action prediction for multi-turn dialogue"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--lenient-iob", lenient_iob, "Repair orphan I-x tags to B-x instead of rejecting the corpus");

  std::string spec_path, gen_out, default_spec_out;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus");
  gen->add_option("--spec", spec_path, "Generator spec (JSON); default spec when omitted");
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--write-default-spec", default_spec_out, "Write the default spec as JSON to this path");

  TrainFlags tf;
  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--config", tf.config, "Config file (JSON)");
  tr->add_option("--data", tf.data, "Directory with train.jsonl and dev.jsonl");
  tr->add_option("--out", tf.out, "Output directory");
  tr->add_option("--mode", tf.mode, "joint | pipeline | oracle-sap");
  tr->add_option("--seed", tf.seed, "Seed");
  tr->add_option("--preset", tf.preset, "desk | full");
  tr->add_option("--epochs", tf.epochs, "Number of epochs");
  tr->add_option("--learning-rate", tf.lr, "Adam learning rate");
  tr->add_option("--init-checkpoint", tf.init_checkpoint, "Start from the final parameters of a checkpoint");
  tr->add_option("--replay", tf.replay, "Re-run from a run_manifest.json");
  tr->add_option("--parallelism", tf.parallelism, "Evaluation threads");

  EvalFlags ef;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", ef.checkpoint, "Checkpoint file")->required();
  ev->add_option("--data", ef.data, "Data directory")->required();
  ev->add_option("--split", ef.split, "Split to report on (train | dev | test)");
  ev->add_option("--thresholds", ef.thresholds, "selected | tune | fixed");
  ev->add_option("--threshold-intent", ef.t_intent, "Intent threshold (fixed)");
  ev->add_option("--threshold-action", ef.t_action, "Action threshold (fixed)");
  ev->add_option("--threshold-action-intent", ef.t_action_intent,
                 "Intent threshold used when encoding NLU output for the action model (fixed; defaults to "
                 "--threshold-intent)");
  ev->add_option("--parallelism", ef.parallelism, "Evaluation threads");

  std::string pred_ckpt, pred_in, pred_out;
  auto* pr = app.add_subcommand("predict", "Predict tags, intents and actions for JSONL utterances");
  pr->add_option("--checkpoint", pred_ckpt, "Checkpoint file")->required();
  pr->add_option("--input", pred_in, "JSONL with session, turn, words")->required();
  pr->add_option("--output", pred_out, "Output JSONL (default stdout)");

  std::string dims_text, corrupt;
  std::uint64_t gc_seed = 1;
  bool gc_verbose = false;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the joint model gradients");
  gc->add_option("--dims", dims_text, "e.g. embed=8,hidden=8,M=5,N=3,K=4,T=6,I=3,batch=2");
  gc->add_option("--seed", gc_seed, "Seed");
  gc->add_option("--corrupt-gradient", corrupt, "Perturb the analytic gradient of this parameter (test hook)");
  gc->add_flag("--verbose", gc_verbose, "Per-parameter report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUser;
  }

  try {
    if (*gen) return cmd_gen_data(spec_path, gen_out, gen_seed, default_spec_out);
    if (*tr) return cmd_train(tf);
    if (*ev) return cmd_eval(ef);
    if (*pr) return cmd_predict(pred_ckpt, pred_in, pred_out);
    if (*gc) return cmd_gradcheck(dims_text, gc_seed, corrupt, gc_verbose);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUser;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUser;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUser;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}

#include "dialact/trainer.hpp"

#include "dialact/adam.hpp"
#include "dialact/checkpoint.hpp"
#include "dialact/errors.hpp"
#include "dialact/functional.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace dialact {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::vector<NluPrediction>> predict_nlu(const NluParams& p, const Dataset& data, int parallelism) {
  std::vector<std::vector<NluPrediction>> out(data.sessions.size());
  auto run = [&](std::size_t worker, std::size_t workers) {
    Rng unused(0);
    for (std::size_t s = worker; s < data.sessions.size(); s += workers) {
      const auto& session = data.sessions[s];
      auto& preds = out[s];
      preds.reserve(session.size());
      for (const auto& ex : session) {
        NluOutput o = nlu_forward(ex.words, p, false, 0.0, unused);
        preds.push_back({decode_tags(o.tag_probs), std::move(o.intent_probs), std::move(o.feature)});
      }
    }
  };
  const std::size_t workers = static_cast<std::size_t>(std::max(1, parallelism));
  if (workers == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w, workers);
    for (auto& t : pool) t.join();
  }
  return out;
}

namespace {

std::vector<int> unique_sorted(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::vector<std::vector<Vec>> predict_actions(const JointParams& p, Mode mode, const Dataset& data,
                                              const std::vector<std::vector<NluPrediction>>& nlu,
                                              std::size_t window_length, double intent_threshold) {
  const auto M = p.nlu.w_tag_fwd.rows();
  const auto N = p.nlu.w_int.rows();
  if (p.sap.sap_fwd.input_dim() != M + N) throw ShapeError("predict_actions: SAP input is not M+N wide");
  std::vector<std::vector<Vec>> out(data.sessions.size());
  for (std::size_t s = 0; s < data.sessions.size(); ++s) {
    const auto& session = data.sessions[s];
    std::vector<TurnFeature> turns;
    turns.reserve(session.size());
    for (std::size_t t = 0; t < session.size(); ++t) {
      switch (mode) {
        case Mode::kJoint:
          turns.push_back({nlu.at(s).at(t).feature, false});
          break;
        case Mode::kPipeline: {
          const auto& pred = nlu.at(s).at(t);
          turns.push_back(encode_oracle_turn(unique_sorted(pred.tags), decode_multilabel(pred.intent_probs, intent_threshold),
                                             M, N));
          break;
        }
        case Mode::kOracleSap:
          turns.push_back(oracle_feature(session[t], M, N));
          break;
      }
    }
    std::vector<TurnFeature> history;
    for (const auto& w : make_windows(s, session.size(), window_length)) {
      history.clear();
      for (int t : w.turns)
        history.push_back(t < 0 ? TurnFeature::padding(M + N) : turns[static_cast<std::size_t>(t)]);
      out[s].push_back(sap_forward(history, p.sap, window_length).probs);
    }
  }
  return out;
}

ScoringOptions scoring_options(const TrainConfig& cfg, const VocabSet& v) {
  ScoringOptions o;
  o.outside_tag = v.outside_tag();
  o.tags_all_tokens = cfg.tags_all_tokens;
  if (cfg.exclude_null_in_f1 && v.actions.contains("NULL")) o.excluded_action = v.actions.id("NULL");
  return o;
}

namespace {

void score_nlu_split(const std::vector<std::vector<NluPrediction>>& tag_src,
                     const std::vector<std::vector<NluPrediction>>& intent_src, const Dataset& data,
                     double intent_threshold, const ScoringOptions& opts, EvalReport& report) {
  std::vector<TagSeq> pred_tags, gold_tags;
  std::vector<LabelSet> pred_int, gold_int;
  std::size_t both = 0;
  for (std::size_t s = 0; s < data.sessions.size(); ++s)
    for (std::size_t t = 0; t < data.sessions[s].size(); ++t) {
      const auto& gold = data.sessions[s][t];
      pred_tags.push_back(tag_src.at(s).at(t).tags);
      gold_tags.push_back(gold.tags);
      pred_int.push_back(decode_multilabel(intent_src.at(s).at(t).intent_probs, intent_threshold));
      gold_int.push_back(gold.intents);
      both += pred_tags.back() == gold_tags.back() && pred_int.back() == gold_int.back();
    }
  const auto frames = static_cast<std::int64_t>(pred_tags.size());
  report.tags = TaskScores::from(token_prf(pred_tags, gold_tags, {opts.outside_tag, opts.tags_all_tokens}),
                                 frame_accuracy(pred_tags, gold_tags), frames);
  report.intents = TaskScores::from(set_prf(pred_int, gold_int), frame_accuracy_sets(pred_int, gold_int), frames);
  report.nlu_frame_accuracy = frames > 0 ? static_cast<double>(both) / static_cast<double>(frames) : 0.0;
  report.intent_threshold = intent_threshold;
}

template <class F>
void for_each_turn(const Dataset& data, F&& f) {
  for (std::size_t s = 0; s < data.sessions.size(); ++s)
    for (std::size_t t = 0; t < data.sessions[s].size(); ++t) f(s, t);
}

}  // namespace

void score_nlu(const std::vector<std::vector<NluPrediction>>& nlu, const Dataset& data, double intent_threshold,
               const ScoringOptions& opts, EvalReport& report) {
  score_nlu_split(nlu, nlu, data, intent_threshold, opts, report);
}

void score_actions(const std::vector<std::vector<Vec>>& action_probs, const Dataset& data, double action_threshold,
                   const ScoringOptions& opts, EvalReport& report) {
  std::vector<LabelSet> pred, gold;
  for_each_turn(data, [&](std::size_t s, std::size_t t) {
    pred.push_back(decode_multilabel(action_probs.at(s).at(t), action_threshold));
    gold.push_back(data.sessions[s][t].actions);
  });
  report.actions = TaskScores::from(set_prf(pred, gold, opts.excluded_action), frame_accuracy_sets(pred, gold),
                                    static_cast<std::int64_t>(pred.size()));
  report.action_threshold = action_threshold;
}

EvalReport evaluate(const JointParams& p, const Dataset& data, double intent_threshold, double action_threshold,
                    Mode mode, const TrainConfig& cfg, const ScoringOptions& opts, int parallelism) {
  for (double t : {intent_threshold, action_threshold})
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("evaluate: thresholds must be in [0, 1]");
  EvalReport report;
  std::vector<std::vector<NluPrediction>> nlu;
  if (mode != Mode::kOracleSap) {
    nlu = predict_nlu(p.nlu, data, parallelism);
    score_nlu(nlu, data, intent_threshold, opts, report);
  }
  report.intent_threshold = intent_threshold;
  score_actions(predict_actions(p, mode, data, nlu, cfg.window_length(), intent_threshold), data, action_threshold,
                opts, report);
  return report;
}

namespace {

double tune_intents(const std::vector<std::vector<NluPrediction>>& nlu, const Dataset& data) {
  std::vector<Vec> probs;
  std::vector<LabelSet> gold;
  for_each_turn(data, [&](std::size_t s, std::size_t t) {
    probs.push_back(nlu[s][t].intent_probs);
    gold.push_back(data.sessions[s][t].intents);
  });
  return tune_threshold(probs, gold);
}

double tune_actions(const std::vector<std::vector<Vec>>& action_probs, const Dataset& data) {
  std::vector<Vec> probs;
  std::vector<LabelSet> gold;
  for_each_turn(data, [&](std::size_t s, std::size_t t) {
    probs.push_back(action_probs[s][t]);
    gold.push_back(data.sessions[s][t].actions);
  });
  return tune_threshold(probs, gold);
}

}  // namespace

EvalReport tune_and_evaluate(const JointParams& p, const Dataset& data, Mode mode, const TrainConfig& cfg,
                             const ScoringOptions& opts, int parallelism) {
  EvalReport report;
  std::vector<std::vector<NluPrediction>> nlu;
  double intent_threshold = 0.5;
  if (mode != Mode::kOracleSap) {
    nlu = predict_nlu(p.nlu, data, parallelism);
    intent_threshold = tune_intents(nlu, data);
    score_nlu(nlu, data, intent_threshold, opts, report);
  }
  report.intent_threshold = intent_threshold;
  const auto probs = predict_actions(p, mode, data, nlu, cfg.window_length(), intent_threshold);
  score_actions(probs, data, tune_actions(probs, data), opts, report);
  return report;
}

namespace {

nlohmann::ordered_json scores_json(const std::optional<TaskScores>& s) {
  if (!s) return nullptr;
  return {{"precision", s->precision}, {"recall", s->recall}, {"f1", s->f1}, {"frame_accuracy", s->frame_accuracy}};
}

}  // namespace

nlohmann::ordered_json EpochLog::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["loss"] = mean_loss.total();
  j["loss_act"] = mean_loss.act;
  j["loss_tag"] = mean_loss.tag;
  j["loss_int"] = mean_loss.intent;
  nlohmann::ordered_json d;
  d["tags"] = scores_json(dev.tags);
  d["intents"] = scores_json(dev.intents);
  d["actions"] = scores_json(dev.actions);
  d["nlu_frame_accuracy"] = dev.nlu_frame_accuracy ? nlohmann::ordered_json(*dev.nlu_frame_accuracy) : nlohmann::ordered_json(nullptr);
  d["intent_threshold"] = dev.intent_threshold;
  d["action_threshold"] = dev.action_threshold;
  j["dev"] = d;
  return j;
}

std::string TrainLog::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    out += e.to_json().dump();
    out += '\n';
  }
  return out;
}

namespace {

struct Batcher {
  std::vector<std::size_t> order;
  int batch_size;

  template <class F>
  void run(Rng& rng, F&& step) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
      step(std::span<const std::size_t>(order.data() + start, end - start));
    }
  }
};

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

void scale_grads(const ParamList& params, double scale) {
  for (const auto& p : params)
    for (double& g : p.grad) g *= scale;
}

void apply_update(const ParamList& params, AdamState& state, std::size_t batch, double clip) {
  scale_grads(params, 1.0 / static_cast<double>(batch));
  if (clip > 0.0) clip_grad_norm(params, clip);
  adam_update(params, state);
}

void require_finite(const LossComponents& l, int epoch) {
  if (!std::isfinite(l.act) || !std::isfinite(l.tag) || !std::isfinite(l.intent))
    throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + " (act " +
                         std::to_string(l.act) + ", tag " + std::to_string(l.tag) + ", int " +
                         std::to_string(l.intent) + ")");
}

void maybe_select(TaskSelection& sel, double dev_acc, int epoch, double threshold, double intent_threshold,
                  const JointParams& params) {
  if (dev_acc > sel.dev_frame_accuracy) {
    sel.dev_frame_accuracy = dev_acc;
    sel.epoch = epoch;
    sel.threshold = threshold;
    sel.intent_threshold = intent_threshold;
    sel.params = params;
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const VocabSet& vocabs, const Dataset& train_set, const Dataset& dev_set,
                  const TrainOptions& opts) {
  cfg.validate();
  std::size_t n_utt = 0;
  for (const auto& s : train_set.sessions) n_utt += s.size();
  if (n_utt == 0) throw InvalidArgument("train: empty training corpus");

  const ModelDims dims = ModelDims::from_vocabs(vocabs, cfg.embed_dim, cfg.hidden_dim);
  Rng init_nlu(derive_seed(cfg.seed, 1));
  Rng init_sap(derive_seed(cfg.seed, 2));
  Rng shuffle_nlu(derive_seed(cfg.seed, 3));
  Rng shuffle_sap(derive_seed(cfg.seed, 4));
  Rng dropout_rng(derive_seed(cfg.seed, 5));

  TrainResult result{opts.init ? *opts.init : JointParams::init(dims, init_nlu, init_sap), {}, {}, {}, {}};
  JointParams& params = result.final_params;
  {
    const ModelDims have = params.dims();
    if (have.vocab_size != dims.vocab_size || have.num_tags != dims.num_tags || have.num_intents != dims.num_intents ||
        have.num_actions != dims.num_actions || have.embed_dim != dims.embed_dim || have.hidden_dim != dims.hidden_dim)
      throw ShapeError("train: initial parameters do not match vocab / config dimensions");
  }
  JointParams grad = params.zeros_like();
  ParamList nlu_list, sap_list, all_list;
  params.collect_nlu(grad, nlu_list);
  params.collect_sap(grad, sap_list);
  params.collect(grad, all_list);

  const Eigen::Index M = dims.num_tags;
  const Eigen::Index N = dims.num_intents;
  const auto windows = make_windows(train_set.sessions, cfg.window_length());
  std::vector<std::pair<std::size_t, std::size_t>> utterances;
  for (std::size_t s = 0; s < train_set.sessions.size(); ++s)
    for (std::size_t t = 0; t < train_set.sessions[s].size(); ++t) utterances.emplace_back(s, t);

  auto make_state = [&](const ParamList& list) {
    return AdamState::for_params(list, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  };
  AdamState joint_state = make_state(all_list);
  AdamState nlu_state = make_state(nlu_list);
  AdamState sap_state = make_state(sap_list);

  const StepContext train_ctx{true, cfg.dropout_rate, {}};
  Batcher window_batches{iota(windows.size()), cfg.batch_size};
  Batcher utterance_batches{iota(utterances.size()), cfg.batch_size};
  const ScoringOptions scoring = scoring_options(cfg, vocabs);
  const bool has_dev = !dev_set.sessions.empty();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    LossComponents sum;
    switch (cfg.mode) {
      case Mode::kJoint:
        window_batches.run(shuffle_sap, [&](std::span<const std::size_t> batch) {
          zero_grads(all_list);
          for (std::size_t w : batch) {
            const auto& win = windows[w];
            sum += joint_step(train_set.sessions[win.session], win, params, &grad, train_ctx, dropout_rng);
          }
          apply_update(all_list, joint_state, batch.size(), cfg.grad_clip);
        });
        sum.act /= static_cast<double>(windows.size());
        sum.tag /= static_cast<double>(windows.size());
        sum.intent /= static_cast<double>(windows.size());
        break;
      case Mode::kPipeline:
        utterance_batches.run(shuffle_nlu, [&](std::span<const std::size_t> batch) {
          zero_grads(nlu_list);
          for (std::size_t u : batch) {
            const auto [s, t] = utterances[u];
            sum += nlu_step(train_set.sessions[s][t], params.nlu, &grad.nlu, train_ctx, dropout_rng);
          }
          apply_update(nlu_list, nlu_state, batch.size(), cfg.grad_clip);
        });
        sum.tag /= static_cast<double>(utterances.size());
        sum.intent /= static_cast<double>(utterances.size());
        [[fallthrough]];
      case Mode::kOracleSap: {
        double act = 0.0;
        window_batches.run(shuffle_sap, [&](std::span<const std::size_t> batch) {
          zero_grads(sap_list);
          for (std::size_t w : batch) {
            const auto& win = windows[w];
            act += sap_step(train_set.sessions[win.session], win, params.sap, &grad.sap, M, N).act;
          }
          apply_update(sap_list, sap_state, batch.size(), cfg.grad_clip);
        });
        sum.act = act / static_cast<double>(windows.size());
        break;
      }
    }
    require_finite(sum, epoch);

    EpochLog entry;
    entry.epoch = epoch;
    entry.mean_loss = sum;
    if (has_dev) {
      entry.dev = tune_and_evaluate(params, dev_set, cfg.mode, cfg, scoring, opts.parallelism);
      if (entry.dev.tags)
        maybe_select(result.tags, entry.dev.tags->frame_accuracy, epoch, entry.dev.intent_threshold,
                     entry.dev.intent_threshold, params);
      if (entry.dev.intents)
        maybe_select(result.intents, entry.dev.intents->frame_accuracy, epoch, entry.dev.intent_threshold,
                     entry.dev.intent_threshold, params);
      if (entry.dev.actions)
        maybe_select(result.actions, entry.dev.actions->frame_accuracy, epoch, entry.dev.action_threshold,
                     entry.dev.intent_threshold, params);
    }
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opts.on_epoch) opts.on_epoch(entry);
    result.log.epochs.push_back(std::move(entry));
  }
  return result;
}

namespace {

const JointParams& snapshot(const TaskSelection& s, const TrainResult& r) {
  return s.params ? *s.params : r.final_params;
}

}  // namespace

TaskThresholds selected_thresholds(const TrainResult& r) {
  return {r.intents.threshold, r.actions.threshold, r.actions.intent_threshold};
}

EvalReport evaluate_tasks(const TrainResult& r, const Dataset& data, const TaskThresholds& th,
                          const TrainConfig& cfg, const ScoringOptions& opts, int parallelism) {
  for (double t : {th.intent, th.action, th.action_intent})
    if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("evaluate: thresholds must be in [0, 1]");
  const JointParams& tag_p = snapshot(r.tags, r);
  const JointParams& int_p = snapshot(r.intents, r);
  const JointParams& act_p = snapshot(r.actions, r);
  EvalReport report;
  std::vector<std::vector<NluPrediction>> act_nlu;
  if (cfg.mode != Mode::kOracleSap) {
    const auto tag_nlu = predict_nlu(tag_p.nlu, data, parallelism);
    const auto int_nlu = &int_p == &tag_p ? tag_nlu : predict_nlu(int_p.nlu, data, parallelism);
    score_nlu_split(tag_nlu, int_nlu, data, th.intent, opts, report);
    act_nlu = &act_p == &int_p ? int_nlu : predict_nlu(act_p.nlu, data, parallelism);
  }
  const auto probs = predict_actions(act_p, cfg.mode, data, act_nlu, cfg.window_length(), th.action_intent);
  score_actions(probs, data, th.action, opts, report);
  report.intent_threshold = th.intent;
  report.action_intent_threshold = th.action_intent;
  return report;
}

TaskThresholds tune_tasks(const TrainResult& r, const Dataset& dev, const TrainConfig& cfg, int parallelism) {
  TaskThresholds th;
  const JointParams& int_p = snapshot(r.intents, r);
  const JointParams& act_p = snapshot(r.actions, r);
  std::vector<std::vector<NluPrediction>> act_nlu;
  if (cfg.mode != Mode::kOracleSap) {
    const auto int_nlu = predict_nlu(int_p.nlu, dev, parallelism);
    th.intent = tune_intents(int_nlu, dev);
    act_nlu = &act_p == &int_p ? int_nlu : predict_nlu(act_p.nlu, dev, parallelism);
    th.action_intent = &act_p == &int_p ? th.intent : tune_intents(act_nlu, dev);
  }
  th.action = tune_actions(predict_actions(act_p, cfg.mode, dev, act_nlu, cfg.window_length(), th.action_intent), dev);
  return th;
}

EvalReport evaluate_selected(const TrainResult& r, const Dataset& data, const TrainConfig& cfg,
                             const ScoringOptions& opts, int parallelism) {
  return evaluate_tasks(r, data, selected_thresholds(r), cfg, opts, parallelism);
}

namespace {

struct Group {
  const char* name;
  bool nlu;
  bool sap;
};

std::vector<Group> groups_for(Mode mode) {
  const bool nlu = mode != Mode::kOracleSap;
  std::vector<Group> groups = {{"final", nlu, true}, {"select/actions", nlu, true}};
  if (nlu) groups.insert(groups.begin() + 1, {{"select/tags", true, false}, {"select/intents", true, false}});
  return groups;
}

ParamList collect_group(JointParams& p, JointParams& scratch, const Group& g) {
  ParamList list;
  const std::string prefix = std::string(g.name) + "/";
  if (g.nlu) p.collect_nlu(scratch, list, prefix + "nlu/");
  if (g.sap) p.collect_sap(scratch, list, prefix + "sap/");
  return list;
}

const TaskSelection* selection_for(const TrainResult& r, const std::string& group) {
  if (group == "select/tags") return &r.tags;
  if (group == "select/intents") return &r.intents;
  if (group == "select/actions") return &r.actions;
  return nullptr;
}

nlohmann::ordered_json selection_json(const TaskSelection& s) {
  return {{"epoch", s.epoch},
          {"threshold", s.threshold},
          {"intent_threshold", s.intent_threshold},
          {"dev_frame_accuracy", s.dev_frame_accuracy}};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg, const VocabSet& vocabs,
                     const TrainResult& result) {
  ArrayArchive archive;
  const ModelDims d = result.final_params.dims();
  archive.meta["format"] = "dialact-checkpoint";
  archive.meta["mode"] = to_string(cfg.mode);
  archive.meta["config"] = cfg.to_json();
  archive.meta["dims"] = {{"vocab", d.vocab_size}, {"embed", d.embed_dim}, {"hidden", d.hidden_dim},
                          {"M", d.num_tags},       {"N", d.num_intents}, {"K", d.num_actions}};
  archive.meta["vocab_digests"] = vocabs.digests();
  archive.meta["vocabs"] = vocabs.to_json();
  archive.meta["selection"] = {{"tags", selection_json(result.tags)},
                               {"intents", selection_json(result.intents)},
                               {"actions", selection_json(result.actions)}};

  for (const auto& g : groups_for(cfg.mode)) {
    const TaskSelection* sel = selection_for(result, g.name);
    if (sel && !sel->params) continue;
    JointParams copy = sel ? *sel->params : result.final_params;
    JointParams scratch = copy.zeros_like();
    for (const auto& ref : collect_group(copy, scratch, g)) {
      NamedArray arr;
      arr.shape = {ref.rows, ref.cols};
      arr.values.assign(ref.value.begin(), ref.value.end());
      archive.arrays.emplace(ref.name, std::move(arr));
    }
  }
  write_archive(path, archive);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const ArrayArchive archive = read_archive(path);
  LoadedCheckpoint out;
  try {
    if (archive.meta.at("format") != "dialact-checkpoint") throw ParseError("checkpoint: unknown format");
    out.config.merge_json(archive.meta.at("config"));
    out.vocabs = VocabSet::from_json(archive.meta.at("vocabs"));
    if (archive.meta.at("vocab_digests") != out.vocabs.digests())
      throw ValidationError("checkpoint: stored vocab digests do not match stored vocabs");
    const auto& jd = archive.meta.at("dims");
    const ModelDims dims{jd.at("vocab").get<Eigen::Index>(), jd.at("embed").get<Eigen::Index>(),
                         jd.at("hidden").get<Eigen::Index>(), jd.at("M").get<Eigen::Index>(),
                         jd.at("N").get<Eigen::Index>(), jd.at("K").get<Eigen::Index>()};
    const auto& sel = archive.meta.at("selection");
    for (auto [name, task] : {std::pair{"tags", &out.result.tags}, std::pair{"intents", &out.result.intents},
                              std::pair{"actions", &out.result.actions}}) {
      const auto& js = sel.at(name);
      task->epoch = js.at("epoch").get<int>();
      task->threshold = js.at("threshold").get<double>();
      task->intent_threshold = js.at("intent_threshold").get<double>();
      task->dev_frame_accuracy = js.at("dev_frame_accuracy").get<double>();
    }
    out.result.final_params = JointParams::zeros(dims);
    for (const auto& g : groups_for(out.config.mode)) {
      JointParams p = JointParams::zeros(dims);
      JointParams scratch = JointParams::zeros(dims);
      const ParamList list = collect_group(p, scratch, g);
      const bool present = archive.arrays.count(list.front().name) > 0;
      if (!present) {
        if (std::string(g.name) == "final") throw ParseError("checkpoint: missing final parameters");
        continue;
      }
      for (const auto& ref : list) {
        const auto it = archive.arrays.find(ref.name);
        if (it == archive.arrays.end()) throw ParseError("checkpoint: missing array " + ref.name);
        const auto& arr = it->second;
        if (arr.shape != std::vector<std::uint64_t>{ref.rows, ref.cols})
          throw ShapeError("checkpoint: array " + ref.name + " has the wrong shape");
        std::copy(arr.values.begin(), arr.values.end(), ref.value.begin());
      }
      if (TaskSelection* s = const_cast<TaskSelection*>(selection_for(out.result, g.name)))
        s->params = std::move(p);
      else
        out.result.final_params = std::move(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: bad metadata: ") + e.what());
  }
  return out;
}

void require_same_vocabs(const VocabSet& expected, const VocabSet& actual) {
  if (expected.digests() != actual.digests())
    throw ValidationError("vocab digest mismatch: checkpoint " + expected.digests().dump() + " vs data " +
                          actual.digests().dump());
}

}  // namespace dialact

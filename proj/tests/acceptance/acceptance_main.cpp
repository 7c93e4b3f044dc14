// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails.

#include "../common/brute_force.hpp"
#include "dialact/diagnostics.hpp"
#include "dialact/metrics.hpp"
#include "dialact/synthetic.hpp"
#include "dialact/trainer.hpp"

#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace dialact;
using namespace dialact::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "dialact_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---- gradients ------------------------------------------------------------

Outcome gradient_integrity(const fs::path& dir) {
  const fs::path out = dir / "gradcheck.json";
  const auto t0 = Clock::now();
  const int code = shell(std::string(DIALACT_CLI_PATH) +
                         " gradcheck --dims embed=8,hidden=8,M=5,N=3,K=4,T=6,I=3,batch=2 --seed 1 > " + out.string());
  const double wall = seconds_since(t0);
  const auto j = nlohmann::json::parse(slurp(out));
  const double err = j["max_rel_error"].get<double>();
  return {code == 0 && err < 1e-4 && wall < 60.0,
          fmt("max relative error %.3g over %d coordinates (worst %s), %.1f s wall", err,
              j["coordinates"].get<int>(), j["worst_param"].get<std::string>().c_str(), wall)};
}

Outcome backprop_through_sap() {
  GradCheckOptions o;
  o.weights = {1.0, 0.0, 0.0};
  o.only_prefix = "nlu/";
  const GradCheckReport r = joint_grad_check(GradCheckDims{}, 1, o);

  GradCheckDims gd;
  Rng rng(11);
  const JointParams p = JointParams::init(gd.model(), rng, rng);
  JointParams grad = p.zeros_like();
  const EncodedSession s = random_session(rng, gd, 3);
  Rng unused(0);
  joint_step(s, DialogWindow{0, {0, 1, 2}}, p, &grad, StepContext{false, 0.0, {1.0, 0.0, 0.0}}, unused);
  const double emb = grad.nlu.embedding.cwiseAbs().maxCoeff();
  JointParams g2 = grad;
  JointParams v2 = p;
  ParamList list;
  v2.collect(g2, list);
  int zero_arrays = 0;
  for (const auto& ref : list) {
    if (ref.name.rfind("nlu/", 0) != 0) continue;
    double m = 0.0;
    for (double v : ref.grad) m = std::max(m, std::abs(v));
    zero_arrays += m == 0.0;
  }
  // Tag head gets no signal from the action loss; everything upstream of the
  // features must.
  const bool upstream_ok = emb > 0.0 && grad.nlu.trunk_fwd.w_x.cwiseAbs().maxCoeff() > 0.0 &&
                           grad.nlu.trunk_bwd.w_x.cwiseAbs().maxCoeff() > 0.0;
  return {r.max_rel_error < 1e-4 && upstream_ok,
          fmt("action-loss-only check on nlu/* max relative error %.3g; max |d embedding| %.3g; "
              "%d NLU arrays without signal (tag/intent heads)",
              r.max_rel_error, emb, zero_arrays)};
}

// ---- training -------------------------------------------------------------

struct Prepared {
  VocabSet vocabs;
  Dataset train, dev, test;
};

Prepared prepare(const SyntheticCorpus& c, int max_len) {
  Prepared p;
  p.vocabs = build_vocabs(c.train);
  p.train.sessions = encode_sessions(c.train, p.vocabs, static_cast<std::size_t>(max_len));
  p.dev.sessions = encode_sessions(c.dev, p.vocabs, static_cast<std::size_t>(max_len));
  p.test.sessions = encode_sessions(c.test, p.vocabs, static_cast<std::size_t>(max_len));
  return p;
}

EvalReport train_and_test(const Prepared& d, TrainConfig cfg) {
  const TrainResult r = train(cfg, d.vocabs, d.train, d.dev);
  return evaluate_selected(r, d.test, cfg, scoring_options(cfg, d.vocabs));
}

Outcome learnability() {
  const TrainConfig base = TrainConfig::desk();
  const Prepared d = prepare(gen_synthetic(default_gen_spec(), 1), base.max_utterance_len);
  double tags = 0, intents = 0, actions = 0, slowest = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    TrainConfig cfg = base;
    cfg.seed = seed;
    const auto t0 = Clock::now();
    const EvalReport r = train_and_test(d, cfg);
    slowest = std::max(slowest, seconds_since(t0));
    tags += r.tags->frame_accuracy / 3;
    intents += r.intents->frame_accuracy / 3;
    actions += r.actions->frame_accuracy / 3;
    per_seed += fmt(" [seed %d: %.4f/%.4f/%.4f]", static_cast<int>(seed), r.tags->frame_accuracy,
                    r.intents->frame_accuracy, r.actions->frame_accuracy);
  }
  const bool ok = tags >= 0.90 && intents >= 0.90 && actions >= 0.90 && base.epochs <= 150 && slowest < 900;
  return {ok, fmt("mean test frame accuracy tags %.4f intents %.4f actions %.4f, %d epochs, slowest run %.0f s",
                  tags, intents, actions, base.epochs, slowest) +
                  per_seed};
}

struct NoisyResults {
  std::vector<double> joint, pipeline, oracle;
};

NoisyResults noisy_runs() {
  GenSpec spec = default_gen_spec();
  spec.nlu_label_noise = 0.10;
  spec.dev_utterances = 1000;
  spec.test_utterances = 1000;
  const TrainConfig base = TrainConfig::desk();
  const Prepared d = prepare(gen_synthetic(spec, 2), base.max_utterance_len);
  NoisyResults out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    for (Mode m : {Mode::kJoint, Mode::kPipeline, Mode::kOracleSap}) {
      TrainConfig cfg = base;
      cfg.seed = seed;
      cfg.mode = m;
      const double acc = train_and_test(d, cfg).actions->frame_accuracy;
      (m == Mode::kJoint ? out.joint : m == Mode::kPipeline ? out.pipeline : out.oracle).push_back(acc);
    }
  return out;
}

Outcome ordering(const std::vector<double>& better, const std::vector<double>& pipeline, const char* label) {
  int wins = 0;
  std::string rows;
  for (std::size_t i = 0; i < better.size(); ++i) {
    wins += better[i] >= pipeline[i];
    rows += fmt(" [seed %d: %s %.4f vs pipeline %.4f]", static_cast<int>(i + 1), label, better[i], pipeline[i]);
  }
  return {wins >= 4, fmt("%s >= pipeline test SAP frame accuracy in %d of 5 seeds", label, wins) + rows};
}

Outcome cli_determinism(const fs::path& dir) {
  const std::string cli = DIALACT_CLI_PATH;
  const fs::path spec = dir / "spec.json";
  const fs::path data = dir / "det_data";
  if (shell(cli + " gen-data --write-default-spec " + spec.string() + " > /dev/null") != 0) return {false, "gen-data"};
  auto j = nlohmann::json::parse(slurp(spec));
  j["train_utterances"] = 300;
  j["dev_utterances"] = 100;
  j["test_utterances"] = 100;
  std::ofstream(spec) << j.dump();
  if (shell(cli + " gen-data --spec " + spec.string() + " --out " + data.string() + " --seed 4 > /dev/null") != 0)
    return {false, "gen-data"};
  const std::string train = cli + " train --preset desk --epochs 3 --data " + data.string() + " --seed 7 --out ";
  const fs::path a = dir / "det_a", b = dir / "det_b", c = dir / "det_replay";
  if (shell(train + a.string() + " > /dev/null 2>&1") != 0 || shell(train + b.string() + " > /dev/null 2>&1") != 0)
    return {false, "train failed"};
  if (shell(cli + " train --replay " + (a / "run_manifest.json").string() + " --out " + c.string() +
            " > /dev/null 2>&1") != 0)
    return {false, "replay failed"};
  bool same = true;
  for (const auto& other : {b, c})
    for (const char* f : {"train_log.jsonl", "checkpoint.bin"}) {
      const std::string x = slurp(a / f), y = slurp(other / f);
      same = same && !x.empty() && x == y;
    }
  return {same, fmt("train_log.jsonl (%zu bytes) and checkpoint.bin (%zu bytes) identical across two runs and a replay",
                    slurp(a / "train_log.jsonl").size(), slurp(a / "checkpoint.bin").size())};
}

// ---- properties -----------------------------------------------------------

Outcome metrics_equivalence() {
  std::mt19937_64 gen(2024);
  int mismatches = 0;
  std::int64_t instances = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t frames = 1 + gen() % 8;
    std::vector<TagSeq> tp, tg;
    std::vector<LabelSet> sp, sg;
    for (std::size_t f = 0; f < frames; ++f) {
      const std::size_t T = 1 + gen() % 7;
      TagSeq p(T), g(T);
      for (std::size_t t = 0; t < T; ++t) {
        g[t] = static_cast<int>(gen() % 5);
        p[t] = gen() % 2 ? g[t] : static_cast<int>(gen() % 5);
      }
      tp.push_back(p);
      tg.push_back(g);
      sp.push_back(random_subset(gen, 5));
      sg.push_back(gen() % 4 ? random_subset(gen, 5) : sp.back());
    }
    const Tally a = tally_tokens(tp, tg, 0);
    const Tally b = tally_sets(sp, sg, 5);
    instances += a.tp + a.fp + a.fn + b.tp + b.fp + b.fn;
    mismatches += token_prf(tp, tg, {0, false}) != PrfCounts{a.tp, a.fp, a.fn};
    mismatches += set_prf(sp, sg) != PrfCounts{b.tp, b.fp, b.fn};
    mismatches += frame_accuracy(tp, tg) != exact_fraction(tp, tg);
    mismatches += frame_accuracy_sets(sp, sg) != exact_fraction(sp, sg);
  }
  return {mismatches == 0, fmt("1000 random datasets, %lld counted instances, %d mismatches",
                               static_cast<long long>(instances), mismatches)};
}

Outcome loss_bookkeeping() {
  std::mt19937_64 gen(77);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    GradCheckDims gd;
    gd.M = 3 + static_cast<int>(gen() % 4);
    gd.N = 2 + static_cast<int>(gen() % 3);
    gd.K = 2 + static_cast<int>(gen() % 4);
    gd.I = 1 + static_cast<int>(gen() % 4);
    Rng rng(gen());
    const JointParams p = JointParams::init(gd.model(), rng, rng);
    const std::size_t len = 1 + gen() % 5;
    const EncodedSession s = random_session(rng, gd, len);
    const auto windows = make_windows(0, len, static_cast<std::size_t>(gd.I));
    const DialogWindow& w = windows[gen() % windows.size()];

    Rng unused(0);
    const double total = joint_step(s, w, p, nullptr, StepContext{}, unused).total();

    double tag = 0.0, intent = 0.0;
    std::vector<TurnFeature> hist;
    for (int t : w.turns) {
      if (t < 0) {
        hist.push_back(TurnFeature::padding(gd.M + gd.N));
        continue;
      }
      const auto& ex = s[static_cast<std::size_t>(t)];
      Rng r(0);
      const NluOutput o = nlu_forward(ex.words, p.nlu, false, 0.0, r);
      Vec gold = Vec::Zero(gd.N);
      for (int i : ex.intents) gold[i] = 1.0;
      const NluLoss l = nlu_loss(o, ex.tags, gold);
      tag += l.tag;
      intent += l.intent;
      hist.push_back({o.feature, false});
    }
    Vec acts = Vec::Zero(gd.K);
    for (int k : s[static_cast<std::size_t>(w.target())].actions) acts[k] = 1.0;
    const double act = sap_loss(sap_forward(hist, p.sap, w.turns.size()).probs, acts);
    worst = std::max(worst, std::abs(total - (act + tag + intent)));
  }
  return {worst <= 1e-12, fmt("100 random windows, max |total - (act + tag + intent)| = %.3g", worst)};
}

Outcome threshold_tuning() {
  std::mt19937_64 gen(91);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int K = 1 + static_cast<int>(gen() % 6);
    std::vector<Vec> probs;
    std::vector<LabelSet> gold;
    for (std::size_t f = 0; f < 1 + gen() % 20; ++f) {
      Vec p(K);
      for (auto& x : p) x = gen() % 3 ? u(gen) : std::round(u(gen) * 200) / 200;
      probs.push_back(p);
      gold.push_back(random_subset(gen, K));
    }
    int best_k = 0;
    double best = -1.0;
    for (int k = 0; k <= kThresholdSteps; ++k) {
      const double t = grid_threshold(k);
      std::vector<LabelSet> decoded;
      for (const auto& p : probs) {
        LabelSet s;
        for (int j = 0; j < K; ++j)
          if (p[j] >= t) s.push_back(j);
        decoded.push_back(s);
      }
      const double v = exact_fraction(decoded, gold);
      if (v > best) {
        best = v;
        best_k = k;
      }
    }
    mismatches += tune_threshold(probs, gold) != grid_threshold(best_k);
  }
  return {mismatches == 0, fmt("200 random dev sets, %d mismatches against the exhaustive grid", mismatches)};
}

Outcome zero_closed_forms() {
  std::mt19937_64 gen(5);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    GradCheckDims gd;
    gd.M = 2 + static_cast<int>(gen() % 8);
    gd.N = 1 + static_cast<int>(gen() % 6);
    gd.K = 1 + static_cast<int>(gen() % 8);
    gd.I = 1 + static_cast<int>(gen() % 5);
    gd.T = 1 + static_cast<int>(gen() % 8);
    const JointParams p = JointParams::zeros(gd.model());
    Rng rng(gen());
    const std::size_t len = 1 + gen() % 6;
    const EncodedSession s = random_session(rng, gd, len);
    for (const auto& w : make_windows(0, len, static_cast<std::size_t>(gd.I))) {
      double expected = gd.K * std::log(2.0);
      for (int t : w.turns)
        if (t >= 0)
          expected += static_cast<double>(s[static_cast<std::size_t>(t)].words.size()) * std::log(gd.M) +
                      gd.N * std::log(2.0);
      Rng unused(0);
      const double got = joint_step(s, w, p, nullptr, StepContext{}, unused).total();
      worst = std::max(worst, std::abs(got - expected));
    }
  }
  return {worst <= 1e-9, fmt("200 random zero-parameter models, max deviation %.3g", worst)};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  setenv("DIALACT_LOG", "quiet", 1);
  const fs::path dir = scratch_dir();
  const auto t0 = Clock::now();

  report("gradient-integrity", [&] { return gradient_integrity(dir); });
  report("backprop-through-sap", backprop_through_sap);
  report("synthetic-learnability", learnability);
  NoisyResults noisy;
  const auto tn = Clock::now();
  try {
    noisy = noisy_runs();
  } catch (const std::exception& e) {
    std::printf("noisy-corpus runs failed: %s\n", e.what());
  }
  const double noisy_secs = seconds_since(tn);
  std::printf("noisy-corpus runs: 5 seeds x 3 modes in %.0f s\n", noisy_secs);
  report("joint-vs-pipeline", [&] {
    if (noisy.joint.size() != 5) return Outcome{false, "runs incomplete"};
    return ordering(noisy.joint, noisy.pipeline, "joint");
  });
  report("oracle-vs-pipeline", [&] {
    if (noisy.oracle.size() != 5) return Outcome{false, "runs incomplete"};
    return ordering(noisy.oracle, noisy.pipeline, "oracle-sap");
  });
  report("metrics-oracle-equivalence", metrics_equivalence);
  report("loss-bookkeeping", loss_bookkeeping);
  report("train-determinism", [&] { return cli_determinism(dir); });
  report("threshold-tuning", threshold_tuning);
  report("zero-case-closed-forms", zero_closed_forms);

  std::printf("summary: %d of 10 criteria failing, %.0f s total\n", failures, seconds_since(t0));
  return failures ? 1 : 0;
}

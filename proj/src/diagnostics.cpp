#include "dialact/diagnostics.hpp"

#include "dialact/errors.hpp"
#include "dialact/functional.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dialact {

GradCheckDims parse_gradcheck_dims(const std::string& text) {
  GradCheckDims d;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw InvalidArgument("dims: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    int value = 0;
    try {
      std::size_t used = 0;
      value = std::stoi(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InvalidArgument("dims: bad integer for '" + key + "'");
    }
    if (value < 1) throw InvalidArgument("dims: '" + key + "' must be positive");
    if (key == "vocab") d.vocab = value;
    else if (key == "embed") d.embed = value;
    else if (key == "hidden") d.hidden = value;
    else if (key == "M") d.M = value;
    else if (key == "N") d.N = value;
    else if (key == "K") d.K = value;
    else if (key == "T") d.T = value;
    else if (key == "I") d.I = value;
    else if (key == "batch") d.batch = value;
    else throw InvalidArgument("dims: unknown key '" + key + "'");
  }
  if (d.vocab < 3) throw InvalidArgument("dims: vocab must be at least 3");
  return d;
}

namespace {

std::vector<int> random_subset(Rng& rng, int n) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (rng.bernoulli(0.4)) out.push_back(i);
  return out;
}

}  // namespace

EncodedSession random_session(Rng& rng, const GradCheckDims& dims, std::size_t length) {
  EncodedSession session(length);
  for (auto& ex : session) {
    const auto T = 1 + rng.below(static_cast<std::uint64_t>(dims.T));
    for (std::uint64_t t = 0; t < T; ++t) {
      ex.words.push_back(2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(dims.vocab - 2))));
      ex.tags.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(dims.M))));
    }
    ex.tag_types = ex.tags;
    std::sort(ex.tag_types.begin(), ex.tag_types.end());
    ex.tag_types.erase(std::unique(ex.tag_types.begin(), ex.tag_types.end()), ex.tag_types.end());
    ex.intents = random_subset(rng, dims.N);
    ex.actions = random_subset(rng, dims.K);
  }
  return session;
}

namespace {

double bce_term(double p, double y) {
  double l = 0.0;
  if (y != 0.0) l -= y * std::log(std::max(p, kProbFloor));
  if (y != 1.0) l -= (1.0 - y) * std::log(std::max(1.0 - p, kProbFloor));
  return l;
}

}  // namespace

std::vector<double> joint_loss_terms(const EncodedSession& session, const DialogWindow& window,
                                     const JointParams& p, const LossWeights& w) {
  const auto M = p.nlu.w_tag_fwd.rows();
  const auto N = p.nlu.w_int.rows();
  Rng unused(0);
  std::vector<double> terms;
  std::vector<TurnFeature> history;
  for (int t : window.turns) {
    if (t < 0) {
      history.push_back(TurnFeature::padding(M + N));
      continue;
    }
    const auto& ex = session.at(static_cast<std::size_t>(t));
    const NluOutput out = nlu_forward(ex.words, p.nlu, false, 0.0, unused);
    for (std::size_t k = 0; k < ex.tags.size(); ++k)
      terms.push_back(w.tag * -std::log(std::max(out.tag_probs(static_cast<Eigen::Index>(k), ex.tags[k]), kProbFloor)));
    const Vec gold = label_bits(ex.intents, N);
    for (Eigen::Index n = 0; n < N; ++n) terms.push_back(w.intent * bce_term(out.intent_probs[n], gold[n]));
    history.push_back({out.feature, false});
  }
  const Vec probs = sap_forward(history, p.sap, window.turns.size()).probs;
  const Vec gold = label_bits(session.at(static_cast<std::size_t>(window.target())).actions, probs.size());
  for (Eigen::Index k = 0; k < probs.size(); ++k) terms.push_back(w.act * bce_term(probs[k], gold[k]));
  return terms;
}

GradCheckReport joint_grad_check(const GradCheckDims& dims, std::uint64_t seed, const GradCheckOptions& opts) {
  Rng rng(seed);
  const ModelDims md = dims.model();
  JointParams params = JointParams::init(md, rng, rng);
  {
    JointParams scratch = params.zeros_like();
    ParamList all;
    params.collect(scratch, all);
    for (const auto& p : all)
      for (double& v : p.value) v += rng.uniform(-opts.weight_jitter, opts.weight_jitter);
  }

  // The first window is left-padded whenever I > 1; the rest are full.
  std::vector<EncodedSession> sessions;
  std::vector<DialogWindow> windows;
  for (int b = 0; b < dims.batch; ++b) {
    const std::size_t len = b == 0 ? 1 + static_cast<std::size_t>(dims.I) / 2 : static_cast<std::size_t>(dims.I);
    sessions.push_back(random_session(rng, dims, len));
    DialogWindow w = make_windows(static_cast<std::size_t>(b), len, static_cast<std::size_t>(dims.I)).back();
    windows.push_back(std::move(w));
  }

  const StepContext ctx{false, 0.0, opts.weights};
  Rng unused(0);
  auto loss = [&](JointParams* grad) {
    double total = 0.0;
    for (std::size_t b = 0; b < windows.size(); ++b)
      total += opts.weights.apply(joint_step(sessions[b], windows[b], params, grad, ctx, unused));
    return total / static_cast<double>(windows.size());
  };

  JointParams grad = params.zeros_like();
  ParamList list;
  params.collect(grad, list);
  if (!opts.only_prefix.empty())
    std::erase_if(list, [&](const ParamRef& p) { return p.name.rfind(opts.only_prefix, 0) != 0; });
  if (list.empty()) throw InvalidArgument("gradcheck: no parameters match '" + opts.only_prefix + "'");
  loss(&grad);
  const double scale = 1.0 / static_cast<double>(windows.size());
  ParamList every;
  params.collect(grad, every);
  for (const auto& p : every)
    for (double& g : p.grad) g *= scale;
  if (opts.corrupt_param) {
    bool hit = false;
    for (const auto& p : list)
      if (p.name.find(*opts.corrupt_param) != std::string::npos) {
        p.grad[0] += 0.05 + std::abs(p.grad[0]);
        hit = true;
      }
    if (!hit) throw InvalidArgument("gradcheck: no parameter named '" + *opts.corrupt_param + "'");
  }
  const double inv = 1.0 / static_cast<double>(windows.size());
  auto terms = [&] {
    std::vector<double> out;
    for (std::size_t b = 0; b < windows.size(); ++b)
      for (double v : joint_loss_terms(sessions[b], windows[b], params, opts.weights)) out.push_back(v * inv);
    return out;
  };
  return grad_check_terms(terms, list, opts.eps);
}

}  // namespace dialact

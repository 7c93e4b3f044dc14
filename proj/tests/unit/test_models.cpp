#include "dialact/diagnostics.hpp"
#include "dialact/errors.hpp"
#include "dialact/functional.hpp"
#include "dialact/joint_model.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dialact;
using dialact::testing::fill_random;
using dialact::testing::max_rel_error_terms;

namespace {

NluDims small_nlu() { return {12, 4, 3, 5, 3}; }

NluParams random_nlu(std::uint64_t seed, double scale = 0.5) {
  NluParams p = NluParams::zeros(small_nlu());
  NluParams g = NluParams::zeros(small_nlu());
  ParamList list;
  p.collect(g, "", list);
  std::mt19937_64 gen(seed);
  fill_random(list, gen, scale);
  return p;
}

SapParams random_sap(std::uint64_t seed, SapDims d = {8, 3, 4}) {
  SapParams p = SapParams::zeros(d);
  SapParams g = SapParams::zeros(d);
  ParamList list;
  p.collect(g, "", list);
  std::mt19937_64 gen(seed);
  fill_random(list, gen, 0.5);
  return p;
}

double log_terms(std::vector<double>& out, const NluOutput& o, std::span<const int> tags, const Vec& gold,
                 const Vec& w_feature) {
  for (std::size_t t = 0; t < tags.size(); ++t)
    out.push_back(-std::log(o.tag_probs(static_cast<Eigen::Index>(t), tags[t])));
  for (Eigen::Index n = 0; n < gold.size(); ++n)
    out.push_back(gold[n] > 0.5 ? -std::log(o.intent_probs[n]) : -std::log(1.0 - o.intent_probs[n]));
  for (Eigen::Index k = 0; k < w_feature.size(); ++k) out.push_back(w_feature[k] * o.feature[k]);
  return 0.0;
}

}  // namespace

// ---- NLU ------------------------------------------------------------------

TEST(Nlu, Shapes) {
  const NluParams p = random_nlu(1);
  Rng rng(0);
  for (int T : {1, 4, 9}) {
    std::vector<int> ids(static_cast<std::size_t>(T), 3);
    const NluOutput o = nlu_forward(ids, p, false, 0.0, rng);
    EXPECT_EQ(o.tag_probs.rows(), T);
    EXPECT_EQ(o.tag_probs.cols(), 5);
    EXPECT_EQ(o.intent_probs.size(), 3);
    EXPECT_EQ(o.feature.size(), 8);
  }
}

TEST(Nlu, ZeroParameters) {
  const NluParams p = NluParams::zeros(small_nlu());
  Rng rng(0);
  const std::vector<int> ids{2, 5, 7, 2};
  const NluOutput o = nlu_forward(ids, p, false, 0.0, rng);
  EXPECT_LT((o.tag_probs.array() - 0.2).abs().maxCoeff(), 1e-15);
  EXPECT_EQ(o.intent_probs, Vec::Constant(3, 0.5));
  EXPECT_EQ(o.feature, Vec::Zero(8));
  const NluLoss l = nlu_loss(o, std::vector<int>{0, 1, 4, 2}, Vec::Zero(3));
  EXPECT_NEAR(l.tag, 4 * std::log(5.0), 1e-12);
  EXPECT_NEAR(l.intent, 3 * std::log(2.0), 1e-12);
}

TEST(Nlu, RejectsBadInput) {
  const NluParams p = NluParams::zeros(small_nlu());
  Rng rng(0);
  EXPECT_THROW(nlu_forward(std::vector<int>{}, p, false, 0.0, rng), InvalidArgument);
  EXPECT_THROW(nlu_forward(std::vector<int>{1, 12}, p, false, 0.0, rng), InvalidArgument);
  EXPECT_THROW(nlu_forward(std::vector<int>{-1}, p, false, 0.0, rng), InvalidArgument);
  const NluOutput o = nlu_forward(std::vector<int>{1, 2}, p, false, 0.0, rng);
  EXPECT_THROW(nlu_loss(o, std::vector<int>{0}, Vec::Zero(3)), ShapeError);
  EXPECT_THROW(nlu_loss(o, std::vector<int>{0, 1}, Vec::Zero(2)), ShapeError);
}

TEST(Nlu, PerfectPredictionsHaveNearZeroLoss) {
  NluOutput o;
  o.tag_probs = Mat::Zero(3, 5);
  o.tag_probs(0, 2) = o.tag_probs(1, 0) = o.tag_probs(2, 4) = 1.0;
  o.intent_probs = Vec::Zero(3);
  o.intent_probs[1] = 1.0;
  Vec gold = Vec::Zero(3);
  gold[1] = 1.0;
  const NluLoss l = nlu_loss(o, std::vector<int>{2, 0, 4}, gold);
  EXPECT_LT(l.tag, 1e-10);
  EXPECT_LT(l.intent, 1e-10);
}

TEST(Nlu, InferenceIsDeterministic) {
  const NluParams p = random_nlu(2);
  Rng a(1), b(99);
  const std::vector<int> ids{3, 4, 5, 6};
  const NluOutput x = nlu_forward(ids, p, false, 0.5, a);
  const NluOutput y = nlu_forward(ids, p, false, 0.5, b);
  EXPECT_EQ(x.tag_probs, y.tag_probs);
  EXPECT_EQ(x.intent_probs, y.intent_probs);
  EXPECT_EQ(x.feature, y.feature);
}

TEST(Nlu, TaggerReversalSymmetry) {
  NluParams p = random_nlu(3);
  NluParams q = p;
  std::swap(q.trunk_fwd, q.trunk_bwd);
  std::swap(q.w_tag_fwd, q.w_tag_bwd);
  Rng rng(0);
  const std::vector<int> ids{2, 9, 4, 4, 7};
  std::vector<int> rev(ids.rbegin(), ids.rend());
  const Mat a = nlu_forward(ids, p, false, 0.0, rng).tag_probs;
  const Mat b = nlu_forward(rev, q, false, 0.0, rng).tag_probs;
  for (Eigen::Index t = 0; t < 5; ++t) EXPECT_LT((a.row(t) - b.row(4 - t)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Nlu, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed : {4u, 5u}) {
    NluParams p = random_nlu(seed);
    NluParams grad = NluParams::zeros(small_nlu());
    const std::vector<int> ids{2, 7, 3, 11};
    const std::vector<int> tags{0, 4, 1, 2};
    Vec gold(3);
    gold << 1.0, 0.0, 1.0;
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec w_feature(8);
    for (auto& x : w_feature) x = u(gen);

    Rng rng(0);
    const NluOutput o = nlu_forward(ids, p, false, 0.0, rng);
    const NluLossGrad g = nlu_loss_grad(o, tags, gold);
    nlu_backward(o, p, g.d_tag_logits, g.d_intent_logits, w_feature, grad);

    ParamList list;
    p.collect(grad, "nlu/", list);
    auto terms = [&] {
      std::vector<double> out;
      log_terms(out, nlu_forward(ids, p, false, 0.0, rng), tags, gold, w_feature);
      return out;
    };
    EXPECT_LT(max_rel_error_terms(terms, list), 1e-4);
  }
}

TEST(Nlu, NoDeadParameters) {
  NluParams p = random_nlu(6);
  NluParams grad = NluParams::zeros(small_nlu());
  Rng rng(0);
  std::mt19937_64 gen(6);
  for (int b = 0; b < 6; ++b) {
    std::vector<int> ids, tags;
    for (int t = 0; t < 2 + b; ++t) {
      ids.push_back(static_cast<int>(gen() % 12));
      tags.push_back(static_cast<int>(gen() % 5));
    }
    Vec gold = Vec::Zero(3);
    gold[b % 3] = 1.0;
    const NluOutput o = nlu_forward(ids, p, false, 0.0, rng);
    const NluLossGrad g = nlu_loss_grad(o, tags, gold);
    nlu_backward(o, p, g.d_tag_logits, g.d_intent_logits, Vec::Constant(8, 0.3), grad);
  }
  ParamList list;
  p.collect(grad, "", list);
  for (const auto& r : list) {
    bool nonzero = false;
    for (double v : r.grad) nonzero = nonzero || v != 0.0;
    EXPECT_TRUE(nonzero) << r.name;
  }
}

TEST(Decode, TagsArgmaxLowestOnTies) {
  Mat probs(2, 3);
  probs << 0.1, 0.7, 0.2, 1.0 / 3, 1.0 / 3, 1.0 / 3;
  EXPECT_EQ(decode_tags(probs), (std::vector<int>{1, 0}));
}

TEST(Decode, MultilabelInclusiveThreshold) {
  Vec p(3);
  p << 0.45, 0.391, 0.1;
  EXPECT_EQ(decode_multilabel(p, 0.391), (std::vector<int>{0, 1}));
  EXPECT_EQ(decode_multilabel(p, 0.0), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(decode_multilabel(p, 1.0), (std::vector<int>{}));
  EXPECT_THROW(decode_multilabel(p, 1.01), InvalidArgument);
  EXPECT_THROW(decode_multilabel(p, -0.01), InvalidArgument);
}

// ---- SAP ------------------------------------------------------------------

TEST(Sap, ZeroParametersGiveHalf) {
  const SapParams p = SapParams::zeros({8, 3, 4});
  std::vector<TurnFeature> h{TurnFeature::padding(8), {Vec::Ones(8), false}};
  const SapOutput o = sap_forward(h, p, 2);
  EXPECT_EQ(o.probs, Vec::Constant(4, 0.5));
  EXPECT_NEAR(sap_loss(o.probs, Vec::Zero(4)), 4 * std::log(2.0), 1e-12);
}

TEST(Sap, Errors) {
  const SapParams p = SapParams::zeros({8, 3, 4});
  std::vector<TurnFeature> h{{Vec::Ones(8), false}, TurnFeature::padding(8)};
  EXPECT_THROW(sap_forward(h, p, 2), InvalidArgument);
  EXPECT_THROW(sap_forward(h, p, 3), ShapeError);
  std::vector<TurnFeature> wrong{{Vec::Ones(7), false}};
  EXPECT_THROW(sap_forward(wrong, p, 1), ShapeError);
  EXPECT_THROW(sap_loss(Vec::Constant(4, 0.5), Vec::Zero(3)), ShapeError);
}

TEST(Sap, PerfectPredictionNearZeroLoss) {
  Vec y(4);
  y << 1, 0, 0, 1;
  EXPECT_LT(sap_loss(y, y), 1e-10);
}

TEST(Sap, OutputRangeAndMonotoneDecoding) {
  const SapParams p = random_sap(1);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<TurnFeature> h;
    for (int i = 0; i < 3; ++i) {
      Vec v(8);
      for (auto& x : v) x = u(gen) < 0.4;
      h.push_back(i == 0 && trial % 2 ? TurnFeature::padding(8) : TurnFeature{v, false});
    }
    const Vec probs = sap_forward(h, p, 3).probs;
    ASSERT_EQ(probs.size(), 4);
    EXPECT_GT(probs.minCoeff(), 0.0);
    EXPECT_LT(probs.maxCoeff(), 1.0);
    std::vector<int> prev = decode_multilabel(probs, 0.0);
    for (int k = 1; k <= 200; ++k) {
      const auto cur = decode_multilabel(probs, k / 200.0);
      EXPECT_TRUE(std::includes(prev.begin(), prev.end(), cur.begin(), cur.end()));
      prev = cur;
    }
  }
}

TEST(Sap, PaddingActsAsZeroInput) {
  const SapParams p = random_sap(2);
  Vec last(8);
  last << 1, 0, 0, 1, 0, 1, 0, 0;
  std::vector<TurnFeature> padded{TurnFeature::padding(8), TurnFeature::padding(8), {last, false}};
  std::vector<TurnFeature> zeros{{Vec::Zero(8), false}, {Vec::Zero(8), false}, {last, false}};
  EXPECT_EQ(sap_forward(padded, p, 3).probs, sap_forward(zeros, p, 3).probs);
}

TEST(Sap, OracleEncoding) {
  const TurnFeature empty = encode_oracle_turn({}, {}, 3, 2);
  EXPECT_EQ(empty.values, Vec::Zero(5));
  EXPECT_FALSE(empty.is_padding);
  const TurnFeature f = encode_oracle_turn(std::vector<int>{1}, std::vector<int>{0}, 3, 2);
  Vec expected(5);
  expected << 0, 1, 0, 1, 0;
  EXPECT_EQ(f.values, expected);
  EXPECT_THROW(encode_oracle_turn(std::vector<int>{3}, {}, 3, 2), InvalidArgument);
  EXPECT_THROW(encode_oracle_turn({}, std::vector<int>{-1}, 3, 2), InvalidArgument);
}

TEST(Sap, GradientsMatchFiniteDifferences) {
  SapParams p = random_sap(3);
  SapParams grad = SapParams::zeros({8, 3, 4});
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<TurnFeature> h{TurnFeature::padding(8)};
  for (int i = 0; i < 2; ++i) {
    Vec v(8);
    for (auto& x : v) x = u(gen);
    h.push_back({v, false});
  }
  Vec gold(4);
  gold << 1, 0, 1, 0;
  const SapOutput o = sap_forward(h, p, 3);
  Mat d_hist = sap_backward(o, p, multilabel_bce_grad(o.probs, gold), grad);
  ASSERT_EQ(d_hist.rows(), 3);
  ASSERT_EQ(d_hist.cols(), 8);

  ParamList list;
  p.collect(grad, "sap/", list);
  Vec in1 = h[1].values, in2 = h[2].values;
  Vec g1 = d_hist.row(1).transpose(), g2 = d_hist.row(2).transpose();
  list.push_back({"x1", 8, 1, as_span(in1), as_span(g1)});
  list.push_back({"x2", 8, 1, as_span(in2), as_span(g2)});
  auto terms = [&] {
    std::vector<TurnFeature> hh{h[0], {in1, false}, {in2, false}};
    const Vec probs = sap_forward(hh, p, 3).probs;
    std::vector<double> out;
    for (Eigen::Index k = 0; k < 4; ++k)
      out.push_back(gold[k] > 0.5 ? -std::log(probs[k]) : -std::log(1.0 - probs[k]));
    return out;
  };
  EXPECT_LT(max_rel_error_terms(terms, list), 1e-4);
}

// ---- joint ----------------------------------------------------------------

namespace {

EncodedExample make_example(std::vector<int> words, std::vector<int> tags, std::vector<int> intents,
                            std::vector<int> actions) {
  EncodedExample ex;
  ex.words = std::move(words);
  ex.tags = std::move(tags);
  ex.tag_types = ex.tags;
  std::sort(ex.tag_types.begin(), ex.tag_types.end());
  ex.tag_types.erase(std::unique(ex.tag_types.begin(), ex.tag_types.end()), ex.tag_types.end());
  ex.intents = std::move(intents);
  ex.actions = std::move(actions);
  return ex;
}

}  // namespace

TEST(Joint, ZeroParameterClosedForm) {
  const ModelDims d{10, 4, 3, 5, 3, 4};
  const JointParams p = JointParams::zeros(d);
  const EncodedSession s{make_example({2, 3, 4}, {0, 1, 2}, {0}, {1}),
                         make_example({5, 6, 7}, {3, 3, 0}, {1, 2}, {0, 3})};
  DialogWindow w{0, {0, 1}};
  Rng rng(0);
  const LossComponents l = joint_step(s, w, p, nullptr, StepContext{}, rng);
  EXPECT_NEAR(l.act, 4 * std::log(2.0), 1e-12);
  EXPECT_NEAR(l.tag, 2 * 3 * std::log(5.0), 1e-12);
  EXPECT_NEAR(l.intent, 2 * 3 * std::log(2.0), 1e-12);
  EXPECT_NEAR(l.total(), 4 * std::log(2.0) + 2 * (3 * std::log(5.0)) + 2 * (3 * std::log(2.0)), 1e-9);
}

TEST(Joint, PaddingTurnsAreSkipped) {
  const ModelDims d{10, 4, 3, 5, 3, 4};
  const JointParams p = JointParams::zeros(d);
  const EncodedSession s{make_example({2, 3}, {0, 1}, {0}, {1})};
  Rng rng(0);
  const LossComponents l = joint_step(s, DialogWindow{0, {-1, -1, 0}}, p, nullptr, StepContext{}, rng);
  EXPECT_NEAR(l.tag, 2 * std::log(5.0), 1e-12);
  EXPECT_NEAR(l.intent, 3 * std::log(2.0), 1e-12);
}

TEST(Joint, MalformedWindows) {
  const JointParams p = JointParams::zeros({10, 4, 3, 5, 3, 4});
  const EncodedSession s{make_example({2}, {0}, {}, {})};
  Rng rng(0);
  EXPECT_THROW(joint_step(s, DialogWindow{0, {}}, p, nullptr, StepContext{}, rng), PreconditionError);
  EXPECT_THROW(joint_step(s, DialogWindow{0, {0, -1}}, p, nullptr, StepContext{}, rng), PreconditionError);
  EXPECT_THROW(joint_step(s, DialogWindow{0, {-1, 1}}, p, nullptr, StepContext{}, rng), PreconditionError);
}

TEST(Joint, GradientCheckOnTinyDims) {
  const GradCheckReport r = joint_grad_check(GradCheckDims{}, 1);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "]";
  EXPECT_GT(r.coordinates, 3000u);
}

TEST(Joint, GradientCheckDeterministicUnderSeed) {
  const GradCheckDims dims = parse_gradcheck_dims("embed=4,hidden=3,M=3,N=2,K=2,T=3,I=2,batch=1");
  const GradCheckReport a = joint_grad_check(dims, 9);
  const GradCheckReport b = joint_grad_check(dims, 9);
  EXPECT_EQ(a.max_rel_error, b.max_rel_error);
  EXPECT_EQ(a.worst_param, b.worst_param);
}

TEST(Joint, CorruptedGradientIsNamed) {
  GradCheckOptions o;
  o.corrupt_param = "sap/b_act";
  const GradCheckReport r = joint_grad_check(GradCheckDims{}, 1, o);
  EXPECT_FALSE(r.passed(1e-4));
  EXPECT_EQ(r.worst_param, "sap/b_act");
}

TEST(Joint, ActionLossAloneReachesEmbedding) {
  GradCheckOptions o;
  o.weights = {1.0, 0.0, 0.0};
  o.only_prefix = "nlu/";
  const GradCheckReport r = joint_grad_check(GradCheckDims{}, 2, o);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_param;

  const ModelDims d{12, 4, 3, 5, 3, 4};
  Rng init(3);
  JointParams p = JointParams::init(d, init, init);
  JointParams grad = p.zeros_like();
  Rng rng(0);
  GradCheckDims gd;
  gd.vocab = 12;
  const EncodedSession s = random_session(init, gd, 3);
  joint_step(s, DialogWindow{0, {0, 1, 2}}, p, &grad, StepContext{false, 0.0, {1.0, 0.0, 0.0}}, rng);
  EXPECT_GT(grad.nlu.embedding.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(grad.nlu.trunk_fwd.w_x.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Joint, LossTermsSumToComponents) {
  Rng rng(5);
  GradCheckDims gd;
  const JointParams p = JointParams::init(gd.model(), rng, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const EncodedSession s = random_session(rng, gd, 4);
    const auto windows = make_windows(0, 4, 3);
    for (const auto& w : windows) {
      Rng unused(0);
      const LossComponents l = joint_step(s, w, p, nullptr, StepContext{}, unused);
      double sum = 0.0;
      for (double v : joint_loss_terms(s, w, p)) sum += v;
      EXPECT_NEAR(sum, l.total(), 1e-10);
    }
  }
}

TEST(Joint, SingleTurnWindowMatchesNluStep) {
  Rng rng(6);
  GradCheckDims gd;
  const JointParams p = JointParams::init(gd.model(), rng, rng);
  const EncodedSession s = random_session(rng, gd, 1);
  Rng a(0), b(0);
  const LossComponents j = joint_step(s, DialogWindow{0, {0}}, p, nullptr, StepContext{}, a);
  const LossComponents n = nlu_step(s[0], p.nlu, nullptr, StepContext{}, b);
  EXPECT_EQ(j.tag, n.tag);
  EXPECT_EQ(j.intent, n.intent);
}

TEST(Joint, WeightedGradientsScaleLinearly) {
  Rng rng(7);
  GradCheckDims gd;
  const JointParams p = JointParams::init(gd.model(), rng, rng);
  const EncodedSession s = random_session(rng, gd, 2);
  JointParams g1 = p.zeros_like(), g2 = p.zeros_like();
  Rng a(0), b(0);
  joint_step(s, DialogWindow{0, {0, 1}}, p, &g1, StepContext{false, 0.0, {1.0, 1.0, 1.0}}, a);
  joint_step(s, DialogWindow{0, {0, 1}}, p, &g2, StepContext{false, 0.0, {2.0, 2.0, 2.0}}, b);
  EXPECT_LT((2.0 * g1.nlu.embedding - g2.nlu.embedding).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((2.0 * g1.sap.b_act - g2.sap.b_act).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradCheckDims, Parsing) {
  const GradCheckDims d = parse_gradcheck_dims("embed=8,hidden=8,M=5,N=3,K=4,T=6,I=3,batch=2");
  EXPECT_EQ(d.embed, 8);
  EXPECT_EQ(d.I, 3);
  EXPECT_EQ(d.batch, 2);
  EXPECT_THROW(parse_gradcheck_dims("embed=x"), InvalidArgument);
  EXPECT_THROW(parse_gradcheck_dims("foo=1"), InvalidArgument);
  EXPECT_THROW(parse_gradcheck_dims("M=0"), InvalidArgument);
  EXPECT_THROW(parse_gradcheck_dims("M"), InvalidArgument);
}

#include <gtest/gtest.h>

#include <set>

#include "selfexp/errors.hpp"
#include "selfexp/explainers.hpp"
#include "selfexp/lexicon_oracle.hpp"
#include "support.hpp"

using namespace selfexp;
using namespace selfexp::testing;

namespace {

// Answers every prompt with a fixed predict-only style pair chosen per review.
ScriptedModel pair_model(std::function<std::string(const std::string&)> pair_for_review) {
  return ScriptedModel([f = std::move(pair_for_review)](std::span<const Message> m) { return f(review_of(m)); });
}

}  // namespace

TEST(PromptedClassifier, MemoizesQueries) {
  auto model = pair_model([](const std::string&) { return "(1, 0.75)"; });
  PromptedClassifier clf(model, PromptVariant::kPredictOnly);
  EXPECT_EQ(clf.f("a b"), 0.75);
  EXPECT_EQ(clf.f("a b"), 0.75);
  EXPECT_EQ(clf.distinct_queries(), 1u);
  EXPECT_EQ(model.calls(), 1u);
}

TEST(PromptedClassifier, KRequiredExactlyForTopK) {
  auto model = pair_model([](const std::string&) { return "(1, 0.75)"; });
  EXPECT_THROW(PromptedClassifier(model, PromptVariant::kExplainPredictTopK), InvalidArgument);
  EXPECT_THROW(PromptedClassifier(model, PromptVariant::kExplainPredict, 2), InvalidArgument);
}

TEST(PromptedClassifier, PredictManyNamesFailedIndices) {
  auto model = pair_model([](const std::string& r) { return r == "b" ? "garbage" : "(0, 0.5)"; });
  PromptedClassifier clf(model, PromptVariant::kPredictOnly, std::nullopt, 3);
  const std::vector<std::string> texts = {"a", "b", "c", "b"};
  try {
    clf.predict_many(texts);
    FAIL();
  } catch (const PerturbationError& e) {
    EXPECT_EQ(e.failed(), (std::vector<std::size_t>{1, 3}));
  }
}

TEST(SelfExplain, ExplainPredictTranscript) {
  ScriptedModel model([](std::span<const Message>) { return kExplainPredictTranscript.response; });
  const auto r = self_explain(model, PromptVariant::kExplainPredict, tokenize(kExplainPredictTranscript.review));
  EXPECT_EQ(r.prediction, (Prediction{1, 1.0}));
  ASSERT_TRUE(r.attribution);
  EXPECT_EQ(r.attribution->scores[5], 0.75);
  EXPECT_EQ(r.attribution->provenance, Provenance::kSelfExplanation);
  EXPECT_EQ(model.calls(), 1u);
}

TEST(SelfExplain, PredictExplainTopKTranscript) {
  ScriptedModel model([](std::span<const Message> m) {
    EXPECT_NE(m[0].content.find("top 3 most significant"), std::string::npos);
    return kPredictExplainTopKTranscript.response;
  });
  const auto seq = tokenize(kPredictExplainTopKTranscript.review);
  const auto r = self_explain(model, PromptVariant::kPredictExplainTopK, seq);
  EXPECT_EQ(r.prediction, (Prediction{1, 0.8}));
  ASSERT_TRUE(r.topk);
  std::vector<std::string> words;
  for (std::size_t i : r.topk->indices) words.push_back(seq.token(i));
  EXPECT_EQ(words, (std::vector<std::string>{"rhythms", "experience", "watch"}));
}

TEST(SelfExplain, OracleIsDeterministic) {
  OracleChatModel model(LexiconOracle::BuiltIn());
  const auto seq = tokenize("a wonderful , moving film with a dull ending");
  for (PromptVariant v : kAllVariants) {
    if (!is_explaining(v)) continue;
    const auto a = self_explain(model, v, seq);
    const auto b = self_explain(model, v, seq);
    EXPECT_EQ(a.prediction, b.prediction);
    EXPECT_EQ(a.attribution.has_value(), b.attribution.has_value());
    if (a.attribution) {
      EXPECT_EQ(a.attribution->scores, b.attribution->scores);
    }
    if (a.topk) {
      EXPECT_EQ(a.topk->indices, b.topk->indices);
    }
  }
}

TEST(Occlusion, LinearOracleClosedForm) {
  OracleChatModel model(LexiconOracle({{"great", 0.3}}));
  PromptedClassifier clf(model, PromptVariant::kExplainPredict);
  const auto a = occlusion(clf, tokenize("a great movie"));
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a.scores[0], 0.0);
  EXPECT_NEAR(a.scores[1], 0.3, 1e-12);
  EXPECT_EQ(a.scores[2], 0.0);
  EXPECT_EQ(a.provenance, Provenance::kOcclusion);
  EXPECT_EQ(clf.distinct_queries(), 4u);
}

TEST(Occlusion, UninformativeWordScoresZero) {
  const std::string full = "One of the greatest films ever .";
  auto model = pair_model([&](const std::string& r) {
    return r.find("greatest") == std::string::npos ? "(1, 0.60)" : "(1, 0.90)";
  });
  PromptedClassifier clf(model, PromptVariant::kPredictExplain);
  const auto a = occlusion(clf, tokenize(full));
  EXPECT_EQ(a.scores[5], 0.0);
  EXPECT_NEAR(a.scores[3], 0.3, 1e-12);
}

TEST(Occlusion, ConstantModelAllZero) {
  auto model = pair_model([](const std::string&) { return "(0, 0.7)"; });
  PromptedClassifier clf(model, PromptVariant::kPredictOnly);
  EXPECT_EQ(occlusion(clf, tokenize("x y z")).scores, (std::vector<double>{0, 0, 0}));
}

TEST(Occlusion, FailedPerturbationsReported) {
  auto model = pair_model([](const std::string& r) { return r == "x z" ? "oops" : "(0, 0.7)"; });
  PromptedClassifier clf(model, PromptVariant::kPredictOnly);
  try {
    occlusion(clf, tokenize("x y z"));
    FAIL();
  } catch (const PerturbationError& e) {
    // Query indices: 0 is the full sentence, i + 1 drops token i.
    EXPECT_EQ(e.failed(), (std::vector<std::size_t>{2}));
  }
}

TEST(LimeMasks, FirstRowKeepsAllAndSeedsReproduce) {
  const auto a = lime_masks(6, 60, 3);
  const auto b = lime_masks(6, 60, 3);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 60u);
  EXPECT_EQ(a[0], (std::vector<std::uint8_t>(6, 1)));
  EXPECT_NE(a, lime_masks(6, 60, 4));
}

TEST(Lime, RecoversLinearWeights) {
  LexiconOracle::Weights w;
  const char* words[] = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"};
  std::vector<std::string> tokens;
  for (int i = 0; i < 12; ++i) {
    w.emplace(words[i], (i - 6) / 64.0);
    tokens.emplace_back(words[i]);
  }
  OracleChatModel model{LexiconOracle(w)};
  PromptedClassifier clf(model, PromptVariant::kExplainPredict);
  const auto seq = TokenSequence::FromTokens(tokens);
  const auto a = lime(clf, seq, ExplainerBudget{10, 7});
  EXPECT_EQ(a.provenance, Provenance::kLime);
  for (int i = 0; i < 12; ++i) EXPECT_NEAR(a.scores[i], (i - 6) / 64.0, 1e-6);
}

TEST(Lime, SingleTokenTwoPointRegression) {
  OracleChatModel model(LexiconOracle({{"good", 0.25}}, 0.4));
  PromptedClassifier clf(model, PromptVariant::kPredictOnly);
  const auto a = lime(clf, tokenize("good"), ExplainerBudget{10, 1});
  EXPECT_NEAR(a.scores[0], clf.f("good") - clf.f(""), 1e-12);
}

TEST(Lime, BudgetBelowParameterCountIsError) {
  OracleChatModel model(LexiconOracle{});
  PromptedClassifier clf(model, PromptVariant::kPredictOnly);
  EXPECT_THROW(lime(clf, tokenize("a b"), ExplainerBudget{0, 1}), InvalidArgument);
}

TEST(Lime, ConstantModelIsRankDeficientOnlyInDesign) {
  OracleChatModel model(LexiconOracle{});
  PromptedClassifier clf(model, PromptVariant::kPredictOnly);
  const auto a = lime(clf, tokenize("a b c"), ExplainerBudget{10, 5});
  for (double s : a.scores) EXPECT_NEAR(s, 0.0, 1e-12);
}

TEST(TopKFrom, Orderings) {
  const Attribution attr{{0.1, 0.9, 0.5}, Provenance::kOcclusion};
  EXPECT_EQ(topk_from(attr, Prediction{1, 0.9}, 2, 0).indices, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(topk_from(attr, Prediction{0, 0.9}, 1, 0).indices, (std::vector<std::size_t>{0}));
  EXPECT_THROW(topk_from(attr, Prediction{1, 0.9}, 4, 0), InvalidArgument);
  EXPECT_THROW(topk_from(attr, Prediction{1, 0.9}, 0, 0), InvalidArgument);
}

TEST(TopKFrom, TiesResolvedBothWaysAcrossSeeds) {
  const Attribution attr{{0.5, 0.5}, Provenance::kOcclusion};
  std::set<std::size_t> chosen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) chosen.insert(topk_from(attr, Prediction{1, 0.9}, 1, seed).indices[0]);
  EXPECT_EQ(chosen, (std::set<std::size_t>{0, 1}));
}

#include <gtest/gtest.h>

#include <set>

#include "coldstart/judging.hpp"
#include "coldstart/promptkit.hpp"
#include "coldstart/text.hpp"
#include "support.hpp"

using namespace coldstart;
using judging::Winner;
using testsupport::make_context;
using testsupport::make_listing;

namespace {

corpus::FeatureBlock block(const std::string& id, const std::string& text) { return {id, text, false}; }

Winner mock_verdict(const std::string& q, const std::string& a, const std::string& b) {
  const auto& lib = promptkit::PromptLibrary::builtin();
  return judging::parse_verdict_token(llmio::mock_judge(promptkit::render_judge_prompt(lib, q, a, b)));
}

std::size_t overlap(const std::string& q, const std::string& block) {
  auto qt = text::tokenize(q);
  auto bt = text::tokenize(block);
  std::set<std::string> qs(qt.begin(), qt.end()), bs(bt.begin(), bt.end());
  std::size_t n = 0;
  for (const auto& t : qs) n += bs.count(t);
  return n;
}

std::vector<judging::VjLabel> labels(std::size_t n, Winner w) {
  std::vector<judging::VjLabel> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"q" + std::to_string(i), "L" + std::to_string(i), "M" + std::to_string(i), w, "x"});
  }
  return out;
}

struct Registry {
  llmio::BackendRegistry reg;
  Registry() { reg.add(std::make_shared<llmio::MockBackend>("mock-judge")); }
};

}  // namespace

TEST(VerdictToken, FinalLineOnly) {
  EXPECT_EQ(judging::parse_verdict_token("reasoning...\nA"), Winner::A);
  EXPECT_EQ(judging::parse_verdict_token("x\n\n  b.  \n"), Winner::B);
  EXPECT_EQ(judging::parse_verdict_token("TIE"), Winner::tie);
  EXPECT_THROW(judging::parse_verdict_token("Listing A wins"), JudgeParseError);
  EXPECT_THROW(judging::parse_verdict_token(""), JudgeParseError);
}

TEST(MockJudge, OverlapRule) {
  EXPECT_EQ(mock_verdict("pool near beach", "pool near the beach", "loft downtown"), Winner::A);
  EXPECT_EQ(mock_verdict("pool near beach", "loft downtown", "pool near the beach"), Winner::B);
  EXPECT_EQ(mock_verdict("pool near beach", "same text", "same text"), Winner::tie);
}

TEST(LlmJudge, MapsPresentationOrderBack) {
  Registry r;
  judging::LlmJudge judge(r.reg, "mock-judge");
  auto rng = make_rng(3);
  bool saw_swapped = false, saw_straight = false;
  for (int i = 0; i < 40; ++i) {
    auto v = judge.judge("pool near beach", block("L1", "pool near the beach"), block("L2", "loft"), rng);
    EXPECT_EQ(v.winner, Winner::A);
    (v.presented_swapped ? saw_swapped : saw_straight) = true;
    EXPECT_FALSE(v.rationale.empty());
    EXPECT_EQ(v.backend_id, "mock-judge");
  }
  EXPECT_TRUE(saw_swapped && saw_straight);
}

TEST(LlmJudge, UnparsableVerdictRaises) {
  llmio::BackendRegistry reg;
  reg.add(std::make_shared<llmio::FunctionBackend>("bad", [](const llmio::CompletionRequest&) {
    return std::string("Listing A seems better overall");
  }));
  judging::LlmJudge judge(reg, "bad");
  auto rng = make_rng(1);
  EXPECT_THROW(judge.judge("q", block("a", "x"), block("b", "y"), rng), JudgeParseError);
}

TEST(LlmJudge, FixtureAccuracyMatchesIndependentRecount) {
  Registry r;
  judging::LlmJudge judge(r.reg, "mock-judge");
  const auto& triplets = testsupport::fixture_triplets();
  const auto& catalog = testsupport::fixture_catalog();
  ASSERT_GE(triplets.size(), 1000u);
  auto rng = make_rng(4);
  double score = 0, oracle = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto& t = triplets[i];
    auto a = corpus::render_feature_block(catalog.at(t.positive_id), t.context, {});
    auto b = corpus::render_feature_block(catalog.at(t.negative_id), t.context, {});
    auto v = judge.judge(t.query, a, b, rng);
    score += v.winner == Winner::A ? 1 : v.winner == Winner::tie ? 0.5 : 0;
    auto oa = overlap(t.query, a.rendered_text), ob = overlap(t.query, b.rendered_text);
    oracle += oa > ob ? 1 : oa == ob ? 0.5 : 0;
  }
  EXPECT_DOUBLE_EQ(score, oracle);
}

TEST(Relabel, CardinalityAndZeroParseErrors) {
  Registry r;
  judging::LlmJudge judge(r.reg, "mock-judge");
  const auto& catalog = testsupport::fixture_catalog();
  std::vector<generation::SyntheticTriplet> slice(testsupport::fixture_triplets().begin(),
                                                  testsupport::fixture_triplets().begin() + 100);
  std::vector<std::string> pool;
  for (const auto& l : catalog.listings()) pool.push_back(l.id);
  auto rng = make_rng(5);
  auto res = judging::relabel(slice, catalog, pool, judge, rng, {}, true);
  EXPECT_EQ(res.labels.size(), 100u);
  EXPECT_EQ(res.parse_errors, 0u);
  EXPECT_EQ(res.order_probes, 100u);
  EXPECT_EQ(res.order_disagreements, 0u);
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& l = res.labels[i];
    EXPECT_TRUE(l.listing_x == slice[i].positive_id || l.listing_x == slice[i].negative_id);
    EXPECT_NE(l.listing_y, slice[i].positive_id);
    EXPECT_NE(l.listing_y, slice[i].negative_id);
    EXPECT_EQ(l.query, slice[i].query);
  }
}

TEST(Relabel, DegeneratePoolFallsBackToOriginals) {
  Registry r;
  judging::LlmJudge judge(r.reg, "mock-judge");
  corpus::Catalog catalog({make_listing("L1", "cabin", {"pool"}), make_listing("L2", "loft", {"wifi"})});
  generation::SyntheticTriplet t;
  t.query = "cabin with pool";
  t.positive_id = "L1";
  t.negative_id = "L2";
  t.context = make_context();
  auto rng = make_rng(6);
  auto res = judging::relabel({t}, catalog, {"L1", "L2"}, judge, rng);
  ASSERT_EQ(res.labels.size(), 1u);
  std::set<std::string> ids = {res.labels[0].listing_x, res.labels[0].listing_y};
  EXPECT_EQ(ids, (std::set<std::string>{"L1", "L2"}));
  Winner expected = res.labels[0].listing_x == "L1" ? Winner::A : Winner::B;
  EXPECT_EQ(res.labels[0].winner, expected);
  EXPECT_THROW(judging::relabel({t}, catalog, {}, judge, rng), ArgumentError);
}

TEST(Calibrate, IdenticalAndInverted) {
  auto a = labels(10, Winner::A);
  EXPECT_DOUBLE_EQ(judging::calibrate(a, a).agreement_rate, 1.0);
  EXPECT_DOUBLE_EQ(judging::calibrate(a, labels(10, Winner::B)).agreement_rate, 0.0);
}

TEST(Calibrate, HandBuilt174Of200) {
  auto vj = labels(200, Winner::A);
  auto human = vj;
  for (std::size_t i = 174; i < 200; ++i) human[i].winner = i % 2 ? Winner::B : Winner::tie;
  auto r = judging::calibrate(vj, human);
  EXPECT_EQ(r.n, 200u);
  EXPECT_EQ(r.agreements, 174u);
  EXPECT_DOUBLE_EQ(r.agreement_rate, 0.87);
  EXPECT_DOUBLE_EQ(judging::calibrate(human, vj).agreement_rate, 0.87);
  EXPECT_EQ(r.confusion[0][0], 174u);
  EXPECT_EQ(r.confusion[0][1] + r.confusion[0][2], 26u);
}

TEST(Calibrate, ReversedKeyJoinsWithMirroredWinner) {
  std::vector<judging::VjLabel> vj = {{"q", "L1", "L2", Winner::A, "j"}};
  std::vector<judging::VjLabel> human = {{"q", "L2", "L1", Winner::B, "h"}};
  EXPECT_DOUBLE_EQ(judging::calibrate(vj, human).agreement_rate, 1.0);
}

TEST(Calibrate, UnjoinedCountsAndEmptyJoin) {
  auto vj = labels(5, Winner::A);
  auto human = labels(3, Winner::A);
  auto r = judging::calibrate(vj, human);
  EXPECT_EQ(r.unjoined_vj, 2u);
  EXPECT_EQ(r.unjoined_human, 0u);
  std::vector<judging::VjLabel> other = {{"zzz", "a", "b", Winner::A, "h"}};
  EXPECT_THROW(judging::calibrate(vj, other), CalibrationError);
}

TEST(Labels, FileRoundTrip) {
  testsupport::TempDir dir;
  auto l = labels(3, Winner::tie);
  judging::save_labels(dir.file("l.jsonl"), l);
  EXPECT_EQ(judging::load_labels(dir.file("l.jsonl")), l);
}

namespace {

judging::FunctionJudge oracle_judge(const std::vector<generation::SyntheticTriplet>& triplets) {
  auto positives = std::make_shared<std::set<std::string>>();
  for (const auto& t : triplets) positives->insert(t.positive_id);
  return judging::FunctionJudge("oracle", [positives](const std::string&, const corpus::FeatureBlock& a,
                                                      const corpus::FeatureBlock&, Rng&) {
    return positives->count(a.listing_id) ? Winner::A : Winner::B;
  });
}

judging::FunctionJudge coin_judge(const std::string& id) {
  return judging::FunctionJudge(id, [](const std::string&, const corpus::FeatureBlock&,
                                       const corpus::FeatureBlock&, Rng& rng) {
    return bernoulli(rng, 0.5) ? Winner::A : Winner::B;
  });
}

}  // namespace

TEST(SelfPreference, OracleCellsAreOne) {
  const auto& all = testsupport::fixture_triplets();
  std::vector<generation::SyntheticTriplet> g1(all.begin(), all.begin() + 100), g2(all.begin() + 100, all.begin() + 200);
  auto oracle = oracle_judge(all);
  auto rng = make_rng(1);
  auto m = judging::self_preference({{"gen-a", g1}, {"gen-b", g2}}, {&oracle}, testsupport::fixture_catalog(), rng);
  for (const auto& row : m.cells) {
    for (const auto& c : row) {
      EXPECT_DOUBLE_EQ(c.accuracy(), 1.0);
      EXPECT_FALSE(c.insufficient);
    }
  }
}

TEST(SelfPreference, CoinFlipNearHalf) {
  const auto& all = testsupport::fixture_triplets();
  std::vector<generation::SyntheticTriplet> big;
  while (big.size() < 2000) big.push_back(all[big.size() % all.size()]);
  auto coin = coin_judge("coin");
  auto rng = make_rng(2);
  auto m = judging::self_preference({{"gen", big}}, {&coin}, testsupport::fixture_catalog(), rng);
  EXPECT_NEAR(m.cells[0][0].accuracy(), 0.5, 0.05);
}

TEST(SelfPreference, MarkdownSchemaAndGapLine) {
  const auto& all = testsupport::fixture_triplets();
  std::vector<generation::SyntheticTriplet> g(all.begin(), all.begin() + 60);
  auto oracle = oracle_judge(all);
  auto self = judging::FunctionJudge("m1", [&](const std::string& q, const corpus::FeatureBlock& a,
                                               const corpus::FeatureBlock& b, Rng& rng) {
    return oracle.judge(q, a, b, rng).winner;
  });
  auto other = coin_judge("m2");
  auto rng = make_rng(3);
  auto m = judging::self_preference({{"m1", g}, {"m2", std::vector(all.begin(), all.begin() + 10)}},
                                    {&self, &other}, testsupport::fixture_catalog(), rng, 30);
  auto md = judging::to_markdown(m);
  EXPECT_NE(md.find("| Generator \\ Judge | m1 | m2 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| m1 | 1.000 |"), std::string::npos) << md;
  EXPECT_NE(md.find("insufficient (n=10)"), std::string::npos) << md;
  EXPECT_NE(md.find("Self-preference gap"), std::string::npos) << md;
  auto j = judging::to_json(m);
  EXPECT_EQ(j.at("cells").size(), 4u);
}

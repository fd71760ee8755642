#include <gtest/gtest.h>

#include <cctype>
#include <set>

#include "coldstart/evalharness.hpp"
#include "coldstart/generation.hpp"
#include "coldstart/text.hpp"
#include "support.hpp"

using namespace coldstart;
using generation::Violation;
using testsupport::make_context;
using testsupport::make_listing;

namespace {

using Codes = std::vector<Violation>;

Codes codes(const std::string& q, const corpus::SearchContext& ctx = make_context("Paris"),
            const std::unordered_set<std::string>* seen = nullptr) {
  return generation::validate_query(q, ctx, {3, 8}, seen).violations;
}

std::string answer(const std::string& query, std::vector<std::string> attrs = {"pool"}) {
  return llmio::serialize({"why", "[amenity]", query, std::move(attrs)});
}

// Independent normalization: keep letters, digits and single spaces.
std::string oracle_key(const std::string& s) {
  std::string out;
  bool space = false;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      if (space && !out.empty()) out += ' ';
      out += static_cast<char>(std::tolower(c));
      space = false;
    } else if (std::isspace(c)) {
      space = true;
    }
  }
  return out;
}

generation::SyntheticTriplet triplet_with(const std::string& query) {
  generation::SyntheticTriplet t;
  t.query = query;
  t.positive_id = "L1";
  t.negative_id = "L2";
  t.context = make_context();
  return t;
}

}  // namespace

TEST(Validate, AdversarialSuiteOneCodeEach) {
  std::unordered_set<std::string> seen = {text::dedup_key("cabin with pool near beach")};
  EXPECT_EQ(codes("superhost cabin with hot tub"), Codes{Violation::BLOCKLIST_TERM});
  EXPECT_EQ(codes("loft near the river in Paris"), Codes{Violation::LOCATION_ECHO});
  EXPECT_EQ(codes("cabin for 2 people with pool"), Codes{Violation::GUEST_COUNT_ECHO});
  EXPECT_EQ(codes("cabin with pool on June 12"), Codes{Violation::DATE_ECHO});
  EXPECT_EQ(codes("pet friendly cabin with yard"), Codes{Violation::PET_INCONSISTENT});
  EXPECT_EQ(codes("family-friendly cabin with pool"), Codes{Violation::FAMILY_INCONSISTENT});
  EXPECT_EQ(codes("cabin"), Codes{Violation::LENGTH_OUT_OF_BOUNDS});
  EXPECT_EQ(codes("Cabin with pool, near beach", make_context("Paris"), &seen), Codes{Violation::DUPLICATE});
}

TEST(Validate, ContextConsistencyExamples) {
  EXPECT_EQ(codes("pet friendly cabin", make_context("Denver", 2, 0, 0)), Codes{Violation::PET_INCONSISTENT});
  EXPECT_TRUE(codes("cozy cabin near ski resort", make_context("Denver", 2, 0, 0)).empty());
  EXPECT_EQ(codes("Entire home near lake", make_context("Denver", 2, 1, 1)), Codes{Violation::BLOCKLIST_TERM});
}

TEST(Validate, ContextAllowsWhatItPermits) {
  auto ctx = make_context("Denver", 2, 2, 1);
  EXPECT_TRUE(codes("pet friendly cabin with yard", ctx).empty());
  EXPECT_TRUE(codes("family-friendly cabin with pool", ctx).empty());
}

TEST(Validate, LocationPartsAndCase) {
  auto ctx = make_context("Austin, Texas");
  EXPECT_EQ(codes("ranch outside austin with pool", ctx), Codes{Violation::LOCATION_ECHO});
  EXPECT_EQ(codes("ranch in texas hill country", ctx), Codes{Violation::LOCATION_ECHO});
  EXPECT_TRUE(codes("ranch with pool near downtown", ctx).empty());
}

TEST(Validate, GuestAndDatePhrasings) {
  EXPECT_EQ(codes("villa for a group of six"), Codes{Violation::GUEST_COUNT_ECHO});
  EXPECT_EQ(codes("villa for four adults with pool"), Codes{Violation::GUEST_COUNT_ECHO});
  EXPECT_EQ(codes("villa with pool from 2025-06-12"), Codes{Violation::DATE_ECHO});
  EXPECT_EQ(codes("villa with pool 12 june"), Codes{Violation::DATE_ECHO});
  EXPECT_TRUE(codes("villa with 3 bedrooms and pool").empty());
  EXPECT_TRUE(codes("summer retreat with pool").empty());
}

TEST(Validate, DuplicateOnlyWithSeenSet) {
  EXPECT_TRUE(codes("cabin with pool near beach").empty());
}

TEST(GenerateTriplet, MockFixturePairAccepted) {
  llmio::BackendRegistry reg;
  reg.add(std::make_shared<llmio::MockBackend>());
  auto pairs = testsupport::fixture_pairs();
  for (std::size_t i = 0; i < 50; ++i) {
    auto out = generation::generate_triplet(pairs[i], std::nullopt,
                                            promptkit::PromptVariant::defaults(promptkit::VariantName::variety),
                                            "mock", reg, {});
    auto* t = std::get_if<generation::SyntheticTriplet>(&out);
    ASSERT_NE(t, nullptr);
    EXPECT_TRUE(generation::validate_query(t->query, t->context, {1, 15}).accepted());
    EXPECT_EQ(t->positive_id, pairs[i].positive.id);
    EXPECT_EQ(t->provenance.backend_id, "mock");
    EXPECT_FALSE(t->provenance.seed_query.has_value());
  }
}

TEST(GenerateTriplet, BlocklistViolationRetriedThenRejected) {
  std::vector<std::string> prompts;
  llmio::BackendRegistry reg;
  reg.add(std::make_shared<llmio::FunctionBackend>("stub", [&](const llmio::CompletionRequest& r) {
    prompts.push_back(r.prompt);
    return answer("superhost cabin with pool");
  }));
  auto pair = testsupport::make_pair(make_listing("L1"), make_listing("L2"));
  generation::GenerationSettings settings;
  settings.max_repairs = 2;
  auto out = generation::generate_triplet(pair, std::nullopt,
                                          promptkit::PromptVariant::defaults(promptkit::VariantName::variety),
                                          "stub", reg, settings);
  auto* rej = std::get_if<generation::Rejection>(&out);
  ASSERT_NE(rej, nullptr);
  EXPECT_EQ(rej->report.violations, Codes{Violation::BLOCKLIST_TERM});
  EXPECT_EQ(rej->attempts, 3);
  ASSERT_EQ(prompts.size(), 3u);
  EXPECT_NE(prompts[1].find("BLOCKLIST_TERM"), std::string::npos);
  EXPECT_EQ(prompts[0].find("BLOCKLIST_TERM"), std::string::npos);
}

TEST(GenerateTriplet, RepairSucceeds) {
  int calls = 0;
  llmio::BackendRegistry reg;
  reg.add(std::make_shared<llmio::FunctionBackend>("stub", [&](const llmio::CompletionRequest&) {
    return ++calls == 1 ? answer("loft in Paris with view") : answer("loft with rooftop view");
  }));
  auto pair = testsupport::make_pair(make_listing("L1"), make_listing("L2"), make_context("Paris"));
  auto out = generation::generate_triplet(pair, std::nullopt,
                                          promptkit::PromptVariant::defaults(promptkit::VariantName::variety),
                                          "stub", reg, {});
  auto* t = std::get_if<generation::SyntheticTriplet>(&out);
  ASSERT_NE(t, nullptr);
  EXPECT_EQ(t->query, "loft with rooftop view");
  EXPECT_EQ(t->provenance.attempts, 2);
}

TEST(GenerateTriplet, LocationEchoFromStub) {
  llmio::BackendRegistry reg;
  reg.add(std::make_shared<llmio::FunctionBackend>(
      "stub", [](const llmio::CompletionRequest&) { return answer("loft in Paris with view"); }));
  auto pair = testsupport::make_pair(make_listing("L1"), make_listing("L2"), make_context("Paris"));
  generation::GenerationSettings settings;
  settings.max_repairs = 0;
  auto out = generation::generate_triplet(pair, std::nullopt,
                                          promptkit::PromptVariant::defaults(promptkit::VariantName::variety),
                                          "stub", reg, settings);
  auto* rej = std::get_if<generation::Rejection>(&out);
  ASSERT_NE(rej, nullptr);
  EXPECT_EQ(rej->report.violations, Codes{Violation::LOCATION_ECHO});
}

TEST(GenerateTriplet, UnparsableAnswerRejectedWithReason) {
  llmio::BackendRegistry reg;
  reg.add(std::make_shared<llmio::FunctionBackend>("stub", [](const llmio::CompletionRequest&) {
    return std::string("I cannot help with that.");
  }));
  auto pair = testsupport::make_pair(make_listing("L1"), make_listing("L2"));
  auto out = generation::generate_triplet(pair, std::nullopt,
                                          promptkit::PromptVariant::defaults(promptkit::VariantName::variety),
                                          "stub", reg, {});
  auto* rej = std::get_if<generation::Rejection>(&out);
  ASSERT_NE(rej, nullptr);
  EXPECT_FALSE(rej->reason.empty());
}

TEST(Dedup, NormalizationCollision) {
  auto kept = generation::deduplicate({triplet_with("Pool near beach"), triplet_with("pool near beach!")});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].query, "Pool near beach");
}

TEST(Dedup, DistinctBatchUnchanged) {
  std::vector<generation::SyntheticTriplet> batch = {triplet_with("a b c"), triplet_with("a b d"),
                                                     triplet_with("x y z")};
  auto kept = generation::deduplicate(batch);
  ASSERT_EQ(kept.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(kept[i].query, batch[i].query);
}

TEST(Dedup, LargeBatchMatchesSetOracle) {
  static const std::vector<std::string> words = {"Pool", "beach", "cabin", "loft", "near", "with",
                                                 "hot-tub", "view", "quiet", "LAKE"};
  static const std::vector<std::string> punct = {"", "!", ",", ".", "  "};
  auto rng = make_rng(11);
  std::vector<generation::SyntheticTriplet> batch;
  std::set<std::string> oracle;
  for (int i = 0; i < 10000; ++i) {
    std::string q;
    int n = uniform_int(rng, 1, 4);
    for (int k = 0; k < n; ++k) {
      if (k) q += " ";
      q += words[uniform_index(rng, words.size())] + punct[uniform_index(rng, punct.size())];
    }
    batch.push_back(triplet_with(q));
    oracle.insert(oracle_key(q));
  }
  std::vector<generation::SyntheticTriplet> removed;
  auto kept = generation::deduplicate(batch, &removed);
  EXPECT_EQ(kept.size(), oracle.size());
  EXPECT_EQ(kept.size() + removed.size(), batch.size());
}

TEST(Counterfactual, ForcedAmenityRemoval) {
  auto pos = make_listing("L1", "cabin", {"pool", "wifi"});
  corpus::Catalog catalog({pos, make_listing("L2", "loft", {"wifi"})});
  auto t = triplet_with("cabin with pool");
  t.generation.key_attributes = {"pool"};
  auto rng = make_rng(1);
  auto r = generation::counterfactual_edit(t, catalog, rng);
  auto* ok = std::get_if<generation::CounterfactualResult>(&r);
  ASSERT_NE(ok, nullptr);
  EXPECT_EQ(ok->edited_negative.amenities, (std::vector<std::string>{"wifi"}));
  EXPECT_EQ(ok->triplet.negative_id, ok->edited_negative.id);
  EXPECT_EQ(ok->triplet.difficulty, sampling::Difficulty::hard);
  EXPECT_TRUE(ok->triplet.provenance.counterfactual);
  EXPECT_EQ(ok->triplet.provenance.source_negative_id, "L2");
}

TEST(Counterfactual, EmptyKeyAttributesRejected) {
  corpus::Catalog catalog({make_listing("L1"), make_listing("L2")});
  auto rng = make_rng(1);
  auto r = generation::counterfactual_edit(triplet_with("cabin with pool"), catalog, rng);
  EXPECT_TRUE(std::holds_alternative<generation::EditRejection>(r));
}

TEST(TripletJson, RoundTrip) {
  auto t = triplet_with("cabin with pool");
  t.generation = {"j", "t", "cabin with pool", {"pool"}};
  t.provenance.backend_id = "mock";
  t.provenance.seed_query = "loft with view";
  t.provenance.prompt_components = {{"core_assumption", "abc"}};
  t.provenance.timestamp = "2026-01-01";
  auto j = generation::to_json(t);
  EXPECT_EQ(j.at("purpose"), "training");
  EXPECT_EQ(generation::to_json(generation::triplet_from_json(j)), j);
}

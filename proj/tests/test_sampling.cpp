#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "coldstart/evalharness.hpp"
#include "coldstart/sampling.hpp"
#include "support.hpp"

using namespace coldstart;
using sampling::Difficulty;
using testsupport::make_context;
using testsupport::make_listing;

namespace {

sampling::ListingEmbedder hash_listing_embedder(std::size_t dim = 512) {
  return [dim](const corpus::Listing& l, const corpus::SearchContext& ctx) {
    return evalharness::hash_embed(corpus::render_feature_block(l, ctx, {}).rendered_text, dim).values;
  };
}

// Plain scalar loop, kept separate from the library's cosine.
double scalar_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return 1.0 - dot / std::sqrt(na * nb);
}

}  // namespace

TEST(Sampling, ForcedChoice) {
  corpus::Catalog catalog({make_listing("L1"), make_listing("L2")});
  corpus::SearchSession s{"S1", make_context(), {{"L1", 0.9, true}, {"L2", 0.1, false}}};
  auto rng = make_rng(1);
  auto r = sampling::sample_pair(s, catalog, rng);
  ASSERT_TRUE(r);
  EXPECT_EQ(r.pair->positive.id, "L1");
  EXPECT_EQ(r.pair->negative.id, "L2");
  EXPECT_EQ(r.pair->id(), "S1:L1>L2");
}

TEST(Sampling, NoBookingSkips) {
  corpus::Catalog catalog({make_listing("L1"), make_listing("L2")});
  corpus::SearchSession s{"S1", make_context(), {{"L1", 0.9, false}, {"L2", 0.1, false}}};
  auto rng = make_rng(1);
  auto r = sampling::sample_pair(s, catalog, rng);
  EXPECT_FALSE(r);
  EXPECT_EQ(r.skipped, sampling::SkipReason::no_booking);
}

TEST(Sampling, OnlyStrictlyLessEngagedNegatives) {
  corpus::Catalog catalog({make_listing("L1"), make_listing("L2"), make_listing("L3")});
  corpus::SearchSession s{"S1", make_context(), {{"L1", 0.5, true}, {"L2", 0.5, false}, {"L3", 0.9, false}}};
  auto rng = make_rng(1);
  auto r = sampling::sample_pair(s, catalog, rng);
  EXPECT_FALSE(r);
  EXPECT_EQ(r.skipped, sampling::SkipReason::no_eligible_negative);
}

TEST(Sampling, FixtureScanPositiveBookedNegativeNot) {
  const auto& catalog = testsupport::fixture_catalog();
  auto rng = make_rng(3);
  std::size_t pairs = 0;
  for (const auto& s : testsupport::fixture().sessions) {
    auto r = sampling::sample_pair(s, catalog, rng);
    if (!r) continue;
    ++pairs;
    bool pos_booked = false, neg_booked = true;
    for (const auto& imp : s.impressions) {
      if (imp.listing_id == r.pair->positive.id) pos_booked = imp.booked;
      if (imp.listing_id == r.pair->negative.id) neg_booked = imp.booked;
    }
    EXPECT_TRUE(pos_booked);
    EXPECT_FALSE(neg_booked);
  }
  EXPECT_GT(pairs, 500u);
}

TEST(Sampling, DeterministicGivenSeed) {
  const auto& s = testsupport::fixture().sessions.front();
  auto a = make_rng(9), b = make_rng(9);
  auto ra = sampling::sample_pair(s, testsupport::fixture_catalog(), a);
  auto rb = sampling::sample_pair(s, testsupport::fixture_catalog(), b);
  ASSERT_EQ(ra.pair.has_value(), rb.pair.has_value());
  if (ra) EXPECT_EQ(ra.pair->id(), rb.pair->id());
}

TEST(Sampling, SameCategoryTagsMedium) {
  for (const auto& p : testsupport::fixture_pairs(true)) {
    EXPECT_EQ(p.positive.category, p.negative.category);
    EXPECT_EQ(p.difficulty, Difficulty::medium);
  }
}

TEST(Hierarchical, NoOpBoundKeepsAll) {
  auto pairs = testsupport::fixture_pairs();
  auto kept = sampling::hierarchical_sample(pairs, hash_listing_embedder(), 2.0, false);
  EXPECT_EQ(kept.size(), pairs.size());
}

TEST(Hierarchical, IdenticalTextSurvivesTightBound) {
  auto l = make_listing("L1");
  auto twin = l;
  twin.id = "L2";
  // Same rendered text apart from nothing: ids are not rendered.
  auto kept = sampling::hierarchical_sample({testsupport::make_pair(l, twin)}, hash_listing_embedder(),
                                            0.01, false);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_NEAR(*kept[0].embedding_similarity, 1.0, 1e-12);
  EXPECT_EQ(kept[0].difficulty, Difficulty::hard);
}

TEST(Hierarchical, RetainedDistancesVerifiedIndependently) {
  auto pairs = testsupport::fixture_pairs();
  auto embed = hash_listing_embedder();
  const double tau = 0.3;
  auto kept = sampling::hierarchical_sample(pairs, embed, tau, false);
  std::set<std::string> input_ids;
  for (const auto& p : pairs) input_ids.insert(p.id());
  for (const auto& p : kept) {
    EXPECT_TRUE(input_ids.count(p.id()));
    double d = scalar_distance(embed(p.positive, p.context), embed(p.negative, p.context));
    EXPECT_LE(d, tau + 1e-12);
    EXPECT_LE(1.0 - *p.embedding_similarity, tau);
    EXPECT_EQ(p.difficulty, Difficulty::hard);
  }
  // Everything dropped really was outside the bound.
  std::set<std::string> kept_ids;
  for (const auto& p : kept) kept_ids.insert(p.id());
  for (const auto& p : pairs) {
    if (kept_ids.count(p.id())) continue;
    EXPECT_GT(scalar_distance(embed(p.positive, p.context), embed(p.negative, p.context)), tau - 1e-12);
  }
}

TEST(Hierarchical, RejectsNonPositiveTau) {
  EXPECT_THROW(sampling::hierarchical_sample({}, hash_listing_embedder(), 0.0, false), ArgumentError);
}

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <thread>

#include "coldstart/evalharness.hpp"
#include "support.hpp"

using namespace coldstart;
using evalharness::hash_embed;
using testsupport::make_context;

namespace {

double cos_text(const std::string& a, const std::string& b) {
  return evalharness::cosine(hash_embed(a, 512), hash_embed(b, 512));
}

corpus::Listing plain(const std::string& id, const std::string& title) {
  corpus::Listing l;
  l.id = id;
  l.title = title;
  l.property_type = "loft";
  return l;
}

generation::SyntheticTriplet triplet(const std::string& q, const std::string& pos, const std::string& neg,
                                     sampling::Difficulty d = sampling::Difficulty::easy) {
  generation::SyntheticTriplet t;
  t.query = q;
  t.positive_id = pos;
  t.negative_id = neg;
  t.context = make_context();
  t.difficulty = d;
  return t;
}

std::vector<generation::SyntheticTriplet> swapped(std::vector<generation::SyntheticTriplet> v) {
  for (auto& t : v) std::swap(t.positive_id, t.negative_id);
  return v;
}

}  // namespace

TEST(HashEmbed, DeterministicAndUnitNorm) {
  auto a = hash_embed("pool near beach", 512), b = hash_embed("pool near beach", 512);
  EXPECT_EQ(a.values, b.values);
  double norm = 0;
  for (double x : a.values) norm += x * x;
  EXPECT_NEAR(norm, 1.0, 1e-12);
}

TEST(HashEmbed, ScalingInvariance) {
  EXPECT_EQ(hash_embed("pool", 64).values, hash_embed("pool pool", 64).values);
}

TEST(HashEmbed, RelatedTextCloser) {
  EXPECT_GT(cos_text("pool near beach", "beach pool"), cos_text("pool near beach", "city loft parking"));
}

TEST(HashEmbed, SymmetricAndBounded) {
  auto rng = make_rng(1);
  static const std::vector<std::string> words = {"pool", "beach", "loft", "quiet", "view", "cabin", "lake"};
  for (int i = 0; i < 200; ++i) {
    std::string a = words[uniform_index(rng, 7)] + " " + words[uniform_index(rng, 7)];
    std::string b = words[uniform_index(rng, 7)];
    double ab = cos_text(a, b), ba = cos_text(b, a);
    EXPECT_EQ(ab, ba);
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(HashEmbed, RejectsBadInput) {
  EXPECT_THROW(hash_embed("pool", 8), ArgumentError);
  EXPECT_THROW(hash_embed(" ,, ", 64), ArgumentError);
}

TEST(PairwiseAccuracy, PlantedDisjointTokensScoreOne) {
  std::vector<corpus::Listing> listings;
  std::vector<generation::SyntheticTriplet> ts;
  for (int i = 0; i < 50; ++i) {
    std::string tok = "zq" + std::to_string(i) + "x";
    listings.push_back(plain("P" + std::to_string(i), tok + " " + tok + "y retreat"));
    listings.push_back(plain("N" + std::to_string(i), "ordinary apartment"));
    ts.push_back(triplet(tok + " " + tok + "y", "P" + std::to_string(i), "N" + std::to_string(i)));
  }
  corpus::Catalog catalog(listings);
  evalharness::HashEmbedder e(512);
  auto r = evalharness::pairwise_accuracy(ts, catalog, e);
  EXPECT_EQ(r.accuracy(), 1.0);
  EXPECT_EQ(r.embedder, "hash");
  EXPECT_EQ(r.dim, 512u);
}

TEST(PairwiseAccuracy, ShuffledLabelsNearHalf) {
  const auto& base = testsupport::fixture_triplets();
  auto rng = make_rng(21);
  std::vector<generation::SyntheticTriplet> ts;
  while (ts.size() < 2000) {
    auto t = base[ts.size() % base.size()];
    if (bernoulli(rng, 0.5)) std::swap(t.positive_id, t.negative_id);
    ts.push_back(t);
  }
  evalharness::HashEmbedder e;
  EXPECT_NEAR(evalharness::pairwise_accuracy(ts, testsupport::fixture_catalog(), e).accuracy(), 0.5, 0.05);
}

TEST(PairwiseAccuracy, SwapMapsToComplement) {
  const auto& ts = testsupport::fixture_triplets();
  evalharness::HashEmbedder e;
  auto a = evalharness::pairwise_accuracy(ts, testsupport::fixture_catalog(), e);
  auto b = evalharness::pairwise_accuracy(swapped(ts), testsupport::fixture_catalog(), e);
  EXPECT_EQ(a.overall.ties, b.overall.ties);
  EXPECT_EQ(a.overall.wins + b.overall.wins + a.overall.ties, a.overall.n);
  EXPECT_DOUBLE_EQ(b.accuracy(), 1.0 - a.accuracy());
}

TEST(PairwiseAccuracy, TiesCountHalf) {
  std::vector<evalharness::ScoredTriplet> s = {{0.5, 0.5, "easy", "v"}, {0.9, 0.1, "easy", "v"}};
  auto r = evalharness::accumulate(s);
  EXPECT_EQ(r.overall.ties, 1u);
  EXPECT_DOUBLE_EQ(r.accuracy(), 0.75);
}

TEST(PairwiseAccuracy, MonotoneRescalingInvariant) {
  auto scored = evalharness::score_triplets(testsupport::fixture_triplets(), testsupport::fixture_catalog(),
                                            *std::make_unique<evalharness::HashEmbedder>());
  auto rescaled = scored;
  for (auto& s : rescaled) {
    s.positive_score = std::exp(3 * s.positive_score);
    s.negative_score = std::exp(3 * s.negative_score);
  }
  EXPECT_EQ(evalharness::accumulate(scored).overall.wins, evalharness::accumulate(rescaled).overall.wins);
}

TEST(PairwiseAccuracy, HardSliceNoEasierThanEasy) {
  const auto& catalog = testsupport::fixture_catalog();
  auto embed = [](const corpus::Listing& l, const corpus::SearchContext& c) {
    return hash_embed(corpus::render_feature_block(l, c, {}).rendered_text, 512).values;
  };
  auto hard_pairs = sampling::hierarchical_sample(testsupport::fixture_pairs(true, 7), embed, 0.3, true);
  std::set<std::string> hard_ids;
  for (const auto& p : hard_pairs) hard_ids.insert(p.positive.id + ">" + p.negative.id);
  std::vector<generation::SyntheticTriplet> ts;
  for (const auto& t : testsupport::fixture_triplets()) {
    auto tt = t;
    tt.difficulty = sampling::Difficulty::easy;
    ts.push_back(tt);
  }
  // Re-generate queries for the hard pairs with the mock so they have real queries.
  llmio::BackendRegistry reg;
  reg.add(std::make_shared<llmio::MockBackend>());
  for (const auto& p : hard_pairs) {
    auto r = generation::generate_triplet(p, std::nullopt,
                                          promptkit::PromptVariant::defaults(promptkit::VariantName::variety),
                                          "mock", reg);
    if (auto* t = std::get_if<generation::SyntheticTriplet>(&r)) ts.push_back(*t);
  }
  evalharness::HashEmbedder e;
  auto r = evalharness::pairwise_accuracy(ts, catalog, e);
  ASSERT_GT(r.by_difficulty.at("hard").n, 30u);
  EXPECT_LE(r.by_difficulty.at("hard").accuracy(), r.by_difficulty.at("easy").accuracy());
}

TEST(PairwiseAccuracy, ResultSchema) {
  evalharness::HashEmbedder e(128);
  auto r = evalharness::pairwise_accuracy(testsupport::fixture_triplets(), testsupport::fixture_catalog(), e);
  auto j = evalharness::to_json(r, "fixture");
  for (const char* k : {"model", "size", "dataset", "accuracy", "slices"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j.at("size"), 128);
  EXPECT_THROW(evalharness::pairwise_accuracy({}, testsupport::fixture_catalog(), e), ArgumentError);
}

TEST(HttpEmbedder, ReadsVectorFromStubServer) {
  httplib::Server server;
  std::string seen;
  server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    seen = req.body;
    res.set_content(R"({"data":[{"embedding":[3.0, 4.0]}]})", "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  evalharness::HttpEmbedder e({"emb", "http://127.0.0.1:" + std::to_string(port) + "/embed", "m",
                               "/data/0/embedding", false, 5},
                              2);
  auto v = e.embed("pool");
  server.stop();
  t.join();
  EXPECT_NEAR(v.values[0], 0.6, 1e-12);
  EXPECT_NEAR(v.values[1], 0.8, 1e-12);
  EXPECT_EQ(nlohmann::json::parse(seen).at("input"), "pool");
}

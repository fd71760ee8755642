#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "coldstart/corpus.hpp"
#include "coldstart/generation.hpp"
#include "coldstart/llmio.hpp"
#include "coldstart/random.hpp"
#include "coldstart/sampling.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace coldstart;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("coldstart-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline corpus::Listing make_listing(const std::string& id, const std::string& property_type = "cabin",
                                    std::vector<std::string> amenities = {"pool", "wifi"},
                                    std::vector<std::string> locations = {"near beach"}) {
  corpus::Listing l;
  l.id = id;
  l.title = "Sunny " + property_type + " " + id;
  l.description = "A bright " + property_type + " with room to relax.";
  l.amenities = std::move(amenities);
  l.review_summary = "Guests liked the view";
  l.rating = 4.8;
  l.review_count = 120;
  l.bedrooms = 2;
  l.bathrooms = 1.5;
  l.property_type = property_type;
  l.location_attributes = std::move(locations);
  l.price_per_night = 180;
  l.category = "nature";
  return l;
}

inline corpus::SearchContext make_context(const std::string& location = "Paris", int adults = 2,
                                          int children = 0, int pets = 0) {
  return {location, "2025-06-12", "2025-06-15", adults, children, pets};
}

inline sampling::ContrastivePair make_pair(const corpus::Listing& pos, const corpus::Listing& neg,
                                           corpus::SearchContext ctx = make_context(),
                                           sampling::Difficulty d = sampling::Difficulty::easy) {
  sampling::ContrastivePair p;
  p.session_id = "S1";
  p.context = std::move(ctx);
  p.positive = pos;
  p.negative = neg;
  p.difficulty = d;
  return p;
}

// Shared fixture corpus: 500 listings, 1,000 sessions.
inline const corpus::Fixture& fixture() {
  static const corpus::Fixture fx = corpus::generate_fixture(42, 500, 1000);
  return fx;
}

inline const corpus::Catalog& fixture_catalog() {
  static const corpus::Catalog catalog(fixture().catalog);
  return catalog;
}

// Every pair the fixture sessions yield under one seeded draw.
inline std::vector<sampling::ContrastivePair> fixture_pairs(bool same_category = false,
                                                            std::uint64_t seed = 1) {
  Rng rng = make_rng(seed);
  std::vector<sampling::ContrastivePair> out;
  for (const auto& s : fixture().sessions) {
    auto r = sampling::sample_pair(s, fixture_catalog(), rng, same_category);
    if (r) out.push_back(*r.pair);
  }
  return out;
}

// Mock-generated triplets over the fixture, alternating difficulty tiers so
// both easy and medium pairs are present. Cached per process.
inline const std::vector<generation::SyntheticTriplet>& fixture_triplets() {
  static const std::vector<generation::SyntheticTriplet> out = [] {
    llmio::BackendRegistry reg;
    reg.add(std::make_shared<llmio::MockBackend>());
    std::vector<generation::SyntheticTriplet> v;
    std::vector<sampling::ContrastivePair> pairs;
    auto easy = fixture_pairs(false, 1);
    auto medium = fixture_pairs(true, 2);
    for (std::size_t i = 0; i < std::max(easy.size(), medium.size()); ++i) {
      if (i < easy.size()) pairs.push_back(easy[i]);
      if (i < medium.size()) pairs.push_back(medium[i]);
    }
    const auto& seeds = fixture().seed_queries;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      auto name = promptkit::all_variants()[i % 3];
      std::optional<corpus::SeedQuery> seed;
      if (name != promptkit::VariantName::variety) seed = seeds[i % seeds.size()];
      auto r = generation::generate_triplet(pairs[i], seed, promptkit::PromptVariant::defaults(name), "mock", reg);
      if (auto* t = std::get_if<generation::SyntheticTriplet>(&r)) v.push_back(*t);
    }
    return v;
  }();
  return out;
}

}  // namespace testsupport

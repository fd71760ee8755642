#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace coldstart::corpus {

using Json = nlohmann::json;

struct Listing {
  std::string id;
  std::string title;
  std::string description;
  std::vector<std::string> amenities;  // lowercase, deduplicated, most relevant first
  std::string review_summary;
  std::optional<double> rating;  // [0, 5]
  std::optional<int> review_count;
  std::optional<int> bedrooms;
  std::optional<double> bathrooms;
  std::string property_type;
  std::vector<std::string> location_attributes;
  std::optional<double> price_per_night;
  std::string category;

  bool operator==(const Listing&) const = default;
};

struct SearchContext {
  std::string location;
  std::string checkin;   // YYYY-MM-DD
  std::string checkout;  // YYYY-MM-DD, strictly after checkin
  int adults = 1;
  int children = 0;
  int pets = 0;

  int guests() const { return adults + children; }
  bool operator==(const SearchContext&) const = default;
};

struct Impression {
  std::string listing_id;
  double engagement_score = 0;
  bool booked = false;

  bool operator==(const Impression&) const = default;
};

struct SearchSession {
  std::string session_id;
  SearchContext context;
  std::vector<Impression> impressions;

  const Impression* booked() const;
  bool operator==(const SearchSession&) const = default;
};

enum class SeedSource { survey, real_traffic, related_product };

struct SeedQuery {
  std::string text;
  SeedSource source = SeedSource::survey;
  std::optional<std::vector<std::string>> attributes_hint;

  bool operator==(const SeedQuery&) const = default;
};

struct FeatureBlock {
  std::string listing_id;
  std::string rendered_text;
  bool truncation_applied = false;
};

struct FeatureLimits {
  std::size_t description_chars = 600;
  std::size_t top_amenities = 10;
};

// Validation. Each throws ValidationError describing the first violation.
void validate(const Listing& l);
void validate(const SearchContext& c);
// Returns warnings for soft invariants (booked listing not the most engaged).
std::vector<std::string> validate(const SearchSession& s);
void validate(const SeedQuery& q);

Json to_json(const Listing& l);
Json to_json(const SearchContext& c);
Json to_json(const SearchSession& s);
Json to_json(const SeedQuery& q);
Listing listing_from_json(const Json& j);
SearchContext context_from_json(const Json& j);
SearchSession session_from_json(const Json& j);
SeedQuery seed_from_json(const Json& j);

std::string to_string(SeedSource s);
SeedSource seed_source_from_string(const std::string& s);

// Immutable id -> listing index over a loaded catalog.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<Listing> listings);

  const std::vector<Listing>& listings() const { return listings_; }
  const Listing* find(const std::string& id) const;
  const Listing& at(const std::string& id) const;
  std::size_t size() const { return listings_.size(); }

 private:
  std::vector<Listing> listings_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<Listing> load_catalog(const std::string& path);
std::vector<SearchSession> load_sessions(const std::string& path,
                                         std::vector<std::string>* warnings = nullptr);
std::vector<SeedQuery> load_seed_queries(const std::string& path);

void save_catalog(const std::string& path, const std::vector<Listing>& listings);
void save_sessions(const std::string& path, const std::vector<SearchSession>& sessions);
void save_seed_queries(const std::string& path, const std::vector<SeedQuery>& seeds);

struct Fixture {
  std::vector<Listing> catalog;
  std::vector<SearchSession> sessions;
  std::vector<SeedQuery> seed_queries;
};

// Deterministic synthetic corpus standing in for proprietary logs. Pure
// function of its arguments.
Fixture generate_fixture(std::uint64_t seed, int n_listings, int n_sessions, int n_seeds = 500);

// Terse queries shaped like production traffic, for warm-start comparisons.
std::vector<SeedQuery> generate_real_queries(std::uint64_t seed, int n);

FeatureBlock render_feature_block(const Listing& listing, const SearchContext& context,
                                  const FeatureLimits& limits);

// Fixed labels emitted by render_feature_block, in render order.
const std::vector<std::string>& feature_block_labels();

}  // namespace coldstart::corpus

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "coldstart/corpus.hpp"
#include "coldstart/random.hpp"

namespace coldstart::sampling {

// easy: random less-engaged negative; medium: same-category negative;
// hard: same-category and within an embedding-distance bound.
enum class Difficulty { easy, medium, hard };

std::string to_string(Difficulty d);
Difficulty difficulty_from_string(const std::string& s);

struct ContrastivePair {
  std::string session_id;
  corpus::SearchContext context;
  corpus::Listing positive;
  corpus::Listing negative;
  Difficulty difficulty = Difficulty::easy;
  std::optional<double> embedding_similarity;

  std::string id() const;
};

enum class SkipReason { no_booking, no_eligible_negative, unresolved_listing };

std::string to_string(SkipReason r);

struct SampleResult {
  std::optional<ContrastivePair> pair;
  std::optional<SkipReason> skipped;

  explicit operator bool() const { return pair.has_value(); }
};

// Positive is the booked impression; the negative is drawn uniformly from
// non-booked impressions with strictly lower engagement. With
// same_category set, only negatives sharing the positive's category are
// eligible and the pair is tagged medium.
SampleResult sample_pair(const corpus::SearchSession& session, const corpus::Catalog& catalog,
                         Rng& rng, bool same_category = false);

// Maps a listing (in its search context) to a unit-norm embedding.
using ListingEmbedder =
    std::function<std::vector<double>(const corpus::Listing&, const corpus::SearchContext&)>;

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Keeps pairs whose positive/negative cosine distance is <= tau (and, if
// same_category, whose categories match). Survivors are tagged hard.
std::vector<ContrastivePair> hierarchical_sample(const std::vector<ContrastivePair>& pairs,
                                                 const ListingEmbedder& embedder, double tau,
                                                 bool same_category);

nlohmann::json to_json(const ContrastivePair& p);

}  // namespace coldstart::sampling

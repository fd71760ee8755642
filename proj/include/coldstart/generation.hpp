#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "coldstart/corpus.hpp"
#include "coldstart/llmio.hpp"
#include "coldstart/promptkit.hpp"
#include "coldstart/random.hpp"
#include "coldstart/sampling.hpp"

namespace coldstart::generation {

enum class Violation {
  BLOCKLIST_TERM,
  LOCATION_ECHO,
  GUEST_COUNT_ECHO,
  DATE_ECHO,
  PET_INCONSISTENT,
  FAMILY_INCONSISTENT,
  LENGTH_OUT_OF_BOUNDS,
  DUPLICATE,
};

std::string to_string(Violation v);
Violation violation_from_string(const std::string& s);

struct LengthBounds {
  int min_words = 3;
  int max_words = 8;
};

struct ValidationReport {
  std::string query;
  std::vector<Violation> violations;  // ordered by enum value, no repeats

  bool accepted() const { return violations.empty(); }
  std::vector<std::string> codes() const;
};

// `seen` holds dedup keys of queries already accepted; DUPLICATE is only
// checked when it is supplied.
ValidationReport validate_query(const std::string& query, const corpus::SearchContext& context,
                                LengthBounds bounds,
                                const std::unordered_set<std::string>* seen = nullptr);

struct Provenance {
  std::string backend_id;
  std::optional<std::string> seed_query;
  std::map<std::string, std::string> prompt_components;  // id -> content hash
  std::vector<std::string> authored_components;
  std::string timestamp;
  int attempts = 1;
  bool counterfactual = false;
  std::optional<std::string> source_negative_id;  // set on counterfactuals
};

struct SyntheticTriplet {
  std::string query;
  std::string positive_id;
  std::string negative_id;
  corpus::SearchContext context;
  promptkit::VariantName variant = promptkit::VariantName::seed_controlled;
  sampling::Difficulty difficulty = sampling::Difficulty::easy;
  llmio::GenerationOutput generation;
  Provenance provenance;
};

struct Rejection {
  std::string pair_ref;
  promptkit::VariantName variant = promptkit::VariantName::seed_controlled;
  ValidationReport report;
  std::string reason;  // parse failures and other non-rule causes
  int attempts = 0;
};

using TripletOutcome = std::variant<SyntheticTriplet, Rejection>;

struct GenerationSettings {
  int max_repairs = 2;  // retries after the first attempt
  int max_tokens = 256;
  std::string timestamp;
  corpus::FeatureLimits feature_limits;
  const promptkit::PromptLibrary* prompts = nullptr;  // builtin when null
};

// Renders the prompt, calls the backend, parses and validates. A violating
// or unparsable answer is retried with a repair suffix naming the failure;
// after max_repairs retries the last report is returned as a Rejection.
// Backend errors propagate.
TripletOutcome generate_triplet(const sampling::ContrastivePair& pair,
                                const std::optional<corpus::SeedQuery>& seed,
                                const promptkit::PromptVariant& variant,
                                const std::string& backend_id, llmio::BackendRegistry& backends,
                                const GenerationSettings& settings = {});

// Drops later triplets whose normalized query repeats an earlier one.
std::vector<SyntheticTriplet> deduplicate(const std::vector<SyntheticTriplet>& batch,
                                          std::vector<SyntheticTriplet>* removed = nullptr);

struct CounterfactualResult {
  SyntheticTriplet triplet;
  corpus::Listing edited_negative;
};

struct EditRejection {
  std::string reason;
};

// New negative = copy of the positive with one key attribute removed
// (amenity) or substituted (location, property type).
std::variant<CounterfactualResult, EditRejection> counterfactual_edit(
    const SyntheticTriplet& triplet, const corpus::Catalog& catalog, Rng& rng);

nlohmann::json to_json(const SyntheticTriplet& t);
SyntheticTriplet triplet_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Rejection& r);

std::vector<SyntheticTriplet> load_triplets(const std::string& path);
void save_triplets(const std::string& path, const std::vector<SyntheticTriplet>& triplets);

}  // namespace coldstart::generation

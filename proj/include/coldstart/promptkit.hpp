#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coldstart/corpus.hpp"
#include "coldstart/sampling.hpp"

namespace coldstart::promptkit {

enum class VariantName { seed_controlled, seed_freeform, variety };

std::string to_string(VariantName v);
VariantName variant_from_string(const std::string& s);
const std::vector<VariantName>& all_variants();

struct PromptVariant {
  VariantName name = VariantName::seed_controlled;
  double temperature = 0.3;
  int min_words = 3;
  int max_words = 8;

  bool needs_seed() const { return name != VariantName::variety; }
  static PromptVariant defaults(VariantName name);
};

// The five components every generation prompt carries exactly once.
const std::vector<std::string>& core_component_ids();

const std::vector<std::string>& platform_terms();

struct RenderedPrompt {
  std::string text;
  VariantName variant = VariantName::seed_controlled;
  std::vector<std::string> component_ids;
  std::string pair_ref;
  std::optional<std::string> seed_ref;
  // component id -> short content hash, for provenance
  std::map<std::string, std::string> component_hashes;
  // Components whose wording is ours rather than a published template.
  std::vector<std::string> authored_components;
};

// Prompt components keyed by file stem. The built-in library is compiled
// from the repository's prompts/ directory; from_directory() overrides it at
// runtime so wording can be edited without rebuilding.
class PromptLibrary {
 public:
  static const PromptLibrary& builtin();
  static PromptLibrary from_directory(const std::string& dir);

  const std::string& component(const std::string& id) const;
  std::string hash(const std::string& id) const;
  const std::map<std::string, std::string>& components() const { return components_; }

 private:
  explicit PromptLibrary(std::map<std::string, std::string> components);
  std::map<std::string, std::string> components_;
};

// Replaces {name} placeholders in a single pass; substituted values are not
// rescanned.
std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& values);

RenderedPrompt render_prompt(const PromptLibrary& lib, const PromptVariant& variant,
                             const sampling::ContrastivePair& pair,
                             const corpus::FeatureBlock& positive_block,
                             const corpus::FeatureBlock& negative_block,
                             const std::optional<corpus::SeedQuery>& seed,
                             sampling::Difficulty difficulty);

RenderedPrompt render_prompt(const PromptVariant& variant, const sampling::ContrastivePair& pair,
                             const corpus::FeatureBlock& positive_block,
                             const corpus::FeatureBlock& negative_block,
                             const std::optional<corpus::SeedQuery>& seed,
                             sampling::Difficulty difficulty);

std::string render_judge_prompt(const PromptLibrary& lib, const std::string& query,
                                const std::string& listing_a, const std::string& listing_b);

std::string render_repair_suffix(const PromptLibrary& lib,
                                 const std::vector<std::string>& violations);

namespace detail {
const std::map<std::string, std::string>& embedded_components();
}

}  // namespace coldstart::promptkit

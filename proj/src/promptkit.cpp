#include "coldstart/promptkit.hpp"

#include <filesystem>

#include "coldstart/errors.hpp"
#include "coldstart/hashing.hpp"
#include "coldstart/jsonl.hpp"
#include "coldstart/text.hpp"

namespace coldstart::promptkit {

namespace fs = std::filesystem;

std::string to_string(VariantName v) {
  switch (v) {
    case VariantName::seed_controlled: return "seed_controlled";
    case VariantName::seed_freeform: return "seed_freeform";
    case VariantName::variety: return "variety";
  }
  return "variety";
}

VariantName variant_from_string(const std::string& s) {
  for (auto v : all_variants()) {
    if (to_string(v) == s) return v;
  }
  throw ArgumentError("unknown prompt variant: " + s);
}

const std::vector<VariantName>& all_variants() {
  static const std::vector<VariantName> v = {VariantName::seed_controlled,
                                             VariantName::seed_freeform, VariantName::variety};
  return v;
}

PromptVariant PromptVariant::defaults(VariantName name) {
  switch (name) {
    case VariantName::seed_controlled: return {name, 0.3, 3, 8};
    case VariantName::seed_freeform: return {name, 0.7, 3, 8};
    case VariantName::variety: return {name, 1.0, 1, 15};
  }
  return {};
}

const std::vector<std::string>& core_component_ids() {
  static const std::vector<std::string> ids = {"core_assumption", "platform_terms",
                                               "context_dedup", "consistency", "output_format"};
  return ids;
}

const std::vector<std::string>& platform_terms() {
  static const std::vector<std::string> terms = {
      "entire home", "private room", "superhost", "guest favorite",
      "badge",       "airbnb",       "listing",   "instant book"};
  return terms;
}

PromptLibrary::PromptLibrary(std::map<std::string, std::string> components)
    : components_(std::move(components)) {}

const PromptLibrary& PromptLibrary::builtin() {
  static const PromptLibrary lib(detail::embedded_components());
  return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("prompt directory not found: " + dir);
  // Start from the built-ins so a directory may override a subset.
  auto components = detail::embedded_components();
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    components[entry.path().stem().string()] = jsonl::read_text(entry.path().string());
  }
  return PromptLibrary(std::move(components));
}

const std::string& PromptLibrary::component(const std::string& id) const {
  auto it = components_.find(id);
  if (it == components_.end()) throw ConfigError("missing prompt component: " + id);
  return it->second;
}

std::string PromptLibrary::hash(const std::string& id) const { return short_hash(component(id)); }

std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string::npos) {
        auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

namespace {

std::string block(const std::string& s) {
  // Components are separated by exactly one blank line.
  auto t = s;
  while (!t.empty() && (t.back() == '\n' || t.back() == '\r')) t.pop_back();
  return t + "\n\n";
}

std::string variant_component(VariantName v) { return "variant_" + to_string(v); }

}  // namespace

RenderedPrompt render_prompt(const PromptLibrary& lib, const PromptVariant& variant,
                             const sampling::ContrastivePair& pair,
                             const corpus::FeatureBlock& positive_block,
                             const corpus::FeatureBlock& negative_block,
                             const std::optional<corpus::SeedQuery>& seed,
                             sampling::Difficulty difficulty) {
  if (variant.needs_seed() && !seed) {
    throw ArgumentError("variant " + to_string(variant.name) + " requires a seed query");
  }
  if (variant.min_words < 1 || variant.max_words < variant.min_words) {
    throw ArgumentError("invalid length bounds for variant " + to_string(variant.name));
  }
  if (positive_block.listing_id != pair.positive.id ||
      negative_block.listing_id != pair.negative.id) {
    throw ArgumentError("feature blocks do not match the pair's listings");
  }

  RenderedPrompt out;
  out.variant = variant.name;
  out.pair_ref = pair.id();
  auto use = [&](const std::string& id, const std::string& rendered) {
    out.text += block(rendered);
    out.component_ids.push_back(id);
    out.component_hashes[id] = lib.hash(id);
  };

  use("core_assumption", lib.component("core_assumption"));
  out.text += block("Listing 1:\n" + positive_block.rendered_text);
  out.text += block("Listing 2:\n" + negative_block.rendered_text);

  std::map<std::string, std::string> values = {
      {"min_words", std::to_string(variant.min_words)},
      {"max_words", std::to_string(variant.max_words)}};
  // Baseline runs render the variety wording, which takes no seed.
  if (seed && variant.needs_seed()) {
    values["seed_query"] = seed->text;
    out.seed_ref = seed->text;
  }
  auto vid = variant_component(variant.name);
  use(vid, fill(lib.component(vid), values));
  out.authored_components.push_back(vid);

  use("platform_terms", lib.component("platform_terms"));
  use("context_dedup", lib.component("context_dedup"));
  use("consistency", lib.component("consistency"));
  if (difficulty == sampling::Difficulty::hard) {
    use("hard_guardrails", lib.component("hard_guardrails"));
    out.authored_components.push_back("hard_guardrails");
  }
  use("output_format", lib.component("output_format"));

  while (!out.text.empty() && out.text.back() == '\n') out.text.pop_back();
  out.text.push_back('\n');
  return out;
}

RenderedPrompt render_prompt(const PromptVariant& variant, const sampling::ContrastivePair& pair,
                             const corpus::FeatureBlock& positive_block,
                             const corpus::FeatureBlock& negative_block,
                             const std::optional<corpus::SeedQuery>& seed,
                             sampling::Difficulty difficulty) {
  return render_prompt(PromptLibrary::builtin(), variant, pair, positive_block, negative_block,
                       seed, difficulty);
}

std::string render_judge_prompt(const PromptLibrary& lib, const std::string& query,
                                const std::string& listing_a, const std::string& listing_b) {
  auto strip = [](std::string s) {
    while (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
  };
  return fill(lib.component("judge"),
              {{"query", query}, {"listing_a", strip(listing_a)}, {"listing_b", strip(listing_b)}});
}

std::string render_repair_suffix(const PromptLibrary& lib,
                                 const std::vector<std::string>& violations) {
  return fill(lib.component("repair"), {{"violations", text::join(violations, ", ")}});
}

}  // namespace coldstart::promptkit

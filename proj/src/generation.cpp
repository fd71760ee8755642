#include "coldstart/generation.hpp"

#include <algorithm>
#include <regex>

#include <fmt/format.h>

#include "coldstart/errors.hpp"
#include "coldstart/hashing.hpp"
#include "coldstart/jsonl.hpp"
#include "coldstart/lexicon.hpp"
#include "coldstart/text.hpp"

namespace coldstart::generation {

using Json = nlohmann::json;

namespace {
constexpr std::pair<Violation, const char*> kViolationNames[] = {
    {Violation::BLOCKLIST_TERM, "BLOCKLIST_TERM"},
    {Violation::LOCATION_ECHO, "LOCATION_ECHO"},
    {Violation::GUEST_COUNT_ECHO, "GUEST_COUNT_ECHO"},
    {Violation::DATE_ECHO, "DATE_ECHO"},
    {Violation::PET_INCONSISTENT, "PET_INCONSISTENT"},
    {Violation::FAMILY_INCONSISTENT, "FAMILY_INCONSISTENT"},
    {Violation::LENGTH_OUT_OF_BOUNDS, "LENGTH_OUT_OF_BOUNDS"},
    {Violation::DUPLICATE, "DUPLICATE"},
};

const std::string kCount = "(\\d+|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve)";

const std::regex& guest_count_re() {
  static const std::regex re(
      "\\b" + kCount +
          "\\s+(people|persons|guests|adults|children|kids|travelers|travellers|pax)\\b"
          "|\\b(party|group|family)\\s+of\\s+" + kCount + "\\b",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& date_re() {
  static const std::string month =
      "(jan(uary)?|feb(ruary)?|mar(ch)?|apr(il)?|may|june?|july?|aug(ust)?|"
      "sep(t(ember)?)?|oct(ober)?|nov(ember)?|dec(ember)?)";
  static const std::regex re(
      "\\b\\d{4}-\\d{2}-\\d{2}\\b"
      "|\\b" + month + "\\.?\\s+\\d{1,2}(st|nd|rd|th)?\\b"
      "|\\b\\d{1,2}(st|nd|rd|th)?\\s+(of\\s+)?" + month + "\\b",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

bool mentions_any(const std::string& query, std::initializer_list<const char*> phrases) {
  for (const char* p : phrases) {
    if (text::contains_ci(query, p)) return true;
  }
  return false;
}

}  // namespace

std::string to_string(Violation v) {
  for (const auto& [value, name] : kViolationNames) {
    if (value == v) return name;
  }
  return "UNKNOWN";
}

Violation violation_from_string(const std::string& s) {
  for (const auto& [value, name] : kViolationNames) {
    if (s == name) return value;
  }
  throw ArgumentError("unknown violation code: " + s);
}

std::vector<std::string> ValidationReport::codes() const {
  std::vector<std::string> out;
  for (auto v : violations) out.push_back(to_string(v));
  return out;
}

ValidationReport validate_query(const std::string& query, const corpus::SearchContext& context,
                                LengthBounds bounds,
                                const std::unordered_set<std::string>* seen) {
  ValidationReport report{query, {}};
  auto flag = [&](Violation v) { report.violations.push_back(v); };
  const auto tokens = text::tokenize(query);

  for (const auto& term : promptkit::platform_terms()) {
    if (text::contains_ci(query, term)) {
      flag(Violation::BLOCKLIST_TERM);
      break;
    }
  }

  // The whole location string and each comma-separated part (city, state).
  std::vector<std::vector<std::string>> places = {text::tokenize(context.location)};
  for (const auto& part : text::split(context.location, ',')) places.push_back(text::tokenize(part));
  if (std::any_of(places.begin(), places.end(),
                  [&](const auto& p) { return text::contains_token_run(tokens, p); })) {
    flag(Violation::LOCATION_ECHO);
  }

  if (std::regex_search(query, guest_count_re())) flag(Violation::GUEST_COUNT_ECHO);
  if (std::regex_search(query, date_re())) flag(Violation::DATE_ECHO);
  if (context.pets == 0 && mentions_any(query, {"pet-friendly", "pet friendly"})) {
    flag(Violation::PET_INCONSISTENT);
  }
  if (context.children == 0 &&
      mentions_any(query, {"family-friendly", "family friendly", "kid friendly", "kid-friendly"})) {
    flag(Violation::FAMILY_INCONSISTENT);
  }
  auto n = static_cast<int>(tokens.size());
  if (n < bounds.min_words || n > bounds.max_words) flag(Violation::LENGTH_OUT_OF_BOUNDS);
  if (seen && seen->count(text::dedup_key(query))) flag(Violation::DUPLICATE);
  return report;
}

TripletOutcome generate_triplet(const sampling::ContrastivePair& pair,
                                const std::optional<corpus::SeedQuery>& seed,
                                const promptkit::PromptVariant& variant,
                                const std::string& backend_id, llmio::BackendRegistry& backends,
                                const GenerationSettings& settings) {
  const auto& lib = settings.prompts ? *settings.prompts : promptkit::PromptLibrary::builtin();
  auto pos_block = corpus::render_feature_block(pair.positive, pair.context, settings.feature_limits);
  auto neg_block = corpus::render_feature_block(pair.negative, pair.context, settings.feature_limits);
  auto prompt = promptkit::render_prompt(lib, variant, pair, pos_block, neg_block, seed,
                                         pair.difficulty);
  const LengthBounds bounds{variant.min_words, variant.max_words};

  Rejection rejection{pair.id(), variant.name, {}, {}, 0};
  std::string repair;
  for (int attempt = 1; attempt <= settings.max_repairs + 1; ++attempt) {
    llmio::CompletionRequest req{prompt.text + (repair.empty() ? "" : "\n" + repair),
                                 variant.temperature, settings.max_tokens, backend_id};
    auto completion = backends.complete(req);
    rejection.attempts = attempt;

    llmio::GenerationOutput out;
    try {
      out = llmio::parse_generation(completion.text);
    } catch (const ParseError& e) {
      rejection.reason = e.what();
      rejection.report = {};
      repair = promptkit::render_repair_suffix(lib, {"output format (return ONLY valid JSON)"});
      continue;
    } catch (const SchemaError& e) {
      rejection.reason = e.what();
      rejection.report = {};
      repair = promptkit::render_repair_suffix(lib, {"output format (missing " + e.field() + ")"});
      continue;
    }

    auto report = validate_query(out.query, pair.context, bounds);
    if (report.accepted()) {
      SyntheticTriplet t;
      t.query = out.query;
      t.positive_id = pair.positive.id;
      t.negative_id = pair.negative.id;
      t.context = pair.context;
      t.variant = variant.name;
      t.difficulty = pair.difficulty;
      t.generation = std::move(out);
      t.provenance.backend_id = backend_id;
      t.provenance.seed_query = prompt.seed_ref;
      t.provenance.prompt_components = prompt.component_hashes;
      t.provenance.authored_components = prompt.authored_components;
      t.provenance.timestamp = settings.timestamp;
      t.provenance.attempts = attempt;
      return t;
    }
    rejection.reason.clear();
    rejection.report = report;
    repair = promptkit::render_repair_suffix(lib, report.codes());
  }
  return rejection;
}

std::vector<SyntheticTriplet> deduplicate(const std::vector<SyntheticTriplet>& batch,
                                          std::vector<SyntheticTriplet>* removed) {
  std::unordered_set<std::string> seen;
  std::vector<SyntheticTriplet> out;
  for (const auto& t : batch) {
    if (seen.insert(text::dedup_key(t.query)).second) {
      out.push_back(t);
    } else if (removed) {
      removed->push_back(t);
    }
  }
  return out;
}

std::variant<CounterfactualResult, EditRejection> counterfactual_edit(
    const SyntheticTriplet& triplet, const corpus::Catalog& catalog, Rng& rng) {
  if (triplet.generation.key_attributes.empty()) return EditRejection{"no key attributes"};
  const auto* positive = catalog.find(triplet.positive_id);
  if (!positive) throw ArgumentError("counterfactual_edit: unknown positive " + triplet.positive_id);
  if (!catalog.find(triplet.negative_id)) {
    throw ArgumentError("counterfactual_edit: unknown negative " + triplet.negative_id);
  }

  struct Edit {
    enum Kind { remove_amenity, swap_location, swap_property } kind;
    std::string attribute;
  };
  std::vector<Edit> mentioned, other;
  const auto q_tokens = text::tokenize(triplet.query);
  for (const auto& raw : triplet.generation.key_attributes) {
    auto attr = text::to_lower(text::trim(raw));
    std::optional<Edit> e;
    if (std::find(positive->amenities.begin(), positive->amenities.end(), attr) !=
        positive->amenities.end()) {
      e = Edit{Edit::remove_amenity, attr};
    } else if (std::find(positive->location_attributes.begin(),
                         positive->location_attributes.end(),
                         attr) != positive->location_attributes.end()) {
      e = Edit{Edit::swap_location, attr};
    } else if (attr == positive->property_type) {
      e = Edit{Edit::swap_property, attr};
    }
    if (!e) continue;
    (text::contains_token_run(q_tokens, text::tokenize(attr)) ? mentioned : other).push_back(*e);
  }
  auto& pool = mentioned.empty() ? other : mentioned;
  if (pool.empty()) return EditRejection{"no key attribute is editable on the positive listing"};
  const Edit edit = pool[uniform_index(rng, pool.size())];

  corpus::Listing edited = *positive;
  switch (edit.kind) {
    case Edit::remove_amenity:
      std::erase(edited.amenities, edit.attribute);
      break;
    case Edit::swap_location: {
      std::vector<std::string> choices;
      for (const auto& loc : lexicon::location_phrases()) {
        if (std::find(edited.location_attributes.begin(), edited.location_attributes.end(), loc) ==
            edited.location_attributes.end()) {
          choices.push_back(loc);
        }
      }
      std::replace(edited.location_attributes.begin(), edited.location_attributes.end(),
                   edit.attribute, choices[uniform_index(rng, choices.size())]);
      break;
    }
    case Edit::swap_property: {
      std::vector<std::string> choices;
      for (const auto& p : lexicon::property_types()) {
        if (p != edited.property_type) choices.push_back(p);
      }
      edited.property_type = choices[uniform_index(rng, choices.size())];
      break;
    }
  }
  edited.id = fmt::format("{}-cf-{:08x}", positive->id,
                          static_cast<std::uint32_t>(fnv1a64(triplet.query + "|" + edit.attribute)));

  CounterfactualResult result{triplet, edited};
  result.triplet.negative_id = edited.id;
  result.triplet.difficulty = sampling::Difficulty::hard;
  result.triplet.provenance.counterfactual = true;
  result.triplet.provenance.source_negative_id = triplet.negative_id;
  return result;
}

Json to_json(const SyntheticTriplet& t) {
  Json prov = {{"backend_id", t.provenance.backend_id},
               {"seed_query", t.provenance.seed_query ? Json(*t.provenance.seed_query) : Json()},
               {"prompt_components", t.provenance.prompt_components},
               {"authored_components", t.provenance.authored_components},
               {"timestamp", t.provenance.timestamp},
               {"attempts", t.provenance.attempts},
               {"counterfactual", t.provenance.counterfactual}};
  if (t.provenance.source_negative_id) prov["source_negative_id"] = *t.provenance.source_negative_id;
  return {{"query", t.query},
          {"positive_id", t.positive_id},
          {"negative_id", t.negative_id},
          {"context", corpus::to_json(t.context)},
          {"variant", promptkit::to_string(t.variant)},
          {"difficulty", sampling::to_string(t.difficulty)},
          {"purpose", "training"},
          {"generation", llmio::to_json(t.generation)},
          {"provenance", prov}};
}

SyntheticTriplet triplet_from_json(const Json& j) {
  SyntheticTriplet t;
  t.query = j.at("query").get<std::string>();
  t.positive_id = j.at("positive_id").get<std::string>();
  t.negative_id = j.at("negative_id").get<std::string>();
  t.context = corpus::context_from_json(j.at("context"));
  t.variant = promptkit::variant_from_string(j.at("variant").get<std::string>());
  t.difficulty = sampling::difficulty_from_string(j.at("difficulty").get<std::string>());
  if (auto g = j.find("generation"); g != j.end()) {
    t.generation = llmio::parse_generation(g->dump());
  } else {
    t.generation.query = t.query;
  }
  if (auto p = j.find("provenance"); p != j.end()) {
    t.provenance.backend_id = p->value("backend_id", "");
    if (auto s = p->find("seed_query"); s != p->end() && s->is_string()) {
      t.provenance.seed_query = s->get<std::string>();
    }
    t.provenance.prompt_components =
        p->value("prompt_components", std::map<std::string, std::string>{});
    t.provenance.authored_components =
        p->value("authored_components", std::vector<std::string>{});
    t.provenance.timestamp = p->value("timestamp", "");
    t.provenance.attempts = p->value("attempts", 1);
    t.provenance.counterfactual = p->value("counterfactual", false);
    if (auto s = p->find("source_negative_id"); s != p->end() && s->is_string()) {
      t.provenance.source_negative_id = s->get<std::string>();
    }
  }
  return t;
}

Json to_json(const Rejection& r) {
  return {{"pair_ref", r.pair_ref},
          {"variant", promptkit::to_string(r.variant)},
          {"query", r.report.query},
          {"violations", r.report.codes()},
          {"reason", r.reason},
          {"attempts", r.attempts}};
}

std::vector<SyntheticTriplet> load_triplets(const std::string& path) {
  std::vector<SyntheticTriplet> out;
  jsonl::for_each(path, [&](const Json& j, std::size_t line) {
    try {
      out.push_back(triplet_from_json(j));
    } catch (const Json::exception& e) {
      throw ParseError(path + ": " + e.what(), line);
    } catch (const SchemaError& e) {
      throw ParseError(path + ": " + e.what(), line);
    }
  });
  return out;
}

void save_triplets(const std::string& path, const std::vector<SyntheticTriplet>& triplets) {
  std::vector<Json> rows;
  rows.reserve(triplets.size());
  for (const auto& t : triplets) rows.push_back(to_json(t));
  jsonl::write_all(path, rows);
}

}  // namespace coldstart::generation

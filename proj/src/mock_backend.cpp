#include <algorithm>
#include <cctype>
#include <set>

#include "coldstart/hashing.hpp"
#include "coldstart/llmio.hpp"
#include "coldstart/text.hpp"

namespace coldstart::llmio {

namespace {

// Text following `marker` up to the next blank line.
std::optional<std::string> section(const std::string& prompt, const std::string& marker) {
  auto pos = prompt.find(marker);
  if (pos == std::string::npos) return std::nullopt;
  pos += marker.size();
  auto end = prompt.find("\n\n", pos);
  return prompt.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

std::optional<std::string> line_value(const std::string& text, const std::string& prefix) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    if (text.compare(pos, prefix.size(), prefix) == 0) {
      return text.substr(pos + prefix.size(), end - pos - prefix.size());
    }
    pos = end + 1;
  }
  return std::nullopt;
}

std::vector<std::string> list_field(const std::string& block, const std::string& prefix) {
  auto v = line_value(block, prefix);
  if (!v || *v == "n/a") return {};
  std::vector<std::string> out;
  for (auto& part : text::split(*v, ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

// "key=value; key=value" fields of the context and property lines.
std::string kv(const std::string& line, const std::string& key) {
  for (auto& part : text::split(line, ';')) {
    auto t = text::trim(part);
    if (t.rfind(key + "=", 0) == 0) return t.substr(key.size() + 1);
  }
  return {};
}

struct ParsedBlock {
  std::vector<std::string> amenities;
  std::vector<std::string> locations;
  std::string property_type;
  std::string context_line;
};

ParsedBlock parse_block(const std::string& block) {
  ParsedBlock b;
  b.amenities = list_field(block, "Amenities: ");
  b.locations = list_field(block, "Location: ");
  b.property_type = kv(line_value(block, "Property: ").value_or(""), "type");
  if (b.property_type == "n/a") b.property_type.clear();
  b.context_line = line_value(block, "Search context: ").value_or("");
  return b;
}

bool has_digit(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

struct Candidate {
  std::string phrase;
  enum Kind { property, amenity, location } kind;
};

std::string type_placeholder(Candidate::Kind k) {
  switch (k) {
    case Candidate::property: return "[property_type]";
    case Candidate::amenity: return "[amenity]";
    case Candidate::location: return "[location]";
  }
  return "[attribute]";
}

std::size_t words(const std::string& s) { return text::tokenize(s).size(); }

}  // namespace

std::string mock_generate(const std::string& prompt) {
  auto block1 = section(prompt, "Listing 1:\n");
  auto block2 = section(prompt, "Listing 2:\n");
  auto terms_line = line_value(prompt, "PLATFORM_TERMS = ");
  auto length_line = line_value(prompt, "Query length: between ");
  if (!block1 || !block2 || !terms_line || !length_line) {
    throw MockError("prompt is missing Listing 1/Listing 2, PLATFORM_TERMS or length markers");
  }
  std::vector<std::string> blocklist;
  try {
    blocklist = Json::parse(*terms_line).get<std::vector<std::string>>();
  } catch (const Json::exception&) {
    throw MockError("unparsable PLATFORM_TERMS line");
  }
  int min_words = 0, max_words = 0;
  if (std::sscanf(length_line->c_str(), "%d and %d", &min_words, &max_words) != 2 ||
      min_words < 1 || max_words < min_words) {
    throw MockError("unparsable length line");
  }

  const auto l1 = parse_block(*block1);
  const auto l2 = parse_block(*block2);
  const auto city_tokens = text::tokenize(kv(l1.context_line, "location"));
  const bool no_pets = kv(l1.context_line, "pets") == "0";
  const bool no_children = kv(l1.context_line, "children") == "0";

  auto allowed = [&](const std::string& phrase) {
    if (phrase.empty() || has_digit(phrase)) return false;
    for (const auto& t : blocklist) {
      if (text::contains_ci(phrase, t)) return false;
    }
    auto toks = text::tokenize(phrase);
    if (!city_tokens.empty() && text::contains_token_run(toks, city_tokens)) return false;
    if (no_pets && text::contains_ci(phrase, "pet")) return false;
    if (no_children && (text::contains_ci(phrase, "family") || text::contains_ci(phrase, "kid"))) {
      return false;
    }
    return true;
  };

  std::set<std::string> l2_amenities(l2.amenities.begin(), l2.amenities.end());
  std::set<std::string> l2_locations(l2.locations.begin(), l2.locations.end());
  std::vector<Candidate> diffs;
  for (const auto& a : l1.amenities) {
    if (!l2_amenities.count(a) && allowed(a)) diffs.push_back({a, Candidate::amenity});
  }
  for (const auto& loc : l1.locations) {
    if (!l2_locations.count(loc) && allowed(loc)) diffs.push_back({loc, Candidate::location});
  }
  bool ptype_differs = !l1.property_type.empty() && l1.property_type != l2.property_type &&
                       allowed(l1.property_type);
  if (diffs.empty()) {
    for (const auto& a : l1.amenities) {
      if (allowed(a)) diffs.push_back({a, Candidate::amenity});
    }
  }

  const std::uint64_t h = splitmix64(fnv1a64(prompt));
  if (!diffs.empty()) std::rotate(diffs.begin(), diffs.begin() + static_cast<long>(h % diffs.size()), diffs.end());

  int target;
  if (auto seed = line_value(prompt, "Seed query: \"")) {
    auto text = seed->substr(0, seed->rfind('"'));
    target = static_cast<int>(words(text));
  } else {
    target = min_words + static_cast<int>((h >> 20) % static_cast<std::uint64_t>(max_words - min_words + 1));
  }
  target = std::clamp(target, min_words, max_words);

  // Property type anchors the query when it differs or when room allows.
  std::vector<Candidate> chosen;
  std::size_t used = 0;
  bool use_ptype = !l1.property_type.empty() && allowed(l1.property_type) &&
                   (ptype_differs || diffs.empty() || (((h >> 8) & 1) && target >= 3));
  if (use_ptype && words(l1.property_type) <= static_cast<std::size_t>(target)) {
    chosen.push_back({l1.property_type, Candidate::property});
    used += words(l1.property_type);
  }
  for (const auto& c : diffs) {
    if (chosen.size() >= 3) break;
    std::size_t extra = words(c.phrase) + (c.kind == Candidate::amenity ? 1 : 0);
    if (used + extra > static_cast<std::size_t>(target)) continue;
    chosen.push_back(c);
    used += extra;
  }
  if (chosen.empty()) {
    // Nothing fits the target: fall back to the shortest usable attribute.
    std::vector<Candidate> all = diffs;
    if (use_ptype || all.empty()) all.push_back({l1.property_type, Candidate::property});
    auto shortest = std::min_element(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return words(a.phrase) < words(b.phrase);
    });
    if (shortest == all.end() || shortest->phrase.empty()) {
      throw MockError("Listing 1 has no usable attribute");
    }
    chosen.push_back(*shortest);
  }

  std::vector<std::string> out_words, tmpl_words, key_attributes;
  auto emit = [&](const std::string& phrase, const std::string& placeholder) {
    for (auto& w : text::split(phrase, ' ')) out_words.push_back(w);
    tmpl_words.push_back(placeholder);
  };
  std::vector<const Candidate*> amen, locs;
  for (const auto& c : chosen) {
    key_attributes.push_back(c.phrase);
    if (c.kind == Candidate::property) emit(c.phrase, type_placeholder(c.kind));
    if (c.kind == Candidate::amenity) amen.push_back(&c);
    if (c.kind == Candidate::location) locs.push_back(&c);
  }
  for (std::size_t i = 0; i < amen.size(); ++i) {
    bool anchored = !out_words.empty();
    if (i == 0 && anchored) {
      out_words.push_back("with");
      tmpl_words.push_back("with");
    } else if (i > 0) {
      out_words.push_back("and");
      tmpl_words.push_back("and");
    }
    emit(amen[i]->phrase, type_placeholder(Candidate::amenity));
  }
  for (const auto* c : locs) emit(c->phrase, type_placeholder(Candidate::location));

  // Whole trailing phrases pad the query to its target length.
  static const std::vector<std::vector<std::string>> padding = {
      {"getaway", "retreat"},
      {"quiet getaway", "weekend escape"},
      {"for a getaway", "for remote work"},
      {"for a weekend escape", "for a quiet retreat"},
      {"for a slow weekend away", "for a long quiet getaway"},
  };
  std::size_t want = static_cast<std::size_t>(std::max(min_words, target));
  for (std::uint64_t bits = h >> 32; out_words.size() < want; bits >>= 1) {
    std::size_t gap = std::min(want - out_words.size(), padding.size());
    for (auto& w : text::split(padding[gap - 1][bits & 1], ' ')) {
      out_words.push_back(w);
      tmpl_words.push_back(w);
    }
  }
  if (out_words.size() > static_cast<std::size_t>(max_words)) out_words.resize(max_words);

  Json j = {{"justification", "Listing 1 offers " + text::join(key_attributes, ", ") +
                                  ", which Listing 2 does not match."},
            {"generalized_template", text::join(tmpl_words, " ")},
            {"query", text::join(out_words, " ")},
            {"key_attributes", key_attributes}};
  return j.dump();
}

std::string mock_judge(const std::string& prompt) {
  auto query = line_value(prompt, "Query: \"");
  auto a = section(prompt, "\nListing A:\n");
  auto b = section(prompt, "\nListing B:\n");
  if (!query || !a || !b) throw MockError("judge prompt is missing Query/Listing A/Listing B");
  auto q = query->substr(0, query->rfind('"'));
  std::set<std::string> q_tokens;
  for (auto& t : text::tokenize(q)) q_tokens.insert(t);
  auto overlap = [&](const std::string& block) {
    std::set<std::string> tokens;
    for (auto& t : text::tokenize(block)) tokens.insert(t);
    int n = 0;
    for (const auto& t : q_tokens) n += tokens.count(t) ? 1 : 0;
    return n;
  };
  int oa = overlap(*a), ob = overlap(*b);
  std::string verdict = oa > ob ? "A" : (ob > oa ? "B" : "TIE");
  return "Listing A shares " + std::to_string(oa) + " query terms; Listing B shares " +
         std::to_string(ob) + ".\n" + verdict;
}

}  // namespace coldstart::llmio

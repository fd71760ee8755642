#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace coldstart::lexicon {

enum class AttributeType { amenity, location, property_type, rooms, vibe, occasion, other };

inline constexpr int kAttributeTypeCount = 7;

std::string to_string(AttributeType t);
AttributeType attribute_type_from_string(const std::string& s);
const std::vector<AttributeType>& all_attribute_types();

// Built-in vocabularies shared by the fixture generator and the tagger.
const std::vector<std::string>& amenities();
const std::vector<std::string>& property_types();
const std::vector<std::string>& location_phrases();
const std::vector<std::string>& vibe_words();
const std::vector<std::string>& occasions();
const std::vector<std::string>& cities();

// Property grouping used for same-category sampling.
std::string category_of(const std::string& property_type);

struct LexiconEntry {
  std::string phrase;  // normalized: lowercase tokens joined by single spaces
  AttributeType type;
};

class AttributeLexicon {
 public:
  AttributeLexicon() = default;
  explicit AttributeLexicon(std::vector<LexiconEntry> entries);

  static const AttributeLexicon& builtin();
  static AttributeLexicon load(const std::string& path);
  void save(const std::string& path) const;

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  std::size_t max_phrase_tokens() const { return max_tokens_; }
  // Returns nullptr if the normalized phrase is unknown.
  const LexiconEntry* lookup(const std::string& phrase) const;

 private:
  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t max_tokens_ = 0;
};

}  // namespace coldstart::lexicon

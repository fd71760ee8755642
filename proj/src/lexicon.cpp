#include "coldstart/lexicon.hpp"

#include <algorithm>
#include <set>

#include "coldstart/errors.hpp"
#include "coldstart/jsonl.hpp"
#include "coldstart/text.hpp"

namespace coldstart::lexicon {

std::string to_string(AttributeType t) {
  switch (t) {
    case AttributeType::amenity: return "amenity";
    case AttributeType::location: return "location";
    case AttributeType::property_type: return "property_type";
    case AttributeType::rooms: return "rooms";
    case AttributeType::vibe: return "vibe";
    case AttributeType::occasion: return "occasion";
    case AttributeType::other: return "other";
  }
  return "other";
}

AttributeType attribute_type_from_string(const std::string& s) {
  for (auto t : all_attribute_types()) {
    if (to_string(t) == s) return t;
  }
  throw ArgumentError("unknown attribute type: " + s);
}

const std::vector<AttributeType>& all_attribute_types() {
  static const std::vector<AttributeType> types = {
      AttributeType::amenity, AttributeType::location, AttributeType::property_type,
      AttributeType::rooms,   AttributeType::vibe,     AttributeType::occasion,
      AttributeType::other};
  return types;
}

const std::vector<std::string>& amenities() {
  static const std::vector<std::string> v = {
      "pool", "hot tub", "wifi", "free parking", "kitchen", "washer", "dryer",
      "air conditioning", "heating", "dedicated workspace", "tv", "fireplace", "bbq grill",
      "patio", "balcony", "backyard", "garden", "gym", "sauna", "ev charger",
      "crib", "high chair", "pets allowed", "self check-in", "elevator", "beach access",
      "lake access", "ski-in ski-out", "waterfront deck", "outdoor shower", "fire pit",
      "pool table", "game room", "home theater", "piano", "coffee maker", "dishwasher",
      "bathtub", "rooftop terrace", "mountain view", "ocean view", "city view",
      "garden view", "kayaks", "bikes", "hammock", "outdoor dining", "pizza oven",
      "wine cellar", "heated floors", "king bed", "bunk beds", "sofa bed", "laundry",
      "security cameras", "smoke alarm", "first aid kit", "luggage storage",
      "long-term stays", "step-free access"};
  return v;
}

const std::vector<std::string>& property_types() {
  static const std::vector<std::string> v = {
      "cabin", "apartment", "house", "studio", "villa", "cottage", "loft", "condo",
      "bungalow", "chalet", "townhouse", "guesthouse", "treehouse", "farmhouse",
      "tiny house", "yurt", "houseboat", "castle", "a-frame", "penthouse"};
  return v;
}

const std::vector<std::string>& location_phrases() {
  static const std::vector<std::string> v = {
      "near beach", "downtown", "near ski resort", "lakefront", "near campus",
      "waterfront", "in the mountains", "near national park", "near airport",
      "oceanfront", "near old town", "near train station", "in the countryside",
      "near vineyards", "near hiking trails", "near the lake", "by the river",
      "near convention center", "near stadium", "in the woods", "near downtown",
      "walkable neighborhood", "quiet street", "near shops", "near restaurants",
      "near the harbor", "near golf course", "near museums", "near nightlife",
      "in the desert", "near hot springs", "near theme park", "near the boardwalk",
      "near marina", "on the coast", "near the pier", "near university",
      "near hospital", "in the suburbs", "near ski lifts"};
  return v;
}

const std::vector<std::string>& vibe_words() {
  static const std::vector<std::string> v = {
      "cozy", "romantic", "quiet", "modern", "rustic", "luxury", "charming",
      "spacious", "secluded", "peaceful", "stylish", "historic", "bright", "trendy",
      "minimalist", "family friendly", "family-friendly", "kid friendly", "kid-friendly",
      "unique", "relaxing", "scenic"};
  return v;
}

const std::vector<std::string>& occasions() {
  static const std::vector<std::string> v = {
      "christmas", "honeymoon", "weekend getaway", "business trip", "birthday",
      "anniversary", "family reunion", "ski trip", "summer retreat", "new year",
      "thanksgiving", "bachelorette", "remote work", "girls trip", "road trip",
      "getaway", "vacation", "retreat"};
  return v;
}

const std::vector<std::string>& cities() {
  static const std::vector<std::string> v = {
      "Paris", "Lake Tahoe", "Austin", "Denver", "Miami", "Seattle", "Santa Monica",
      "Asheville", "Nashville", "Portland", "San Diego", "Boston", "Chicago",
      "New Orleans", "Savannah", "Sedona", "Aspen", "Honolulu", "Lisbon", "Barcelona"};
  return v;
}

std::string category_of(const std::string& property_type) {
  static const std::set<std::string> urban = {"apartment", "studio", "loft", "condo",
                                              "penthouse", "townhouse"};
  static const std::set<std::string> nature = {"cabin", "chalet", "treehouse", "yurt",
                                               "a-frame", "farmhouse", "tiny house"};
  static const std::set<std::string> residential = {"house", "cottage", "bungalow",
                                                    "guesthouse"};
  if (urban.count(property_type)) return "urban";
  if (nature.count(property_type)) return "nature";
  if (residential.count(property_type)) return "residential";
  return "unique";
}

namespace {

std::string normalize_phrase(const std::string& phrase) {
  return text::join(text::tokenize(phrase), " ");
}

std::vector<LexiconEntry> builtin_entries() {
  std::vector<LexiconEntry> e;
  auto add = [&](const std::vector<std::string>& phrases, AttributeType t) {
    for (const auto& p : phrases) e.push_back({p, t});
  };
  add(amenities(), AttributeType::amenity);
  add({"pet friendly", "pet-friendly", "pets", "parking", "washer dryer", "workspace",
       "jacuzzi", "view", "lake view", "hot tubs", "pools"},
      AttributeType::amenity);
  add(location_phrases(), AttributeType::location);
  add({"beach", "beachfront", "near the beach", "ski resort", "near the ocean", "mountains",
       "near lake", "city center", "near eiffel tower", "lake", "campus", "near downtown"},
      AttributeType::location);
  add(property_types(), AttributeType::property_type);
  add({"cabins", "apartments", "houses", "villas", "cottages", "beach house", "lake house",
       "home", "place", "condos"},
      AttributeType::property_type);
  static const std::vector<std::string> numerals = {"1", "2", "3", "4", "5", "6",
                                                    "one", "two", "three", "four",
                                                    "five", "six"};
  std::vector<std::string> rooms = {"bedroom", "bedrooms", "bathroom", "bathrooms",
                                    "master suite", "private bathroom"};
  for (const auto& n : numerals) {
    for (const char* unit : {"bedroom", "bedrooms", "bathroom", "bathrooms", "br", "bath"}) {
      rooms.push_back(n + " " + unit);
    }
  }
  add(rooms, AttributeType::rooms);
  add(vibe_words(), AttributeType::vibe);
  add(occasions(), AttributeType::occasion);
  add({"cheap", "affordable", "budget", "large group", "groups", "work friendly",
       "accessible", "wheelchair accessible"},
      AttributeType::other);
  return e;
}

}  // namespace

AttributeLexicon::AttributeLexicon(std::vector<LexiconEntry> entries) {
  for (auto& entry : entries) {
    entry.phrase = normalize_phrase(entry.phrase);
    if (entry.phrase.empty()) throw ValidationError("empty lexicon phrase");
    // First definition of a phrase wins.
    if (index_.count(entry.phrase)) continue;
    index_.emplace(entry.phrase, entries_.size());
    max_tokens_ = std::max(max_tokens_, text::tokenize(entry.phrase).size());
    entries_.push_back(std::move(entry));
  }
}

const AttributeLexicon& AttributeLexicon::builtin() {
  static const AttributeLexicon lex(builtin_entries());
  return lex;
}

AttributeLexicon AttributeLexicon::load(const std::string& path) {
  std::vector<LexiconEntry> entries;
  jsonl::for_each(path, [&](const jsonl::Json& j, std::size_t line) {
    try {
      entries.push_back({j.at("phrase").get<std::string>(),
                         attribute_type_from_string(j.at("type").get<std::string>())});
    } catch (const std::exception& e) {
      throw ParseError(path + ": " + e.what(), line);
    }
  });
  return AttributeLexicon(std::move(entries));
}

void AttributeLexicon::save(const std::string& path) const {
  std::vector<jsonl::Json> rows;
  for (const auto& e : entries_) rows.push_back({{"phrase", e.phrase}, {"type", to_string(e.type)}});
  jsonl::write_all(path, rows);
}

const LexiconEntry* AttributeLexicon::lookup(const std::string& phrase) const {
  auto it = index_.find(phrase);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

}  // namespace coldstart::lexicon

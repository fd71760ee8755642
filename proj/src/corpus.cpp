#include "coldstart/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "coldstart/errors.hpp"
#include "coldstart/jsonl.hpp"
#include "coldstart/text.hpp"

namespace coldstart::corpus {

namespace {

bool valid_iso_date(const std::string& d) {
  int y = 0, m = 0, day = 0;
  char tail = 0;
  if (d.size() != 10 || std::sscanf(d.c_str(), "%4d-%2d-%2d%c", &y, &m, &day, &tail) != 3) {
    return false;
  }
  static constexpr int days_in_month[] = {31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m >= 1 && m <= 12 && day >= 1 && day <= days_in_month[m - 1];
}

template <typename T>
std::optional<T> optional_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

std::string string_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return it->get<std::string>();
}

std::vector<std::string> string_list(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return it->get<std::vector<std::string>>();
}

std::vector<std::string> normalize_amenities(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& a : raw) {
    auto norm = text::to_lower(text::trim(a));
    if (!norm.empty() && seen.insert(norm).second) out.push_back(std::move(norm));
  }
  return out;
}

std::string number(double v) { return fmt::format("{}", v); }

}  // namespace

const Impression* SearchSession::booked() const {
  for (const auto& imp : impressions) {
    if (imp.booked) return &imp;
  }
  return nullptr;
}

void validate(const Listing& l) {
  if (l.id.empty()) throw ValidationError("listing id is empty");
  if (l.rating && (*l.rating < 0.0 || *l.rating > 5.0)) {
    throw ValidationError("listing " + l.id + ": rating outside [0,5]");
  }
  if (l.review_count && *l.review_count < 0) {
    throw ValidationError("listing " + l.id + ": negative review_count");
  }
  if (l.bedrooms && *l.bedrooms < 0) throw ValidationError("listing " + l.id + ": negative bedrooms");
  if (l.bathrooms && *l.bathrooms < 0) {
    throw ValidationError("listing " + l.id + ": negative bathrooms");
  }
  if (l.price_per_night && *l.price_per_night <= 0) {
    throw ValidationError("listing " + l.id + ": price_per_night must be positive");
  }
  if (normalize_amenities(l.amenities) != l.amenities) {
    throw ValidationError("listing " + l.id + ": amenities must be lowercase and deduplicated");
  }
}

void validate(const SearchContext& c) {
  if (!valid_iso_date(c.checkin)) throw ValidationError("invalid checkin date: " + c.checkin);
  if (!valid_iso_date(c.checkout)) throw ValidationError("invalid checkout date: " + c.checkout);
  // Zero-padded ISO dates order lexicographically.
  if (c.checkout <= c.checkin) throw ValidationError("checkout must be after checkin");
  if (c.adults < 1) throw ValidationError("adults must be >= 1");
  if (c.children < 0 || c.pets < 0) throw ValidationError("negative guest count");
}

std::vector<std::string> validate(const SearchSession& s) {
  if (s.session_id.empty()) throw ValidationError("session id is empty");
  validate(s.context);
  std::vector<std::string> warnings;
  int n_booked = 0;
  for (const auto& imp : s.impressions) {
    if (imp.engagement_score < 0) {
      throw ValidationError("session " + s.session_id + ": negative engagement_score");
    }
    n_booked += imp.booked ? 1 : 0;
  }
  if (n_booked > 1) throw ValidationError("session " + s.session_id + ": more than one booking");
  if (const auto* b = s.booked()) {
    for (const auto& imp : s.impressions) {
      if (!imp.booked && imp.engagement_score > b->engagement_score) {
        warnings.push_back("session " + s.session_id + ": listing " + imp.listing_id +
                           " out-engages the booked listing");
        break;
      }
    }
  }
  return warnings;
}

void validate(const SeedQuery& q) {
  if (text::trim(q.text).empty()) throw ValidationError("seed query text is empty");
}

std::string to_string(SeedSource s) {
  switch (s) {
    case SeedSource::survey: return "survey";
    case SeedSource::real_traffic: return "real_traffic";
    case SeedSource::related_product: return "related_product";
  }
  return "survey";
}

SeedSource seed_source_from_string(const std::string& s) {
  if (s == "survey") return SeedSource::survey;
  if (s == "real_traffic") return SeedSource::real_traffic;
  if (s == "related_product") return SeedSource::related_product;
  throw ValidationError("unknown seed source: " + s);
}

Json to_json(const Listing& l) {
  Json j = {{"id", l.id},
            {"title", l.title},
            {"description", l.description},
            {"amenities", l.amenities},
            {"review_summary", l.review_summary},
            {"property_type", l.property_type},
            {"location_attributes", l.location_attributes},
            {"category", l.category}};
  if (l.rating) j["rating"] = *l.rating;
  if (l.review_count) j["review_count"] = *l.review_count;
  if (l.bedrooms) j["bedrooms"] = *l.bedrooms;
  if (l.bathrooms) j["bathrooms"] = *l.bathrooms;
  if (l.price_per_night) j["price_per_night"] = *l.price_per_night;
  return j;
}

Json to_json(const SearchContext& c) {
  return {{"location", c.location}, {"checkin", c.checkin}, {"checkout", c.checkout},
          {"adults", c.adults},     {"children", c.children}, {"pets", c.pets}};
}

Json to_json(const SearchSession& s) {
  Json imps = Json::array();
  for (const auto& i : s.impressions) {
    imps.push_back({{"listing_id", i.listing_id},
                    {"engagement_score", i.engagement_score},
                    {"booked", i.booked}});
  }
  return {{"session_id", s.session_id}, {"context", to_json(s.context)}, {"impressions", imps}};
}

Json to_json(const SeedQuery& q) {
  Json j = {{"text", q.text}, {"source", to_string(q.source)}};
  if (q.attributes_hint) j["attributes_hint"] = *q.attributes_hint;
  return j;
}

Listing listing_from_json(const Json& j) {
  Listing l;
  l.id = j.at("id").get<std::string>();
  l.title = string_field(j, "title");
  l.description = string_field(j, "description");
  l.amenities = normalize_amenities(string_list(j, "amenities"));
  l.review_summary = string_field(j, "review_summary");
  l.rating = optional_field<double>(j, "rating");
  l.review_count = optional_field<int>(j, "review_count");
  l.bedrooms = optional_field<int>(j, "bedrooms");
  l.bathrooms = optional_field<double>(j, "bathrooms");
  l.property_type = string_field(j, "property_type");
  l.location_attributes = string_list(j, "location_attributes");
  l.price_per_night = optional_field<double>(j, "price_per_night");
  l.category = string_field(j, "category");
  return l;
}

SearchContext context_from_json(const Json& j) {
  SearchContext c;
  c.location = j.at("location").get<std::string>();
  c.checkin = j.at("checkin").get<std::string>();
  c.checkout = j.at("checkout").get<std::string>();
  c.adults = j.at("adults").get<int>();
  c.children = j.value("children", 0);
  c.pets = j.value("pets", 0);
  return c;
}

SearchSession session_from_json(const Json& j) {
  SearchSession s;
  s.session_id = j.at("session_id").get<std::string>();
  s.context = context_from_json(j.at("context"));
  for (const auto& i : j.at("impressions")) {
    s.impressions.push_back({i.at("listing_id").get<std::string>(),
                             i.at("engagement_score").get<double>(), i.value("booked", false)});
  }
  return s;
}

SeedQuery seed_from_json(const Json& j) {
  SeedQuery q;
  q.text = j.at("text").get<std::string>();
  q.source = seed_source_from_string(j.value("source", std::string("survey")));
  if (auto it = j.find("attributes_hint"); it != j.end() && !it->is_null()) {
    q.attributes_hint = it->get<std::vector<std::string>>();
  }
  return q;
}

Catalog::Catalog(std::vector<Listing> listings) : listings_(std::move(listings)) {
  for (std::size_t i = 0; i < listings_.size(); ++i) {
    if (!index_.emplace(listings_[i].id, i).second) {
      throw ValidationError("duplicate listing id: " + listings_[i].id);
    }
  }
}

const Listing* Catalog::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &listings_[it->second];
}

const Listing& Catalog::at(const std::string& id) const {
  const auto* l = find(id);
  if (!l) throw ValidationError("unknown listing id: " + id);
  return *l;
}

namespace {

template <typename T, typename Parse, typename Check>
std::vector<T> load_records(const std::string& path, Parse parse, Check check) {
  std::vector<T> out;
  jsonl::for_each(path, [&](const Json& j, std::size_t line) {
    T rec;
    try {
      rec = parse(j);
    } catch (const Json::exception& e) {
      throw ParseError(path + ": " + e.what(), line);
    }
    try {
      check(rec);
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(line) + ": " + e.what());
    }
    out.push_back(std::move(rec));
  });
  return out;
}

}  // namespace

std::vector<Listing> load_catalog(const std::string& path) {
  std::set<std::string> ids;
  return load_records<Listing>(path, listing_from_json, [&](const Listing& l) {
    validate(l);
    if (!ids.insert(l.id).second) throw ValidationError("duplicate listing id: " + l.id);
  });
}

std::vector<SearchSession> load_sessions(const std::string& path,
                                         std::vector<std::string>* warnings) {
  return load_records<SearchSession>(path, session_from_json, [&](const SearchSession& s) {
    auto w = validate(s);
    if (warnings) warnings->insert(warnings->end(), w.begin(), w.end());
  });
}

std::vector<SeedQuery> load_seed_queries(const std::string& path) {
  return load_records<SeedQuery>(path, seed_from_json,
                                 [](const SeedQuery& q) { validate(q); });
}

namespace {
template <typename T>
void save_records(const std::string& path, const std::vector<T>& items) {
  std::vector<Json> rows;
  rows.reserve(items.size());
  for (const auto& it : items) rows.push_back(to_json(it));
  jsonl::write_all(path, rows);
}
}  // namespace

void save_catalog(const std::string& path, const std::vector<Listing>& listings) {
  save_records(path, listings);
}
void save_sessions(const std::string& path, const std::vector<SearchSession>& sessions) {
  save_records(path, sessions);
}
void save_seed_queries(const std::string& path, const std::vector<SeedQuery>& seeds) {
  save_records(path, seeds);
}

const std::vector<std::string>& feature_block_labels() {
  static const std::vector<std::string> labels = {
      "Search context: ", "location=", "; checkin=", "; checkout=", "; adults=",
      "; children=", "; pets=", "Title: ", "Description: ", "Amenities: ",
      "Reviews: ", " (rating ", " from ", " reviews)", "Property: type=",
      "; bedrooms=", "; bathrooms=", "Location: ", "Price per night: ", ", ", "n/a"};
  return labels;
}

FeatureBlock render_feature_block(const Listing& listing, const SearchContext& context,
                                  const FeatureLimits& limits) {
  auto or_na = [](const std::string& s) { return s.empty() ? std::string("n/a") : s; };
  auto opt_num = [](const auto& v) { return v ? number(static_cast<double>(*v)) : "n/a"; };
  auto list_or_na = [](const std::vector<std::string>& v) {
    return v.empty() ? std::string("n/a") : text::join(v, ", ");
  };

  bool truncated = false;
  std::string description = listing.description;
  if (description.size() > limits.description_chars) {
    description = text::truncate_utf8(description, limits.description_chars);
    truncated = true;
  }
  std::vector<std::string> amenities = listing.amenities;
  if (amenities.size() > limits.top_amenities) {
    amenities.resize(limits.top_amenities);
    truncated = true;
  }

  std::string out;
  out += fmt::format("Search context: location={}; checkin={}; checkout={}; adults={}; "
                     "children={}; pets={}\n",
                     or_na(context.location), or_na(context.checkin), or_na(context.checkout),
                     context.adults, context.children, context.pets);
  out += "Title: " + or_na(listing.title) + "\n";
  out += "Description: " + or_na(description) + "\n";
  out += "Amenities: " + list_or_na(amenities) + "\n";
  out += fmt::format("Reviews: {} (rating {} from {} reviews)\n", or_na(listing.review_summary),
                     opt_num(listing.rating), opt_num(listing.review_count));
  out += fmt::format("Property: type={}; bedrooms={}; bathrooms={}\n",
                     or_na(listing.property_type), opt_num(listing.bedrooms),
                     opt_num(listing.bathrooms));
  out += "Location: " + list_or_na(listing.location_attributes) + "\n";
  out += "Price per night: " + opt_num(listing.price_per_night) + "\n";
  return {listing.id, std::move(out), truncated};
}

}  // namespace coldstart::corpus

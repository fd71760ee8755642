#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "coldstart/corpus.hpp"
#include "coldstart/errors.hpp"
#include "coldstart/lexicon.hpp"
#include "coldstart/random.hpp"
#include "coldstart/text.hpp"

namespace coldstart::corpus {

namespace {

const std::string& pick(Rng& rng, const std::vector<std::string>& v) {
  return v[uniform_index(rng, v.size())];
}

std::vector<std::string> sample_distinct(Rng& rng, const std::vector<std::string>& v,
                                         std::size_t k) {
  std::vector<std::string> pool = v;
  shuffle(rng, pool);
  pool.resize(std::min(k, pool.size()));
  return pool;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

double round_to(double v, double step) { return std::round(v / step) * step; }

// 2025 is not a leap year.
std::string date_of_year(int day_index) {
  static constexpr int days_in_month[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int year = 2025 + day_index / 365;
  int d = day_index % 365;
  int m = 0;
  while (d >= days_in_month[m]) d -= days_in_month[m++];
  return fmt::format("{:04d}-{:02d}-{:02d}", year, m + 1, d + 1);
}

const std::vector<std::string>& filler_sentences() {
  static const std::vector<std::string> v = {
      "The space is filled with natural light throughout the day.",
      "Fresh linens and towels are provided for every stay.",
      "Check-in instructions are sent the day before arrival.",
      "The living area has comfortable seating for relaxing evenings.",
      "Local cafes and a grocery store are a short drive away.",
      "We keep a guidebook with our favorite spots in the area.",
      "The bedrooms are furnished with blackout curtains for restful sleep.",
      "Quiet hours start at ten in the evening out of respect for neighbors.",
      "The kitchen shelves are stocked with basic cooking supplies.",
      "We are happy to answer questions before and during your stay.",
      "Street noise is minimal and the neighborhood feels safe at night.",
      "Extra blankets and pillows are stored in the hallway closet."};
  return v;
}

Listing make_listing(Rng& rng, int index) {
  Listing l;
  l.id = fmt::format("L{:05d}", index);
  l.property_type = pick(rng, lexicon::property_types());
  l.category = lexicon::category_of(l.property_type);
  l.amenities = sample_distinct(rng, lexicon::amenities(), 4 + uniform_index(rng, 13));
  l.location_attributes =
      sample_distinct(rng, lexicon::location_phrases(), 1 + uniform_index(rng, 3));
  const auto& vibe = pick(rng, lexicon::vibe_words());
  const auto& vibe2 = pick(rng, lexicon::vibe_words());

  l.title = capitalize(fmt::format("{} {} {}", vibe, l.property_type, l.location_attributes[0]));
  if (bernoulli(rng, 0.5)) l.title += " with " + l.amenities[0];

  std::string desc = fmt::format("Welcome to our {} {} {}. ", vibe, l.property_type,
                                 l.location_attributes[0]);
  desc += fmt::format("Enjoy the {} and {} during your stay. ", l.amenities[0],
                      l.amenities[1]);
  if (l.location_attributes.size() > 1) {
    desc += fmt::format("The home is also {}. ", l.location_attributes[1]);
  }
  std::size_t target_len = 150 + uniform_index(rng, 1800);
  const auto& fillers = filler_sentences();
  while (desc.size() < target_len) desc += pick(rng, fillers) + " ";
  l.description = text::trim(desc);

  if (bernoulli(rng, 0.95)) {
    l.review_summary = fmt::format("Guests praise the {} and the {} feel of the {}.",
                                   l.amenities[uniform_index(rng, l.amenities.size())], vibe2,
                                   l.property_type);
    l.rating = round_to(3.5 + 1.5 * uniform01(rng), 0.01);
    l.review_count = static_cast<int>(uniform_index(rng, 500)) + 1;
  }
  l.bedrooms = l.property_type == "studio" ? 0 : uniform_int(rng, 1, 5);
  l.bathrooms = 1.0 + 0.5 * static_cast<double>(uniform_index(rng, 5));
  l.price_per_night = static_cast<double>(uniform_int(rng, 40, 900));
  return l;
}

SearchContext make_context(Rng& rng) {
  SearchContext c;
  c.location = pick(rng, lexicon::cities());
  int start = static_cast<int>(uniform_index(rng, 350));
  c.checkin = date_of_year(start);
  c.checkout = date_of_year(start + uniform_int(rng, 1, 14));
  c.adults = uniform_int(rng, 1, 6);
  c.children = bernoulli(rng, 0.35) ? uniform_int(rng, 1, 3) : 0;
  c.pets = bernoulli(rng, 0.25) ? uniform_int(rng, 1, 2) : 0;
  return c;
}

SearchSession make_session(Rng& rng, int index, const std::vector<Listing>& catalog,
                           const std::map<std::string, std::vector<std::size_t>>& by_category) {
  SearchSession s;
  s.session_id = fmt::format("S{:06d}", index);
  s.context = make_context(rng);

  // Half of the impressions come from one category so same-category pairs exist.
  std::size_t n = std::min<std::size_t>(catalog.size(), 4 + uniform_index(rng, 9));
  auto cat_it = by_category.begin();
  std::advance(cat_it, static_cast<long>(uniform_index(rng, by_category.size())));
  std::set<std::size_t> chosen;
  std::size_t from_category = std::min(n / 2, cat_it->second.size());
  for (std::size_t guard = 0; chosen.size() < from_category && guard < 100; ++guard) {
    chosen.insert(cat_it->second[uniform_index(rng, cat_it->second.size())]);
  }
  while (chosen.size() < n) chosen.insert(uniform_index(rng, catalog.size()));

  std::vector<std::size_t> order(chosen.begin(), chosen.end());
  shuffle(rng, order);
  for (auto idx : order) {
    s.impressions.push_back({catalog[idx].id, round_to(uniform01(rng), 0.0001), false});
  }
  if (bernoulli(rng, 0.9)) {
    auto best = std::max_element(s.impressions.begin(), s.impressions.end(),
                                 [](const Impression& a, const Impression& b) {
                                   return a.engagement_score < b.engagement_score;
                                 });
    best->booked = true;
    best->engagement_score = round_to(best->engagement_score + 0.5, 0.0001);
  }
  return s;
}

SeedQuery make_survey_seed(Rng& rng) {
  const auto& a = pick(rng, lexicon::amenities());
  const auto& a2 = pick(rng, lexicon::amenities());
  const auto& p = pick(rng, lexicon::property_types());
  const auto& loc = pick(rng, lexicon::location_phrases());
  const auto& v = pick(rng, lexicon::vibe_words());
  const auto& o = pick(rng, lexicon::occasions());
  std::vector<std::string> forms = {
      fmt::format("{} {}", a, loc),
      fmt::format("{} {}", v, p),
      fmt::format("{} {} {}", v, p, loc),
      fmt::format("{} with {} {}", p, a, loc),
      fmt::format("{} {} for a {}", v, p, o),
      fmt::format("{} with {} and {}", p, a, a2),
      fmt::format("I'm looking for a {} place with a {} {}", v, a, loc),
      fmt::format("we want a {} {} with {} and {} for our {}", v, p, a, a2, o),
      fmt::format("looking for a {} {} {} that has {} and {} and is good for a {}", v, p, loc,
                  a, a2, o),
      fmt::format("{} {} {} {}", v, p, a, loc),
      fmt::format("{} for {}", p, o),
  };
  SeedQuery q;
  q.text = forms[uniform_index(rng, forms.size())];
  q.source = SeedSource::survey;
  return q;
}

}  // namespace

Fixture generate_fixture(std::uint64_t seed, int n_listings, int n_sessions, int n_seeds) {
  if (n_listings < 2) throw ArgumentError("generate_fixture: n_listings must be >= 2");
  if (n_sessions < 1) throw ArgumentError("generate_fixture: n_sessions must be >= 1");
  if (n_seeds < 0) throw ArgumentError("generate_fixture: n_seeds must be >= 0");

  Fixture fx;
  Rng listing_rng = make_rng(seed, 1);
  for (int i = 0; i < n_listings; ++i) fx.catalog.push_back(make_listing(listing_rng, i));

  std::map<std::string, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < fx.catalog.size(); ++i) {
    by_category[fx.catalog[i].category].push_back(i);
  }
  Rng session_rng = make_rng(seed, 2);
  for (int i = 0; i < n_sessions; ++i) {
    fx.sessions.push_back(make_session(session_rng, i, fx.catalog, by_category));
  }
  Rng seed_rng = make_rng(seed, 3);
  for (int i = 0; i < n_seeds; ++i) fx.seed_queries.push_back(make_survey_seed(seed_rng));
  return fx;
}

std::vector<SeedQuery> generate_real_queries(std::uint64_t seed, int n) {
  Rng rng = make_rng(seed, 4);
  std::vector<SeedQuery> out;
  for (int i = 0; i < n; ++i) {
    const auto& a = pick(rng, lexicon::amenities());
    const auto& p = pick(rng, lexicon::property_types());
    const auto& loc = pick(rng, lexicon::location_phrases());
    const auto& v = pick(rng, lexicon::vibe_words());
    std::vector<std::string> forms = {
        p,
        fmt::format("{} {}", v, p),
        fmt::format("{} {}", a, loc),
        fmt::format("pet friendly {}", p),
        fmt::format("{} with {}", p, a),
        fmt::format("{} {} {}", v, p, loc),
        fmt::format("{} {} {} with {}", v, p, loc, a),
        fmt::format("{} near me", a),
    };
    // Skewed toward the terse forms.
    static const std::vector<double> weights = {0.12, 0.2, 0.2, 0.08, 0.15, 0.12, 0.08, 0.05};
    out.push_back({forms[weighted_index(rng, weights)], SeedSource::real_traffic, std::nullopt});
  }
  return out;
}

}  // namespace coldstart::corpus

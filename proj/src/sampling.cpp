#include "coldstart/sampling.hpp"

#include <cmath>

#include "coldstart/errors.hpp"

namespace coldstart::sampling {

std::string to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::medium: return "medium";
    case Difficulty::hard: return "hard";
  }
  return "easy";
}

Difficulty difficulty_from_string(const std::string& s) {
  if (s == "easy") return Difficulty::easy;
  if (s == "medium") return Difficulty::medium;
  if (s == "hard") return Difficulty::hard;
  throw ArgumentError("unknown difficulty: " + s);
}

std::string to_string(SkipReason r) {
  switch (r) {
    case SkipReason::no_booking: return "no_booking";
    case SkipReason::no_eligible_negative: return "no_eligible_negative";
    case SkipReason::unresolved_listing: return "unresolved_listing";
  }
  return "unknown";
}

std::string ContrastivePair::id() const {
  return session_id + ":" + positive.id + ">" + negative.id;
}

SampleResult sample_pair(const corpus::SearchSession& session, const corpus::Catalog& catalog,
                         Rng& rng, bool same_category) {
  const auto* booked = session.booked();
  if (!booked) return {std::nullopt, SkipReason::no_booking};
  const auto* positive = catalog.find(booked->listing_id);
  if (!positive) return {std::nullopt, SkipReason::unresolved_listing};

  std::vector<const corpus::Listing*> eligible;
  for (const auto& imp : session.impressions) {
    if (imp.booked || imp.engagement_score >= booked->engagement_score) continue;
    const auto* l = catalog.find(imp.listing_id);
    if (!l || l->id == positive->id) continue;
    if (same_category && l->category != positive->category) continue;
    eligible.push_back(l);
  }
  if (eligible.empty()) return {std::nullopt, SkipReason::no_eligible_negative};

  ContrastivePair pair;
  pair.session_id = session.session_id;
  pair.context = session.context;
  pair.positive = *positive;
  pair.negative = *eligible[uniform_index(rng, eligible.size())];
  pair.difficulty = same_category ? Difficulty::medium : Difficulty::easy;
  return {std::move(pair), std::nullopt};
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ArgumentError("cosine_similarity: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

std::vector<ContrastivePair> hierarchical_sample(const std::vector<ContrastivePair>& pairs,
                                                 const ListingEmbedder& embedder, double tau,
                                                 bool same_category) {
  if (!(tau > 0)) throw ArgumentError("hierarchical_sample: tau must be positive");
  std::vector<ContrastivePair> kept;
  for (const auto& p : pairs) {
    if (same_category && p.positive.category != p.negative.category) continue;
    double sim = cosine_similarity(embedder(p.positive, p.context),
                                   embedder(p.negative, p.context));
    if (1.0 - sim > tau) continue;
    ContrastivePair hard = p;
    hard.difficulty = Difficulty::hard;
    hard.embedding_similarity = sim;
    kept.push_back(std::move(hard));
  }
  return kept;
}

nlohmann::json to_json(const ContrastivePair& p) {
  nlohmann::json j = {{"session_id", p.session_id},
                      {"context", corpus::to_json(p.context)},
                      {"positive_id", p.positive.id},
                      {"negative_id", p.negative.id},
                      {"difficulty", to_string(p.difficulty)}};
  j["embedding_similarity"] =
      p.embedding_similarity ? nlohmann::json(*p.embedding_similarity) : nlohmann::json(nullptr);
  return j;
}

}  // namespace coldstart::sampling

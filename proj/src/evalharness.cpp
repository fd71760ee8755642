#include "coldstart/evalharness.hpp"

#include <cmath>

#include "coldstart/errors.hpp"
#include "coldstart/hashing.hpp"
#include "coldstart/text.hpp"

namespace coldstart::evalharness {

namespace {
void normalize(std::vector<double>& v) {
  double norm = 0;
  for (double x : v) norm += x * x;
  if (norm == 0) throw ArgumentError("embedding is the zero vector");
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
}
}  // namespace

EmbeddingVector hash_embed(std::string_view text, std::size_t dim) {
  if (dim < 16) throw ArgumentError("hash_embed: dim must be >= 16");
  auto tokens = text::tokenize(text);
  if (tokens.empty()) throw ArgumentError("hash_embed: text has no tokens (zero vector)");
  EmbeddingVector e{std::vector<double>(dim, 0.0)};
  for (const auto& t : tokens) {
    std::uint64_t h = splitmix64(fnv1a64(t));
    double sign = (h >> 63) ? -1.0 : 1.0;
    e.values[h % dim] += sign;
  }
  // Colliding opposite signs can cancel out completely.
  normalize(e.values);
  return e;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw ArgumentError("cosine: dimension mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) return 0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

HttpEmbedder::HttpEmbedder(llmio::HttpEndpointConfig config, std::size_t dim,
                           llmio::BackendLimits limits)
    : endpoint_(std::move(config)), dim_(dim), limits_(limits) {}

EmbeddingVector HttpEmbedder::embed(const std::string& text) {
  const auto& cfg = endpoint_.config();
  auto value = llmio::with_retries(limits_, "embedder " + cfg.id, [&] {
    return endpoint_.extract(endpoint_.post({{"model", cfg.model}, {"input", text}}));
  });
  if (!value.is_array()) throw BackendError(cfg.id + ": embedding is not an array");
  EmbeddingVector e;
  for (const auto& x : value) {
    if (!x.is_number()) throw BackendError(cfg.id + ": embedding has a non-numeric entry");
    e.values.push_back(x.get<double>());
  }
  if (e.dim() != dim_) {
    throw BackendError(cfg.id + ": expected dim " + std::to_string(dim_) + ", got " +
                       std::to_string(e.dim()));
  }
  normalize(e.values);
  return e;
}

PairwiseAccuracyResult accumulate(const std::vector<ScoredTriplet>& scored) {
  PairwiseAccuracyResult r;
  for (const auto& s : scored) {
    double diff = s.positive_score - s.negative_score;
    bool tie = std::abs(diff) <= kTieEpsilon;
    bool win = !tie && diff > 0;
    for (auto* slice : {&r.overall, &r.by_difficulty[s.difficulty], &r.by_variant[s.variant]}) {
      ++slice->n;
      slice->wins += win ? 1 : 0;
      slice->ties += tie ? 1 : 0;
    }
  }
  return r;
}

std::vector<ScoredTriplet> score_triplets(const std::vector<generation::SyntheticTriplet>& triplets,
                                          const corpus::Catalog& catalog, Embedder& embedder,
                                          const corpus::FeatureLimits& limits) {
  std::vector<ScoredTriplet> scored;
  scored.reserve(triplets.size());
  for (const auto& t : triplets) {
    auto q = embedder.embed(t.query);
    auto pos = embedder.embed(
        corpus::render_feature_block(catalog.at(t.positive_id), t.context, limits).rendered_text);
    auto neg = embedder.embed(
        corpus::render_feature_block(catalog.at(t.negative_id), t.context, limits).rendered_text);
    scored.push_back({cosine(q, pos), cosine(q, neg), sampling::to_string(t.difficulty),
                      promptkit::to_string(t.variant)});
  }
  return scored;
}

PairwiseAccuracyResult pairwise_accuracy(const std::vector<generation::SyntheticTriplet>& triplets,
                                         const corpus::Catalog& catalog, Embedder& embedder,
                                         const corpus::FeatureLimits& limits) {
  if (triplets.empty()) throw ArgumentError("pairwise_accuracy: no triplets");
  auto r = accumulate(score_triplets(triplets, catalog, embedder, limits));
  r.embedder = embedder.name();
  r.dim = embedder.dim();
  return r;
}

nlohmann::json to_json(const PairwiseAccuracyResult& r, const std::string& dataset) {
  auto slice = [](const SliceResult& s) {
    return nlohmann::json{{"n", s.n}, {"wins", s.wins}, {"ties", s.ties}, {"accuracy", s.accuracy()}};
  };
  nlohmann::json by_difficulty = nlohmann::json::object(), by_variant = nlohmann::json::object();
  for (const auto& [k, s] : r.by_difficulty) by_difficulty[k] = slice(s);
  for (const auto& [k, s] : r.by_variant) by_variant[k] = slice(s);
  return {{"model", r.embedder},
          {"size", r.dim},
          {"dataset", dataset},
          {"accuracy", r.accuracy()},
          {"n", r.overall.n},
          {"wins", r.overall.wins},
          {"ties", r.overall.ties},
          {"slices", {{"difficulty", by_difficulty}, {"variant", by_variant}}}};
}

}  // namespace coldstart::evalharness

#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coldstart/corpus.hpp"
#include "coldstart/generation.hpp"
#include "coldstart/llmio.hpp"

namespace coldstart::evalharness {

inline constexpr double kTieEpsilon = 1e-12;

struct EmbeddingVector {
  std::vector<double> values;  // unit L2 norm
  std::size_t dim() const { return values.size(); }
};

// Signed feature hashing over normalized tokens, L2-normalized. Throws
// ArgumentError for dim < 16 or text without tokens.
EmbeddingVector hash_embed(std::string_view text, std::size_t dim);

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual EmbeddingVector embed(const std::string& text) = 0;
};

class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 512) : dim_(dim) {}
  std::string name() const override { return "hash"; }
  std::size_t dim() const override { return dim_; }
  EmbeddingVector embed(const std::string& text) override { return hash_embed(text, dim_); }

 private:
  std::size_t dim_;
};

// Remote embedder over the same JSON-over-HTTP contract as completion
// backends: POST {model, input} and read the vector at the response pointer.
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(llmio::HttpEndpointConfig config, std::size_t dim, llmio::BackendLimits limits = {});
  std::string name() const override { return endpoint_.config().id; }
  std::size_t dim() const override { return dim_; }
  EmbeddingVector embed(const std::string& text) override;

 private:
  llmio::HttpEndpoint endpoint_;
  std::size_t dim_;
  llmio::BackendLimits limits_;
};

struct SliceResult {
  std::size_t n = 0;
  std::size_t wins = 0;
  std::size_t ties = 0;
  double accuracy() const {
    return n ? (static_cast<double>(wins) + 0.5 * static_cast<double>(ties)) / static_cast<double>(n)
             : 0.0;
  }
};

struct PairwiseAccuracyResult {
  SliceResult overall;
  std::map<std::string, SliceResult> by_difficulty;
  std::map<std::string, SliceResult> by_variant;
  std::string embedder;
  std::size_t dim = 0;

  std::size_t n() const { return overall.n; }
  double accuracy() const { return overall.accuracy(); }
};

// Similarities of the query to its positive and negative listing.
struct ScoredTriplet {
  double positive_score = 0;
  double negative_score = 0;
  std::string difficulty;
  std::string variant;
};

PairwiseAccuracyResult accumulate(const std::vector<ScoredTriplet>& scored);

// Listing text is the rendered feature block in the triplet's context.
std::vector<ScoredTriplet> score_triplets(const std::vector<generation::SyntheticTriplet>& triplets,
                                          const corpus::Catalog& catalog, Embedder& embedder,
                                          const corpus::FeatureLimits& limits = {});

// Throws ArgumentError on an empty triplet set.
PairwiseAccuracyResult pairwise_accuracy(const std::vector<generation::SyntheticTriplet>& triplets,
                                         const corpus::Catalog& catalog, Embedder& embedder,
                                         const corpus::FeatureLimits& limits = {});

nlohmann::json to_json(const PairwiseAccuracyResult& r, const std::string& dataset);

}  // namespace coldstart::evalharness

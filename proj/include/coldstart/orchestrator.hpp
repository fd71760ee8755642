#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coldstart/corpus.hpp"
#include "coldstart/errors.hpp"
#include "coldstart/evalharness.hpp"
#include "coldstart/generation.hpp"
#include "coldstart/llmio.hpp"
#include "coldstart/promptkit.hpp"
#include "coldstart/random.hpp"
#include "coldstart/sampling.hpp"

namespace coldstart::orchestrator {

using Json = nlohmann::json;

// A pipeline failure tagged with the stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error("stage " + stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct BackendDefinition {
  std::string id;
  std::string kind = "mock";  // mock | http
  std::string url;
  std::string model;
  std::string response_pointer = "/choices/0/text";
  bool use_messages = false;
  int timeout_seconds = 60;
  llmio::BackendLimits limits;
};

struct EmbedderDefinition {
  std::string kind = "hash";  // hash | http
  std::size_t dim = 512;
  std::string id = "hash";
  std::string url;
  std::string model;
  std::string response_pointer = "/data/0/embedding";
};

struct PipelineConfig {
  std::string catalog_path;
  std::string sessions_path;
  std::string seeds_path;
  std::string real_queries_path;  // optional
  std::string out_dir = "runs";
  std::string prompts_dir;        // optional override of the built-in components
  std::string lexicon_path;       // optional override of the built-in lexicon

  // Keys: seed_controlled, seed_freeform, variety, or seed_guided (split
  // evenly between the two seed variants). Weights sum to 1.
  std::map<std::string, double> variant_mix = {{"seed_guided", 0.8}, {"variety", 0.2}};
  std::map<std::string, double> difficulty_mix = {{"easy", 0.6}, {"medium", 0.2}, {"hard", 0.2}};
  int target_count = 10000;
  std::string generator_backend = "mock";
  std::string judge_backend = "mock-judge";
  std::vector<BackendDefinition> backends;
  EmbedderDefinition embedder;
  corpus::FeatureLimits feature_limits;
  int max_repairs = 2;
  int max_tokens = 256;
  double hard_tau = 0.35;
  double eval_slice_fraction = 0.1;
  double counterfactual_fraction = 0.0;
  std::uint64_t master_seed = 42;
  bool baseline_mode = false;
  std::string run_date;  // YYYY-MM-DD; today (UTC) when empty
  int workers = 1;

  // Normalized weights per concrete variant.
  std::map<promptkit::VariantName, double> variant_weights() const;
  void validate() const;
};

PipelineConfig config_from_json(const Json& j, const std::string& base_dir = "");
PipelineConfig load_config(const std::string& path);
Json to_json(const PipelineConfig& c);
// SHA-256 of the canonical JSON of the fully defaulted config.
std::string config_hash(const PipelineConfig& c);

// Adds the configured backends plus built-in mocks "mock" and "mock-judge"
// (unless a definition reuses those ids).
void register_backends(const PipelineConfig& c, llmio::BackendRegistry& registry);
std::unique_ptr<evalharness::Embedder> make_embedder(const PipelineConfig& c);

struct Inputs {
  corpus::Catalog catalog;
  std::vector<corpus::SearchSession> sessions;
  std::vector<corpus::SeedQuery> seeds;
  std::optional<std::vector<corpus::SeedQuery>> real_queries;
  std::vector<std::string> warnings;
};

Inputs ingest(const PipelineConfig& c);

struct GenerationCounts {
  std::size_t slots = 0;
  std::size_t skipped_pairs = 0;
  std::size_t generated = 0;  // accepted by validation, before dedup
  std::size_t rejected = 0;
  std::size_t deduped = 0;
  std::size_t accepted = 0;
};

struct GenerationBatch {
  std::vector<sampling::ContrastivePair> pairs;
  std::vector<generation::SyntheticTriplet> triplets;
  std::vector<Json> rejections;
  GenerationCounts counts;
};

// Pair sampling, seeded variant/difficulty assignment, generation,
// validation and per-run dedup until target_count triplets survive or the
// slot budget runs out. Slot i draws from make_rng(master_seed, i).
GenerationBatch generate_batch(const PipelineConfig& c, const Inputs& inputs,
                               llmio::BackendRegistry& backends);

struct RunManifest {
  std::string run_id;
  std::string timestamp;
  std::string config_hash;
  std::string run_dir;
  std::map<std::string, std::string> files;  // name -> sha256
  Json counts;
  Json quality;
};

Json to_json(const RunManifest& m);

// ingest -> sampling -> generation -> relabel -> analysis -> eval ->
// manifest. Outputs are staged in a temporary directory and moved into place
// only when every stage succeeds. Stage failures raise StageError.
RunManifest run_daily(const PipelineConfig& c);
RunManifest run_daily(const PipelineConfig& c, llmio::BackendRegistry& backends);

std::string today_utc();

}  // namespace coldstart::orchestrator

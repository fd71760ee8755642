#include "coldstart/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>
#include <unordered_set>

#include "coldstart/analysis.hpp"
#include "coldstart/hashing.hpp"
#include "coldstart/jsonl.hpp"
#include "coldstart/judging.hpp"
#include "coldstart/lexicon.hpp"
#include "coldstart/text.hpp"

namespace coldstart::orchestrator {

namespace fs = std::filesystem;
using promptkit::VariantName;
using sampling::Difficulty;

namespace {

const std::vector<std::string>& builtin_mock_ids() {
  static const std::vector<std::string> ids = {"mock", "mock-judge"};
  return ids;
}

std::string resolve_path(const std::string& p, const std::string& base_dir) {
  if (p.empty() || base_dir.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

// Rejects keys outside `allowed` so typos surface instead of silently
// falling back to defaults.
void check_keys(const Json& j, const std::vector<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

llmio::BackendLimits limits_from_json(const Json& j) {
  llmio::BackendLimits l;
  if (j.is_null()) return l;
  check_keys(j, {"requests_per_second", "max_concurrency", "max_retries", "initial_backoff_ms",
                 "backoff_multiplier"},
             "limits");
  read(j, "requests_per_second", l.requests_per_second);
  read(j, "max_concurrency", l.max_concurrency);
  read(j, "max_retries", l.max_retries);
  long long backoff = l.initial_backoff.count();
  read(j, "initial_backoff_ms", backoff);
  l.initial_backoff = std::chrono::milliseconds(backoff);
  read(j, "backoff_multiplier", l.backoff_multiplier);
  return l;
}

Json limits_to_json(const llmio::BackendLimits& l) {
  return {{"requests_per_second", l.requests_per_second},
          {"max_concurrency", l.max_concurrency},
          {"max_retries", l.max_retries},
          {"initial_backoff_ms", l.initial_backoff.count()},
          {"backoff_multiplier", l.backoff_multiplier}};
}

void check_mix(const std::map<std::string, double>& mix, const std::string& name) {
  if (mix.empty()) throw ConfigError(name + " is empty");
  double total = 0;
  for (const auto& [key, w] : mix) {
    if (!(w >= 0)) throw ConfigError(name + ": weight for '" + key + "' must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError(name + ": weights sum to " + std::to_string(total) + ", expected 1");
  }
}

}  // namespace

std::map<VariantName, double> PipelineConfig::variant_weights() const {
  std::map<VariantName, double> out;
  if (baseline_mode) {
    out[VariantName::variety] = 1.0;
    return out;
  }
  for (const auto& [key, w] : variant_mix) {
    if (key == "seed_guided") {
      out[VariantName::seed_controlled] += w / 2;
      out[VariantName::seed_freeform] += w / 2;
    } else {
      VariantName v;
      try {
        v = promptkit::variant_from_string(key);
      } catch (const Error&) {
        throw ConfigError("variant_mix: unknown variant '" + key + "'");
      }
      out[v] += w;
    }
  }
  return out;
}

void PipelineConfig::validate() const {
  if (target_count < 1) throw ConfigError("target_count must be >= 1");
  check_mix(variant_mix, "variant_mix");
  variant_weights();
  check_mix(difficulty_mix, "difficulty_mix");
  for (const auto& [key, _] : difficulty_mix) {
    try {
      sampling::difficulty_from_string(key);
    } catch (const Error&) {
      throw ConfigError("difficulty_mix: unknown difficulty '" + key + "'");
    }
  }
  if (catalog_path.empty()) throw ConfigError("inputs.catalog is required");
  if (sessions_path.empty()) throw ConfigError("inputs.sessions is required");
  if (seeds_path.empty() && !baseline_mode) {
    throw ConfigError("inputs.seed_queries is required unless baseline_mode is set");
  }
  if (out_dir.empty()) throw ConfigError("out_dir is required");
  if (!(hard_tau > 0)) throw ConfigError("hard_tau must be > 0");
  if (eval_slice_fraction < 0 || eval_slice_fraction > 1) {
    throw ConfigError("eval_slice_fraction must be in [0, 1]");
  }
  if (counterfactual_fraction < 0 || counterfactual_fraction > 1) {
    throw ConfigError("counterfactual_fraction must be in [0, 1]");
  }
  if (max_repairs < 0) throw ConfigError("max_repairs must be >= 0");
  if (max_tokens < 64) throw ConfigError("max_tokens must be >= 64");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (embedder.kind != "hash" && embedder.kind != "http") {
    throw ConfigError("embedder.kind must be 'hash' or 'http'");
  }
  if (embedder.dim < 16) throw ConfigError("embedder.dim must be >= 16");

  std::unordered_set<std::string> ids(builtin_mock_ids().begin(), builtin_mock_ids().end());
  for (const auto& b : backends) {
    if (b.id.empty()) throw ConfigError("backend definition without id");
    if (b.kind != "mock" && b.kind != "http") {
      throw ConfigError("backend '" + b.id + "': kind must be 'mock' or 'http'");
    }
    if (b.kind == "http" && b.url.empty()) throw ConfigError("backend '" + b.id + "': url is required");
    ids.insert(b.id);
  }
  if (!ids.count(generator_backend)) throw ConfigError("unknown generator backend '" + generator_backend + "'");
  if (!ids.count(judge_backend)) throw ConfigError("unknown judge backend '" + judge_backend + "'");
}

PipelineConfig config_from_json(const Json& j, const std::string& base_dir) {
  check_keys(j,
             {"inputs", "out_dir", "run_date", "master_seed", "target_count", "baseline_mode",
              "variant_mix", "difficulty_mix", "generator", "judge", "backends", "embedder",
              "feature_limits", "max_repairs", "max_tokens", "hard_tau", "eval_slice_fraction",
              "counterfactual_fraction", "workers"},
             "config");
  PipelineConfig c;
  if (j.contains("inputs")) {
    const Json& in = j.at("inputs");
    check_keys(in, {"catalog", "sessions", "seed_queries", "real_queries", "lexicon", "prompts_dir"},
               "inputs");
    read(in, "catalog", c.catalog_path);
    read(in, "sessions", c.sessions_path);
    read(in, "seed_queries", c.seeds_path);
    read(in, "real_queries", c.real_queries_path);
    read(in, "lexicon", c.lexicon_path);
    read(in, "prompts_dir", c.prompts_dir);
  }
  read(j, "out_dir", c.out_dir);
  read(j, "run_date", c.run_date);
  read(j, "master_seed", c.master_seed);
  read(j, "target_count", c.target_count);
  read(j, "baseline_mode", c.baseline_mode);
  read(j, "variant_mix", c.variant_mix);
  read(j, "difficulty_mix", c.difficulty_mix);
  read(j, "generator", c.generator_backend);
  read(j, "judge", c.judge_backend);
  read(j, "max_repairs", c.max_repairs);
  read(j, "max_tokens", c.max_tokens);
  read(j, "hard_tau", c.hard_tau);
  read(j, "eval_slice_fraction", c.eval_slice_fraction);
  read(j, "counterfactual_fraction", c.counterfactual_fraction);
  read(j, "workers", c.workers);

  if (j.contains("backends")) {
    if (!j.at("backends").is_array()) throw ConfigError("backends: expected an array");
    for (const auto& b : j.at("backends")) {
      check_keys(b, {"id", "kind", "url", "model", "response_pointer", "use_messages",
                     "timeout_seconds", "limits"},
                 "backends");
      BackendDefinition d;
      read(b, "id", d.id);
      read(b, "kind", d.kind);
      read(b, "url", d.url);
      read(b, "model", d.model);
      read(b, "response_pointer", d.response_pointer);
      read(b, "use_messages", d.use_messages);
      read(b, "timeout_seconds", d.timeout_seconds);
      if (b.contains("limits")) d.limits = limits_from_json(b.at("limits"));
      c.backends.push_back(std::move(d));
    }
  }
  if (j.contains("embedder")) {
    const Json& e = j.at("embedder");
    check_keys(e, {"kind", "dim", "id", "url", "model", "response_pointer"}, "embedder");
    read(e, "kind", c.embedder.kind);
    read(e, "dim", c.embedder.dim);
    read(e, "id", c.embedder.id);
    read(e, "url", c.embedder.url);
    read(e, "model", c.embedder.model);
    read(e, "response_pointer", c.embedder.response_pointer);
  }
  if (j.contains("feature_limits")) {
    const Json& f = j.at("feature_limits");
    check_keys(f, {"description_chars", "top_amenities"}, "feature_limits");
    read(f, "description_chars", c.feature_limits.description_chars);
    read(f, "top_amenities", c.feature_limits.top_amenities);
  }

  c.catalog_path = resolve_path(c.catalog_path, base_dir);
  c.sessions_path = resolve_path(c.sessions_path, base_dir);
  c.seeds_path = resolve_path(c.seeds_path, base_dir);
  c.real_queries_path = resolve_path(c.real_queries_path, base_dir);
  c.lexicon_path = resolve_path(c.lexicon_path, base_dir);
  c.prompts_dir = resolve_path(c.prompts_dir, base_dir);
  c.out_dir = resolve_path(c.out_dir, base_dir);
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
  Json j;
  try {
    j = Json::parse(jsonl::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path().string());
}

Json to_json(const PipelineConfig& c) {
  Json backends = Json::array();
  for (const auto& b : c.backends) {
    backends.push_back({{"id", b.id},
                        {"kind", b.kind},
                        {"url", b.url},
                        {"model", b.model},
                        {"response_pointer", b.response_pointer},
                        {"use_messages", b.use_messages},
                        {"timeout_seconds", b.timeout_seconds},
                        {"limits", limits_to_json(b.limits)}});
  }
  return {
      {"inputs",
       {{"catalog", c.catalog_path},
        {"sessions", c.sessions_path},
        {"seed_queries", c.seeds_path},
        {"real_queries", c.real_queries_path},
        {"lexicon", c.lexicon_path},
        {"prompts_dir", c.prompts_dir}}},
      {"out_dir", c.out_dir},
      {"run_date", c.run_date},
      {"master_seed", c.master_seed},
      {"target_count", c.target_count},
      {"baseline_mode", c.baseline_mode},
      {"variant_mix", c.variant_mix},
      {"difficulty_mix", c.difficulty_mix},
      {"generator", c.generator_backend},
      {"judge", c.judge_backend},
      {"backends", backends},
      {"embedder",
       {{"kind", c.embedder.kind},
        {"dim", c.embedder.dim},
        {"id", c.embedder.id},
        {"url", c.embedder.url},
        {"model", c.embedder.model},
        {"response_pointer", c.embedder.response_pointer}}},
      {"feature_limits",
       {{"description_chars", c.feature_limits.description_chars},
        {"top_amenities", c.feature_limits.top_amenities}}},
      {"max_repairs", c.max_repairs},
      {"max_tokens", c.max_tokens},
      {"hard_tau", c.hard_tau},
      {"eval_slice_fraction", c.eval_slice_fraction},
      {"counterfactual_fraction", c.counterfactual_fraction},
      {"workers", c.workers},
  };
}

std::string config_hash(const PipelineConfig& c) { return sha256_hex(to_json(c).dump()); }

void register_backends(const PipelineConfig& c, llmio::BackendRegistry& reg) {
  for (const auto& b : c.backends) {
    if (b.kind == "mock") {
      reg.add(std::make_shared<llmio::MockBackend>(b.id), b.limits);
    } else {
      llmio::HttpEndpointConfig h{b.id, b.url, b.model, b.response_pointer, b.use_messages,
                                  b.timeout_seconds};
      reg.add(std::make_shared<llmio::HttpBackend>(h), b.limits);
    }
  }
  for (const auto& id : builtin_mock_ids()) {
    if (!reg.contains(id)) reg.add(std::make_shared<llmio::MockBackend>(id));
  }
}

std::unique_ptr<evalharness::Embedder> make_embedder(const PipelineConfig& c) {
  if (c.embedder.kind == "hash") return std::make_unique<evalharness::HashEmbedder>(c.embedder.dim);
  llmio::HttpEndpointConfig h{c.embedder.id, c.embedder.url, c.embedder.model,
                              c.embedder.response_pointer, false, 60};
  return std::make_unique<evalharness::HttpEmbedder>(h, c.embedder.dim);
}

std::string today_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[16];
  std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
  return buf;
}

Inputs ingest(const PipelineConfig& c) {
  Inputs in;
  in.catalog = corpus::Catalog(corpus::load_catalog(c.catalog_path));
  in.sessions = corpus::load_sessions(c.sessions_path, &in.warnings);
  if (!c.seeds_path.empty()) in.seeds = corpus::load_seed_queries(c.seeds_path);
  if (!c.real_queries_path.empty()) in.real_queries = corpus::load_seed_queries(c.real_queries_path);
  if (in.sessions.empty()) throw ValidationError("no search sessions in " + c.sessions_path);
  if (in.catalog.size() < 2) throw ValidationError("catalog needs at least two listings");
  if (!c.baseline_mode && in.seeds.empty()) {
    throw ValidationError("no seed queries in " + c.seeds_path);
  }
  return in;
}

namespace {

struct SlotResult {
  std::optional<sampling::ContrastivePair> pair;
  std::optional<std::string> skipped;
  std::optional<generation::TripletOutcome> outcome;
};

class SlotRunner {
 public:
  SlotRunner(const PipelineConfig& c, const Inputs& in, llmio::BackendRegistry& backends)
      : c_(c), in_(in), backends_(backends), embedder_(make_embedder(c)) {
    if (!c.prompts_dir.empty()) custom_prompts_.emplace(promptkit::PromptLibrary::from_directory(c.prompts_dir));
    settings_.max_repairs = c.max_repairs;
    settings_.max_tokens = c.max_tokens;
    settings_.timestamp = c.run_date.empty() ? today_utc() : c.run_date;
    settings_.feature_limits = c.feature_limits;
    settings_.prompts = custom_prompts_ ? &*custom_prompts_ : &promptkit::PromptLibrary::builtin();

    for (const auto& [v, w] : c.variant_weights()) {
      variants_.push_back(v);
      variant_weights_.push_back(w);
    }
    for (const auto& [d, w] : c.difficulty_mix) {
      difficulties_.push_back(sampling::difficulty_from_string(d));
      difficulty_weights_.push_back(w);
    }
    listing_embedder_ = [this](const corpus::Listing& l, const corpus::SearchContext& ctx) {
      return embedder_->embed(corpus::render_feature_block(l, ctx, c_.feature_limits).rendered_text)
          .values;
    };
  }

  SlotResult run(std::size_t slot) const {
    SlotResult r;
    Rng rng = make_rng(c_.master_seed, slot);
    const auto& session = in_.sessions[uniform_index(rng, in_.sessions.size())];
    Difficulty difficulty = difficulties_[weighted_index(rng, difficulty_weights_)];
    VariantName variant = variants_[weighted_index(rng, variant_weights_)];
    std::optional<corpus::SeedQuery> seed;
    if (variant != VariantName::variety) seed = in_.seeds[uniform_index(rng, in_.seeds.size())];

    auto sampled = sampling::sample_pair(session, in_.catalog, rng, difficulty != Difficulty::easy);
    if (!sampled) {
      r.skipped = sampling::to_string(*sampled.skipped);
      return r;
    }
    sampling::ContrastivePair pair = *sampled.pair;
    if (difficulty == Difficulty::hard) {
      auto hard = sampling::hierarchical_sample({pair}, listing_embedder_, c_.hard_tau, true);
      if (hard.empty()) {
        r.skipped = "outside_hard_tau";
        return r;
      }
      pair = hard.front();
    }
    r.outcome = generation::generate_triplet(pair, seed, promptkit::PromptVariant::defaults(variant),
                                             c_.generator_backend, backends_, settings_);
    r.pair = std::move(pair);
    return r;
  }

 private:
  const PipelineConfig& c_;
  const Inputs& in_;
  llmio::BackendRegistry& backends_;
  std::unique_ptr<evalharness::Embedder> embedder_;
  std::optional<promptkit::PromptLibrary> custom_prompts_;
  generation::GenerationSettings settings_;
  std::vector<VariantName> variants_;
  std::vector<double> variant_weights_;
  std::vector<Difficulty> difficulties_;
  std::vector<double> difficulty_weights_;
  sampling::ListingEmbedder listing_embedder_;
};

std::vector<SlotResult> run_slots(const SlotRunner& runner, std::size_t begin, std::size_t end,
                                  int workers) {
  std::vector<SlotResult> results(end - begin);
  std::atomic<std::size_t> next{begin};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < end;) {
      try {
        results[i - begin] = runner.run(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = end;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace

GenerationBatch generate_batch(const PipelineConfig& c, const Inputs& inputs,
                               llmio::BackendRegistry& backends) {
  SlotRunner runner(c, inputs, backends);
  GenerationBatch batch;
  const std::size_t target = static_cast<std::size_t>(c.target_count);
  const std::size_t max_slots = std::max<std::size_t>(target * 20, 1000);
  std::unordered_set<std::string> seen;

  std::size_t next_slot = 0;
  while (batch.triplets.size() < target && next_slot < max_slots) {
    std::size_t need = target - batch.triplets.size();
    std::size_t end = std::min(max_slots, next_slot + need + need / 4 + 16);
    auto results = run_slots(runner, next_slot, end, c.workers);
    for (std::size_t k = 0; k < results.size() && batch.triplets.size() < target; ++k) {
      auto& r = results[k];
      batch.counts.slots = next_slot + k + 1;
      if (r.skipped) {
        ++batch.counts.skipped_pairs;
        continue;
      }
      batch.pairs.push_back(*r.pair);
      if (auto* rej = std::get_if<generation::Rejection>(&*r.outcome)) {
        ++batch.counts.rejected;
        batch.rejections.push_back(generation::to_json(*rej));
        continue;
      }
      auto& t = std::get<generation::SyntheticTriplet>(*r.outcome);
      ++batch.counts.generated;
      if (!seen.insert(text::dedup_key(t.query)).second) {
        ++batch.counts.deduped;
        generation::Rejection dup;
        dup.pair_ref = r.pair->id();
        dup.variant = t.variant;
        dup.report.query = t.query;
        dup.report.violations = {generation::Violation::DUPLICATE};
        dup.attempts = t.provenance.attempts;
        batch.rejections.push_back(generation::to_json(dup));
        continue;
      }
      batch.triplets.push_back(std::move(t));
    }
    next_slot = end;
  }
  batch.counts.accepted = batch.triplets.size();
  return batch;
}

Json to_json(const RunManifest& m) {
  Json files = Json::object();
  for (const auto& [name, hash] : m.files) files[name] = hash;
  return {{"run_id", m.run_id},   {"timestamp", m.timestamp}, {"config_hash", m.config_hash},
          {"files", files},       {"counts", m.counts},       {"quality", m.quality}};
}

namespace {

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void write_json(const fs::path& path, const Json& j) { jsonl::write_text(path.string(), j.dump(2) + "\n"); }

std::vector<std::string> texts(const std::vector<corpus::SeedQuery>& seeds) {
  std::vector<std::string> out;
  out.reserve(seeds.size());
  for (const auto& s : seeds) out.push_back(s.text);
  return out;
}

}  // namespace

RunManifest run_daily(const PipelineConfig& c) {
  c.validate();
  llmio::BackendRegistry backends;
  register_backends(c, backends);
  return run_daily(c, backends);
}

RunManifest run_daily(const PipelineConfig& config, llmio::BackendRegistry& backends) {
  PipelineConfig c = config;
  if (c.run_date.empty()) c.run_date = today_utc();
  c.validate();

  RunManifest m;
  m.config_hash = config_hash(c);
  m.timestamp = c.run_date;
  m.run_id = "run-" + c.run_date + "-" + m.config_hash.substr(0, 8);
  const fs::path final_dir = fs::path(c.out_dir) / m.run_id;
  const fs::path staging = fs::path(c.out_dir) / ("." + m.run_id + ".partial");
  m.run_dir = final_dir.string();

  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    Inputs in = stage("ingest", [&] { return ingest(c); });

    GenerationBatch batch = stage("generation", [&] {
      auto b = generate_batch(c, in, backends);
      if (b.triplets.empty()) throw Error("no triplets survived generation");
      std::vector<Json> rows;
      for (const auto& p : b.pairs) rows.push_back(sampling::to_json(p));
      jsonl::write_all((staging / "pairs.jsonl").string(), rows);
      generation::save_triplets((staging / "triplets.jsonl").string(), b.triplets);
      jsonl::write_all((staging / "rejections.jsonl").string(), b.rejections);
      return b;
    });

    std::size_t counterfactuals = 0, edit_rejections = 0;
    if (c.counterfactual_fraction > 0) {
      stage("counterfactual", [&] {
        Rng rng = make_rng(c.master_seed, 0xcf00cf00ULL);
        std::vector<generation::SyntheticTriplet> edited;
        std::vector<Json> listings;
        auto n = static_cast<std::size_t>(
            std::floor(c.counterfactual_fraction * static_cast<double>(batch.triplets.size())));
        for (std::size_t i = 0; i < n; ++i) {
          auto r = generation::counterfactual_edit(batch.triplets[i], in.catalog, rng);
          if (auto* ok = std::get_if<generation::CounterfactualResult>(&r)) {
            edited.push_back(ok->triplet);
            listings.push_back(corpus::to_json(ok->edited_negative));
          } else {
            ++edit_rejections;
          }
        }
        counterfactuals = edited.size();
        generation::save_triplets((staging / "counterfactual_triplets.jsonl").string(), edited);
        jsonl::write_all((staging / "counterfactual_listings.jsonl").string(), listings);
      });
    }

    judging::RelabelResult vj = stage("relabel", [&] {
      Rng rng = make_rng(c.master_seed, 0x7e1abe1ULL);
      std::vector<std::size_t> order(batch.triplets.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      shuffle(rng, order);
      auto n = static_cast<std::size_t>(
          std::ceil(c.eval_slice_fraction * static_cast<double>(order.size())));
      order.resize(n);
      std::sort(order.begin(), order.end());
      std::vector<generation::SyntheticTriplet> slice;
      for (auto i : order) slice.push_back(batch.triplets[i]);
      std::vector<std::string> pool;
      for (const auto& l : in.catalog.listings()) pool.push_back(l.id);
      std::optional<promptkit::PromptLibrary> lib;
      if (!c.prompts_dir.empty()) lib.emplace(promptkit::PromptLibrary::from_directory(c.prompts_dir));
      judging::LlmJudge judge(backends, c.judge_backend, lib ? &*lib : nullptr);
      judging::RelabelResult r;
      if (!slice.empty()) r = judging::relabel(slice, in.catalog, pool, judge, rng, c.feature_limits, true);
      judging::save_labels((staging / "vj_labels.jsonl").string(), r.labels);
      return r;
    });

    analysis::ComparisonReport report = stage("analysis", [&] {
      std::vector<analysis::NamedQueries> sets;
      std::vector<std::string> refs;
      analysis::CompareOptions opts;
      std::optional<lexicon::AttributeLexicon> lex;
      if (!c.lexicon_path.empty()) {
        lex.emplace(lexicon::AttributeLexicon::load(c.lexicon_path));
        opts.lexicon = &*lex;
      }
      analysis::NamedQueries all{"synthetic", {}};
      std::map<VariantName, analysis::NamedQueries> by_variant;
      for (const auto& t : batch.triplets) {
        all.queries.push_back(t.query);
        auto& slot = by_variant[t.variant];
        slot.name = "synthetic/" + promptkit::to_string(t.variant);
        slot.queries.push_back(t.query);
      }
      sets.push_back(std::move(all));
      for (auto& [_, q] : by_variant) {
        opts.variant_rows.push_back(q.name);
        sets.push_back(std::move(q));
      }
      if (!in.seeds.empty()) {
        sets.push_back({"seed", texts(in.seeds)});
        refs.push_back("seed");
      }
      if (in.real_queries && !in.real_queries->empty()) {
        sets.push_back({"real", texts(*in.real_queries)});
        refs.push_back("real");
      }
      if (refs.empty()) throw Error("no reference dataset (seed or real queries) to compare against");
      auto r = analysis::compare(sets, refs, opts);
      jsonl::write_text((staging / "report.md").string(), analysis::render_markdown(r));
      write_json(staging / "report.json", analysis::to_json(r));
      return r;
    });

    evalharness::PairwiseAccuracyResult eval = stage("eval", [&] {
      auto embedder = make_embedder(c);
      auto r = evalharness::pairwise_accuracy(batch.triplets, in.catalog, *embedder, c.feature_limits);
      write_json(staging / "eval_result.json", evalharness::to_json(r, "synthetic"));
      return r;
    });

    stage("manifest", [&] {
      std::size_t seed_guided = 0;
      for (const auto& t : batch.triplets) seed_guided += t.variant != VariantName::variety;
      const auto& cnt = batch.counts;
      m.counts = {{"slots", cnt.slots},
                  {"skipped_pairs", cnt.skipped_pairs},
                  {"generated", cnt.generated},
                  {"rejected", cnt.rejected},
                  {"deduped", cnt.deduped},
                  {"accepted", cnt.accepted},
                  {"target", c.target_count},
                  {"vj_labels", vj.labels.size()},
                  {"judge_parse_errors", vj.parse_errors},
                  {"counterfactuals", counterfactuals},
                  {"counterfactual_rejections", edit_rejections}};
      Json kl = Json::object();
      for (const auto& ref : report.references) {
        kl[ref] = {{"length", report.length_kl.at("synthetic").at(ref)},
                   {"attribute_count", report.attr_count_kl.at("synthetic").at(ref)},
                   {"attribute_type", report.attr_type_kl.at("synthetic").at(ref)}};
      }
      const auto& stats = report.stats("synthetic");
      Json slices = Json::object();
      for (const auto& [d, s] : eval.by_difficulty) slices[d] = s.accuracy();
      m.quality = {{"seed_guided_fraction",
                    static_cast<double>(seed_guided) / static_cast<double>(batch.triplets.size())},
                   {"mean_query_words", stats.length.mean},
                   {"mean_attributes", stats.attributes.mean_attrs},
                   {"kl_vs_reference", kl},
                   {"pairwise_accuracy", eval.accuracy()},
                   {"judge_order_flip_rate", vj.order_flip_rate()},
                   {"pairwise_accuracy_by_difficulty", slices}};

      Json usage = Json::object();
      for (const auto& u : backends.usage()) {
        auto& row = usage[u.backend_id];
        if (row.is_null()) row = {{"calls", 0}, {"prompt_tokens", 0}, {"completion_tokens", 0}};
        row["calls"] = row["calls"].get<long long>() + 1;
        row["prompt_tokens"] = row["prompt_tokens"].get<long long>() + u.prompt_tokens;
        row["completion_tokens"] = row["completion_tokens"].get<long long>() + u.completion_tokens;
      }
      write_json(staging / "usage.json", usage);

      for (const auto& entry : fs::directory_iterator(staging)) {
        if (entry.is_regular_file()) {
          m.files[entry.path().filename().string()] = sha256_file(entry.path().string());
        }
      }
      write_json(staging / "manifest.json", to_json(m));
    });
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }

  fs::remove_all(final_dir);
  fs::rename(staging, final_dir);
  return m;
}

}  // namespace coldstart::orchestrator

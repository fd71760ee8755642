#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "coldstart/generation.hpp"
#include "coldstart/hashing.hpp"
#include "coldstart/judging.hpp"
#include "coldstart/jsonl.hpp"
#include "coldstart/orchestrator.hpp"
#include "support.hpp"

using namespace coldstart;
using orchestrator::PipelineConfig;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Fixture inputs written once per process.
struct Inputs {
  testsupport::TempDir dir;
  Inputs() {
    const auto& fx = testsupport::fixture();
    corpus::save_catalog(dir.file("listings.jsonl"), fx.catalog);
    corpus::save_sessions(dir.file("sessions.jsonl"), fx.sessions);
    corpus::save_seed_queries(dir.file("seeds.jsonl"), fx.seed_queries);
    corpus::save_seed_queries(dir.file("real.jsonl"), corpus::generate_real_queries(42, 300));
  }
};

const Inputs& inputs() {
  static const Inputs in;
  return in;
}

Json base_json(const std::string& out_dir, int target = 100) {
  return {{"inputs",
           {{"catalog", inputs().dir.file("listings.jsonl")},
            {"sessions", inputs().dir.file("sessions.jsonl")},
            {"seed_queries", inputs().dir.file("seeds.jsonl")},
            {"real_queries", inputs().dir.file("real.jsonl")}}},
          {"out_dir", out_dir},
          {"run_date", "2026-01-15"},
          {"master_seed", 42},
          {"target_count", target}};
}

}  // namespace

TEST(Config, Defaults) {
  auto c = orchestrator::config_from_json(base_json("/tmp/x"));
  EXPECT_EQ(c.generator_backend, "mock");
  EXPECT_EQ(c.judge_backend, "mock-judge");
  EXPECT_DOUBLE_EQ(c.eval_slice_fraction, 0.1);
  EXPECT_EQ(orchestrator::config_from_json({{"inputs", base_json("x").at("inputs")}}).target_count, 10000);
  auto w = c.variant_weights();
  EXPECT_DOUBLE_EQ(w.at(promptkit::VariantName::seed_controlled), 0.4);
  EXPECT_DOUBLE_EQ(w.at(promptkit::VariantName::seed_freeform), 0.4);
  EXPECT_DOUBLE_EQ(w.at(promptkit::VariantName::variety), 0.2);
}

TEST(Config, BaselineUsesVarietyOnly) {
  auto j = base_json("/tmp/x");
  j["baseline_mode"] = true;
  auto w = orchestrator::config_from_json(j).variant_weights();
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w.at(promptkit::VariantName::variety), 1.0);
}

TEST(Config, InvalidConfigsRejected) {
  auto bad = [](auto mutate) {
    auto j = base_json("/tmp/x");
    mutate(j);
    EXPECT_THROW(orchestrator::config_from_json(j), ConfigError) << j.dump();
  };
  bad([](Json& j) { j["variant_mix"] = {{"seed_guided", 0.8}, {"variety", 0.3}}; });
  bad([](Json& j) { j["variant_mix"] = {{"bogus", 1.0}}; });
  bad([](Json& j) { j["difficulty_mix"] = {{"easy", 0.5}}; });
  bad([](Json& j) { j["target_count"] = 0; });
  bad([](Json& j) { j["generator"] = "nope"; });
  bad([](Json& j) { j["tpyo"] = 1; });
  bad([](Json& j) { j["target_count"] = "many"; });
  bad([](Json& j) { j["backends"] = Json::array({{{"id", "h"}, {"kind", "http"}}}); });
}

TEST(Config, WeightsWithinTolerance) {
  auto j = base_json("/tmp/x");
  j["variant_mix"] = {{"seed_controlled", 0.4 + 5e-10}, {"seed_freeform", 0.4}, {"variety", 0.2}};
  EXPECT_NO_THROW(orchestrator::config_from_json(j));
}

TEST(Config, RelativePathsResolveAgainstConfigFile) {
  testsupport::TempDir dir;
  jsonl::write_text(dir.file("c.json"), R"({"inputs":{"catalog":"a.jsonl","sessions":"b.jsonl","seed_queries":"s.jsonl"}})");
  auto c = orchestrator::load_config(dir.file("c.json"));
  EXPECT_EQ(c.catalog_path, dir.file("a.jsonl"));
  EXPECT_THROW(orchestrator::load_config(dir.file("missing.json")), ConfigError);
}

TEST(Config, HashChangesIffAnyFieldChanges) {
  auto base = orchestrator::config_from_json(base_json("/tmp/x"));
  auto h = orchestrator::config_hash(base);
  EXPECT_EQ(h, orchestrator::config_hash(orchestrator::config_from_json(base_json("/tmp/x"))));
  std::vector<std::function<void(PipelineConfig&)>> edits = {
      [](auto& c) { c.catalog_path += "x"; },
      [](auto& c) { c.sessions_path += "x"; },
      [](auto& c) { c.seeds_path += "x"; },
      [](auto& c) { c.real_queries_path += "x"; },
      [](auto& c) { c.out_dir += "x"; },
      [](auto& c) { c.prompts_dir = "p"; },
      [](auto& c) { c.lexicon_path = "l"; },
      [](auto& c) { c.variant_mix = {{"variety", 1.0}}; },
      [](auto& c) { c.difficulty_mix = {{"easy", 1.0}}; },
      [](auto& c) { c.target_count += 1; },
      [](auto& c) { c.generator_backend = "mock-judge"; },
      [](auto& c) { c.judge_backend = "mock"; },
      [](auto& c) { c.backends.push_back({"extra", "mock"}); },
      [](auto& c) { c.embedder.dim = 256; },
      [](auto& c) { c.feature_limits.description_chars = 10; },
      [](auto& c) { c.feature_limits.top_amenities = 3; },
      [](auto& c) { c.max_repairs = 1; },
      [](auto& c) { c.max_tokens = 512; },
      [](auto& c) { c.hard_tau = 0.2; },
      [](auto& c) { c.eval_slice_fraction = 0.2; },
      [](auto& c) { c.counterfactual_fraction = 0.1; },
      [](auto& c) { c.master_seed = 43; },
      [](auto& c) { c.baseline_mode = true; },
      [](auto& c) { c.run_date = "2026-01-16"; },
      [](auto& c) { c.workers = 2; },
  };
  for (std::size_t i = 0; i < edits.size(); ++i) {
    auto c = base;
    edits[i](c);
    EXPECT_NE(orchestrator::config_hash(c), h) << "edit " << i;
  }
}

TEST(RunDaily, OutputsManifestAndIdempotentRerun) {
  testsupport::TempDir out;
  auto c = orchestrator::config_from_json(base_json(out.path().string(), 100));
  auto m1 = orchestrator::run_daily(c);
  EXPECT_EQ(m1.counts.at("accepted"), 100);
  EXPECT_EQ(m1.timestamp, "2026-01-15");
  EXPECT_EQ(m1.run_id, "run-2026-01-15-" + m1.config_hash.substr(0, 8));
  for (const char* f : {"pairs.jsonl", "triplets.jsonl", "rejections.jsonl", "vj_labels.jsonl", "report.md",
                        "report.json", "eval_result.json", "usage.json"}) {
    ASSERT_TRUE(m1.files.count(f)) << f;
    EXPECT_EQ(sha256_file((fs::path(m1.run_dir) / f).string()), m1.files.at(f)) << f;
  }
  EXPECT_TRUE(fs::exists(fs::path(m1.run_dir) / "manifest.json"));
  EXPECT_EQ(generation::load_triplets((fs::path(m1.run_dir) / "triplets.jsonl").string()).size(), 100u);
  EXPECT_EQ(judging::load_labels((fs::path(m1.run_dir) / "vj_labels.jsonl").string()).size(), 10u);

  auto manifest1 = jsonl::read_text((fs::path(m1.run_dir) / "manifest.json").string());
  auto m2 = orchestrator::run_daily(c);
  EXPECT_EQ(m2.files, m1.files);
  EXPECT_EQ(jsonl::read_text((fs::path(m2.run_dir) / "manifest.json").string()), manifest1);
  for (const auto& e : fs::directory_iterator(out.path())) {
    EXPECT_EQ(e.path().string().find(".partial"), std::string::npos) << e.path();
  }
}

TEST(RunDaily, ParallelWorkersMatchSerial) {
  testsupport::TempDir a, b;
  auto ja = base_json(a.path().string(), 150);
  auto jb = base_json(b.path().string(), 150);
  jb["workers"] = 4;
  auto ma = orchestrator::run_daily(orchestrator::config_from_json(ja));
  auto mb = orchestrator::run_daily(orchestrator::config_from_json(jb));
  EXPECT_EQ(ma.files.at("triplets.jsonl"), mb.files.at("triplets.jsonl"));
  EXPECT_EQ(ma.files.at("eval_result.json"), mb.files.at("eval_result.json"));
}

TEST(RunDaily, BaselineHasNoSeedQueries) {
  testsupport::TempDir out;
  auto j = base_json(out.path().string(), 80);
  j["baseline_mode"] = true;
  auto m = orchestrator::run_daily(orchestrator::config_from_json(j));
  for (const auto& t : generation::load_triplets((fs::path(m.run_dir) / "triplets.jsonl").string())) {
    EXPECT_FALSE(t.provenance.seed_query.has_value());
    EXPECT_EQ(t.variant, promptkit::VariantName::variety);
  }
}

TEST(RunDaily, CounterfactualFilesWhenRequested) {
  testsupport::TempDir out;
  auto j = base_json(out.path().string(), 60);
  j["counterfactual_fraction"] = 0.5;
  auto m = orchestrator::run_daily(orchestrator::config_from_json(j));
  EXPECT_TRUE(m.files.count("counterfactual_triplets.jsonl"));
  EXPECT_GT(m.counts.at("counterfactuals").get<int>(), 0);
}

TEST(RunDaily, IngestFailureNamesStageAndLeavesNothing) {
  testsupport::TempDir out;
  auto j = base_json(out.path().string());
  j["inputs"]["catalog"] = inputs().dir.file("nope.jsonl");
  try {
    orchestrator::run_daily(orchestrator::config_from_json(j));
    FAIL();
  } catch (const orchestrator::StageError& e) {
    EXPECT_EQ(e.stage(), "ingest");
  }
  EXPECT_TRUE(fs::is_empty(out.path()));
}

TEST(RunDaily, BackendFailureNamesGenerationStage) {
  testsupport::TempDir out;
  auto c = orchestrator::config_from_json(base_json(out.path().string()));
  llmio::BackendRegistry reg;
  reg.add(std::make_shared<llmio::FunctionBackend>("mock", [](const llmio::CompletionRequest&) -> std::string {
    throw BackendError("quota exceeded");
  }));
  reg.add(std::make_shared<llmio::MockBackend>("mock-judge"));
  try {
    orchestrator::run_daily(c, reg);
    FAIL();
  } catch (const orchestrator::StageError& e) {
    EXPECT_EQ(e.stage(), "generation");
    EXPECT_NE(std::string(e.what()).find("quota exceeded"), std::string::npos);
  }
  EXPECT_TRUE(fs::is_empty(out.path()));
}

// Variant draws happen before pair sampling, so every non-skipped slot is an
// unbiased draw.
TEST(GenerateBatch, VariantDrawsMatchWeights) {
  auto c = orchestrator::config_from_json(base_json("/tmp/unused", 3000));
  auto in = orchestrator::ingest(c);
  llmio::BackendRegistry reg;
  orchestrator::register_backends(c, reg);
  auto batch = orchestrator::generate_batch(c, in, reg);
  std::size_t seed_guided = 0, n = 0;
  for (const auto& t : batch.triplets) {
    ++n;
    seed_guided += t.variant != promptkit::VariantName::variety;
  }
  for (const auto& r : batch.rejections) {
    ++n;
    seed_guided += r.at("variant") != "variety";
  }
  double frac = static_cast<double>(seed_guided) / static_cast<double>(n);
  EXPECT_NEAR(frac, 0.8, 3 * std::sqrt(0.8 * 0.2 / static_cast<double>(n)));
  EXPECT_EQ(batch.counts.generated, batch.triplets.size() + batch.counts.deduped);
}

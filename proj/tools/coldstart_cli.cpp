// coldstart: command-line entry point for the synthetic query pipeline.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "coldstart/analysis.hpp"
#include "coldstart/corpus.hpp"
#include "coldstart/evalharness.hpp"
#include "coldstart/generation.hpp"
#include "coldstart/jsonl.hpp"
#include "coldstart/judging.hpp"
#include "coldstart/lexicon.hpp"
#include "coldstart/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace coldstart;
using orchestrator::PipelineConfig;

namespace {

constexpr int kUsageError = 2;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> target;
  std::string backend;
  bool baseline = false;
  std::string out_dir;

  void attach(CLI::App* cmd, bool config_required = true) {
    auto* opt = cmd->add_option("--config", config, "Pipeline config (JSON)");
    if (config_required) opt->required();
    cmd->add_option("--seed", seed, "Override master_seed");
    cmd->add_option("--target", target, "Override target_count");
    cmd->add_option("--backend", backend, "Override the generator backend id");
    cmd->add_flag("--baseline", baseline, "Baseline mode: no seed conditioning");
    cmd->add_option("--out-dir", out_dir, "Override the output directory");
  }

  PipelineConfig load() const {
    PipelineConfig c = orchestrator::load_config(config);
    if (seed) c.master_seed = *seed;
    if (target) c.target_count = *target;
    if (!backend.empty()) c.generator_backend = backend;
    if (baseline) c.baseline_mode = true;
    if (!out_dir.empty()) c.out_dir = out_dir;
    c.validate();
    return c;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  jsonl::write_text(p.string(), j.dump(2) + "\n");
}

int cmd_fixture(std::uint64_t seed, int listings, int sessions, int seeds, int real,
                const std::string& out) {
  fs::create_directories(out);
  auto fx = corpus::generate_fixture(seed, listings, sessions, seeds);
  corpus::save_catalog((fs::path(out) / "listings.jsonl").string(), fx.catalog);
  corpus::save_sessions((fs::path(out) / "sessions.jsonl").string(), fx.sessions);
  corpus::save_seed_queries((fs::path(out) / "seed_queries.jsonl").string(), fx.seed_queries);
  lexicon::AttributeLexicon::builtin().save((fs::path(out) / "lexicon.jsonl").string());
  nlohmann::json inputs = {{"catalog", "listings.jsonl"},
                           {"sessions", "sessions.jsonl"},
                           {"seed_queries", "seed_queries.jsonl"},
                           {"lexicon", "lexicon.jsonl"}};
  if (real > 0) {
    corpus::save_seed_queries((fs::path(out) / "real_queries.jsonl").string(),
                              corpus::generate_real_queries(seed, real));
    inputs["real_queries"] = "real_queries.jsonl";
  }
  nlohmann::json config = {{"inputs", inputs},
                           {"out_dir", "runs"},
                           {"master_seed", seed},
                           {"target_count", 1000},
                           {"variant_mix", {{"seed_guided", 0.8}, {"variety", 0.2}}},
                           {"generator", "mock"},
                           {"judge", "mock-judge"}};
  write_json(fs::path(out) / "config.json", config);
  fmt::print("wrote {} listings, {} sessions, {} seed queries to {}\n", fx.catalog.size(),
             fx.sessions.size(), fx.seed_queries.size(), out);
  return 0;
}

int cmd_generate(const Overrides& o) {
  PipelineConfig c = o.load();
  if (c.run_date.empty()) c.run_date = orchestrator::today_utc();
  auto in = orchestrator::ingest(c);
  llmio::BackendRegistry backends;
  orchestrator::register_backends(c, backends);
  auto batch = orchestrator::generate_batch(c, in, backends);
  fs::create_directories(c.out_dir);
  std::vector<nlohmann::json> pairs;
  for (const auto& p : batch.pairs) pairs.push_back(sampling::to_json(p));
  jsonl::write_all((fs::path(c.out_dir) / "pairs.jsonl").string(), pairs);
  generation::save_triplets((fs::path(c.out_dir) / "triplets.jsonl").string(), batch.triplets);
  jsonl::write_all((fs::path(c.out_dir) / "rejections.jsonl").string(), batch.rejections);
  const auto& n = batch.counts;
  fmt::print("accepted {} of target {} (generated {}, rejected {}, deduped {}, skipped pairs {})\n",
             n.accepted, c.target_count, n.generated, n.rejected, n.deduped, n.skipped_pairs);
  fmt::print("output: {}\n", (fs::path(c.out_dir) / "triplets.jsonl").string());
  return 0;
}

int cmd_relabel(const Overrides& o, const std::string& triplets_path, const std::string& judge_id,
                const std::string& out) {
  PipelineConfig c = o.load();
  corpus::Catalog catalog(corpus::load_catalog(c.catalog_path));
  auto triplets = generation::load_triplets(triplets_path);
  llmio::BackendRegistry backends;
  orchestrator::register_backends(c, backends);
  judging::LlmJudge judge(backends, judge_id.empty() ? c.judge_backend : judge_id);
  std::vector<std::string> pool;
  for (const auto& l : catalog.listings()) pool.push_back(l.id);
  Rng rng = make_rng(c.master_seed, 0x7e1abe1ULL);
  auto r = judging::relabel(triplets, catalog, pool, judge, rng, c.feature_limits);
  std::string path = out.empty() ? (fs::path(c.out_dir) / "vj_labels.jsonl").string() : out;
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  judging::save_labels(path, r.labels);
  fmt::print("{} labels ({} judge parse errors) -> {}\n", r.labels.size(), r.parse_errors, path);
  return 0;
}

int cmd_calibrate(const std::string& vj_path, const std::string& human_path, const std::string& out) {
  auto r = judging::calibrate(judging::load_labels(vj_path), judging::load_labels(human_path));
  auto j = judging::to_json(r);
  if (!out.empty()) write_json(out, j);
  fmt::print("agreement {:.4f} over {} joined rows ({} vj / {} human rows unjoined)\n",
             r.agreement_rate, r.n, r.unjoined_vj, r.unjoined_human);
  return 0;
}

int cmd_self_preference(const Overrides& o, const std::vector<std::string>& sets,
                        const std::vector<std::string>& judge_ids, std::size_t min_n,
                        const std::string& out_dir) {
  PipelineConfig c = o.load();
  corpus::Catalog catalog(corpus::load_catalog(c.catalog_path));
  std::map<std::string, std::vector<generation::SyntheticTriplet>> by_gen;
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ArgumentError("expected generator=path, got '" + s + "'");
    by_gen[s.substr(0, eq)] = generation::load_triplets(s.substr(eq + 1));
  }
  llmio::BackendRegistry backends;
  orchestrator::register_backends(c, backends);
  std::vector<std::unique_ptr<judging::LlmJudge>> owned;
  std::vector<judging::Judge*> judges;
  for (const auto& id : judge_ids) {
    owned.push_back(std::make_unique<judging::LlmJudge>(backends, id));
    judges.push_back(owned.back().get());
  }
  Rng rng = make_rng(c.master_seed, 0x5e1fULL);
  auto m = judging::self_preference(by_gen, judges, catalog, rng, min_n, c.feature_limits);
  fs::create_directories(out_dir);
  jsonl::write_text((fs::path(out_dir) / "self_preference.md").string(), judging::to_markdown(m));
  write_json(fs::path(out_dir) / "self_preference.json", judging::to_json(m));
  std::cout << judging::to_markdown(m);
  return 0;
}

int cmd_analyze(const std::vector<std::string>& datasets, const std::vector<std::string>& refs,
                const std::vector<std::string>& variants, const std::string& lexicon_path,
                double alpha, const std::string& out_dir) {
  std::vector<analysis::NamedQueries> sets;
  std::map<std::string, std::string> by_path;
  for (const auto& p : datasets) {
    std::string name = fs::path(p).stem().string();
    by_path[p] = name;
    sets.push_back({name, analysis::load_queries(p)});
  }
  auto resolve = [&](const std::string& s) {
    auto it = by_path.find(s);
    return it == by_path.end() ? fs::path(s).stem().string() : it->second;
  };
  analysis::CompareOptions opts;
  opts.alpha = alpha;
  for (const auto& v : variants) opts.variant_rows.push_back(resolve(v));
  std::optional<lexicon::AttributeLexicon> lex;
  if (!lexicon_path.empty()) {
    lex.emplace(lexicon::AttributeLexicon::load(lexicon_path));
    opts.lexicon = &*lex;
  }
  std::vector<std::string> ref_names;
  for (const auto& r : refs) ref_names.push_back(resolve(r));
  auto report = analysis::compare(sets, ref_names, opts);
  fs::create_directories(out_dir);
  jsonl::write_text((fs::path(out_dir) / "report.md").string(), analysis::render_markdown(report));
  write_json(fs::path(out_dir) / "report.json", analysis::to_json(report));
  fmt::print("report -> {}\n", (fs::path(out_dir) / "report.md").string());
  return 0;
}

int cmd_eval(const Overrides& o, const std::string& triplets_path, const std::string& dataset,
             const std::string& out) {
  PipelineConfig c = o.load();
  corpus::Catalog catalog(corpus::load_catalog(c.catalog_path));
  auto triplets = generation::load_triplets(triplets_path);
  auto embedder = orchestrator::make_embedder(c);
  auto r = evalharness::pairwise_accuracy(triplets, catalog, *embedder, c.feature_limits);
  std::string name = dataset.empty() ? fs::path(triplets_path).stem().string() : dataset;
  std::string path = out.empty() ? (fs::path(c.out_dir) / "eval_result.json").string() : out;
  write_json(path, evalharness::to_json(r, name));
  fmt::print("pairwise accuracy {:.4f} over {} triplets ({} dim {}) -> {}\n", r.accuracy(), r.n(),
             r.embedder, r.dim, path);
  for (const auto& [d, s] : r.by_difficulty) {
    fmt::print("  {:<8} {:.4f} (n={})\n", d, s.accuracy(), s.n);
  }
  return 0;
}

int cmd_run_daily(const Overrides& o) {
  PipelineConfig c = o.load();
  auto m = orchestrator::run_daily(c);
  fmt::print("{} -> {}\n", m.run_id, m.run_dir);
  fmt::print("counts: {}\n", m.counts.dump());
  fmt::print("quality: {}\n", m.quality.dump());
  return 0;
}

int cmd_report(const std::string& run_dir) {
  fs::path dir(run_dir);
  if (!fs::exists(dir / "manifest.json")) throw ConfigError("no manifest.json in " + run_dir);
  auto manifest = nlohmann::json::parse(jsonl::read_text((dir / "manifest.json").string()));
  fmt::print("run {} ({}), config {}\n", manifest.at("run_id").get<std::string>(),
             manifest.at("timestamp").get<std::string>(),
             manifest.at("config_hash").get<std::string>().substr(0, 12));
  fmt::print("counts: {}\nquality: {}\n\n", manifest.at("counts").dump(),
             manifest.at("quality").dump());
  if (fs::exists(dir / "report.md")) std::cout << jsonl::read_text((dir / "report.md").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic query and label generation for cold-start search relevance"};
  app.require_subcommand(1);

  std::uint64_t fx_seed = 7;
  int fx_listings = 500, fx_sessions = 1000, fx_seeds = 500, fx_real = 0;
  std::string fx_out;
  auto* fixture = app.add_subcommand("fixture", "Write a synthetic input corpus and starter config");
  fixture->add_option("--seed", fx_seed, "Fixture seed");
  fixture->add_option("--listings", fx_listings, "Number of listings")->check(CLI::Range(2, 1000000));
  fixture->add_option("--sessions", fx_sessions, "Number of search sessions")->check(CLI::PositiveNumber);
  fixture->add_option("--seeds", fx_seeds, "Number of survey seed queries")->check(CLI::NonNegativeNumber);
  fixture->add_option("--real", fx_real, "Number of real-traffic stand-in queries")->check(CLI::NonNegativeNumber);
  fixture->add_option("--out-dir", fx_out, "Output directory")->required();

  Overrides gen_o;
  auto* generate = app.add_subcommand("generate", "Sample pairs and generate validated triplets");
  gen_o.attach(generate);

  Overrides judge_o;
  std::string j_triplets, j_backend, j_out, j_vj, j_human, j_cal_out, j_sp_out = ".";
  std::string j_sets, j_judges;
  std::size_t j_min_n = 30;
  auto* judge = app.add_subcommand("judge", "Virtual-judge relabeling, calibration, self-preference");
  judge->require_subcommand(1);
  auto* relabel = judge->add_subcommand("relabel", "Relabel triplets with the judge backend");
  judge_o.attach(relabel);
  relabel->add_option("--triplets", j_triplets, "Triplets JSONL")->required()->check(CLI::ExistingFile);
  relabel->add_option("--judge", j_backend, "Judge backend id (default from config)");
  relabel->add_option("--out", j_out, "Output labels JSONL");
  auto* calibrate = judge->add_subcommand("calibrate", "Agreement of judge labels with human labels");
  calibrate->add_option("--vj", j_vj, "Judge labels JSONL")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--human", j_human, "Human labels JSONL")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--out", j_cal_out, "Write the calibration report here");
  Overrides sp_o;
  auto* selfpref = judge->add_subcommand("self-preference", "Generator x judge preference matrix");
  sp_o.attach(selfpref);
  selfpref->add_option("--sets", j_sets, "Comma list of generator=triplets.jsonl")->required();
  selfpref->add_option("--judges", j_judges, "Comma list of judge backend ids")->required();
  selfpref->add_option("--min-n", j_min_n, "Minimum cell size");
  selfpref->add_option("--report-dir", j_sp_out, "Where to write the matrix");

  std::string a_datasets, a_refs, a_variants, a_lexicon, a_out = ".";
  double a_alpha = analysis::kDefaultAlpha;
  auto* analyze = app.add_subcommand("analyze", "Compare query distributions against references");
  analyze->add_option("--datasets", a_datasets, "Comma list of JSONL query files")->required();
  analyze->add_option("--reference", a_refs, "Comma list of reference datasets (name or path)")->required();
  analyze->add_option("--variants", a_variants, "Datasets shown only in the per-variant table");
  analyze->add_option("--lexicon", a_lexicon, "Attribute lexicon JSONL")->check(CLI::ExistingFile);
  analyze->add_option("--alpha", a_alpha, "Additive smoothing")->check(CLI::NonNegativeNumber);
  analyze->add_option("--out-dir", a_out, "Output directory");

  Overrides eval_o;
  std::string e_triplets, e_dataset, e_out;
  auto* eval = app.add_subcommand("eval", "Pairwise accuracy of the configured embedder");
  eval_o.attach(eval);
  eval->add_option("--triplets", e_triplets, "Triplets JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", e_dataset, "Dataset name in the result");
  eval->add_option("--out", e_out, "Output JSON");

  Overrides daily_o;
  auto* daily = app.add_subcommand("run-daily", "Full pipeline into a run directory");
  daily_o.attach(daily);

  std::string r_dir;
  auto* report = app.add_subcommand("report", "Print a run's manifest summary and report");
  report->add_option("--run-dir", r_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*fixture) return cmd_fixture(fx_seed, fx_listings, fx_sessions, fx_seeds, fx_real, fx_out);
    if (*generate) return cmd_generate(gen_o);
    if (*relabel) return cmd_relabel(judge_o, j_triplets, j_backend, j_out);
    if (*calibrate) return cmd_calibrate(j_vj, j_human, j_cal_out);
    if (*selfpref) return cmd_self_preference(sp_o, split_list(j_sets), split_list(j_judges), j_min_n, j_sp_out);
    if (*analyze) {
      return cmd_analyze(split_list(a_datasets), split_list(a_refs), split_list(a_variants), a_lexicon,
                         a_alpha, a_out);
    }
    if (*eval) return cmd_eval(eval_o, e_triplets, e_dataset, e_out);
    if (*daily) return cmd_run_daily(daily_o);
    if (*report) return cmd_report(r_dir);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return kUsageError;
  } catch (const orchestrator::StageError& e) {
    fmt::print(stderr, "error [{}]: {}\n", e.stage(), e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error [{}]: {}\n", app.get_subcommands().front()->get_name(), e.what());
    return 1;
  }
  return 0;
}

#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "coldstart/corpus.hpp"
#include "coldstart/generation.hpp"
#include "coldstart/llmio.hpp"
#include "coldstart/promptkit.hpp"
#include "coldstart/random.hpp"

namespace coldstart::judging {

enum class Winner { A, B, tie };

std::string to_string(Winner w);
Winner winner_from_string(const std::string& s);

struct JudgeVerdict {
  Winner winner = Winner::tie;
  std::string rationale;
  std::string backend_id;
  bool presented_swapped = false;  // B was shown first
};

// Final non-empty line must be exactly A, B or TIE (case-insensitive,
// surrounding punctuation ignored).
Winner parse_verdict_token(const std::string& raw);

class Judge {
 public:
  virtual ~Judge() = default;
  virtual const std::string& id() const = 0;
  virtual JudgeVerdict judge(const std::string& query, const corpus::FeatureBlock& a,
                             const corpus::FeatureBlock& b, Rng& rng) = 0;
};

// LLM-backed judge. Presentation order is randomized per call and the
// verdict is mapped back to the caller's (a, b) order.
class LlmJudge : public Judge {
 public:
  LlmJudge(llmio::BackendRegistry& backends, std::string backend_id,
           const promptkit::PromptLibrary* prompts = nullptr, int max_tokens = 512);
  const std::string& id() const override { return backend_id_; }
  JudgeVerdict judge(const std::string& query, const corpus::FeatureBlock& a,
                     const corpus::FeatureBlock& b, Rng& rng) override;

 private:
  llmio::BackendRegistry& backends_;
  std::string backend_id_;
  const promptkit::PromptLibrary* prompts_;
  int max_tokens_;
};

class FunctionJudge : public Judge {
 public:
  using Fn = std::function<Winner(const std::string&, const corpus::FeatureBlock&,
                                  const corpus::FeatureBlock&, Rng&)>;
  FunctionJudge(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}
  const std::string& id() const override { return id_; }
  JudgeVerdict judge(const std::string& query, const corpus::FeatureBlock& a,
                     const corpus::FeatureBlock& b, Rng& rng) override;

 private:
  std::string id_;
  Fn fn_;
};

struct VjLabel {
  std::string query;
  std::string listing_x;
  std::string listing_y;
  Winner winner = Winner::tie;  // A = listing_x
  std::string backend_id;

  bool operator==(const VjLabel&) const = default;
};

struct RelabelResult {
  std::vector<VjLabel> labels;
  std::size_t parse_errors = 0;
  // Filled when the order-flip probe is on: each labeled pair is judged
  // again with the arguments swapped.
  std::size_t order_probes = 0;
  std::size_t order_disagreements = 0;
  double order_flip_rate() const {
    return order_probes ? static_cast<double>(order_disagreements) / static_cast<double>(order_probes) : 0.0;
  }
};

// Pairs each query with one of its original listings and one listing drawn
// from `pool`, and asks the judge. The construction label is not carried over.
RelabelResult relabel(const std::vector<generation::SyntheticTriplet>& triplets,
                      const corpus::Catalog& catalog, const std::vector<std::string>& pool,
                      Judge& judge, Rng& rng, const corpus::FeatureLimits& limits = {},
                      bool measure_order_flip = false);

struct CalibrationReport {
  std::size_t n = 0;
  std::size_t agreements = 0;
  double agreement_rate = 0;
  // confusion[vj][human], indexed by Winner
  std::array<std::array<std::size_t, 3>, 3> confusion{};
  std::size_t unjoined_vj = 0;
  std::size_t unjoined_human = 0;
};

// Joins on (query, listing_x, listing_y); a human row keyed (query, y, x) is
// joined with its winner mirrored.
CalibrationReport calibrate(const std::vector<VjLabel>& vj, const std::vector<VjLabel>& human);

struct PreferenceCell {
  std::size_t n = 0;
  double score = 0;  // wins + 0.5 * ties
  std::size_t parse_errors = 0;
  bool insufficient = false;
  double accuracy() const { return n ? score / static_cast<double>(n) : 0.0; }
};

struct SelfPreferenceMatrix {
  std::vector<std::string> generators;
  std::vector<std::string> judges;
  std::vector<std::vector<PreferenceCell>> cells;  // [generator][judge]
  std::size_t min_n = 0;

  // Mean accuracy where generator id == judge id versus elsewhere; nullopt
  // when either side has no sufficient cells.
  std::optional<std::pair<double, double>> diagonal_vs_off() const;
};

SelfPreferenceMatrix self_preference(
    const std::map<std::string, std::vector<generation::SyntheticTriplet>>& triplets_by_generator,
    const std::vector<Judge*>& judges, const corpus::Catalog& catalog, Rng& rng,
    std::size_t min_n = 30, const corpus::FeatureLimits& limits = {});

nlohmann::json to_json(const SelfPreferenceMatrix& m);
std::string to_markdown(const SelfPreferenceMatrix& m);
nlohmann::json to_json(const CalibrationReport& r);

nlohmann::json to_json(const VjLabel& l);
std::vector<VjLabel> load_labels(const std::string& path);
void save_labels(const std::string& path, const std::vector<VjLabel>& labels);

}  // namespace coldstart::judging

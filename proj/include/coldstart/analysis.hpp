#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coldstart/lexicon.hpp"

namespace coldstart::analysis {

// Word-count bins 1..14 plus 15+; attribute-count bins 0..7 plus 8+.
inline constexpr std::size_t kLengthBins = 15;
inline constexpr std::size_t kAttributeCountBins = 9;
inline constexpr double kDefaultAlpha = 0.5;
inline constexpr std::size_t kLowSampleThreshold = 30;

// Tokens after lowercasing, whitespace splitting and stripping punctuation
// from token edges. Empty input yields 0.
int word_count(std::string_view query);

// D(reference || candidate) in nats after adding alpha to every raw count of
// both histograms and renormalizing. Inputs may be counts or probabilities.
// Throws ArgumentError on mismatched bin spaces, negative entries, or when
// alpha == 0 and the candidate is empty where the reference has mass.
double kl_divergence(std::span<const double> reference, std::span<const double> candidate,
                     double alpha);

struct LengthDistribution {
  std::array<std::size_t, kLengthBins> counts{};
  std::size_t n = 0;
  std::size_t empty_queries = 0;  // excluded from every statistic
  double mean = 0;
  double median = 0;
  double stddev = 0;  // sample standard deviation
  double pct_short = 0;  // 1-2 words
  double pct_mid = 0;    // 3-8 words
  double pct_long = 0;   // 9+ words

  std::vector<double> histogram() const { return {counts.begin(), counts.end()}; }
};

LengthDistribution length_distribution(const std::vector<std::string>& queries);

struct AttributeTag {
  lexicon::AttributeType type;
  std::string surface;
  std::size_t position = 0;  // token index of the match

  bool operator==(const AttributeTag&) const = default;
};

// Longest lexicon phrases claim tokens first, earlier positions breaking
// ties; the result is ordered by position and deduplicated by
// (type, surface).
std::vector<AttributeTag> tag_attributes(std::string_view query, const lexicon::AttributeLexicon& lex);

struct AttributeDistribution {
  std::array<std::size_t, lexicon::kAttributeTypeCount> type_counts{};
  std::array<std::size_t, kAttributeCountBins> count_hist{};
  std::size_t n = 0;
  double mean_attrs = 0;
  double median_attrs = 0;
  double pct_with_attr = 0;

  std::vector<double> type_histogram() const { return {type_counts.begin(), type_counts.end()}; }
  std::vector<double> count_histogram() const { return {count_hist.begin(), count_hist.end()}; }
  // Up to three types by descending count, ties in declaration order.
  std::vector<lexicon::AttributeType> top_types(std::size_t k = 3) const;
};

AttributeDistribution attribute_distribution(const std::vector<std::string>& queries,
                                             const lexicon::AttributeLexicon& lex);

struct NamedQueries {
  std::string name;
  std::vector<std::string> queries;
};

struct DatasetStats {
  std::string name;
  LengthDistribution length;
  AttributeDistribution attributes;
  bool low_n = false;
};

struct CompareOptions {
  double alpha = kDefaultAlpha;
  // Datasets listed here appear only in the per-variant table.
  std::vector<std::string> variant_rows;
  const lexicon::AttributeLexicon* lexicon = nullptr;  // builtin when null
};

struct ComparisonReport {
  std::vector<DatasetStats> datasets;
  std::vector<std::string> references;
  std::vector<std::string> variant_rows;
  double alpha = kDefaultAlpha;
  // [candidate][reference] -> divergence, every dataset against every reference
  std::map<std::string, std::map<std::string, double>> length_kl;
  std::map<std::string, std::map<std::string, double>> attr_count_kl;
  std::map<std::string, std::map<std::string, double>> attr_type_kl;

  const DatasetStats& stats(const std::string& name) const;
};

ComparisonReport compare(const std::vector<NamedQueries>& datasets,
                         const std::vector<std::string>& reference_names,
                         const CompareOptions& options = {});

// Markdown with the query-characteristics, attribute-type, attribute-count
// and per-variant tables.
std::string render_markdown(const ComparisonReport& report);
nlohmann::json to_json(const ComparisonReport& report);

// Reads the "query" (or, failing that, "text") field of every line.
std::vector<std::string> load_queries(const std::string& path);

}  // namespace coldstart::analysis

#include "coldstart/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "coldstart/errors.hpp"
#include "coldstart/jsonl.hpp"
#include "coldstart/text.hpp"

namespace coldstart::analysis {

int word_count(std::string_view query) { return static_cast<int>(text::tokenize(query).size()); }

double kl_divergence(std::span<const double> reference, std::span<const double> candidate,
                     double alpha) {
  if (reference.size() != candidate.size() || reference.empty()) {
    throw ArgumentError("kl_divergence: histograms must share a non-empty bin space");
  }
  if (alpha < 0) throw ArgumentError("kl_divergence: alpha must be >= 0");
  const auto k = static_cast<double>(reference.size());
  double ref_total = 0, cand_total = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference[i] < 0 || candidate[i] < 0) throw ArgumentError("kl_divergence: negative count");
    ref_total += reference[i];
    cand_total += candidate[i];
  }
  ref_total += alpha * k;
  cand_total += alpha * k;
  if (ref_total <= 0 || cand_total <= 0) throw ArgumentError("kl_divergence: empty histogram");

  double d = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    double p = (reference[i] + alpha) / ref_total;
    if (p == 0) continue;
    double q = (candidate[i] + alpha) / cand_total;
    if (q == 0) {
      throw ArgumentError("kl_divergence: candidate bin " + std::to_string(i) +
                          " is empty where the reference has mass; use alpha > 0");
    }
    d += p * std::log(p / q);
  }
  return std::max(0.0, d);
}

namespace {

double median_of(std::vector<int> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double percent(std::size_t part, std::size_t whole) {
  return whole ? 100.0 * static_cast<double>(part) / static_cast<double>(whole) : 0.0;
}

}  // namespace

LengthDistribution length_distribution(const std::vector<std::string>& queries) {
  LengthDistribution d;
  std::vector<int> lengths;
  lengths.reserve(queries.size());
  for (const auto& q : queries) {
    int n = word_count(q);
    if (n == 0) {
      ++d.empty_queries;
      continue;
    }
    lengths.push_back(n);
    ++d.counts[std::min<std::size_t>(static_cast<std::size_t>(n), kLengthBins) - 1];
  }
  d.n = lengths.size();
  if (d.n == 0) return d;
  double sum = std::accumulate(lengths.begin(), lengths.end(), 0.0);
  d.mean = sum / static_cast<double>(d.n);
  double ss = 0;
  for (int n : lengths) ss += (n - d.mean) * (n - d.mean);
  d.stddev = d.n > 1 ? std::sqrt(ss / static_cast<double>(d.n - 1)) : 0.0;
  d.median = median_of(lengths);
  std::size_t short_n = 0, mid_n = 0, long_n = 0;
  for (int n : lengths) {
    if (n <= 2) ++short_n;
    else if (n <= 8) ++mid_n;
    else ++long_n;
  }
  d.pct_short = percent(short_n, d.n);
  d.pct_mid = percent(mid_n, d.n);
  d.pct_long = percent(long_n, d.n);
  return d;
}

std::vector<AttributeTag> tag_attributes(std::string_view query,
                                         const lexicon::AttributeLexicon& lex) {
  const auto tokens = text::tokenize(query);
  struct Match {
    std::size_t start, len;
    const lexicon::LexiconEntry* entry;
  };
  std::vector<Match> matches;
  for (std::size_t start = 0; start < tokens.size(); ++start) {
    std::string phrase;
    for (std::size_t len = 1; len <= lex.max_phrase_tokens() && start + len <= tokens.size(); ++len) {
      if (len > 1) phrase += ' ';
      phrase += tokens[start + len - 1];
      if (const auto* e = lex.lookup(phrase)) matches.push_back({start, len, e});
    }
  }
  std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
    return a.len != b.len ? a.len > b.len : a.start < b.start;
  });
  std::vector<bool> taken(tokens.size(), false);
  std::vector<Match> chosen;
  for (const auto& m : matches) {
    if (std::any_of(taken.begin() + static_cast<long>(m.start),
                    taken.begin() + static_cast<long>(m.start + m.len), [](bool t) { return t; })) {
      continue;
    }
    std::fill(taken.begin() + static_cast<long>(m.start),
              taken.begin() + static_cast<long>(m.start + m.len), true);
    chosen.push_back(m);
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const Match& a, const Match& b) { return a.start < b.start; });
  std::vector<AttributeTag> tags;
  std::set<std::pair<lexicon::AttributeType, std::string>> seen;
  for (const auto& m : chosen) {
    if (seen.emplace(m.entry->type, m.entry->phrase).second) {
      tags.push_back({m.entry->type, m.entry->phrase, m.start});
    }
  }
  return tags;
}

std::vector<lexicon::AttributeType> AttributeDistribution::top_types(std::size_t k) const {
  std::vector<std::size_t> idx(type_counts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return type_counts[a] > type_counts[b]; });
  std::vector<lexicon::AttributeType> out;
  for (std::size_t i = 0; i < idx.size() && out.size() < k; ++i) {
    if (type_counts[idx[i]] == 0) break;
    out.push_back(lexicon::all_attribute_types()[idx[i]]);
  }
  return out;
}

AttributeDistribution attribute_distribution(const std::vector<std::string>& queries,
                                             const lexicon::AttributeLexicon& lex) {
  AttributeDistribution d;
  std::vector<int> per_query;
  std::size_t with_attr = 0;
  for (const auto& q : queries) {
    if (word_count(q) == 0) continue;
    auto tags = tag_attributes(q, lex);
    for (const auto& t : tags) ++d.type_counts[static_cast<std::size_t>(t.type)];
    ++d.count_hist[std::min(tags.size(), kAttributeCountBins - 1)];
    per_query.push_back(static_cast<int>(tags.size()));
    with_attr += tags.empty() ? 0 : 1;
  }
  d.n = per_query.size();
  if (d.n == 0) return d;
  d.mean_attrs = std::accumulate(per_query.begin(), per_query.end(), 0.0) / static_cast<double>(d.n);
  d.median_attrs = median_of(per_query);
  d.pct_with_attr = percent(with_attr, d.n);
  return d;
}

const DatasetStats& ComparisonReport::stats(const std::string& name) const {
  for (const auto& d : datasets) {
    if (d.name == name) return d;
  }
  throw ArgumentError("no dataset named " + name);
}

ComparisonReport compare(const std::vector<NamedQueries>& datasets,
                         const std::vector<std::string>& reference_names,
                         const CompareOptions& options) {
  if (datasets.size() < 2) throw ArgumentError("compare: need at least two datasets");
  const auto& lex = options.lexicon ? *options.lexicon : lexicon::AttributeLexicon::builtin();
  ComparisonReport r;
  r.alpha = options.alpha;
  r.references = reference_names;
  r.variant_rows = options.variant_rows;

  std::set<std::string> names;
  for (const auto& ds : datasets) {
    if (!names.insert(ds.name).second) throw ArgumentError("compare: duplicate dataset " + ds.name);
    DatasetStats s{ds.name, length_distribution(ds.queries), attribute_distribution(ds.queries, lex),
                   false};
    s.low_n = s.length.n < kLowSampleThreshold;
    r.datasets.push_back(std::move(s));
  }
  for (const auto& ref : reference_names) {
    if (!names.count(ref)) throw ArgumentError("compare: unknown reference dataset " + ref);
  }
  for (const auto& v : options.variant_rows) {
    if (!names.count(v)) throw ArgumentError("compare: unknown variant dataset " + v);
  }

  for (const auto& ref_name : reference_names) {
    const auto& ref = r.stats(ref_name);
    for (const auto& cand : r.datasets) {
      r.length_kl[cand.name][ref_name] =
          kl_divergence(ref.length.histogram(), cand.length.histogram(), r.alpha);
      r.attr_count_kl[cand.name][ref_name] = kl_divergence(
          ref.attributes.count_histogram(), cand.attributes.count_histogram(), r.alpha);
      r.attr_type_kl[cand.name][ref_name] = kl_divergence(
          ref.attributes.type_histogram(), cand.attributes.type_histogram(), r.alpha);
    }
  }
  return r;
}

nlohmann::json to_json(const ComparisonReport& report) {
  using Json = nlohmann::json;
  Json datasets = Json::array();
  for (const auto& d : report.datasets) {
    Json types = Json::object();
    for (auto t : lexicon::all_attribute_types()) {
      types[lexicon::to_string(t)] = d.attributes.type_counts[static_cast<std::size_t>(t)];
    }
    Json top = Json::array();
    for (auto t : d.attributes.top_types()) top.push_back(lexicon::to_string(t));
    datasets.push_back({{"name", d.name},
                        {"count", d.length.n},
                        {"empty_queries", d.length.empty_queries},
                        {"low_n", d.low_n},
                        {"length",
                         {{"histogram", d.length.counts},
                          {"mean", d.length.mean},
                          {"median", d.length.median},
                          {"stddev", d.length.stddev},
                          {"pct_short", d.length.pct_short},
                          {"pct_mid", d.length.pct_mid},
                          {"pct_long", d.length.pct_long}}},
                        {"attributes",
                         {{"type_counts", types},
                          {"count_histogram", d.attributes.count_hist},
                          {"mean", d.attributes.mean_attrs},
                          {"median", d.attributes.median_attrs},
                          {"pct_with_attr", d.attributes.pct_with_attr},
                          {"top_types", top}}}});
  }
  return {{"kl",
           {{"direction", "D(reference || candidate)"},
            {"log_base", "e"},
            {"units", "nats"},
            {"smoothing_alpha", report.alpha},
            {"length_bins", "1..14, 15+"},
            {"attribute_count_bins", "0..7, 8+"}}},
          {"references", report.references},
          {"variant_rows", report.variant_rows},
          {"datasets", datasets},
          {"length_kl", report.length_kl},
          {"attribute_count_kl", report.attr_count_kl},
          {"attribute_type_kl", report.attr_type_kl}};
}

std::vector<std::string> load_queries(const std::string& path) {
  std::vector<std::string> out;
  jsonl::for_each(path, [&](const nlohmann::json& j, std::size_t line) {
    auto it = j.find("query");
    if (it == j.end()) it = j.find("text");
    if (it == j.end() || !it->is_string()) {
      throw ParseError(path + ": record has no \"query\" or \"text\" string", line);
    }
    out.push_back(it->get<std::string>());
  });
  return out;
}

}  // namespace coldstart::analysis

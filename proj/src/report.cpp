#include <algorithm>

#include <fmt/format.h>

#include "coldstart/analysis.hpp"

namespace coldstart::analysis {

namespace {

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
  std::string str() const {
    std::string out = line(header_);
    out += "|";
    for (std::size_t i = 0; i < header_.size(); ++i) out += i == 0 ? "---|" : "---:|";
    out += "\n";
    for (const auto& r : rows_) out += line(r);
    return out;
  }

 private:
  static std::string line(const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const auto& c : cells) out += " " + c + " |";
    return out + "\n";
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string kl_cell(const std::map<std::string, std::map<std::string, double>>& m,
                    const std::string& cand, const std::string& ref) {
  return fmt::format("{:.2f}", m.at(cand).at(ref));
}

}  // namespace

std::string render_markdown(const ComparisonReport& r) {
  std::vector<const DatasetStats*> main, variants;
  for (const auto& d : r.datasets) {
    bool is_variant = std::find(r.variant_rows.begin(), r.variant_rows.end(), d.name) !=
                      r.variant_rows.end();
    (is_variant ? variants : main).push_back(&d);
  }
  std::vector<std::string> header = {"Metric"};
  for (const auto* d : main) header.push_back(d->name + (d->low_n ? " (low n)" : ""));

  std::string out = "# Query distribution report\n\n";
  out += fmt::format(
      "KL divergence is D(reference || candidate) in nats (natural log), with additive smoothing "
      "alpha={} on every bin of both histograms. Word-count bins: 1..14, 15+. Attribute-count "
      "bins: 0..7, 8+. Attributes are tagged by longest-match lexicon lookup.\n\n",
      r.alpha);

  // Query characteristics.
  Table t2(header);
  auto per = [&](const std::string& label, auto fn) {
    std::vector<std::string> cells = {label};
    for (const auto* d : main) cells.push_back(fn(*d));
    t2.row(std::move(cells));
  };
  per("Count", [](const DatasetStats& d) { return fmt::format("{}", d.length.n); });
  per("Length (mean)", [](const DatasetStats& d) { return fmt::format("{:.1f}", d.length.mean); });
  per("Length (median)", [](const DatasetStats& d) { return fmt::format("{}", d.length.median); });
  per("Length (std)", [](const DatasetStats& d) { return fmt::format("{:.2f}", d.length.stddev); });
  per("% 3-8 words", [](const DatasetStats& d) { return fmt::format("{:.1f}%", d.length.pct_mid); });
  per("% Short (1-2)", [](const DatasetStats& d) { return fmt::format("{:.1f}%", d.length.pct_short); });
  per("% Long (9+)", [](const DatasetStats& d) { return fmt::format("{:.1f}%", d.length.pct_long); });
  for (const auto& ref : r.references) {
    per("KL vs. " + ref, [&](const DatasetStats& d) { return kl_cell(r.length_kl, d.name, ref); });
  }
  out += "## Query characteristics\n\n" + t2.str() + "\n";

  // Attribute types.
  Table t3(header);
  for (const auto& ref : r.references) {
    std::vector<std::string> cells = {"KL vs. " + ref};
    for (const auto* d : main) cells.push_back(kl_cell(r.attr_type_kl, d->name, ref));
    t3.row(std::move(cells));
  }
  for (std::size_t rank = 0; rank < 3; ++rank) {
    std::vector<std::string> cells = {rank == 0 ? "Top Types" : ""};
    for (const auto* d : main) {
      auto top = d->attributes.top_types();
      cells.push_back(rank < top.size() ? lexicon::to_string(top[rank]) : "-");
    }
    t3.row(std::move(cells));
  }
  out += "## Attribute types\n\n" + t3.str() + "\n";

  // Attribute counts.
  Table t6(header);
  auto per6 = [&](const std::string& label, auto fn) {
    std::vector<std::string> cells = {label};
    for (const auto* d : main) cells.push_back(fn(*d));
    t6.row(std::move(cells));
  };
  per6("Mean Attr.", [](const DatasetStats& d) { return fmt::format("{:.2f}", d.attributes.mean_attrs); });
  per6("Median Attr.", [](const DatasetStats& d) { return fmt::format("{:.1f}", d.attributes.median_attrs); });
  per6("% with Attr.", [](const DatasetStats& d) { return fmt::format("{:.1f}%", d.attributes.pct_with_attr); });
  for (const auto& ref : r.references) {
    per6("Count KL vs. " + ref,
         [&](const DatasetStats& d) { return kl_cell(r.attr_count_kl, d.name, ref); });
  }
  out += "## Attribute counts\n\n" + t6.str() + "\n";

  // Per-variant divergences.
  std::vector<std::string> h7 = {"Variant"};
  for (const char* group : {"Length", "Attr. Cnt", "Attr. Type"}) {
    for (const auto& ref : r.references) h7.push_back(fmt::format("{} vs. {}", group, ref));
  }
  Table t7(h7);
  for (const auto* d : variants) {
    std::vector<std::string> cells = {d->name + (d->low_n ? " (low n)" : "")};
    for (const auto* m : {&r.length_kl, &r.attr_count_kl, &r.attr_type_kl}) {
      for (const auto& ref : r.references) cells.push_back(kl_cell(*m, d->name, ref));
    }
    t7.row(std::move(cells));
  }
  out += "## KL divergence by prompt variant\n\n" + t7.str();
  if (variants.empty()) out += "\n(no variant slices supplied)\n";

  bool any_low = std::any_of(r.datasets.begin(), r.datasets.end(),
                             [](const DatasetStats& d) { return d.low_n; });
  if (any_low) {
    out += fmt::format("\nDatasets marked (low n) have fewer than {} queries.\n",
                       kLowSampleThreshold);
  }
  return out;
}

}  // namespace coldstart::analysis

#include "coldstart/judging.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "coldstart/errors.hpp"
#include "coldstart/jsonl.hpp"
#include "coldstart/text.hpp"

namespace coldstart::judging {

using Json = nlohmann::json;

std::string to_string(Winner w) {
  switch (w) {
    case Winner::A: return "A";
    case Winner::B: return "B";
    case Winner::tie: return "tie";
  }
  return "tie";
}

Winner winner_from_string(const std::string& s) {
  auto t = text::to_lower(text::trim(s));
  if (t == "a") return Winner::A;
  if (t == "b") return Winner::B;
  if (t == "tie") return Winner::tie;
  throw ParseError("unknown winner: " + s);
}

namespace {

Winner mirror(Winner w) {
  return w == Winner::A ? Winner::B : (w == Winner::B ? Winner::A : Winner::tie);
}

std::string last_line(const std::string& raw, std::string* before = nullptr) {
  auto t = raw;
  while (!t.empty() && (t.back() == '\n' || t.back() == '\r' || t.back() == ' ')) t.pop_back();
  auto nl = t.rfind('\n');
  if (before) *before = nl == std::string::npos ? "" : text::trim(t.substr(0, nl));
  return text::trim(nl == std::string::npos ? t : t.substr(nl + 1));
}

}  // namespace

Winner parse_verdict_token(const std::string& raw) {
  auto toks = text::tokenize(last_line(raw));
  if (toks.size() != 1) throw JudgeParseError("judge output has no final A/B/TIE line");
  if (toks[0] == "a") return Winner::A;
  if (toks[0] == "b") return Winner::B;
  if (toks[0] == "tie") return Winner::tie;
  throw JudgeParseError("judge final token is not A, B or TIE: " + toks[0]);
}

LlmJudge::LlmJudge(llmio::BackendRegistry& backends, std::string backend_id,
                   const promptkit::PromptLibrary* prompts, int max_tokens)
    : backends_(backends), backend_id_(std::move(backend_id)), prompts_(prompts),
      max_tokens_(max_tokens) {
  if (!backends_.contains(backend_id_)) throw ConfigError("unknown judge backend: " + backend_id_);
}

JudgeVerdict LlmJudge::judge(const std::string& query, const corpus::FeatureBlock& a,
                             const corpus::FeatureBlock& b, Rng& rng) {
  const auto& lib = prompts_ ? *prompts_ : promptkit::PromptLibrary::builtin();
  bool swapped = bernoulli(rng, 0.5);
  const auto& first = swapped ? b : a;
  const auto& second = swapped ? a : b;
  auto prompt = promptkit::render_judge_prompt(lib, query, first.rendered_text, second.rendered_text);
  auto completion = backends_.complete({prompt, 0.0, max_tokens_, backend_id_});

  JudgeVerdict v;
  v.winner = parse_verdict_token(completion.text);
  if (swapped) v.winner = mirror(v.winner);
  last_line(completion.text, &v.rationale);
  if (v.rationale.empty() && v.winner != Winner::tie) v.rationale = "verdict " + to_string(v.winner);
  v.backend_id = backend_id_;
  v.presented_swapped = swapped;
  return v;
}

JudgeVerdict FunctionJudge::judge(const std::string& query, const corpus::FeatureBlock& a,
                                  const corpus::FeatureBlock& b, Rng& rng) {
  JudgeVerdict v;
  v.winner = fn_(query, a, b, rng);
  v.rationale = v.winner == Winner::tie ? "" : "rule " + id_;
  v.backend_id = id_;
  return v;
}

RelabelResult relabel(const std::vector<generation::SyntheticTriplet>& triplets,
                      const corpus::Catalog& catalog, const std::vector<std::string>& pool,
                      Judge& judge, Rng& rng, const corpus::FeatureLimits& limits,
                      bool measure_order_flip) {
  if (pool.empty()) throw ArgumentError("relabel: listing pool is empty");
  RelabelResult result;
  for (const auto& t : triplets) {
    bool keep_positive = bernoulli(rng, 0.5);
    const auto& original = keep_positive ? t.positive_id : t.negative_id;
    const auto& other = keep_positive ? t.negative_id : t.positive_id;

    std::vector<const std::string*> fresh;
    for (const auto& id : pool) {
      if (id != t.positive_id && id != t.negative_id) fresh.push_back(&id);
    }
    // Degenerate pool holding only the originals: fall back to the other one.
    const std::string& candidate = fresh.empty() ? other : *fresh[uniform_index(rng, fresh.size())];

    auto x = corpus::render_feature_block(catalog.at(original), t.context, limits);
    auto y = corpus::render_feature_block(catalog.at(candidate), t.context, limits);
    try {
      auto v = judge.judge(t.query, x, y, rng);
      result.labels.push_back({t.query, original, candidate, v.winner, v.backend_id});
    } catch (const JudgeParseError&) {
      ++result.parse_errors;
      continue;
    }
    if (!measure_order_flip) continue;
    try {
      auto forward = result.labels.back().winner;
      auto reversed = judge.judge(t.query, y, x, rng);
      ++result.order_probes;
      if (mirror(reversed.winner) != forward) ++result.order_disagreements;
    } catch (const JudgeParseError&) {
      ++result.parse_errors;
    }
  }
  return result;
}

CalibrationReport calibrate(const std::vector<VjLabel>& vj, const std::vector<VjLabel>& human) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, Winner> human_by_key;
  for (const auto& h : human) human_by_key[{h.query, h.listing_x, h.listing_y}] = h.winner;

  CalibrationReport r;
  std::set<Key> used;
  for (const auto& v : vj) {
    Key direct{v.query, v.listing_x, v.listing_y};
    Key reversed{v.query, v.listing_y, v.listing_x};
    std::optional<Winner> h;
    if (auto it = human_by_key.find(direct); it != human_by_key.end()) {
      h = it->second;
      used.insert(direct);
    } else if (auto jt = human_by_key.find(reversed); jt != human_by_key.end()) {
      h = mirror(jt->second);
      used.insert(reversed);
    }
    if (!h) {
      ++r.unjoined_vj;
      continue;
    }
    ++r.n;
    r.agreements += v.winner == *h ? 1 : 0;
    ++r.confusion[static_cast<int>(v.winner)][static_cast<int>(*h)];
  }
  r.unjoined_human = human_by_key.size() - used.size();
  if (r.n == 0) throw CalibrationError("calibrate: no rows joined between VJ and human labels");
  r.agreement_rate = static_cast<double>(r.agreements) / static_cast<double>(r.n);
  return r;
}

std::optional<std::pair<double, double>> SelfPreferenceMatrix::diagonal_vs_off() const {
  double diag = 0, off = 0;
  int nd = 0, no = 0;
  for (std::size_t g = 0; g < generators.size(); ++g) {
    for (std::size_t j = 0; j < judges.size(); ++j) {
      const auto& c = cells[g][j];
      if (c.insufficient) continue;
      if (generators[g] == judges[j]) {
        diag += c.accuracy();
        ++nd;
      } else {
        off += c.accuracy();
        ++no;
      }
    }
  }
  if (nd == 0 || no == 0) return std::nullopt;
  return std::make_pair(diag / nd, off / no);
}

SelfPreferenceMatrix self_preference(
    const std::map<std::string, std::vector<generation::SyntheticTriplet>>& triplets_by_generator,
    const std::vector<Judge*>& judges, const corpus::Catalog& catalog, Rng& rng, std::size_t min_n,
    const corpus::FeatureLimits& limits) {
  SelfPreferenceMatrix m;
  m.min_n = min_n;
  for (const auto* j : judges) m.judges.push_back(j->id());
  for (const auto& [generator, triplets] : triplets_by_generator) {
    m.generators.push_back(generator);
    std::vector<PreferenceCell> row;
    for (auto* judge : judges) {
      PreferenceCell cell;
      for (const auto& t : triplets) {
        // Construction label: the positive is shown as A.
        auto a = corpus::render_feature_block(catalog.at(t.positive_id), t.context, limits);
        auto b = corpus::render_feature_block(catalog.at(t.negative_id), t.context, limits);
        try {
          auto v = judge->judge(t.query, a, b, rng);
          ++cell.n;
          cell.score += v.winner == Winner::A ? 1.0 : (v.winner == Winner::tie ? 0.5 : 0.0);
        } catch (const JudgeParseError&) {
          ++cell.parse_errors;
        }
      }
      cell.insufficient = cell.n < min_n;
      row.push_back(cell);
    }
    m.cells.push_back(std::move(row));
  }
  return m;
}

Json to_json(const SelfPreferenceMatrix& m) {
  Json cells = Json::array();
  for (std::size_t g = 0; g < m.generators.size(); ++g) {
    for (std::size_t j = 0; j < m.judges.size(); ++j) {
      const auto& c = m.cells[g][j];
      cells.push_back({{"generator", m.generators[g]},
                       {"judge", m.judges[j]},
                       {"n", c.n},
                       {"accuracy", c.insufficient ? Json() : Json(c.accuracy())},
                       {"parse_errors", c.parse_errors},
                       {"insufficient", c.insufficient}});
    }
  }
  Json j = {{"generators", m.generators}, {"judges", m.judges}, {"min_n", m.min_n}, {"cells", cells}};
  if (auto gap = m.diagonal_vs_off()) {
    j["diagonal_mean"] = gap->first;
    j["off_diagonal_mean"] = gap->second;
  }
  return j;
}

std::string to_markdown(const SelfPreferenceMatrix& m) {
  std::string out = "| Generator \\ Judge |";
  for (const auto& j : m.judges) out += " " + j + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < m.judges.size(); ++i) out += "---|";
  out += "\n";
  for (std::size_t g = 0; g < m.generators.size(); ++g) {
    out += "| " + m.generators[g] + " |";
    for (std::size_t j = 0; j < m.judges.size(); ++j) {
      const auto& c = m.cells[g][j];
      out += c.insufficient ? fmt::format(" insufficient (n={}) |", c.n)
                            : fmt::format(" {:.3f} |", c.accuracy());
    }
    out += "\n";
  }
  std::size_t n_min = SIZE_MAX;
  for (const auto& row : m.cells) {
    for (const auto& c : row) n_min = std::min(n_min, c.n);
  }
  if (n_min != SIZE_MAX) out += fmt::format("\nSample size per cell: >= {}\n", n_min);
  if (auto gap = m.diagonal_vs_off(); gap && gap->first > gap->second) {
    out += fmt::format(
        "\nSelf-preference gap: same-backend mean {:.3f} vs cross-backend mean {:.3f} ({:+.3f})\n",
        gap->first, gap->second, gap->first - gap->second);
  }
  return out;
}

Json to_json(const CalibrationReport& r) {
  Json confusion = Json::object();
  for (int v = 0; v < 3; ++v) {
    for (int h = 0; h < 3; ++h) {
      confusion[to_string(static_cast<Winner>(v)) + "/" + to_string(static_cast<Winner>(h))] =
          r.confusion[v][h];
    }
  }
  return {{"n", r.n},
          {"agreements", r.agreements},
          {"agreement_rate", r.agreement_rate},
          {"confusion_vj_by_human", confusion},
          {"unjoined_vj", r.unjoined_vj},
          {"unjoined_human", r.unjoined_human}};
}

Json to_json(const VjLabel& l) {
  Json j = {{"query", l.query},
            {"listing_x", l.listing_x},
            {"listing_y", l.listing_y},
            {"winner", to_string(l.winner)},
            {"purpose", "evaluation"}};
  if (!l.backend_id.empty()) j["backend_id"] = l.backend_id;
  return j;
}

std::vector<VjLabel> load_labels(const std::string& path) {
  std::vector<VjLabel> out;
  jsonl::for_each(path, [&](const Json& j, std::size_t line) {
    try {
      out.push_back({j.at("query").get<std::string>(), j.at("listing_x").get<std::string>(),
                     j.at("listing_y").get<std::string>(),
                     winner_from_string(j.at("winner").get<std::string>()),
                     j.value("backend_id", "")});
    } catch (const Json::exception& e) {
      throw ParseError(path + ": " + e.what(), line);
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what(), line);
    }
  });
  return out;
}

void save_labels(const std::string& path, const std::vector<VjLabel>& labels) {
  std::vector<Json> rows;
  for (const auto& l : labels) rows.push_back(to_json(l));
  jsonl::write_all(path, rows);
}

}  // namespace coldstart::judging

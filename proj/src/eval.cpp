#include "pgim/eval.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "pgim/util.hpp"

namespace pgim {

namespace {

Prf prf_from(const MatchCounts& c) {
  Prf p;
  p.precision = c.predicted == 0 ? 0.0
                                 : static_cast<double>(c.correct) / static_cast<double>(c.predicted);
  p.recall = c.gold == 0 ? 0.0 : static_cast<double>(c.correct) / static_cast<double>(c.gold);
  p.f1 = p.precision + p.recall == 0.0
             ? 0.0
             : 2.0 * p.precision * p.recall / (p.precision + p.recall);
  return p;
}

MetricReport finish(std::map<TagCategory, MatchCounts> type_counts) {
  MetricReport r;
  for (TagCategory c : kAllCategories) {
    const MatchCounts& tc = type_counts[c];
    r.counts.gold += tc.gold;
    r.counts.predicted += tc.predicted;
    r.counts.correct += tc.correct;
    r.per_type[c] = prf_from(tc);
  }
  r.type_counts = std::move(type_counts);
  r.overall = prf_from(r.counts);
  return r;
}

}  // namespace

MetricReport score_spans(const SpanMap& gold, const SpanMap& pred) {
  auto g = gold.begin();
  auto p = pred.begin();
  for (; g != gold.end() && p != pred.end(); ++g, ++p)
    if (g->first != p->first)
      throw std::runtime_error("score_spans: sentence id mismatch (\"" + g->first + "\" vs \"" +
                               p->first + "\")");
  if (g != gold.end() || p != pred.end())
    throw std::runtime_error("score_spans: gold and prediction cover different sentence sets (" +
                             std::to_string(gold.size()) + " vs " + std::to_string(pred.size()) +
                             " sentences)");

  std::map<TagCategory, MatchCounts> counts;
  for (const auto& [id, gold_spans] : gold) {
    const auto& pred_spans = pred.at(id);
    for (const EntitySpan& s : gold_spans) counts[s.category].gold++;
    std::vector<bool> used(gold_spans.size(), false);
    for (const EntitySpan& s : pred_spans) {
      counts[s.category].predicted++;
      for (std::size_t j = 0; j < gold_spans.size(); ++j) {
        if (used[j] || !(gold_spans[j] == s)) continue;
        used[j] = true;
        counts[s.category].correct++;
        break;
      }
    }
  }
  return finish(std::move(counts));
}

std::vector<SurfaceEntity> surface_entities(const AnnotatedSentence& s) {
  std::vector<SurfaceEntity> out;
  for (const EntitySpan& span : spans_from_tags(s.tags)) {
    std::vector<std::string> slice(s.tokens.begin() + static_cast<std::ptrdiff_t>(span.start),
                                   s.tokens.begin() + static_cast<std::ptrdiff_t>(span.end));
    out.push_back({join(slice, " "), span.category});
  }
  return out;
}

MetricReport score_direct(const std::map<std::string, std::vector<SurfaceEntity>>& gold,
                          const std::map<std::string, DirectPrediction>& pred, bool fold_case) {
  auto canon = [&](const std::string& s) {
    std::string n = normalize_spaces(s);
    return fold_case ? to_upper(n) : n;
  };

  std::map<TagCategory, MatchCounts> counts;
  for (const auto& [id, entities] : gold)
    for (const SurfaceEntity& e : entities) counts[e.category].gold++;
  for (const auto& [id, prediction] : pred) {
    const auto git = gold.find(id);
    const std::vector<SurfaceEntity> empty;
    const std::vector<SurfaceEntity>& gold_list = git == gold.end() ? empty : git->second;
    std::vector<bool> used(gold_list.size(), false);
    for (const auto& [surface, category] : prediction.entities) {
      counts[category].predicted++;
      const std::string key = canon(surface);
      for (std::size_t j = 0; j < gold_list.size(); ++j) {
        if (used[j] || gold_list[j].category != category || canon(gold_list[j].surface) != key)
          continue;
        used[j] = true;
        counts[category].correct++;
        break;
      }
    }
  }
  return finish(std::move(counts));
}

std::string render_table(const std::vector<NamedReport>& reports) {
  std::size_t name_width = 3;  // "run"
  for (const auto& r : reports) name_width = std::max(name_width, r.name.size());

  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
    return std::string(buf);
  };

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "run";
  for (const char* col : {"PER", "LOC", "ORG", "OTHER", "Pre.", "Rec.", "F1"})
    out << std::right << std::setw(8) << col;
  out << "\n";
  for (const auto& r : reports) {
    out << std::left << std::setw(static_cast<int>(name_width)) << r.name;
    for (TagCategory c : kAllCategories)
      out << std::right << std::setw(8) << pct(r.report.per_type.at(c).f1);
    out << std::right << std::setw(8) << pct(r.report.overall.precision) << std::setw(8)
        << pct(r.report.overall.recall) << std::setw(8) << pct(r.report.overall.f1);
    out << "\n";
  }
  return out.str();
}

std::string report_to_json(const MetricReport& report) {
  auto block = [](const Prf& p, const MatchCounts& c) {
    nlohmann::json j;
    j["precision"] = p.precision;
    j["recall"] = p.recall;
    j["f1"] = p.f1;
    j["gold"] = c.gold;
    j["predicted"] = c.predicted;
    j["correct"] = c.correct;
    return j;
  };
  nlohmann::json j;
  j["overall"] = block(report.overall, report.counts);
  for (TagCategory c : kAllCategories)
    j["per_type"][std::string(to_string(c))] =
        block(report.per_type.at(c), report.type_counts.at(c));
  return j.dump(2);
}

}  // namespace pgim

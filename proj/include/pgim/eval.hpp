#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "pgim/corpus.hpp"
#include "pgim/knowledge.hpp"

namespace pgim {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MatchCounts {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
};

/// Entity-level scores, micro-averaged overall and broken out per category.
/// Precision with zero predictions is 0 by convention; f1 is 0 when P+R = 0.
struct MetricReport {
  std::map<TagCategory, Prf> per_type;
  std::map<TagCategory, MatchCounts> type_counts;
  Prf overall;
  MatchCounts counts;
};

using SpanMap = std::map<std::string, std::vector<EntitySpan>>;

// Exact-boundary, exact-type matching of predicted spans against gold spans,
// sentence by sentence. Both maps must cover the same sentence ids.
MetricReport score_spans(const SpanMap& gold, const SpanMap& pred);

/// A gold entity as its space-joined surface string plus category, for
/// complete-match scoring of direct LLM answers.
struct SurfaceEntity {
  std::string surface;
  TagCategory category;
};

std::vector<SurfaceEntity> surface_entities(const AnnotatedSentence& s);

// Complete-match scoring: a prediction is correct iff an unmatched gold
// entity in the same sentence has the identical (single-space-normalized)
// surface and type. Greedy one-to-one matching in prediction order.
MetricReport score_direct(const std::map<std::string, std::vector<SurfaceEntity>>& gold,
                          const std::map<std::string, DirectPrediction>& pred,
                          bool fold_case = false);

struct NamedReport {
  std::string name;
  MetricReport report;
};

// Fixed-width text table: one row per report, per-type F1 columns then
// overall precision/recall/F1, as percentages with two decimals.
std::string render_table(const std::vector<NamedReport>& reports);

std::string report_to_json(const MetricReport& report);

}  // namespace pgim

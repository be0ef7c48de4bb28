#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "pgim/embedder.hpp"

namespace pgim {

/// A pre-defined annotated sample used as an in-context example: text,
/// caption, question and a gold answer (entity judgments plus reasoning).
struct Exemplar {
  std::string id;
  std::vector<std::string> text;
  std::string caption;
  std::string question;
  std::string answer;
  FusionVector fusion;
};

/// Top-N selection outcome, best first; ties broken by ascending exemplar id.
struct SelectionResult {
  std::vector<std::string> ids;
  std::vector<double> scores;
};

// a.b / (|a||b|); returns 0 and sets *zero_norm when either norm is 0.
// Throws on dimension mismatch.
double cosine(const FusionVector& a, const FusionVector& b, bool* zero_norm = nullptr);

// Exact search: the min(n, |exemplars|) highest-cosine exemplars, descending
// score, ties by ascending id.
SelectionResult select_top_n(const FusionVector& query, const std::vector<Exemplar>& exemplars,
                             std::size_t n);

// Resolves a selection back to exemplars, preserving selection order (this is
// the in-prompt order). Throws on a dangling id.
std::vector<Exemplar> build_context(const SelectionResult& result,
                                    const std::vector<Exemplar>& exemplars);

// JSON-lines {"id", "text": [tokens], "caption", "question", "answer"}.
// Fusion vectors are not part of the file; attach them separately.
std::vector<Exemplar> load_exemplars(std::istream& in);
std::vector<Exemplar> load_exemplar_file(const std::string& path);

// Fills each exemplar's fusion vector from its text and caption.
void attach_exemplar_fusion(std::vector<Exemplar>& exemplars, const Embedder& embedder);

}  // namespace pgim

#include "pgim/msea.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "pgim/util.hpp"

namespace pgim {

double cosine(const FusionVector& a, const FusionVector& b, bool* zero_norm) {
  if (a.dim() != b.dim())
    throw std::runtime_error("cosine: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                             std::to_string(b.dim()) + ")");
  if (a.norm == 0.0 || b.norm == 0.0) {
    if (zero_norm) *zero_norm = true;
    return 0.0;
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  return dot / (a.norm * b.norm);
}

SelectionResult select_top_n(const FusionVector& query, const std::vector<Exemplar>& exemplars,
                             std::size_t n) {
  if (n == 0) throw std::runtime_error("select_top_n: n must be at least 1");
  if (exemplars.empty()) throw std::runtime_error("select_top_n: exemplar set is empty");

  std::vector<double> scores(exemplars.size());
  for (std::size_t i = 0; i < exemplars.size(); ++i)
    scores[i] = cosine(query, exemplars[i].fusion);

  std::vector<std::size_t> order(exemplars.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return exemplars[a].id < exemplars[b].id;
  });

  std::size_t k = std::min(n, exemplars.size());
  SelectionResult result;
  result.ids.reserve(k);
  result.scores.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    result.ids.push_back(exemplars[order[i]].id);
    result.scores.push_back(scores[order[i]]);
  }
  return result;
}

std::vector<Exemplar> build_context(const SelectionResult& result,
                                    const std::vector<Exemplar>& exemplars) {
  std::vector<Exemplar> context;
  context.reserve(result.ids.size());
  for (const auto& id : result.ids) {
    auto it = std::find_if(exemplars.begin(), exemplars.end(),
                           [&](const Exemplar& e) { return e.id == id; });
    if (it == exemplars.end())
      throw std::runtime_error("build_context: unknown exemplar id \"" + id + "\"");
    context.push_back(*it);
  }
  return context;
}

std::vector<Exemplar> load_exemplars(std::istream& in) {
  std::vector<Exemplar> exemplars;
  std::string line;
  std::size_t line_no = 0;
  for (; std::getline(in, line);) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("exemplar file line " + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
    Exemplar e;
    try {
      e.id = j.at("id").get<std::string>();
      e.text = j.at("text").get<std::vector<std::string>>();
      e.caption = j.value("caption", std::string{});
      e.question = j.value("question", std::string{});
      e.answer = j.at("answer").get<std::string>();
    } catch (const std::exception& err) {
      throw std::runtime_error("exemplar file line " + std::to_string(line_no) + ": " +
                               err.what());
    }
    if (e.answer.empty())
      throw std::runtime_error("exemplar file line " + std::to_string(line_no) +
                               ": answer must be non-empty");
    if (e.text.empty())
      throw std::runtime_error("exemplar file line " + std::to_string(line_no) +
                               ": text must be non-empty");
    exemplars.push_back(std::move(e));
  }
  return exemplars;
}

std::vector<Exemplar> load_exemplar_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open exemplar file: " + path);
  return load_exemplars(in);
}

void attach_exemplar_fusion(std::vector<Exemplar>& exemplars, const Embedder& embedder) {
  for (auto& e : exemplars) {
    std::optional<std::string> caption;
    if (!e.caption.empty()) caption = e.caption;
    e.fusion = embedder.fuse(e.text, caption, e.id);
  }
}

}  // namespace pgim

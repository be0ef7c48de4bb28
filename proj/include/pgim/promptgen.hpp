#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pgim/msea.hpp"

namespace pgim {

enum class PromptMode { Knowledge, Direct };

/// Task description plus the fixed per-mode question. Knowledge mode asks for
/// entity judgments with reasoning; direct mode asks for extraction only.
struct PromptTemplate {
  std::string head;
  std::string question;
  PromptMode mode = PromptMode::Knowledge;

  static PromptTemplate default_knowledge();
  static PromptTemplate default_direct();
};

/// A fully assembled prompt. The text always ends with "Answer: " (open slot).
struct PromptDoc {
  std::string text;
  std::size_t example_count = 0;
  std::string test_id;
  std::string content_hash;  // SHA-256 hex of text
};

// "Text: {t}\nImage: {p}\nQuestion: {q}\nAnswer: {a}\n"
std::string render_example(const Exemplar& e, const std::string& question);

// "Text: {t}\nImage: {p}\nQuestion: {q}\nAnswer: " -- open answer slot.
std::string render_test(const std::vector<std::string>& tokens,
                        const std::optional<std::string>& caption, const std::string& question);

// head, blank line, example blocks in context order separated by one
// linefeed, then the test block. Zero examples degenerates to head + blank
// line + test block.
PromptDoc assemble(const PromptTemplate& tmpl, const std::vector<Exemplar>& context,
                   const std::vector<std::string>& tokens,
                   const std::optional<std::string>& caption, const std::string& test_id);

}  // namespace pgim

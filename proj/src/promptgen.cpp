#include "pgim/promptgen.hpp"

#include "pgim/util.hpp"

namespace pgim {

PromptTemplate PromptTemplate::default_knowledge() {
  PromptTemplate t;
  t.mode = PromptMode::Knowledge;
  t.head =
      "You are an expert in named entity recognition on social media posts. "
      "Given a piece of text and a description of the image attached to it, "
      "identify the named entities in the text and classify each one as PER "
      "(person), LOC (location), ORG (organization) or OTHER (other named "
      "entity). For every entity, explain the reasoning behind your judgment "
      "using the text, the image description and your own knowledge. The image "
      "description may be unrelated to the text; decide by yourself whether it "
      "helps.";
  t.question =
      "Please identify the named entities in the text, classify each one, and "
      "explain your reasoning.";
  return t;
}

PromptTemplate PromptTemplate::default_direct() {
  PromptTemplate t;
  t.mode = PromptMode::Direct;
  t.head =
      "You are an expert in named entity recognition on social media posts. "
      "Given a piece of text and a description of the image attached to it, "
      "extract the named entities in the text and classify each one as PER "
      "(person), LOC (location), ORG (organization) or OTHER (other named "
      "entity). Answer with one entity per line in the form \"entity (TYPE)\". "
      "If the text contains no named entities, answer \"none\". The image "
      "description may be unrelated to the text; decide by yourself whether it "
      "helps.";
  t.question = "What named entities are in the text?";
  return t;
}

std::string render_example(const Exemplar& e, const std::string& question) {
  std::string out;
  out += "Text: " + join(e.text, " ") + "\n";
  out += "Image: " + e.caption + "\n";
  out += "Question: " + question + "\n";
  out += "Answer: " + e.answer + "\n";
  return out;
}

std::string render_test(const std::vector<std::string>& tokens,
                        const std::optional<std::string>& caption, const std::string& question) {
  std::string out;
  out += "Text: " + join(tokens, " ") + "\n";
  out += "Image: " + (caption ? *caption : std::string{}) + "\n";
  out += "Question: " + question + "\n";
  out += "Answer: ";
  return out;
}

PromptDoc assemble(const PromptTemplate& tmpl, const std::vector<Exemplar>& context,
                   const std::vector<std::string>& tokens,
                   const std::optional<std::string>& caption, const std::string& test_id) {
  PromptDoc doc;
  doc.example_count = context.size();
  doc.test_id = test_id;
  doc.text = tmpl.head + "\n\n";
  for (const auto& e : context) doc.text += render_example(e, tmpl.question) + "\n";
  doc.text += render_test(tokens, caption, tmpl.question);
  doc.content_hash = sha256_hex(doc.text);
  return doc;
}

}  // namespace pgim

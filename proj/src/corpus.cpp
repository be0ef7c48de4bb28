#include "pgim/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "pgim/util.hpp"

namespace pgim {

std::string_view to_string(TagCategory c) {
  switch (c) {
    case TagCategory::PER: return "PER";
    case TagCategory::LOC: return "LOC";
    case TagCategory::ORG: return "ORG";
    case TagCategory::OTHER: return "OTHER";
  }
  throw std::logic_error("unreachable tag category");
}

std::optional<TagCategory> try_parse_category(std::string_view s) {
  std::string u(s);
  for (char& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "PER") return TagCategory::PER;
  if (u == "LOC") return TagCategory::LOC;
  if (u == "ORG") return TagCategory::ORG;
  // The two Twitter datasets disagree on the surface name of the fourth type.
  if (u == "OTHER" || u == "OTH" || u == "MISC") return TagCategory::OTHER;
  return std::nullopt;
}

TagCategory parse_category(std::string_view s) {
  auto c = try_parse_category(s);
  if (!c) throw std::runtime_error("unknown entity category: \"" + std::string(s) + "\"");
  return *c;
}

Tag Tag::parse(std::string_view s) {
  if (s == "O") return Tag::o();
  if (s.size() >= 3 && (s[0] == 'B' || s[0] == 'I') && s[1] == '-') {
    auto cat = try_parse_category(s.substr(2));
    if (cat) return Tag{s[0] == 'B' ? Kind::B : Kind::I, *cat};
  }
  throw std::runtime_error("invalid tag string: \"" + std::string(s) + "\"");
}

std::string Tag::str() const {
  switch (kind) {
    case Kind::O: return "O";
    case Kind::B: return "B-" + std::string(to_string(category));
    case Kind::I: return "I-" + std::string(to_string(category));
  }
  throw std::logic_error("unreachable tag kind");
}

bool bio2_valid(const std::vector<Tag>& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind != Tag::Kind::I) continue;
    if (i == 0) return false;
    const Tag& prev = tags[i - 1];
    if (prev.kind == Tag::Kind::O || prev.category != tags[i].category) return false;
  }
  return true;
}

namespace {

// Fixes I-X runs with no valid predecessor by turning the run head into B-X.
std::size_t repair_bio2(std::vector<Tag>& tags) {
  std::size_t repairs = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].kind != Tag::Kind::I) continue;
    bool ok = i > 0 && tags[i - 1].kind != Tag::Kind::O &&
              tags[i - 1].category == tags[i].category;
    if (!ok) {
      tags[i].kind = Tag::Kind::B;
      ++repairs;
    }
  }
  return repairs;
}

}  // namespace

ParseResult parse_conll(std::istream& in, std::string_view corpus_name, Bio2Mode mode) {
  ParseResult result;
  std::vector<std::string> tokens;
  std::vector<Tag> tags;
  std::size_t sentence_start_line = 1;
  std::size_t line_no = 0;
  std::size_t ordinal = 0;

  auto flush = [&]() {
    if (tokens.empty()) return;
    if (mode == Bio2Mode::Repair) {
      result.repairs += repair_bio2(tags);
    } else if (!bio2_valid(tags)) {
      throw std::runtime_error("BIO2 violation in sentence starting at line " +
                               std::to_string(sentence_start_line));
    }
    AnnotatedSentence s;
    s.id = std::string(corpus_name) + ":" + std::to_string(ordinal++);
    s.tokens = std::move(tokens);
    s.tags = std::move(tags);
    result.sentences.push_back(std::move(s));
    tokens.clear();
    tags.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
      sentence_start_line = line_no + 1;
      continue;
    }
    if (tokens.empty()) sentence_start_line = line_no;
    // Delimiter is the first run of tabs/spaces.
    std::size_t delim = line.find_first_of(" \t");
    if (delim == std::string::npos)
      throw std::runtime_error("malformed line " + std::to_string(line_no) +
                               ": expected \"token<delim>tag\", got \"" + line + "\"");
    std::string token = line.substr(0, delim);
    std::size_t tag_start = line.find_first_not_of(" \t", delim);
    if (token.empty() || tag_start == std::string::npos)
      throw std::runtime_error("malformed line " + std::to_string(line_no) +
                               ": expected \"token<delim>tag\", got \"" + line + "\"");
    std::string tag_str = std::string(trim(line.substr(tag_start)));
    Tag tag;
    try {
      tag = Tag::parse(tag_str);
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    tokens.push_back(std::move(token));
    tags.push_back(tag);
  }
  flush();
  return result;
}

ParseResult parse_conll_file(const std::string& path, Bio2Mode mode) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::string stem = std::filesystem::path(path).stem().string();
  return parse_conll(in, stem, mode);
}

void serialize_conll(const std::vector<AnnotatedSentence>& sentences, std::ostream& out) {
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i)
      out << s.tokens[i] << '\t' << s.tags[i].str() << '\n';
    out << '\n';
  }
}

std::map<std::string, std::string> load_caption_sidecar(std::istream& in) {
  std::map<std::string, std::string> captions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("caption sidecar line " + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
    if (!j.contains("id") || !j.contains("caption"))
      throw std::runtime_error("caption sidecar line " + std::to_string(line_no) +
                               ": missing id or caption field");
    std::string id = j.at("id").get<std::string>();
    auto [it, inserted] = captions.emplace(id, j.at("caption").get<std::string>());
    if (!inserted)
      throw std::runtime_error("caption sidecar: duplicate id \"" + id + "\" at line " +
                               std::to_string(line_no));
  }
  return captions;
}

std::map<std::string, std::string> load_caption_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open caption sidecar: " + path);
  return load_caption_sidecar(in);
}

CaptionAttachment attach_captions(std::vector<AnnotatedSentence>& sentences,
                                  const std::map<std::string, std::string>& captions) {
  CaptionAttachment summary;
  std::map<std::string, AnnotatedSentence*> by_id;
  for (auto& s : sentences) by_id.emplace(s.id, &s);
  for (const auto& [id, caption] : captions) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      ++summary.unmatched;
    } else {
      it->second->caption = caption;
      ++summary.matched;
    }
  }
  return summary;
}

std::vector<EntitySpan> spans_from_tags(const std::vector<Tag>& tags) {
  if (!bio2_valid(tags)) throw std::runtime_error("spans_from_tags: BIO2-invalid tag sequence");
  std::vector<EntitySpan> spans;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i].kind == Tag::Kind::B) {
      std::size_t start = i;
      TagCategory cat = tags[i].category;
      ++i;
      while (i < tags.size() && tags[i].kind == Tag::Kind::I && tags[i].category == cat) ++i;
      spans.push_back({start, i, cat});
    } else {
      ++i;
    }
  }
  return spans;
}

std::vector<Tag> tags_from_spans(const std::vector<EntitySpan>& spans, std::size_t n) {
  std::vector<Tag> tags(n, Tag::o());
  std::vector<bool> used(n, false);
  for (const auto& span : spans) {
    if (span.start >= span.end || span.end > n)
      throw std::runtime_error("tags_from_spans: span out of range");
    for (std::size_t i = span.start; i < span.end; ++i) {
      if (used[i]) throw std::runtime_error("tags_from_spans: overlapping spans");
      used[i] = true;
      tags[i] = i == span.start ? Tag::b(span.category) : Tag::i(span.category);
    }
  }
  return tags;
}

}  // namespace pgim

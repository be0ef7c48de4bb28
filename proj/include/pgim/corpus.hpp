#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pgim {

enum class TagCategory { PER, LOC, ORG, OTHER };

inline constexpr TagCategory kAllCategories[] = {TagCategory::PER, TagCategory::LOC,
                                                 TagCategory::ORG, TagCategory::OTHER};

std::string_view to_string(TagCategory c);

// Accepts PER/LOC/ORG/OTHER plus the aliases OTH and MISC for OTHER.
// Throws naming the offending string.
TagCategory parse_category(std::string_view s);
std::optional<TagCategory> try_parse_category(std::string_view s);

/// One BIO2 tag: "O", "B-PER", "I-LOC", ...
struct Tag {
  enum class Kind { O, B, I };

  Kind kind = Kind::O;
  TagCategory category = TagCategory::OTHER;  // meaningful only when kind != O

  static Tag o() { return Tag{}; }
  static Tag b(TagCategory c) { return Tag{Kind::B, c}; }
  static Tag i(TagCategory c) { return Tag{Kind::I, c}; }

  static Tag parse(std::string_view s);
  std::string str() const;

  bool operator==(const Tag& other) const {
    if (kind != other.kind) return false;
    if (kind == Kind::O) return true;
    return category == other.category;
  }
  bool operator!=(const Tag& other) const { return !(*this == other); }
};

struct AnnotatedSentence {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Tag> tags;
  std::optional<std::string> caption;
};

/// Token span [start, end) carrying one entity of the given category.
struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  TagCategory category = TagCategory::OTHER;

  bool operator==(const EntitySpan&) const = default;
};

enum class Bio2Mode { Strict, Repair };

struct ParseResult {
  std::vector<AnnotatedSentence> sentences;
  std::size_t repairs = 0;
};

// True iff every I-X is preceded by B-X or I-X of the same category.
bool bio2_valid(const std::vector<Tag>& tags);

// Parses CoNLL-style "token<delim>tag" lines, blank-line sentence separation.
// Sentence ids are "<corpus_name>:<ordinal>" counting from 0. In repair mode
// an I-X without a valid predecessor becomes B-X and is counted.
ParseResult parse_conll(std::istream& in, std::string_view corpus_name,
                        Bio2Mode mode = Bio2Mode::Strict);

// Convenience wrapper; corpus name is the file stem ("data/train.conll" -> "train").
ParseResult parse_conll_file(const std::string& path, Bio2Mode mode = Bio2Mode::Strict);

// Writes "token<TAB>tag" lines with blank lines between sentences.
void serialize_conll(const std::vector<AnnotatedSentence>& sentences, std::ostream& out);

// JSON-lines sidecar {"id": ..., "caption": ...}. Throws on duplicate ids.
std::map<std::string, std::string> load_caption_sidecar(std::istream& in);
std::map<std::string, std::string> load_caption_file(const std::string& path);

struct CaptionAttachment {
  std::size_t matched = 0;
  std::size_t unmatched = 0;  // caption ids with no corpus sentence
};

CaptionAttachment attach_captions(std::vector<AnnotatedSentence>& sentences,
                                  const std::map<std::string, std::string>& captions);

// Maximal B-initiated runs, sorted by start. Throws on BIO2-invalid input.
std::vector<EntitySpan> spans_from_tags(const std::vector<Tag>& tags);

// Exact inverse of spans_from_tags. Throws on overlap or out-of-range spans.
std::vector<Tag> tags_from_spans(const std::vector<EntitySpan>& spans, std::size_t n);

}  // namespace pgim

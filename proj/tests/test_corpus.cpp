#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>
#include <vector>

#include "pgim/corpus.hpp"
#include "pgim/util.hpp"

using namespace pgim;

namespace {

std::vector<Tag> random_valid_tags(SplitMix64& rng, std::size_t n) {
  std::vector<Tag> tags;
  for (std::size_t i = 0; i < n; ++i) {
    const bool can_continue = !tags.empty() && tags.back().kind != Tag::Kind::O;
    const uint64_t pick = rng.next_below(can_continue ? 3 : 2);
    if (pick == 0) {
      tags.push_back(Tag::o());
    } else if (pick == 1) {
      tags.push_back(Tag::b(kAllCategories[rng.next_below(4)]));
    } else {
      tags.push_back(Tag::i(tags.back().category));
    }
  }
  return tags;
}

}  // namespace

TEST_CASE("tag strings parse and format as an exact bijection") {
  for (const char* s : {"O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG", "B-OTHER",
                        "I-OTHER"}) {
    const Tag t = Tag::parse(s);
    CHECK(t.str() == s);
    CHECK(Tag::parse(t.str()) == t);
  }
}

TEST_CASE("category aliases normalize to OTHER") {
  CHECK(Tag::parse("B-OTH") == Tag::b(TagCategory::OTHER));
  CHECK(Tag::parse("B-MISC") == Tag::b(TagCategory::OTHER));
  CHECK(Tag::parse("I-misc") == Tag::i(TagCategory::OTHER));
  CHECK(Tag::parse("B-OTH").str() == "B-OTHER");
  CHECK(parse_category("oth") == TagCategory::OTHER);
  CHECK(parse_category("MISC") == TagCategory::OTHER);
  CHECK_THROWS_WITH_AS(static_cast<void>(Tag::parse("B-XYZ")),
                       doctest::Contains("XYZ"), std::runtime_error);
  CHECK_THROWS(static_cast<void>(Tag::parse("Z")));
}

TEST_CASE("two-token sentence parses with tokens and tags in order") {
  std::istringstream in("EU B-ORG\nrejects O\n\n");
  const ParseResult r = parse_conll(in, "sample");
  REQUIRE(r.sentences.size() == 1);
  CHECK(r.sentences[0].id == "sample:0");
  CHECK(r.sentences[0].tokens == std::vector<std::string>{"EU", "rejects"});
  CHECK(r.sentences[0].tags == std::vector<Tag>{Tag::b(TagCategory::ORG), Tag::o()});
  CHECK(r.repairs == 0);
}

TEST_CASE("tab and space delimiters both work, ids count from zero") {
  std::istringstream in("a\tO\n\nb O\nc\tB-PER\n");
  const ParseResult r = parse_conll(in, "two");
  REQUIRE(r.sentences.size() == 2);
  CHECK(r.sentences[0].id == "two:0");
  CHECK(r.sentences[1].id == "two:1");
  CHECK(r.sentences[1].tokens == std::vector<std::string>{"b", "c"});
}

TEST_CASE("orphan I tag errors in strict mode and becomes B in repair mode") {
  {
    std::istringstream in("x I-PER\n\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(parse_conll(in, "s")), doctest::Contains("1"),
                         std::runtime_error);
  }
  {
    std::istringstream in("x I-PER\n\n");
    const ParseResult r = parse_conll(in, "s", Bio2Mode::Repair);
    REQUIRE(r.sentences.size() == 1);
    CHECK(r.sentences[0].tags == std::vector<Tag>{Tag::b(TagCategory::PER)});
    CHECK(r.repairs == 1);
  }
}

TEST_CASE("category switch without B is a violation too") {
  std::istringstream strict("a B-PER\nb I-LOC\n\n");
  CHECK_THROWS(static_cast<void>(parse_conll(strict, "s")));
  std::istringstream repair("a B-PER\nb I-LOC\n\n");
  const ParseResult r = parse_conll(repair, "s", Bio2Mode::Repair);
  CHECK(r.sentences[0].tags ==
        std::vector<Tag>{Tag::b(TagCategory::PER), Tag::b(TagCategory::LOC)});
  CHECK(r.repairs == 1);
}

TEST_CASE("malformed lines error with their line number") {
  std::istringstream in("good O\nbadline\n\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(parse_conll(in, "s")), doctest::Contains("2"),
                       std::runtime_error);
}

TEST_CASE("repair mode output is always BIO2-valid") {
  SplitMix64 rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    std::ostringstream raw;
    const std::size_t n = 1 + rng.next_below(8);
    for (std::size_t i = 0; i < n; ++i) {
      // arbitrary tags, frequently invalid
      static const char* kTags[] = {"O", "B-PER", "I-PER", "I-LOC", "B-ORG", "I-OTHER"};
      raw << "tok" << i << "\t" << kTags[rng.next_below(6)] << "\n";
    }
    raw << "\n";
    std::istringstream in(raw.str());
    const ParseResult r = parse_conll(in, "fuzz", Bio2Mode::Repair);
    for (const auto& s : r.sentences) CHECK(bio2_valid(s.tags));
  }
}

TEST_CASE("parse then serialize round-trips modulo whitespace") {
  const std::string text = "EU\tB-ORG\nrejects\tO\n\nGerman\tB-OTHER\ncall\tO\n\n";
  std::istringstream in(text);
  const ParseResult r = parse_conll(in, "x");
  std::ostringstream out;
  serialize_conll(r.sentences, out);
  CHECK(out.str() == text);
}

TEST_CASE("caption sidecar attaches by id") {
  std::istringstream corpus("a O\n\nb O\n\n");
  auto sentences = parse_conll(corpus, "s").sentences;

  SUBCASE("matching id gains the caption") {
    const CaptionAttachment att = attach_captions(sentences, {{"s:0", "a dog on grass"}});
    CHECK(att.matched == 1);
    CHECK(att.unmatched == 0);
    REQUIRE(sentences[0].caption.has_value());
    CHECK(*sentences[0].caption == "a dog on grass");
    CHECK_FALSE(sentences[1].caption.has_value());
  }
  SUBCASE("empty map changes nothing") {
    const CaptionAttachment att = attach_captions(sentences, {});
    CHECK(att.matched == 0);
    CHECK_FALSE(sentences[0].caption.has_value());
  }
  SUBCASE("unknown caption id is counted, sentences untouched") {
    const CaptionAttachment att = attach_captions(sentences, {{"s:9", "nope"}});
    CHECK(att.matched == 0);
    CHECK(att.unmatched == 1);
    CHECK_FALSE(sentences[0].caption.has_value());
  }
}

TEST_CASE("caption file loader rejects duplicate ids") {
  std::istringstream in(
      "{\"id\": \"s:0\", \"caption\": \"one\"}\n{\"id\": \"s:0\", \"caption\": \"two\"}\n");
  CHECK_THROWS_WITH_AS(static_cast<void>(load_caption_sidecar(in)), doctest::Contains("s:0"),
                       std::runtime_error);
}

TEST_CASE("span extraction follows the BIO2 run structure") {
  using C = TagCategory;
  CHECK(spans_from_tags({Tag::b(C::PER), Tag::i(C::PER), Tag::o()}) ==
        std::vector<EntitySpan>{{0, 2, C::PER}});
  CHECK(spans_from_tags({Tag::o(), Tag::o()}).empty());
  CHECK(spans_from_tags({Tag::b(C::LOC), Tag::b(C::LOC)}) ==
        std::vector<EntitySpan>{{0, 1, C::LOC}, {1, 2, C::LOC}});
  CHECK_THROWS(static_cast<void>(spans_from_tags({Tag::i(C::PER)})));
}

TEST_CASE("span to tag conversion handles the documented cases") {
  using C = TagCategory;
  CHECK(tags_from_spans({{0, 2, C::PER}}, 3) ==
        std::vector<Tag>{Tag::b(C::PER), Tag::i(C::PER), Tag::o()});
  CHECK(tags_from_spans({}, 2) == std::vector<Tag>{Tag::o(), Tag::o()});
  CHECK(tags_from_spans({{1, 2, C::ORG}}, 2) == std::vector<Tag>{Tag::o(), Tag::b(C::ORG)});
  CHECK_THROWS(static_cast<void>(tags_from_spans({{0, 2, C::PER}, {1, 3, C::LOC}}, 4)));
  CHECK_THROWS(static_cast<void>(tags_from_spans({{1, 3, C::PER}}, 2)));
}

TEST_CASE("span round trip holds on random valid sequences") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const std::vector<Tag> tags = random_valid_tags(rng, 1 + rng.next_below(12));
    const auto spans = spans_from_tags(tags);
    for (std::size_t i = 1; i < spans.size(); ++i) {
      CHECK(spans[i - 1].end <= spans[i].start);  // sorted, non-overlapping
    }
    CHECK(tags_from_spans(spans, tags.size()) == tags);
  }
}

TEST_CASE("fixture corpus loads with the expected shape") {
  const ParseResult r = parse_conll_file(std::string(PGIM_TEST_DATA) + "/train.conll");
  CHECK(r.sentences.size() == 24);
  CHECK(r.sentences[0].id == "train:0");
  for (const auto& s : r.sentences) {
    CHECK(s.tokens.size() == s.tags.size());
    CHECK(bio2_valid(s.tags));
  }
  const auto captions = load_caption_file(std::string(PGIM_TEST_DATA) + "/captions.jsonl");
  auto sentences = r.sentences;
  const CaptionAttachment att = attach_captions(sentences, captions);
  CHECK(att.matched == 12);  // every even train ordinal has a caption
}

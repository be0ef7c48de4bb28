#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "pgim/corpus.hpp"
#include "pgim/crf.hpp"
#include "pgim/embedder.hpp"
#include "pgim/knowledge.hpp"
#include "pgim/pipeline.hpp"
#include "pgim/promptgen.hpp"

namespace pgim {

/// Flat "key = value" file with '#' comments and blank lines. Values are
/// stored escaped so newlines (prompt templates) survive the round trip.
/// A key given twice keeps its last value, which makes append-style override
/// files cheap.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& origin = "<config>");
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }

  const std::string& get(const std::string& key) const;  // throws when absent
  std::string get_or(const std::string& key, const std::string& fallback) const;

  std::string dump() const;  // sorted keys, escaped values
  void save(const std::string& path) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

/// Everything one run needs. A single master seed fans out into the embedder
/// and training seeds unless those are set explicitly.
struct RunConfig {
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string captions_path;
  std::string exemplars_path;
  std::string fusion_store_path;
  std::string token_store_path;
  std::string knowledge_path;
  std::string cache_dir = "cache";
  std::string model_path = "model.crf";

  uint64_t seed = 42;
  std::size_t top_n = 5;
  std::size_t concurrency = 4;
  bool strict_decode = true;
  bool baseline_no_knowledge = false;
  Bio2Mode bio2_mode = Bio2Mode::Strict;

  EmbedderSpec embedder;
  EngineConfig engine;
  crf::TrainConfig train;
  PromptTemplate tmpl = PromptTemplate::default_knowledge();

  static RunConfig defaults();
  // Rejects unknown keys so typos fail loudly.
  static RunConfig from_kv(const KeyValueConfig& kv);
  KeyValueConfig to_kv() const;  // complete snapshot, derived seeds included

  // The embedder spec with the store paths filled in from the path fields.
  EmbedderSpec embedder_spec() const;
  PipelineConfig pipeline() const;
};

}  // namespace pgim

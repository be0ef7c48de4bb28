#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgim/corpus.hpp"
#include "pgim/embedder.hpp"
#include "pgim/msea.hpp"
#include "pgim/promptgen.hpp"

namespace pgim {

struct EngineConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  std::size_t max_tokens = 0;  // 0: server default
  double timeout_s = 60.0;
  std::size_t max_attempts = 3;
  double backoff_s = 1.0;  // doubles after each failed attempt
  std::string api_key_env = "OPENAI_API_KEY";
};

/// Auxiliary refined knowledge for one sentence: the engine's answer text plus
/// bookkeeping linking it back to the prompt that produced it.
struct KnowledgeText {
  std::string content;
  std::size_t m = 0;  // whitespace token count of content
  std::string prompt_hash;
  std::string engine;
  std::string timestamp;
};

/// Entities read off a direct-prediction answer, plus how many lines did not
/// match the expected shapes.
struct DirectPrediction {
  std::vector<std::pair<std::string, TagCategory>> entities;
  std::size_t skipped = 0;
};

/// One prompt in, one completion out. Implementations throw on transport or
/// protocol failure; retry policy lives in generate, not here.
class Engine {
 public:
  virtual ~Engine() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Deterministic stand-in keyed by the SHA-256 of the incoming prompt.
/// Unknown prompts get the fallback text; an empty fallback exercises the
/// empty-response error path.
class MockEngine : public Engine {
 public:
  explicit MockEngine(std::map<std::string, std::string> by_prompt_hash = {},
                      std::string fallback = "No additional context.");

  std::string id() const override { return "mock"; }
  std::string complete(const std::string& prompt) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::map<std::string, std::string> by_hash_;
  std::string fallback_;
  std::atomic<std::size_t> calls_{0};
};

/// OpenAI-compatible chat-completions client. The API key is read from the
/// environment variable named in the config at request time.
class HttpEngine : public Engine {
 public:
  explicit HttpEngine(EngineConfig cfg);

  std::string id() const override { return cfg_.model; }
  std::string complete(const std::string& prompt) override;

 private:
  EngineConfig cfg_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
};

/// Directory of response files named by request key (hex digest of prompt
/// hash + model + temperature). Files hold request and response JSON so runs
/// are resumable and inspectable.
class KnowledgeCache {
 public:
  explicit KnowledgeCache(std::string dir);

  static std::string key(const std::string& prompt_hash, const std::string& model,
                         double temperature);

  std::optional<KnowledgeText> lookup(const std::string& key) const;
  void store(const std::string& key, const KnowledgeText& text, const std::string& model,
             double temperature, const std::string& prompt_text);

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  mutable std::mutex mu_;
};

// Cache-through request: hit returns the stored text without touching the
// engine; miss calls the engine with retries and exponential backoff, stores,
// returns. An empty completion is an error and is never cached.
KnowledgeText generate(const PromptDoc& prompt, Engine& engine, const EngineConfig& cfg,
                       KnowledgeCache* cache = nullptr);

// Lenient reader for direct-prediction answers: accepts "{surface} ({TYPE})"
// and "{surface}: {TYPE}" lines, TYPE case-insensitive with the OTHER
// aliases. Anything else is skipped and counted. Never throws.
DirectPrediction parse_direct(const std::string& answer);

struct ManifestEntry {
  std::string id;
  std::string prompt_hash;
  std::size_t m = 0;
};

struct AugmentResult {
  std::map<std::string, KnowledgeText> knowledge;          // by sentence id
  std::vector<ManifestEntry> manifest;                     // corpus order
  std::vector<std::pair<std::string, std::string>> failures;  // id -> reason
};

// Stage-1 over a whole corpus: fuse, select top-n exemplars, assemble the
// prompt, generate. Runs a bounded worker pool; results are assembled in
// corpus order regardless of completion order. Per-sentence failures are
// collected, not thrown. n = 0 sends example-free prompts.
AugmentResult augment_corpus(const std::vector<AnnotatedSentence>& corpus,
                             const std::vector<Exemplar>& exemplars, const PromptTemplate& tmpl,
                             const Embedder& embedder, Engine& engine, const EngineConfig& cfg,
                             std::size_t n, std::size_t concurrency = 4,
                             KnowledgeCache* cache = nullptr);

// JSON-lines {"id", "prompt_hash", "m"}, manifest order.
void save_manifest(const AugmentResult& result, const std::string& path);

// JSON-lines {"id", "content", "m", "prompt_hash", "engine"}, sorted by id.
void save_knowledge(const std::map<std::string, KnowledgeText>& knowledge,
                    const std::string& path);
std::map<std::string, KnowledgeText> load_knowledge(const std::string& path);

}  // namespace pgim

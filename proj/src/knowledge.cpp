#include "pgim/knowledge.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "pgim/util.hpp"

namespace pgim {

namespace {

std::string format_temperature(double t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", t);
  return buf;
}

}  // namespace

MockEngine::MockEngine(std::map<std::string, std::string> by_prompt_hash, std::string fallback)
    : by_hash_(std::move(by_prompt_hash)), fallback_(std::move(fallback)) {}

std::string MockEngine::complete(const std::string& prompt) {
  calls_.fetch_add(1);
  auto it = by_hash_.find(sha256_hex(prompt));
  return it == by_hash_.end() ? fallback_ : it->second;
}

HttpEngine::HttpEngine(EngineConfig cfg) : cfg_(std::move(cfg)) {
  const auto scheme_end = cfg_.endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw std::runtime_error("engine endpoint must include a scheme: " + cfg_.endpoint);
  const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_ = cfg_.endpoint;
    path_ = "/";
  } else {
    base_ = cfg_.endpoint.substr(0, path_start);
    path_ = cfg_.endpoint.substr(path_start);
  }
}

std::string HttpEngine::complete(const std::string& prompt) {
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (!key || !*key)
    throw std::runtime_error("environment variable " + cfg_.api_key_env + " is not set");

  nlohmann::json body;
  body["model"] = cfg_.model;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = cfg_.temperature;
  if (cfg_.max_tokens > 0) body["max_tokens"] = cfg_.max_tokens;

  httplib::Client client(base_);
  const auto timeout = std::chrono::duration<double>(cfg_.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
  httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw std::runtime_error("transport error: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw std::runtime_error("engine returned status " + std::to_string(res->status) + ": " +
                             res->body.substr(0, 200));
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(res->body);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("engine response is not JSON: ") + e.what());
  }
  if (!parsed.contains("choices") || parsed["choices"].empty() ||
      !parsed["choices"][0].contains("message"))
    throw std::runtime_error("engine response missing choices[0].message");
  return parsed["choices"][0]["message"].value("content", std::string());
}

KnowledgeCache::KnowledgeCache(std::string dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string KnowledgeCache::key(const std::string& prompt_hash, const std::string& model,
                                double temperature) {
  return sha256_hex(prompt_hash + "\n" + model + "\n" + format_temperature(temperature));
}

std::optional<KnowledgeText> KnowledgeCache::lookup(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto path = std::filesystem::path(dir_) / (key + ".json");
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("corrupt cache entry " + path.string() + ": " + e.what());
  }
  KnowledgeText text;
  text.content = j.at("content").get<std::string>();
  text.m = j.at("m").get<std::size_t>();
  text.prompt_hash = j.at("prompt_hash").get<std::string>();
  text.engine = j.value("engine", std::string());
  text.timestamp = j.value("timestamp", std::string());
  return text;
}

void KnowledgeCache::store(const std::string& key, const KnowledgeText& text,
                           const std::string& model, double temperature,
                           const std::string& prompt_text) {
  std::lock_guard<std::mutex> lock(mu_);
  nlohmann::json j;
  j["prompt_hash"] = text.prompt_hash;
  j["model"] = model;
  j["temperature"] = temperature;
  j["prompt"] = prompt_text;
  j["engine"] = text.engine;
  j["content"] = text.content;
  j["m"] = text.m;
  j["timestamp"] = text.timestamp;
  const auto path = std::filesystem::path(dir_) / (key + ".json");
  const auto tmp = std::filesystem::path(dir_) / (key + ".json.tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write cache entry: " + tmp.string());
    out << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

KnowledgeText generate(const PromptDoc& prompt, Engine& engine, const EngineConfig& cfg,
                       KnowledgeCache* cache) {
  if (cfg.max_attempts == 0) throw std::runtime_error("generate: need at least one attempt");
  if (cfg.temperature < 0) throw std::runtime_error("generate: temperature must be >= 0");

  const std::string key = KnowledgeCache::key(prompt.content_hash, cfg.model, cfg.temperature);
  if (cache) {
    if (auto hit = cache->lookup(key)) return *hit;
  }

  std::string last_error;
  for (std::size_t attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
    std::string content;
    try {
      content = engine.complete(prompt.text);
    } catch (const std::exception& e) {
      last_error = e.what();
      if (attempt < cfg.max_attempts) {
        const double delay = cfg.backoff_s * static_cast<double>(1u << (attempt - 1));
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      continue;
    }
    if (content.empty())
      throw std::runtime_error("engine returned an empty completion for prompt " +
                               prompt.content_hash);
    KnowledgeText text;
    text.content = std::move(content);
    text.m = split_whitespace(text.content).size();
    text.prompt_hash = prompt.content_hash;
    text.engine = engine.id();
    text.timestamp = utc_timestamp();
    if (cache) cache->store(key, text, cfg.model, cfg.temperature, prompt.text);
    return text;
  }
  throw std::runtime_error("engine failed after " + std::to_string(cfg.max_attempts) +
                           " attempts: " + last_error);
}

DirectPrediction parse_direct(const std::string& answer) {
  DirectPrediction out;
  std::size_t pos = 0;
  while (pos <= answer.size()) {
    const auto nl = answer.find('\n', pos);
    const std::string_view line =
        trim(std::string_view(answer).substr(pos, nl == std::string::npos ? answer.size() - pos
                                                                          : nl - pos));
    pos = nl == std::string::npos ? answer.size() + 1 : nl + 1;
    if (line.empty()) continue;

    // "{surface} ({TYPE})": type in the trailing parenthesis pair.
    if (line.back() == ')') {
      const auto open = line.rfind('(');
      if (open != std::string_view::npos) {
        const auto surface = trim(line.substr(0, open));
        const auto type = try_parse_category(to_upper(trim(line.substr(open + 1, line.size() - open - 2))));
        if (!surface.empty() && type) {
          out.entities.emplace_back(std::string(surface), *type);
          continue;
        }
      }
    }
    // "{surface}: {TYPE}": type after the last colon.
    const auto colon = line.rfind(':');
    if (colon != std::string_view::npos) {
      const auto surface = trim(line.substr(0, colon));
      const auto type = try_parse_category(to_upper(trim(line.substr(colon + 1))));
      if (!surface.empty() && type) {
        out.entities.emplace_back(std::string(surface), *type);
        continue;
      }
    }
    ++out.skipped;
  }
  return out;
}

AugmentResult augment_corpus(const std::vector<AnnotatedSentence>& corpus,
                             const std::vector<Exemplar>& exemplars, const PromptTemplate& tmpl,
                             const Embedder& embedder, Engine& engine, const EngineConfig& cfg,
                             std::size_t n, std::size_t concurrency, KnowledgeCache* cache) {
  if (n > 0 && exemplars.empty())
    throw std::runtime_error("augment: in-context examples requested but no exemplars given");
  if (concurrency == 0) concurrency = 1;

  std::vector<std::optional<KnowledgeText>> slots(corpus.size());
  std::vector<std::pair<std::size_t, std::string>> failures;
  std::mutex failures_mu;
  std::atomic<std::size_t> cursor{0};

  auto work = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= corpus.size()) return;
      const AnnotatedSentence& s = corpus[i];
      try {
        const FusionVector query = embedder.fuse(s.tokens, s.caption, s.id);
        std::vector<Exemplar> context;
        if (n > 0) context = build_context(select_top_n(query, exemplars, n), exemplars);
        const PromptDoc doc = assemble(tmpl, context, s.tokens, s.caption, s.id);
        slots[i] = generate(doc, engine, cfg, cache);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failures_mu);
        failures.emplace_back(i, e.what());
      }
    }
  };

  std::vector<std::thread> pool;
  const std::size_t workers = std::min(concurrency, corpus.size());
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();

  AugmentResult out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!slots[i]) continue;
    out.manifest.push_back({corpus[i].id, slots[i]->prompt_hash, slots[i]->m});
    out.knowledge.emplace(corpus[i].id, std::move(*slots[i]));
  }
  std::sort(failures.begin(), failures.end());
  for (auto& [i, reason] : failures) out.failures.emplace_back(corpus[i].id, reason);
  return out;
}

void save_manifest(const AugmentResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto& e : result.manifest) {
    nlohmann::json j;
    j["id"] = e.id;
    j["prompt_hash"] = e.prompt_hash;
    j["m"] = e.m;
    out << j.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed for manifest: " + path);
}

void save_knowledge(const std::map<std::string, KnowledgeText>& knowledge,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write knowledge file: " + path);
  for (const auto& [id, text] : knowledge) {
    nlohmann::json j;
    j["id"] = id;
    j["content"] = text.content;
    j["m"] = text.m;
    j["prompt_hash"] = text.prompt_hash;
    j["engine"] = text.engine;
    out << j.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed for knowledge file: " + path);
}

std::map<std::string, KnowledgeText> load_knowledge(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open knowledge file: " + path);
  std::map<std::string, KnowledgeText> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
    }
    KnowledgeText text;
    text.content = j.at("content").get<std::string>();
    text.m = j.value("m", split_whitespace(text.content).size());
    text.prompt_hash = j.value("prompt_hash", std::string());
    text.engine = j.value("engine", std::string());
    const std::string id = j.at("id").get<std::string>();
    if (!out.emplace(id, std::move(text)).second)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": duplicate id \"" + id +
                               "\"");
  }
  return out;
}

}  // namespace pgim

#include "pgim/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pgim/util.hpp"

namespace pgim {

namespace {

std::string escape_value(const std::string& v) {
  std::string out;
  out.reserve(v.size());
  for (char c : v) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_value(std::string_view v, const std::string& where) {
  std::string out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != '\\') {
      out += v[i];
      continue;
    }
    if (i + 1 == v.size()) throw std::runtime_error(where + ": dangling escape");
    switch (v[++i]) {
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: throw std::runtime_error(where + ": unknown escape \\" + std::string(1, v[i]));
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": \"" + v + "\" is not a number");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    // stoull would wrap a leading minus around instead of failing.
    if (v.find('-') != std::string::npos) throw std::invalid_argument(v);
    std::size_t used = 0;
    const uint64_t x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config key " + key + ": \"" + v + "\" is not an unsigned integer");
  }
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(parse_u64(key, v));
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config key " + key + ": \"" + v + "\" is not a boolean");
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& origin) {
  KeyValueConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string_view::npos)
      throw std::runtime_error(where + ": expected \"key = value\"");
    const std::string key(trim(stripped.substr(0, eq)));
    if (key.empty()) throw std::runtime_error(where + ": empty key");
    cfg.entries_[key] = unescape_value(trim(stripped.substr(eq + 1)), where);
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse(in, path);
}

const std::string& KeyValueConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw std::runtime_error("missing config key: " + key);
  return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::string KeyValueConfig::dump() const {
  std::ostringstream out;
  for (const auto& [key, value] : entries_) out << key << " = " << escape_value(value) << "\n";
  return out.str();
}

void KeyValueConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << dump();
  if (!out) throw std::runtime_error("write failed for config file: " + path);
}

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  cfg.embedder.seed = derive_seed(cfg.seed, "embed");
  cfg.train.seed = derive_seed(cfg.seed, "train");
  return cfg;
}

RunConfig RunConfig::from_kv(const KeyValueConfig& kv) {
  RunConfig cfg;
  for (const auto& [key, value] : kv.entries()) {
    if (key == "path.train") cfg.train_path = value;
    else if (key == "path.dev") cfg.dev_path = value;
    else if (key == "path.test") cfg.test_path = value;
    else if (key == "path.captions") cfg.captions_path = value;
    else if (key == "path.exemplars") cfg.exemplars_path = value;
    else if (key == "path.fusion_store") cfg.fusion_store_path = value;
    else if (key == "path.token_store") cfg.token_store_path = value;
    else if (key == "path.knowledge") cfg.knowledge_path = value;
    else if (key == "path.cache_dir") cfg.cache_dir = value;
    else if (key == "path.model") cfg.model_path = value;
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "top_n") cfg.top_n = parse_size(key, value);
    else if (key == "concurrency") cfg.concurrency = parse_size(key, value);
    else if (key == "strict_decode") cfg.strict_decode = parse_bool(key, value);
    else if (key == "baseline") cfg.baseline_no_knowledge = parse_bool(key, value);
    else if (key == "bio2") {
      if (value == "strict") cfg.bio2_mode = Bio2Mode::Strict;
      else if (value == "repair") cfg.bio2_mode = Bio2Mode::Repair;
      else throw std::runtime_error("config key bio2: expected strict or repair, got " + value);
    } else if (key == "embedder.backend") {
      if (value == "hashed") cfg.embedder.backend = EmbedderBackend::Hashed;
      else if (value == "file") cfg.embedder.backend = EmbedderBackend::File;
      else throw std::runtime_error("config key embedder.backend: expected hashed or file, got " +
                                    value);
    } else if (key == "embedder.fusion_dim") cfg.embedder.fusion_dim = parse_size(key, value);
    else if (key == "embedder.token_dim") cfg.embedder.token_dim = parse_size(key, value);
    else if (key == "embedder.buckets") cfg.embedder.buckets = parse_size(key, value);
    else if (key == "embedder.seed") cfg.embedder.seed = parse_u64(key, value);
    else if (key == "engine.endpoint") cfg.engine.endpoint = value;
    else if (key == "engine.model") cfg.engine.model = value;
    else if (key == "engine.temperature") cfg.engine.temperature = parse_double(key, value);
    else if (key == "engine.max_tokens") cfg.engine.max_tokens = parse_size(key, value);
    else if (key == "engine.timeout_s") cfg.engine.timeout_s = parse_double(key, value);
    else if (key == "engine.max_attempts") cfg.engine.max_attempts = parse_size(key, value);
    else if (key == "engine.backoff_s") cfg.engine.backoff_s = parse_double(key, value);
    else if (key == "engine.api_key_env") cfg.engine.api_key_env = value;
    else if (key == "train.lr") cfg.train.lr = parse_double(key, value);
    else if (key == "train.batch_size") cfg.train.batch_size = parse_size(key, value);
    else if (key == "train.epochs") cfg.train.epochs = parse_size(key, value);
    else if (key == "train.warmup_fraction") cfg.train.warmup_fraction = parse_double(key, value);
    else if (key == "train.beta1") cfg.train.beta1 = parse_double(key, value);
    else if (key == "train.beta2") cfg.train.beta2 = parse_double(key, value);
    else if (key == "train.eps") cfg.train.eps = parse_double(key, value);
    else if (key == "train.weight_decay") cfg.train.weight_decay = parse_double(key, value);
    else if (key == "train.seed") cfg.train.seed = parse_u64(key, value);
    else if (key == "train.max_length") cfg.train.max_length = parse_size(key, value);
    else if (key == "template.mode") {
      if (value == "knowledge") {
        const PromptTemplate base = PromptTemplate::default_knowledge();
        cfg.tmpl.mode = base.mode;
        if (!kv.has("template.head")) cfg.tmpl.head = base.head;
        if (!kv.has("template.question")) cfg.tmpl.question = base.question;
      } else if (value == "direct") {
        const PromptTemplate base = PromptTemplate::default_direct();
        cfg.tmpl.mode = base.mode;
        if (!kv.has("template.head")) cfg.tmpl.head = base.head;
        if (!kv.has("template.question")) cfg.tmpl.question = base.question;
      } else {
        throw std::runtime_error("config key template.mode: expected knowledge or direct, got " +
                                 value);
      }
    } else if (key == "template.head") cfg.tmpl.head = value;
    else if (key == "template.question") cfg.tmpl.question = value;
    else throw std::runtime_error("unknown config key: " + key);
  }
  if (!kv.has("embedder.seed")) cfg.embedder.seed = derive_seed(cfg.seed, "embed");
  if (!kv.has("train.seed")) cfg.train.seed = derive_seed(cfg.seed, "train");
  return cfg;
}

KeyValueConfig RunConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set("path.train", train_path);
  kv.set("path.dev", dev_path);
  kv.set("path.test", test_path);
  kv.set("path.captions", captions_path);
  kv.set("path.exemplars", exemplars_path);
  kv.set("path.fusion_store", fusion_store_path);
  kv.set("path.token_store", token_store_path);
  kv.set("path.knowledge", knowledge_path);
  kv.set("path.cache_dir", cache_dir);
  kv.set("path.model", model_path);
  kv.set("seed", std::to_string(seed));
  kv.set("top_n", std::to_string(top_n));
  kv.set("concurrency", std::to_string(concurrency));
  kv.set("strict_decode", strict_decode ? "true" : "false");
  kv.set("baseline", baseline_no_knowledge ? "true" : "false");
  kv.set("bio2", bio2_mode == Bio2Mode::Strict ? "strict" : "repair");
  kv.set("embedder.backend", embedder.backend == EmbedderBackend::Hashed ? "hashed" : "file");
  kv.set("embedder.fusion_dim", std::to_string(embedder.fusion_dim));
  kv.set("embedder.token_dim", std::to_string(embedder.token_dim));
  kv.set("embedder.buckets", std::to_string(embedder.buckets));
  kv.set("embedder.seed", std::to_string(embedder.seed));
  kv.set("engine.endpoint", engine.endpoint);
  kv.set("engine.model", engine.model);
  kv.set("engine.temperature", format_double(engine.temperature));
  kv.set("engine.max_tokens", std::to_string(engine.max_tokens));
  kv.set("engine.timeout_s", format_double(engine.timeout_s));
  kv.set("engine.max_attempts", std::to_string(engine.max_attempts));
  kv.set("engine.backoff_s", format_double(engine.backoff_s));
  kv.set("engine.api_key_env", engine.api_key_env);
  kv.set("train.lr", format_double(train.lr));
  kv.set("train.batch_size", std::to_string(train.batch_size));
  kv.set("train.epochs", std::to_string(train.epochs));
  kv.set("train.warmup_fraction", format_double(train.warmup_fraction));
  kv.set("train.beta1", format_double(train.beta1));
  kv.set("train.beta2", format_double(train.beta2));
  kv.set("train.eps", format_double(train.eps));
  kv.set("train.weight_decay", format_double(train.weight_decay));
  kv.set("train.seed", std::to_string(train.seed));
  kv.set("train.max_length", std::to_string(train.max_length));
  kv.set("template.mode", tmpl.mode == PromptMode::Knowledge ? "knowledge" : "direct");
  kv.set("template.head", tmpl.head);
  kv.set("template.question", tmpl.question);
  return kv;
}

EmbedderSpec RunConfig::embedder_spec() const {
  EmbedderSpec spec = embedder;
  spec.fusion_path = fusion_store_path;
  spec.token_path = token_store_path;
  return spec;
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.embedder = embedder_spec();
  p.train = train;
  p.baseline_no_knowledge = baseline_no_knowledge;
  p.strict_decode = strict_decode;
  return p;
}

}  // namespace pgim

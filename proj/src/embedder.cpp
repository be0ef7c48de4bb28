#include "pgim/embedder.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "pgim/binio.hpp"
#include "pgim/util.hpp"

namespace pgim {

using namespace binio;

namespace {

std::string read_id(std::istream& in) {
  uint32_t len = read_u32(in, "id length");
  std::string id(len, '\0');
  if (!in.read(id.data(), len)) throw std::runtime_error("truncated file while reading id");
  return id;
}

}  // namespace

FusionVector::FusionVector(std::vector<double> v) : values(std::move(v)) {
  double acc = 0.0;
  for (double x : values) acc += x * x;
  norm = std::sqrt(acc);
}

const FusionVector& FusionStore::at(const std::string& id) const {
  auto it = map_.find(id);
  if (it == map_.end()) throw std::runtime_error("fusion store: no vector for id \"" + id + "\"");
  return it->second;
}

void FusionStore::insert(const std::string& id, FusionVector v) {
  if (dim_ == 0) dim_ = v.dim();
  if (v.dim() != dim_)
    throw std::runtime_error("fusion store: dimension mismatch for id \"" + id + "\" (" +
                             std::to_string(v.dim()) + " vs " + std::to_string(dim_) + ")");
  auto [it, inserted] = map_.emplace(id, std::move(v));
  if (!inserted) throw std::runtime_error("fusion store: duplicate id \"" + id + "\"");
  order_.push_back(id);
}

void FusionStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write fusion store: " + path);
  write_magic(out, "PGIMVEC1");
  write_u32(out, static_cast<uint32_t>(dim_));
  for (const auto& id : order_) {
    const FusionVector& v = map_.at(id);
    write_u32(out, static_cast<uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (double x : v.values) write_f32(out, static_cast<float>(x));
  }
  if (!out) throw std::runtime_error("write failed for fusion store: " + path);
}

FusionStore FusionStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open fusion store: " + path);
  expect_magic(in, "PGIMVEC1", path);
  uint32_t dim = read_u32(in, "dimension");
  FusionStore store(dim);
  while (in.peek() != std::char_traits<char>::eof()) {
    std::string id = read_id(in);
    std::vector<double> values(dim);
    for (uint32_t i = 0; i < dim; ++i) values[i] = read_f32(in, "vector value");
    store.insert(id, FusionVector(std::move(values)));
  }
  return store;
}

const std::vector<std::vector<double>>& TokenStore::at(const std::string& id) const {
  auto it = map_.find(id);
  if (it == map_.end()) throw std::runtime_error("token store: no entry for id \"" + id + "\"");
  return it->second;
}

void TokenStore::insert(const std::string& id, std::vector<std::vector<double>> rows) {
  for (const auto& row : rows) {
    if (dim_ == 0) dim_ = row.size();
    if (row.size() != dim_)
      throw std::runtime_error("token store: dimension mismatch for id \"" + id + "\"");
  }
  auto [it, inserted] = map_.emplace(id, std::move(rows));
  if (!inserted) throw std::runtime_error("token store: duplicate id \"" + id + "\"");
  order_.push_back(id);
}

void TokenStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write token store: " + path);
  write_magic(out, "PGIMTOK1");
  write_u32(out, static_cast<uint32_t>(dim_));
  for (const auto& id : order_) {
    const auto& rows = map_.at(id);
    write_u32(out, static_cast<uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    write_u32(out, static_cast<uint32_t>(rows.size()));
    for (const auto& row : rows)
      for (double x : row) write_f32(out, static_cast<float>(x));
  }
  if (!out) throw std::runtime_error("write failed for token store: " + path);
}

TokenStore TokenStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open token store: " + path);
  expect_magic(in, "PGIMTOK1", path);
  uint32_t dim = read_u32(in, "dimension");
  TokenStore store(dim);
  while (in.peek() != std::char_traits<char>::eof()) {
    std::string id = read_id(in);
    uint32_t rows = read_u32(in, "row count");
    std::vector<std::vector<double>> matrix(rows, std::vector<double>(dim));
    for (uint32_t r = 0; r < rows; ++r)
      for (uint32_t c = 0; c < dim; ++c) matrix[r][c] = read_f32(in, "token value");
    store.insert(id, std::move(matrix));
  }
  return store;
}

Embedder::Embedder(EmbedderSpec spec) : spec_(std::move(spec)) {
  if (spec_.fusion_dim == 0 || spec_.token_dim == 0)
    throw std::runtime_error("embedder: dimensions must be positive");
  if (spec_.backend == EmbedderBackend::File) {
    if (spec_.fusion_path.empty())
      throw std::runtime_error("embedder: file backend requires a fusion store path");
    fusion_store_ = FusionStore::load(spec_.fusion_path);
    if (fusion_store_.dim() != spec_.fusion_dim)
      throw std::runtime_error("embedder: store dimension " + std::to_string(fusion_store_.dim()) +
                               " does not match configured d=" + std::to_string(spec_.fusion_dim));
    if (!spec_.token_path.empty()) {
      token_store_ = TokenStore::load(spec_.token_path);
      if (token_store_.dim() != spec_.token_dim)
        throw std::runtime_error("embedder: token store dimension mismatch");
    }
  } else if (spec_.buckets == 0) {
    throw std::runtime_error("embedder: bucket count must be positive");
  }
}

std::vector<double> Embedder::token_unit_vector(uint64_t seed, std::string_view token,
                                                std::size_t dim) {
  SplitMix64 rng(hash64(seed, token));
  std::vector<double> v(dim);
  double acc = 0.0;
  for (auto& x : v) {
    x = rng.next_symmetric();
    acc += x * x;
  }
  double norm = std::sqrt(acc);
  if (norm < 1e-12) {
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0;
    return v;
  }
  for (auto& x : v) x /= norm;
  return v;
}

FusionVector Embedder::fuse(const std::vector<std::string>& tokens,
                            const std::optional<std::string>& caption,
                            const std::string& id) const {
  if (tokens.empty()) throw std::runtime_error("fuse: text must be non-empty");
  if (spec_.backend == EmbedderBackend::File) {
    if (id.empty()) throw std::runtime_error("fuse: file backend requires a sentence id");
    return fusion_store_.at(id);
  }
  std::vector<double> acc(spec_.fusion_dim, 0.0);
  double total_weight = 0.0;
  auto add = [&](std::string_view token, double weight) {
    auto v = token_unit_vector(spec_.seed, token, spec_.fusion_dim);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * v[i];
    total_weight += weight;
  };
  for (const auto& t : tokens) add(t, 1.0);
  if (caption) {
    // Captions are hints, not text: half weight.
    for (const auto& t : split_whitespace(*caption)) add(t, 0.5);
  }
  for (auto& x : acc) x /= total_weight;
  return FusionVector(std::move(acc));
}

TokenReprSequence Embedder::embed_tokens(const std::vector<std::string>& tokens,
                                         std::size_t boundary, std::size_t max_length,
                                         const std::string& id) const {
  if (tokens.empty()) throw std::runtime_error("embed_tokens: token list must be non-empty");
  if (tokens.size() > max_length)
    throw std::runtime_error("embed_tokens: input of length " + std::to_string(tokens.size()) +
                             " exceeds max length " + std::to_string(max_length));
  if (boundary == 0 || boundary > tokens.size())
    throw std::runtime_error("embed_tokens: boundary out of range");

  TokenReprSequence seq;
  seq.boundary = boundary;
  if (spec_.backend == EmbedderBackend::File) {
    if (id.empty()) throw std::runtime_error("embed_tokens: file backend requires a sentence id");
    const auto& rows = token_store_.at(id);
    if (rows.size() != tokens.size())
      throw std::runtime_error("embed_tokens: stored matrix for \"" + id + "\" has " +
                               std::to_string(rows.size()) + " rows, expected " +
                               std::to_string(tokens.size()));
    seq.vectors = rows;
    return seq;
  }
  seq.vectors.reserve(tokens.size());
  for (const auto& t : tokens) seq.vectors.push_back(initial_row(bucket(t)));
  return seq;
}

std::size_t Embedder::bucket(std::string_view token) const {
  if (token == kKnowledgeSeparator) return spec_.buckets;  // reserved row
  return static_cast<std::size_t>(hash64(spec_.seed, token) % spec_.buckets);
}

std::vector<double> Embedder::initial_row(std::size_t bucket) const {
  return token_unit_vector(spec_.seed, "bucket:" + std::to_string(bucket), spec_.token_dim);
}

FusionStore precompute_store(const std::vector<AnnotatedSentence>& corpus,
                             const Embedder& embedder) {
  FusionStore store(embedder.spec().fusion_dim);
  for (const auto& s : corpus) store.insert(s.id, embedder.fuse(s.tokens, s.caption, s.id));
  return store;
}

}  // namespace pgim

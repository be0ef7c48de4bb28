#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pgim/corpus.hpp"

namespace pgim {

// Reserved token separating original text from knowledge text in augmented
// inputs. It is embedded through its own reserved table row.
inline constexpr std::string_view kKnowledgeSeparator = "<knowledge>";

/// Pooled joint representation of a (text, caption) pair; the similarity key
/// for exemplar selection.
struct FusionVector {
  std::vector<double> values;
  double norm = 0.0;

  FusionVector() = default;
  explicit FusionVector(std::vector<double> v);

  std::size_t dim() const { return values.size(); }
};

/// One representation vector per token; positions before `boundary` belong to
/// the original text, the rest to the separator and knowledge tokens.
struct TokenReprSequence {
  std::vector<std::vector<double>> vectors;
  std::size_t boundary = 0;
};

enum class EmbedderBackend { Hashed, File };

struct EmbedderSpec {
  EmbedderBackend backend = EmbedderBackend::Hashed;
  std::size_t fusion_dim = 128;       // d
  std::size_t token_dim = 64;         // e
  std::size_t buckets = 1u << 16;     // hash buckets for the trainable table
  uint64_t seed = 0;
  std::string fusion_path;            // file backend: PGIMVEC1 store
  std::string token_path;             // file backend: PGIMTOK1 store (optional)
};

/// id -> FusionVector with a declared dimension. Serialized as PGIMVEC1:
/// magic "PGIMVEC1", u32 LE dimension, then per record u32 LE id length,
/// id bytes, d float32 LE values. Record order is insertion order.
class FusionStore {
 public:
  FusionStore() = default;
  explicit FusionStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return order_.size(); }
  bool contains(const std::string& id) const { return map_.count(id) != 0; }
  const std::vector<std::string>& ids() const { return order_; }

  const FusionVector& at(const std::string& id) const;
  void insert(const std::string& id, FusionVector v);

  void save(const std::string& path) const;
  static FusionStore load(const std::string& path);

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> order_;
  std::map<std::string, FusionVector> map_;
};

/// id -> token representation matrix (one row per token). Serialized as
/// PGIMTOK1: magic, u32 LE dimension, then per record u32 LE id length,
/// id bytes, u32 LE row count, rows as float32 LE.
class TokenStore {
 public:
  TokenStore() = default;
  explicit TokenStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return order_.size(); }
  bool contains(const std::string& id) const { return map_.count(id) != 0; }

  const std::vector<std::vector<double>>& at(const std::string& id) const;
  void insert(const std::string& id, std::vector<std::vector<double>> rows);

  void save(const std::string& path) const;
  static TokenStore load(const std::string& path);

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> order_;
  std::map<std::string, std::vector<std::vector<double>>> map_;
};

/// Pluggable source of fusion vectors and token representations. The hashed
/// backend is a pure function of (input, spec); the file backend serves
/// precomputed vectors by sentence id.
class Embedder {
 public:
  explicit Embedder(EmbedderSpec spec);

  const EmbedderSpec& spec() const { return spec_; }

  // Hashed: weighted mean of per-token unit vectors, caption tokens at half
  // weight. File: exact store lookup by id.
  FusionVector fuse(const std::vector<std::string>& tokens,
                    const std::optional<std::string>& caption,
                    const std::string& id = {}) const;

  // One token_dim vector per token. Hashed vectors are the initialization
  // values of the trainable table rows the tokens hash into.
  TokenReprSequence embed_tokens(const std::vector<std::string>& tokens,
                                 std::size_t boundary, std::size_t max_length,
                                 const std::string& id = {}) const;

  // Trainable-table row index for a token; the knowledge separator gets the
  // reserved final row.
  std::size_t bucket(std::string_view token) const;

  // Deterministic initialization value of table row `bucket`.
  std::vector<double> initial_row(std::size_t bucket) const;

  // The seeded-hash unit vector of a single token, as used by the fuser.
  static std::vector<double> token_unit_vector(uint64_t seed, std::string_view token,
                                               std::size_t dim);

 private:
  EmbedderSpec spec_;
  FusionStore fusion_store_;
  TokenStore token_store_;
};

// Fuses every sentence and collects the vectors keyed by id, in corpus order.
// Throws on duplicate ids.
FusionStore precompute_store(const std::vector<AnnotatedSentence>& corpus,
                             const Embedder& embedder);

}  // namespace pgim

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pgim/corpus.hpp"
#include "pgim/embedder.hpp"

namespace pgim::crf {

using Matrix = std::vector<std::vector<double>>;

/// Bijection between tag strings and integer ids, with the two synthetic
/// boundary states appended after the real tags.
class TagSet {
 public:
  // O plus B-X/I-X per category: 9 tags for the four categories.
  static TagSet full();

  std::size_t size() const { return tags_.size(); }  // |Y|
  std::size_t bos() const { return tags_.size(); }
  std::size_t eos() const { return tags_.size() + 1; }

  int id_of(const Tag& t) const;
  const Tag& tag_of(std::size_t id) const;
  const std::vector<Tag>& tags() const { return tags_; }

 private:
  std::vector<Tag> tags_;
};

// ---------------------------------------------------------------------------
// Lattice math over raw matrices. Emissions are L x K, transitions are
// (K+2) x (K+2) in log domain with from-index rows; row K is BOS, row K+1 EOS.
// All scores include the BOS -> y_1 and y_L -> EOS transitions.
// ---------------------------------------------------------------------------

double score_sequence(const Matrix& emissions, const Matrix& transitions,
                      const std::vector<int>& tags);

// Forward algorithm with log-sum-exp; log of the sum over all K^L sequences.
double log_partition(const Matrix& emissions, const Matrix& transitions);

struct Marginals {
  Matrix position;               // L x K, each row sums to 1
  std::vector<Matrix> pairwise;  // L-1 entries of K x K
  double log_z = 0.0;
};

Marginals forward_backward(const Matrix& emissions, const Matrix& transitions);

// Max-scoring tag sequence; ties broken by the lower tag id at each
// backpointer. `extra_mask`, when given, is added to transitions during
// decoding only (0 / -inf entries).
std::vector<int> viterbi(const Matrix& emissions, const Matrix& transitions,
                         const Matrix* extra_mask = nullptr);

// 0 / -inf mask barring transitions that would produce an I-X without a
// matching B-X/I-X predecessor.
Matrix bio2_decode_mask(const TagSet& tags);

// ---------------------------------------------------------------------------
// Model: trainable embedding table + emission projection + transitions.
// ---------------------------------------------------------------------------

struct Model {
  TagSet tag_set;
  std::size_t token_dim = 0;  // e
  std::size_t buckets = 0;    // regular buckets; the table has buckets+1 rows,
                              // the last reserved for the knowledge separator
  uint64_t embed_seed = 0;
  std::vector<std::vector<double>> table;  // (buckets+1) x e
  Matrix projection;                       // e x K
  std::vector<double> bias;                // K
  Matrix transitions;                      // (K+2) x (K+2); structural -inf

  // Deterministic initialization: table rows from the embedder's seeded-hash
  // construction, projection from a seeded uniform, transitions zero.
  static Model init(const TagSet& tags, const EmbedderSpec& spec, uint64_t seed);

  // Whether a transition cell is a real parameter (structural cells stay -inf).
  bool transition_trainable(std::size_t from, std::size_t to) const;
};

/// One training/decoding input. Exactly one of `buckets` (hashed backend,
/// table rows are trainable) or `vectors` (file backend, fixed) is non-empty;
/// both cover the full augmented length while gold covers [0, boundary).
struct Sample {
  std::string id;
  std::vector<int> buckets;
  std::vector<std::vector<double>> vectors;
  std::size_t boundary = 0;
  std::vector<int> gold;

  std::size_t length() const { return buckets.empty() ? vectors.size() : buckets.size(); }
};

// Emission scores for the first `boundary` positions.
Matrix emissions_for(const Model& model, const Sample& sample);

struct Gradients {
  std::map<int, std::vector<double>> table_rows;  // sparse by bucket
  Matrix projection;
  std::vector<double> bias;
  Matrix transitions;
};

// Negative log-likelihood of the gold tags and its analytic gradient via
// forward-backward. Throws on non-finite intermediates.
std::pair<double, Gradients> nll_and_grad(const Model& model, const Sample& sample);

double nll(const Model& model, const Sample& sample);

// Convenience overloads for fixed representation sequences.
double score_sequence(const Model& model, const TokenReprSequence& reprs,
                      const std::vector<Tag>& tags);
double log_partition(const Model& model, const TokenReprSequence& reprs);
std::vector<Tag> viterbi(const Model& model, const TokenReprSequence& reprs);

struct TrainConfig {
  double lr = 5e-6;  // twitter2015-style default; 7e-6 for twitter2017-style
  std::size_t batch_size = 4;
  std::size_t epochs = 25;
  double warmup_fraction = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  uint64_t seed = 0;
  std::size_t max_length = 256;
};

struct EpochLog {
  std::size_t epoch = 0;
  double mean_nll = 0.0;
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  std::vector<double> lr_sequence;  // one entry per optimizer step
};

using EpochCallback = std::function<void(std::size_t epoch, const Model& model, double mean_nll)>;

// Mini-batch AdamW with linear warmup then linear decay. Deterministic for a
// fixed seed: the per-epoch shuffle comes from a seeded generator and batch
// reduction order is fixed.
TrainReport train(Model& model, const std::vector<Sample>& dataset, const TrainConfig& cfg,
                  const EpochCallback& after_epoch = {});

// Decode the first `boundary` positions; strict mode bars BIO2-invalid
// transitions in the lattice.
std::vector<int> decode(const Model& model, const Sample& sample, bool strict_bio2 = true);

// PGIMCRF1 container: magic, u32 version, JSON metadata block, then the
// parameter tensors as little-endian float32.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace pgim::crf

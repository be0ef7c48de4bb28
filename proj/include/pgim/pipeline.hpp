#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "pgim/corpus.hpp"
#include "pgim/crf.hpp"
#include "pgim/embedder.hpp"
#include "pgim/eval.hpp"
#include "pgim/knowledge.hpp"

namespace pgim {

/// Original tokens T, then the knowledge separator, then knowledge tokens Z
/// (possibly truncated). The boundary is |T|; gold tags, when present, cover
/// exactly the first boundary positions.
struct AugmentedSample {
  std::string id;
  std::vector<std::string> tokens;
  std::size_t boundary = 0;
  std::vector<Tag> gold;
};

struct PipelineConfig {
  EmbedderSpec embedder;
  crf::TrainConfig train;  // train.max_length is the [T;Z] budget
  bool baseline_no_knowledge = false;  // empty Z everywhere, knowledge unused
  bool strict_decode = true;
};

// [T;Z] with the separator between. Z is whitespace-tokenized and truncated
// from its end so the total fits max_length; T is never truncated. z may be
// null (no knowledge).
AugmentedSample build_augmented(const AnnotatedSentence& sentence, const KnowledgeText* z,
                                std::size_t max_length);

// Lowers an augmented sample to the CRF input: bucket ids under the hashed
// backend, fixed vectors under the file backend.
crf::Sample to_sample(const AugmentedSample& aug, const Embedder& embedder,
                      const crf::TagSet& tags);

struct TrainRunReport {
  std::vector<crf::EpochLog> epochs;
  std::vector<double> dev_f1;  // one entry per epoch
  std::size_t selected_epoch = 0;
  double selected_f1 = 0.0;
  std::vector<double> lr_sequence;
};

struct TrainOutcome {
  crf::Model model;
  TrainRunReport report;
};

// Stage-2 training: build [T;Z] samples for train and dev, train the CRF, and
// keep the epoch with the highest dev micro-F1. Missing knowledge for any id
// is an error unless the baseline flag bypasses knowledge entirely.
TrainOutcome run_training(const std::vector<AnnotatedSentence>& train,
                          const std::vector<AnnotatedSentence>& dev,
                          const std::map<std::string, KnowledgeText>& knowledge,
                          const PipelineConfig& cfg);

// Viterbi tags per sentence, length n each; strict decoding (default) bars
// BIO2-invalid transitions so outputs are valid by construction.
std::map<std::string, std::vector<Tag>> run_prediction(
    const crf::Model& model, const std::vector<AnnotatedSentence>& corpus,
    const std::map<std::string, KnowledgeText>& knowledge, const PipelineConfig& cfg);

SpanMap spans_of(const std::vector<AnnotatedSentence>& corpus);
SpanMap spans_of_predictions(const std::map<std::string, std::vector<Tag>>& predictions);

struct FewShotRow {
  std::string label;  // "fs-<size>", or "full-shot" at size = |train|
  std::size_t size = 0;
  Prf mean;  // averaged over subsets x training seeds runs
};

// For each size: `repeats` seeded subsamples of the training set, each
// trained `repeats` times under distinct derived seeds, scored on test;
// reports the mean P/R/F1 per size.
std::vector<FewShotRow> few_shot_protocol(const std::vector<AnnotatedSentence>& train,
                                          const std::vector<AnnotatedSentence>& dev,
                                          const std::vector<AnnotatedSentence>& test,
                                          const std::map<std::string, KnowledgeText>& knowledge,
                                          const PipelineConfig& cfg,
                                          const std::vector<std::size_t>& sizes,
                                          std::size_t repeats = 3);

std::string render_few_shot_table(const std::vector<FewShotRow>& rows);

}  // namespace pgim

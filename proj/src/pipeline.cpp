#include "pgim/pipeline.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pgim/util.hpp"

namespace pgim {

namespace {

const KnowledgeText* find_knowledge(const std::map<std::string, KnowledgeText>& knowledge,
                                    const std::string& id, bool baseline) {
  if (baseline) return nullptr;
  auto it = knowledge.find(id);
  if (it == knowledge.end())
    throw std::runtime_error("no knowledge for sentence \"" + id +
                             "\"; run augment first or enable the no-knowledge baseline");
  return &it->second;
}

void check_model_compat(const crf::Model& model, const EmbedderSpec& spec) {
  if (model.token_dim != spec.token_dim)
    throw std::runtime_error("model token dimension " + std::to_string(model.token_dim) +
                             " does not match embedder e=" + std::to_string(spec.token_dim));
  if (spec.backend == EmbedderBackend::Hashed) {
    if (model.buckets != spec.buckets)
      throw std::runtime_error("model bucket count " + std::to_string(model.buckets) +
                               " does not match embedder buckets=" + std::to_string(spec.buckets));
    if (model.embed_seed != spec.seed)
      throw std::runtime_error("model embedding seed does not match the embedder seed");
  }
}

std::vector<crf::Sample> build_samples(const std::vector<AnnotatedSentence>& corpus,
                                       const std::map<std::string, KnowledgeText>& knowledge,
                                       const Embedder& embedder, const crf::TagSet& tags,
                                       const PipelineConfig& cfg, bool with_gold) {
  std::vector<crf::Sample> samples;
  samples.reserve(corpus.size());
  for (const AnnotatedSentence& s : corpus) {
    const KnowledgeText* z = find_knowledge(knowledge, s.id, cfg.baseline_no_knowledge);
    AugmentedSample aug = build_augmented(s, z, cfg.train.max_length);
    if (!with_gold) aug.gold.clear();
    samples.push_back(to_sample(aug, embedder, tags));
  }
  return samples;
}

}  // namespace

AugmentedSample build_augmented(const AnnotatedSentence& sentence, const KnowledgeText* z,
                                std::size_t max_length) {
  if (sentence.tokens.empty())
    throw std::runtime_error("sentence \"" + sentence.id + "\" has no tokens");
  if (sentence.tokens.size() + 1 > max_length)
    throw std::runtime_error("sentence \"" + sentence.id + "\" with separator exceeds max length " +
                             std::to_string(max_length));

  AugmentedSample aug;
  aug.id = sentence.id;
  aug.boundary = sentence.tokens.size();
  aug.gold = sentence.tags;
  aug.tokens = sentence.tokens;
  aug.tokens.emplace_back(kKnowledgeSeparator);
  if (z) {
    std::vector<std::string> zt = split_whitespace(z->content);
    const std::size_t room = max_length - aug.tokens.size();
    if (zt.size() > room) zt.resize(room);  // truncate from the end; T is untouched
    for (auto& t : zt) aug.tokens.push_back(std::move(t));
  }
  return aug;
}

crf::Sample to_sample(const AugmentedSample& aug, const Embedder& embedder,
                      const crf::TagSet& tags) {
  crf::Sample sample;
  sample.id = aug.id;
  sample.boundary = aug.boundary;
  if (embedder.spec().backend == EmbedderBackend::Hashed) {
    sample.buckets.reserve(aug.tokens.size());
    for (const auto& t : aug.tokens)
      sample.buckets.push_back(static_cast<int>(embedder.bucket(t)));
  } else {
    sample.vectors =
        embedder.embed_tokens(aug.tokens, aug.boundary, aug.tokens.size(), aug.id).vectors;
  }
  sample.gold.reserve(aug.gold.size());
  for (const Tag& t : aug.gold) sample.gold.push_back(tags.id_of(t));
  return sample;
}

TrainOutcome run_training(const std::vector<AnnotatedSentence>& train,
                          const std::vector<AnnotatedSentence>& dev,
                          const std::map<std::string, KnowledgeText>& knowledge,
                          const PipelineConfig& cfg) {
  if (train.empty()) throw std::runtime_error("run_training: empty training corpus");

  const Embedder embedder(cfg.embedder);
  const crf::TagSet tags = crf::TagSet::full();
  const std::vector<crf::Sample> train_samples =
      build_samples(train, knowledge, embedder, tags, cfg, /*with_gold=*/true);
  const std::vector<crf::Sample> dev_samples =
      build_samples(dev, knowledge, embedder, tags, cfg, /*with_gold=*/false);
  const SpanMap dev_gold = spans_of(dev);

  TrainOutcome outcome;
  outcome.model = crf::Model::init(tags, cfg.embedder, cfg.train.seed);

  crf::Model best = outcome.model;
  double best_f1 = -1.0;
  std::size_t best_epoch = 0;

  auto after_epoch = [&](std::size_t epoch, const crf::Model& model, double) {
    if (dev.empty()) return;
    SpanMap pred;
    for (std::size_t i = 0; i < dev.size(); ++i) {
      std::vector<int> ids = crf::decode(model, dev_samples[i], cfg.strict_decode);
      std::vector<Tag> tag_seq;
      tag_seq.reserve(ids.size());
      for (int id : ids) tag_seq.push_back(tags.tag_of(static_cast<std::size_t>(id)));
      pred[dev[i].id] = spans_from_tags(tag_seq);
    }
    const double f1 = score_spans(dev_gold, pred).overall.f1;
    outcome.report.dev_f1.push_back(f1);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_epoch = epoch;
      best = model;
    }
  };

  crf::TrainReport train_report = crf::train(outcome.model, train_samples, cfg.train, after_epoch);
  outcome.report.epochs = std::move(train_report.epochs);
  outcome.report.lr_sequence = std::move(train_report.lr_sequence);
  if (dev.empty()) {
    outcome.report.selected_epoch = cfg.train.epochs == 0 ? 0 : cfg.train.epochs - 1;
    outcome.report.selected_f1 = 0.0;
  } else {
    outcome.model = std::move(best);
    outcome.report.selected_epoch = best_epoch;
    outcome.report.selected_f1 = best_f1;
  }
  return outcome;
}

std::map<std::string, std::vector<Tag>> run_prediction(
    const crf::Model& model, const std::vector<AnnotatedSentence>& corpus,
    const std::map<std::string, KnowledgeText>& knowledge, const PipelineConfig& cfg) {
  check_model_compat(model, cfg.embedder);
  const Embedder embedder(cfg.embedder);
  std::map<std::string, std::vector<Tag>> out;
  for (const AnnotatedSentence& s : corpus) {
    const KnowledgeText* z = find_knowledge(knowledge, s.id, cfg.baseline_no_knowledge);
    AugmentedSample aug = build_augmented(s, z, cfg.train.max_length);
    aug.gold.clear();
    const crf::Sample sample = to_sample(aug, embedder, model.tag_set);
    const std::vector<int> ids = crf::decode(model, sample, cfg.strict_decode);
    std::vector<Tag> tag_seq;
    tag_seq.reserve(ids.size());
    for (int id : ids) tag_seq.push_back(model.tag_set.tag_of(static_cast<std::size_t>(id)));
    out.emplace(s.id, std::move(tag_seq));
  }
  return out;
}

SpanMap spans_of(const std::vector<AnnotatedSentence>& corpus) {
  SpanMap out;
  for (const AnnotatedSentence& s : corpus) out[s.id] = spans_from_tags(s.tags);
  return out;
}

SpanMap spans_of_predictions(const std::map<std::string, std::vector<Tag>>& predictions) {
  SpanMap out;
  for (const auto& [id, tags] : predictions) out[id] = spans_from_tags(tags);
  return out;
}

std::vector<FewShotRow> few_shot_protocol(const std::vector<AnnotatedSentence>& train,
                                          const std::vector<AnnotatedSentence>& dev,
                                          const std::vector<AnnotatedSentence>& test,
                                          const std::map<std::string, KnowledgeText>& knowledge,
                                          const PipelineConfig& cfg,
                                          const std::vector<std::size_t>& sizes,
                                          std::size_t repeats) {
  if (repeats == 0) throw std::runtime_error("few_shot_protocol: repeats must be positive");
  const uint64_t master = cfg.train.seed;
  const SpanMap test_gold = spans_of(test);

  std::vector<FewShotRow> rows;
  for (std::size_t size : sizes) {
    if (size == 0 || size > train.size())
      throw std::runtime_error("few-shot size " + std::to_string(size) +
                               " exceeds the training corpus (" + std::to_string(train.size()) +
                               " sentences)");
    FewShotRow row;
    row.size = size;
    row.label = size == train.size() ? "full-shot" : "fs-" + std::to_string(size);

    for (std::size_t a = 0; a < repeats; ++a) {
      // One seeded subsample per repeat, corpus order preserved.
      std::vector<std::size_t> order(train.size());
      std::iota(order.begin(), order.end(), 0);
      SplitMix64 rng(
          derive_seed(master, "fewshot:" + std::to_string(size) + ":subset:" + std::to_string(a)));
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next_below(i)]);
      order.resize(size);
      std::sort(order.begin(), order.end());
      std::vector<AnnotatedSentence> subset;
      subset.reserve(size);
      for (std::size_t idx : order) subset.push_back(train[idx]);

      for (std::size_t b = 0; b < repeats; ++b) {
        PipelineConfig run_cfg = cfg;
        run_cfg.train.seed = derive_seed(master, "fewshot:" + std::to_string(size) + ":" +
                                                     std::to_string(a) + ":train:" +
                                                     std::to_string(b));
        TrainOutcome outcome = run_training(subset, dev, knowledge, run_cfg);
        const auto preds = run_prediction(outcome.model, test, knowledge, run_cfg);
        const MetricReport rep = score_spans(test_gold, spans_of_predictions(preds));
        row.mean.precision += rep.overall.precision;
        row.mean.recall += rep.overall.recall;
        row.mean.f1 += rep.overall.f1;
      }
    }
    const double runs = static_cast<double>(repeats * repeats);
    row.mean.precision /= runs;
    row.mean.recall /= runs;
    row.mean.f1 /= runs;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_few_shot_table(const std::vector<FewShotRow>& rows) {
  std::size_t label_width = 5;  // "shots"
  for (const auto& r : rows) label_width = std::max(label_width, r.label.size());

  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
    return std::string(buf);
  };

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width)) << "shots";
  for (const char* col : {"Pre.", "Rec.", "F1"}) out << std::right << std::setw(8) << col;
  out << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(label_width)) << r.label;
    out << std::right << std::setw(8) << pct(r.mean.precision) << std::setw(8)
        << pct(r.mean.recall) << std::setw(8) << pct(r.mean.f1) << "\n";
  }
  return out.str();
}

}  // namespace pgim

#include "pgim/crf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

#include "pgim/binio.hpp"
#include "pgim/util.hpp"

namespace pgim::crf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;  // every term is -inf
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

void check_shapes(const Matrix& emissions, const Matrix& transitions) {
  if (emissions.empty()) throw std::runtime_error("crf: empty emission matrix");
  const std::size_t k = emissions.front().size();
  if (k == 0) throw std::runtime_error("crf: emission rows must be non-empty");
  for (const auto& row : emissions)
    if (row.size() != k) throw std::runtime_error("crf: ragged emission matrix");
  if (transitions.size() != k + 2)
    throw std::runtime_error("crf: transition matrix must be (K+2) x (K+2), K = tag count");
  for (const auto& row : transitions)
    if (row.size() != k + 2) throw std::runtime_error("crf: ragged transition matrix");
}

}  // namespace

TagSet TagSet::full() {
  TagSet ts;
  ts.tags_.push_back(Tag::o());
  for (TagCategory c : kAllCategories) {
    ts.tags_.push_back(Tag::b(c));
    ts.tags_.push_back(Tag::i(c));
  }
  return ts;
}

int TagSet::id_of(const Tag& t) const {
  for (std::size_t i = 0; i < tags_.size(); ++i)
    if (tags_[i] == t) return static_cast<int>(i);
  throw std::runtime_error("tag set: unknown tag " + t.str());
}

const Tag& TagSet::tag_of(std::size_t id) const {
  if (id >= tags_.size()) throw std::runtime_error("tag set: tag id out of range");
  return tags_[id];
}

double score_sequence(const Matrix& emissions, const Matrix& transitions,
                      const std::vector<int>& tags) {
  check_shapes(emissions, transitions);
  const std::size_t len = emissions.size();
  const std::size_t k = emissions.front().size();
  if (tags.size() != len)
    throw std::runtime_error("crf: got " + std::to_string(tags.size()) + " tags for " +
                             std::to_string(len) + " positions");
  for (int t : tags)
    if (t < 0 || static_cast<std::size_t>(t) >= k)
      throw std::runtime_error("crf: tag id out of range");
  const std::size_t bos = k, eos = k + 1;
  double score = transitions[bos][tags[0]];
  for (std::size_t i = 0; i < len; ++i) {
    if (i > 0) score += transitions[tags[i - 1]][tags[i]];
    score += emissions[i][tags[i]];
  }
  return score + transitions[tags[len - 1]][eos];
}

double log_partition(const Matrix& emissions, const Matrix& transitions) {
  check_shapes(emissions, transitions);
  const std::size_t len = emissions.size();
  const std::size_t k = emissions.front().size();
  const std::size_t bos = k, eos = k + 1;

  std::vector<double> alpha(k), next(k), terms(k);
  for (std::size_t y = 0; y < k; ++y) alpha[y] = transitions[bos][y] + emissions[0][y];
  for (std::size_t i = 1; i < len; ++i) {
    for (std::size_t y = 0; y < k; ++y) {
      for (std::size_t p = 0; p < k; ++p) terms[p] = alpha[p] + transitions[p][y];
      next[y] = log_sum_exp(terms) + emissions[i][y];
    }
    alpha.swap(next);
  }
  for (std::size_t y = 0; y < k; ++y) terms[y] = alpha[y] + transitions[y][eos];
  return log_sum_exp(terms);
}

Marginals forward_backward(const Matrix& emissions, const Matrix& transitions) {
  check_shapes(emissions, transitions);
  const std::size_t len = emissions.size();
  const std::size_t k = emissions.front().size();
  const std::size_t bos = k, eos = k + 1;

  Matrix alpha(len, std::vector<double>(k));
  Matrix beta(len, std::vector<double>(k));
  std::vector<double> terms(k);

  for (std::size_t y = 0; y < k; ++y) alpha[0][y] = transitions[bos][y] + emissions[0][y];
  for (std::size_t i = 1; i < len; ++i)
    for (std::size_t y = 0; y < k; ++y) {
      for (std::size_t p = 0; p < k; ++p) terms[p] = alpha[i - 1][p] + transitions[p][y];
      alpha[i][y] = log_sum_exp(terms) + emissions[i][y];
    }

  for (std::size_t y = 0; y < k; ++y) beta[len - 1][y] = transitions[y][eos];
  for (std::size_t i = len - 1; i-- > 0;)
    for (std::size_t y = 0; y < k; ++y) {
      for (std::size_t n = 0; n < k; ++n)
        terms[n] = transitions[y][n] + emissions[i + 1][n] + beta[i + 1][n];
      beta[i][y] = log_sum_exp(terms);
    }

  Marginals m;
  for (std::size_t y = 0; y < k; ++y) terms[y] = alpha[len - 1][y] + beta[len - 1][y];
  m.log_z = log_sum_exp(terms);

  m.position.assign(len, std::vector<double>(k));
  for (std::size_t i = 0; i < len; ++i)
    for (std::size_t y = 0; y < k; ++y)
      m.position[i][y] = std::exp(alpha[i][y] + beta[i][y] - m.log_z);

  m.pairwise.assign(len - 1, Matrix(k, std::vector<double>(k)));
  for (std::size_t i = 0; i + 1 < len; ++i)
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        m.pairwise[i][a][b] = std::exp(alpha[i][a] + transitions[a][b] + emissions[i + 1][b] +
                                       beta[i + 1][b] - m.log_z);
  return m;
}

std::vector<int> viterbi(const Matrix& emissions, const Matrix& transitions,
                         const Matrix* extra_mask) {
  check_shapes(emissions, transitions);
  if (extra_mask) check_shapes(emissions, *extra_mask);
  const std::size_t len = emissions.size();
  const std::size_t k = emissions.front().size();
  const std::size_t bos = k, eos = k + 1;
  auto tr = [&](std::size_t a, std::size_t b) {
    return extra_mask ? transitions[a][b] + (*extra_mask)[a][b] : transitions[a][b];
  };

  Matrix delta(len, std::vector<double>(k));
  std::vector<std::vector<int>> back(len, std::vector<int>(k, 0));
  for (std::size_t y = 0; y < k; ++y) delta[0][y] = tr(bos, y) + emissions[0][y];
  for (std::size_t i = 1; i < len; ++i)
    for (std::size_t y = 0; y < k; ++y) {
      // Strict > keeps the lowest predecessor id on ties.
      int arg = 0;
      double best = delta[i - 1][0] + tr(0, y);
      for (std::size_t p = 1; p < k; ++p) {
        const double s = delta[i - 1][p] + tr(p, y);
        if (s > best) {
          best = s;
          arg = static_cast<int>(p);
        }
      }
      delta[i][y] = best + emissions[i][y];
      back[i][y] = arg;
    }

  int last = 0;
  double best = delta[len - 1][0] + tr(0, eos);
  for (std::size_t y = 1; y < k; ++y) {
    const double s = delta[len - 1][y] + tr(y, eos);
    if (s > best) {
      best = s;
      last = static_cast<int>(y);
    }
  }

  std::vector<int> tags(len);
  tags[len - 1] = last;
  for (std::size_t i = len - 1; i > 0; --i) tags[i - 1] = back[i][tags[i]];
  return tags;
}

Matrix bio2_decode_mask(const TagSet& tags) {
  const std::size_t k = tags.size();
  Matrix mask(k + 2, std::vector<double>(k + 2, 0.0));
  for (std::size_t to = 0; to < k; ++to) {
    const Tag& t = tags.tag_of(to);
    if (t.kind != Tag::Kind::I) continue;
    for (std::size_t from = 0; from < k + 2; ++from) {
      bool ok = false;
      if (from < k) {
        const Tag& f = tags.tag_of(from);
        ok = f.kind != Tag::Kind::O && f.category == t.category;
      }
      if (!ok) mask[from][to] = kNegInf;
    }
  }
  return mask;
}

Model Model::init(const TagSet& tags, const EmbedderSpec& spec, uint64_t seed) {
  Model m;
  m.tag_set = tags;
  m.token_dim = spec.token_dim;
  m.embed_seed = spec.seed;
  if (spec.token_dim == 0) throw std::runtime_error("crf: token dimension must be positive");

  if (spec.backend == EmbedderBackend::Hashed) {
    if (spec.buckets == 0) throw std::runtime_error("crf: bucket count must be positive");
    m.buckets = spec.buckets;
    m.table.reserve(m.buckets + 1);
    for (std::size_t b = 0; b <= m.buckets; ++b)
      m.table.push_back(
          Embedder::token_unit_vector(spec.seed, "bucket:" + std::to_string(b), spec.token_dim));
  }

  const std::size_t k = tags.size();
  SplitMix64 rng(derive_seed(seed, "crf:projection"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.token_dim));
  m.projection.assign(spec.token_dim, std::vector<double>(k));
  for (auto& row : m.projection)
    for (auto& x : row) x = rng.next_symmetric() * scale;
  m.bias.assign(k, 0.0);

  m.transitions.assign(k + 2, std::vector<double>(k + 2, 0.0));
  for (std::size_t x = 0; x < k + 2; ++x) {
    m.transitions[x][m.tag_set.bos()] = kNegInf;  // nothing enters BOS
    m.transitions[m.tag_set.eos()][x] = kNegInf;  // nothing leaves EOS
  }
  return m;
}

bool Model::transition_trainable(std::size_t from, std::size_t to) const {
  return to != tag_set.bos() && from != tag_set.eos();
}

namespace {

void check_sample(const Model& model, const Sample& sample) {
  const bool hashed = !sample.buckets.empty();
  if (hashed == !sample.vectors.empty())
    throw std::runtime_error("crf: sample \"" + sample.id +
                             "\" must carry exactly one of bucket ids or fixed vectors");
  const std::size_t len = sample.length();
  if (sample.boundary == 0 || sample.boundary > len)
    throw std::runtime_error("crf: sample \"" + sample.id + "\" has boundary out of range");
  if (hashed) {
    if (model.table.empty())
      throw std::runtime_error("crf: model has no embedding table but sample \"" + sample.id +
                               "\" carries bucket ids");
    for (int b : sample.buckets)
      if (b < 0 || static_cast<std::size_t>(b) >= model.table.size())
        throw std::runtime_error("crf: bucket id out of range in sample \"" + sample.id + "\"");
  } else {
    for (const auto& v : sample.vectors)
      if (v.size() != model.token_dim)
        throw std::runtime_error("crf: vector dimension mismatch in sample \"" + sample.id + "\"");
  }
}

void check_gold(const Model& model, const Sample& sample) {
  if (sample.gold.size() != sample.boundary)
    throw std::runtime_error("crf: sample \"" + sample.id +
                             "\" needs one gold tag per text position");
  for (int g : sample.gold)
    if (g < 0 || static_cast<std::size_t>(g) >= model.tag_set.size())
      throw std::runtime_error("crf: gold tag id out of range in sample \"" + sample.id + "\"");
}

void emission_row(const Model& model, const std::vector<double>& v, std::vector<double>& out) {
  const std::size_t k = model.tag_set.size();
  for (std::size_t y = 0; y < k; ++y) {
    double s = model.bias[y];
    for (std::size_t j = 0; j < model.token_dim; ++j) s += v[j] * model.projection[j][y];
    out[y] = s;
  }
}

Matrix emissions_from_reprs(const Model& model, const TokenReprSequence& reprs) {
  if (reprs.vectors.empty() || reprs.boundary == 0 || reprs.boundary > reprs.vectors.size())
    throw std::runtime_error("crf: token representation boundary out of range");
  Matrix em(reprs.boundary, std::vector<double>(model.tag_set.size()));
  for (std::size_t i = 0; i < reprs.boundary; ++i) {
    if (reprs.vectors[i].size() != model.token_dim)
      throw std::runtime_error("crf: token representation dimension mismatch");
    emission_row(model, reprs.vectors[i], em[i]);
  }
  return em;
}

std::vector<int> to_ids(const TagSet& ts, const std::vector<Tag>& tags) {
  std::vector<int> ids;
  ids.reserve(tags.size());
  for (const Tag& t : tags) ids.push_back(ts.id_of(t));
  return ids;
}

}  // namespace

Matrix emissions_for(const Model& model, const Sample& sample) {
  check_sample(model, sample);
  Matrix em(sample.boundary, std::vector<double>(model.tag_set.size()));
  for (std::size_t i = 0; i < sample.boundary; ++i) {
    const std::vector<double>& v =
        sample.buckets.empty() ? sample.vectors[i] : model.table[sample.buckets[i]];
    emission_row(model, v, em[i]);
  }
  return em;
}

std::pair<double, Gradients> nll_and_grad(const Model& model, const Sample& sample) {
  check_gold(model, sample);
  const std::size_t k = model.tag_set.size();
  const std::size_t bos = model.tag_set.bos(), eos = model.tag_set.eos();

  Matrix em = emissions_for(model, sample);
  Marginals marg = forward_backward(em, model.transitions);
  const double loss = marg.log_z - score_sequence(em, model.transitions, sample.gold);
  if (!std::isfinite(loss))
    throw std::runtime_error("crf: non-finite loss for sample \"" + sample.id + "\"");

  const std::size_t len = sample.boundary;
  Gradients g;
  g.projection.assign(model.token_dim, std::vector<double>(k, 0.0));
  g.bias.assign(k, 0.0);
  g.transitions.assign(k + 2, std::vector<double>(k + 2, 0.0));

  // d loss / d emission = marginal - gold indicator; push it through the
  // linear projection to reach bias, projection, and (hashed) table rows.
  Matrix dem(len, std::vector<double>(k));
  for (std::size_t i = 0; i < len; ++i)
    for (std::size_t y = 0; y < k; ++y)
      dem[i][y] = marg.position[i][y] - (sample.gold[i] == static_cast<int>(y) ? 1.0 : 0.0);

  for (std::size_t i = 0; i < len; ++i) {
    const std::vector<double>& v =
        sample.buckets.empty() ? sample.vectors[i] : model.table[sample.buckets[i]];
    for (std::size_t y = 0; y < k; ++y) {
      const double d = dem[i][y];
      g.bias[y] += d;
      for (std::size_t j = 0; j < model.token_dim; ++j) g.projection[j][y] += d * v[j];
    }
    if (!sample.buckets.empty()) {
      auto& row =
          g.table_rows.try_emplace(sample.buckets[i], std::vector<double>(model.token_dim, 0.0))
              .first->second;
      for (std::size_t j = 0; j < model.token_dim; ++j) {
        double acc = 0.0;
        for (std::size_t y = 0; y < k; ++y) acc += dem[i][y] * model.projection[j][y];
        row[j] += acc;
      }
    }
  }

  for (std::size_t y = 0; y < k; ++y) {
    g.transitions[bos][y] = marg.position[0][y];
    g.transitions[y][eos] = marg.position[len - 1][y];
  }
  g.transitions[bos][sample.gold[0]] -= 1.0;
  g.transitions[sample.gold[len - 1]][eos] -= 1.0;
  for (std::size_t i = 0; i + 1 < len; ++i) {
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) g.transitions[a][b] += marg.pairwise[i][a][b];
    g.transitions[sample.gold[i]][sample.gold[i + 1]] -= 1.0;
  }
  return {loss, std::move(g)};
}

double nll(const Model& model, const Sample& sample) {
  check_gold(model, sample);
  Matrix em = emissions_for(model, sample);
  return log_partition(em, model.transitions) -
         score_sequence(em, model.transitions, sample.gold);
}

double score_sequence(const Model& model, const TokenReprSequence& reprs,
                      const std::vector<Tag>& tags) {
  return score_sequence(emissions_from_reprs(model, reprs), model.transitions,
                        to_ids(model.tag_set, tags));
}

double log_partition(const Model& model, const TokenReprSequence& reprs) {
  return log_partition(emissions_from_reprs(model, reprs), model.transitions);
}

std::vector<Tag> viterbi(const Model& model, const TokenReprSequence& reprs) {
  std::vector<int> ids = viterbi(emissions_from_reprs(model, reprs), model.transitions);
  std::vector<Tag> tags;
  tags.reserve(ids.size());
  for (int id : ids) tags.push_back(model.tag_set.tag_of(static_cast<std::size_t>(id)));
  return tags;
}

namespace {

double schedule_factor(std::size_t step, std::size_t warmup, std::size_t total) {
  if (warmup > 0 && step < warmup)
    return static_cast<double>(step) / static_cast<double>(warmup);
  if (total <= warmup) return 1.0;
  return static_cast<double>(total - step) / static_cast<double>(total - warmup);
}

struct AdamSlot {
  Matrix m, v;
};

// Decoupled weight decay: the decay term multiplies the parameter, not the
// gradient, and every trainable parameter steps even at zero gradient.
void adam_update(double& param, double& m, double& v, double grad, double lr,
                 const TrainConfig& cfg, double bc1, double bc2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad;
  param -= lr * ((m / bc1) / (std::sqrt(v / bc2) + cfg.eps) + cfg.weight_decay * param);
}

}  // namespace

TrainReport train(Model& model, const std::vector<Sample>& dataset, const TrainConfig& cfg,
                  const EpochCallback& after_epoch) {
  if (dataset.empty()) throw std::runtime_error("crf: training set is empty");
  if (cfg.batch_size == 0) throw std::runtime_error("crf: batch size must be positive");

  const std::size_t k = model.tag_set.size();
  const std::size_t n = dataset.size();
  const std::size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = batches_per_epoch * cfg.epochs;
  const std::size_t warmup_steps =
      static_cast<std::size_t>(cfg.warmup_fraction * static_cast<double>(total_steps));

  AdamSlot table{{model.table.size(), std::vector<double>(model.token_dim, 0.0)},
                 {model.table.size(), std::vector<double>(model.token_dim, 0.0)}};
  AdamSlot proj{{model.token_dim, std::vector<double>(k, 0.0)},
                {model.token_dim, std::vector<double>(k, 0.0)}};
  std::vector<double> bias_m(k, 0.0), bias_v(k, 0.0);
  AdamSlot trans{{k + 2, std::vector<double>(k + 2, 0.0)},
                 {k + 2, std::vector<double>(k + 2, 0.0)}};

  TrainReport report;
  report.lr_sequence.reserve(total_steps);
  std::size_t step = 0;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    SplitMix64 rng(derive_seed(cfg.seed, "shuffle:" + std::to_string(epoch)));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.next_below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const double count = static_cast<double>(stop - start);

      Gradients acc;
      acc.projection.assign(model.token_dim, std::vector<double>(k, 0.0));
      acc.bias.assign(k, 0.0);
      acc.transitions.assign(k + 2, std::vector<double>(k + 2, 0.0));
      for (std::size_t idx = start; idx < stop; ++idx) {
        auto [loss, g] = nll_and_grad(model, dataset[order[idx]]);
        epoch_loss += loss;
        for (auto& [bucket, row] : g.table_rows) {
          auto& dst =
              acc.table_rows.try_emplace(bucket, std::vector<double>(model.token_dim, 0.0))
                  .first->second;
          for (std::size_t j = 0; j < model.token_dim; ++j) dst[j] += row[j];
        }
        for (std::size_t j = 0; j < model.token_dim; ++j)
          for (std::size_t y = 0; y < k; ++y) acc.projection[j][y] += g.projection[j][y];
        for (std::size_t y = 0; y < k; ++y) acc.bias[y] += g.bias[y];
        for (std::size_t a = 0; a < k + 2; ++a)
          for (std::size_t b = 0; b < k + 2; ++b) acc.transitions[a][b] += g.transitions[a][b];
      }

      const double lr = cfg.lr * schedule_factor(step, warmup_steps, total_steps);
      report.lr_sequence.push_back(lr);
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step + 1));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step + 1));

      for (std::size_t r = 0; r < model.table.size(); ++r) {
        const auto it = acc.table_rows.find(static_cast<int>(r));
        const std::vector<double>* gr = it == acc.table_rows.end() ? nullptr : &it->second;
        for (std::size_t j = 0; j < model.token_dim; ++j)
          adam_update(model.table[r][j], table.m[r][j], table.v[r][j],
                      gr ? (*gr)[j] / count : 0.0, lr, cfg, bc1, bc2);
      }
      for (std::size_t j = 0; j < model.token_dim; ++j)
        for (std::size_t y = 0; y < k; ++y)
          adam_update(model.projection[j][y], proj.m[j][y], proj.v[j][y],
                      acc.projection[j][y] / count, lr, cfg, bc1, bc2);
      for (std::size_t y = 0; y < k; ++y)
        adam_update(model.bias[y], bias_m[y], bias_v[y], acc.bias[y] / count, lr, cfg, bc1, bc2);
      for (std::size_t a = 0; a < k + 2; ++a)
        for (std::size_t b = 0; b < k + 2; ++b)
          if (model.transition_trainable(a, b))
            adam_update(model.transitions[a][b], trans.m[a][b], trans.v[a][b],
                        acc.transitions[a][b] / count, lr, cfg, bc1, bc2);
      ++step;
    }

    const double mean_nll = epoch_loss / static_cast<double>(n);
    report.epochs.push_back({epoch, mean_nll});
    if (after_epoch) after_epoch(epoch, model, mean_nll);
  }
  return report;
}

std::vector<int> decode(const Model& model, const Sample& sample, bool strict_bio2) {
  Matrix em = emissions_for(model, sample);
  if (!strict_bio2) return viterbi(em, model.transitions);
  Matrix mask = bio2_decode_mask(model.tag_set);
  return viterbi(em, model.transitions, &mask);
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model: " + path);
  binio::write_magic(out, "PGIMCRF1");
  binio::write_u32(out, 1);

  nlohmann::json meta;
  meta["token_dim"] = model.token_dim;
  meta["buckets"] = model.buckets;
  meta["embed_seed"] = std::to_string(model.embed_seed);
  std::vector<std::string> tag_names;
  for (const Tag& t : model.tag_set.tags()) tag_names.push_back(t.str());
  meta["tags"] = tag_names;
  const std::string blob = meta.dump();
  binio::write_u32(out, static_cast<uint32_t>(blob.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));

  auto write_matrix = [&](const Matrix& mat) {
    for (const auto& row : mat)
      for (double x : row) binio::write_f32(out, static_cast<float>(x));
  };
  binio::write_u32(out, static_cast<uint32_t>(model.table.size()));
  write_matrix(model.table);
  write_matrix(model.projection);
  for (double x : model.bias) binio::write_f32(out, static_cast<float>(x));
  write_matrix(model.transitions);
  if (!out) throw std::runtime_error("write failed for model: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model: " + path);
  binio::expect_magic(in, "PGIMCRF1", path);
  const uint32_t version = binio::read_u32(in, "model version");
  if (version != 1)
    throw std::runtime_error("unsupported model version " + std::to_string(version) + " in " + path);
  const uint32_t meta_len = binio::read_u32(in, "metadata length");
  std::string blob(meta_len, '\0');
  if (!in.read(blob.data(), meta_len))
    throw std::runtime_error("truncated model metadata in " + path);
  const nlohmann::json meta = nlohmann::json::parse(blob);

  Model m;
  m.tag_set = TagSet::full();
  std::vector<std::string> expect;
  for (const Tag& t : m.tag_set.tags()) expect.push_back(t.str());
  if (meta.at("tags").get<std::vector<std::string>>() != expect)
    throw std::runtime_error("model tag set mismatch in " + path);
  m.token_dim = meta.at("token_dim").get<std::size_t>();
  m.buckets = meta.at("buckets").get<std::size_t>();
  m.embed_seed = std::stoull(meta.at("embed_seed").get<std::string>());
  if (m.token_dim == 0) throw std::runtime_error("model token dimension must be positive");

  const std::size_t k = m.tag_set.size();
  const uint32_t rows = binio::read_u32(in, "table row count");
  if (rows != (m.buckets == 0 ? 0 : m.buckets + 1))
    throw std::runtime_error("model table row count does not match bucket count in " + path);
  auto read_matrix = [&](std::size_t r, std::size_t c, const char* what) {
    Matrix mat(r, std::vector<double>(c));
    for (auto& row : mat)
      for (auto& x : row) x = binio::read_f32(in, what);
    return mat;
  };
  m.table = read_matrix(rows, m.token_dim, "table value");
  m.projection = read_matrix(m.token_dim, k, "projection value");
  m.bias.resize(k);
  for (auto& x : m.bias) x = binio::read_f32(in, "bias value");
  m.transitions = read_matrix(k + 2, k + 2, "transition value");
  if (in.peek() != std::char_traits<char>::eof())
    throw std::runtime_error("trailing bytes in model file " + path);
  return m;
}

}  // namespace pgim::crf

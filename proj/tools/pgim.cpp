#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pgim/config.hpp"
#include "pgim/corpus.hpp"
#include "pgim/crf.hpp"
#include "pgim/embedder.hpp"
#include "pgim/eval.hpp"
#include "pgim/knowledge.hpp"
#include "pgim/msea.hpp"
#include "pgim/pipeline.hpp"
#include "pgim/promptgen.hpp"
#include "pgim/util.hpp"

namespace {

using namespace pgim;

void log_line(const std::string& msg) { std::cerr << "[pgim] " << msg << "\n"; }

/// Collects configuration sources for one subcommand. Precedence, lowest to
/// highest: defaults, --config file, --template file, --set pairs, dedicated
/// flags.
struct ConfigFlags {
  std::string config_path;
  std::string save_path;
  std::string template_path;
  std::vector<std::string> sets;
  std::vector<std::function<void(KeyValueConfig&)>> appliers;

  RunConfig build() const {
    KeyValueConfig merged;
    if (!config_path.empty()) merged = KeyValueConfig::load(config_path);
    if (!template_path.empty()) {
      const KeyValueConfig tmpl_kv = KeyValueConfig::load(template_path);
      for (const auto& [k, v] : tmpl_kv.entries()) {
        if (k.rfind("template.", 0) != 0)
          throw std::runtime_error("template file may only contain template.* keys, found " + k);
        merged.set(k, v);
      }
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("--set expects key=value, got \"" + s + "\"");
      merged.set(std::string(trim(s.substr(0, eq))), std::string(trim(s.substr(eq + 1))));
    }
    for (const auto& apply : appliers) apply(merged);
    RunConfig cfg = RunConfig::from_kv(merged);
    if (!save_path.empty()) {
      cfg.to_kv().save(save_path);
      log_line("config snapshot written to " + save_path);
    }
    return cfg;
  }
};

std::shared_ptr<ConfigFlags> add_common(CLI::App* cmd) {
  auto fl = std::make_shared<ConfigFlags>();
  cmd->add_option("--config", fl->config_path, "run configuration file (key = value)");
  cmd->add_option("--save-config", fl->save_path, "write the effective configuration here");
  cmd->add_option("--template", fl->template_path, "prompt template file (template.* keys)");
  cmd->add_option("--set", fl->sets, "override one config key (key=value, repeatable)");

  struct KeyFlag {
    const char* flag;
    const char* key;
    const char* help;
  };
  static const KeyFlag kFlags[] = {
      {"--train", "path.train", "training corpus (CoNLL)"},
      {"--dev", "path.dev", "development corpus (CoNLL)"},
      {"--test", "path.test", "test corpus (CoNLL)"},
      {"--captions", "path.captions", "caption sidecar (JSON lines)"},
      {"--exemplars", "path.exemplars", "annotated exemplar file (JSON lines)"},
      {"--fusion-store", "path.fusion_store", "fusion vector store"},
      {"--token-store", "path.token_store", "token representation store"},
      {"--knowledge", "path.knowledge", "knowledge file (JSON lines)"},
      {"--cache", "path.cache_dir", "engine response cache directory"},
      {"--model-file", "path.model", "model file"},
      {"--seed", "seed", "master seed; per-purpose seeds derive from it"},
      {"--n,--top-n", "top_n", "in-context examples per prompt"},
      {"--concurrency", "concurrency", "max in-flight engine requests"},
      {"--backend", "embedder.backend", "embedder backend: hashed or file"},
      {"--fusion-dim", "embedder.fusion_dim", "fusion vector dimension d"},
      {"--token-dim", "embedder.token_dim", "token representation dimension e"},
      {"--buckets", "embedder.buckets", "hash bucket count"},
      {"--endpoint", "engine.endpoint", "chat-completions endpoint URL"},
      {"--engine-model", "engine.model", "engine model name"},
      {"--temperature", "engine.temperature", "sampling temperature"},
      {"--max-tokens", "engine.max_tokens", "response token cap (0: server default)"},
      {"--timeout", "engine.timeout_s", "request timeout in seconds"},
      {"--attempts", "engine.max_attempts", "max request attempts"},
      {"--backoff", "engine.backoff_s", "initial retry backoff in seconds"},
      {"--api-key-env", "engine.api_key_env", "environment variable holding the API key"},
      {"--lr", "train.lr", "learning rate"},
      {"--batch", "train.batch_size", "mini-batch size"},
      {"--epochs", "train.epochs", "training epochs"},
      {"--warmup", "train.warmup_fraction", "warmup fraction of total steps"},
      {"--weight-decay", "train.weight_decay", "decoupled weight decay"},
      {"--max-length", "train.max_length", "token budget for [T;Z] inputs"},
      {"--mode", "template.mode", "prompt mode: knowledge or direct"},
  };
  for (const KeyFlag& kf : kFlags) {
    auto value = std::make_shared<std::string>();
    auto* opt = cmd->add_option(kf.flag, *value, kf.help);
    fl->appliers.push_back([opt, value, key = kf.key](KeyValueConfig& m) {
      if (opt->count() > 0) m.set(key, *value);
    });
  }

  auto* baseline = cmd->add_flag("--baseline", "bypass knowledge entirely (empty Z)");
  auto* repair = cmd->add_flag("--repair", "repair invalid I-X tags at ingestion");
  auto* strict_on = cmd->add_flag("--strict", "BIO2-constrained decoding (default)");
  auto* strict_off = cmd->add_flag("--no-strict", "unconstrained decoding");
  fl->appliers.push_back([baseline, repair, strict_on, strict_off](KeyValueConfig& m) {
    if (baseline->count() > 0) m.set("baseline", "true");
    if (repair->count() > 0) m.set("bio2", "repair");
    if (strict_on->count() > 0) m.set("strict_decode", "true");
    if (strict_off->count() > 0) m.set("strict_decode", "false");
  });
  return fl;
}

std::vector<AnnotatedSentence> load_corpus(const std::string& path, const RunConfig& cfg,
                                           const std::string& what) {
  if (path.empty())
    throw std::runtime_error(what + " corpus path is not set (flag or config file)");
  ParseResult pr = parse_conll_file(path, cfg.bio2_mode);
  std::ostringstream msg;
  msg << what << ": " << pr.sentences.size() << " sentences from " << path;
  if (pr.repairs > 0) msg << " (" << pr.repairs << " tags repaired)";
  if (!cfg.captions_path.empty()) {
    const auto captions = load_caption_file(cfg.captions_path);
    const CaptionAttachment att = attach_captions(pr.sentences, captions);
    msg << ", " << att.matched << " captions attached";
  }
  log_line(msg.str());
  return pr.sentences;
}

std::vector<Exemplar> load_exemplars_with_fusion(const RunConfig& cfg, const Embedder& embedder) {
  if (cfg.exemplars_path.empty()) throw std::runtime_error("exemplar path is not set");
  std::vector<Exemplar> exemplars = load_exemplar_file(cfg.exemplars_path);
  attach_exemplar_fusion(exemplars, embedder);
  log_line("exemplars: " + std::to_string(exemplars.size()) + " from " + cfg.exemplars_path);
  return exemplars;
}

std::map<std::string, std::string> load_mock_fixtures(const std::string& path) {
  std::map<std::string, std::string> out;
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mock fixture file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, true);
    out[j.at("prompt_hash").get<std::string>()] = j.at("content").get<std::string>();
  }
  log_line("mock fixtures: " + std::to_string(out.size()) + " from " + path);
  return out;
}

std::unique_ptr<Engine> make_engine(const std::string& kind, const RunConfig& cfg,
                                    const std::string& fixtures_path) {
  if (kind == "mock")
    return std::make_unique<MockEngine>(load_mock_fixtures(fixtures_path));
  if (kind == "http") return std::make_unique<HttpEngine>(cfg.engine);
  throw std::runtime_error("unknown engine \"" + kind + "\" (expected mock or http)");
}

const AnnotatedSentence& find_sentence(const std::vector<AnnotatedSentence>& corpus,
                                       const std::string& id) {
  for (const auto& s : corpus)
    if (s.id == id) return s;
  throw std::runtime_error("no sentence with id \"" + id + "\" in the input corpus");
}

void save_predictions(const std::map<std::string, std::vector<Tag>>& preds, std::ostream& out) {
  for (const auto& [id, tags] : preds) {
    nlohmann::json j;
    j["id"] = id;
    std::vector<std::string> strs;
    strs.reserve(tags.size());
    for (const Tag& t : tags) strs.push_back(t.str());
    j["tags"] = strs;
    out << j.dump() << "\n";
  }
}

std::map<std::string, std::vector<Tag>> load_prediction_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open prediction file: " + path);
  std::map<std::string, std::vector<Tag>> out;
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
    std::vector<Tag> tags;
    for (const auto& s : j.at("tags")) tags.push_back(Tag::parse(s.get<std::string>()));
    out[j.at("id").get<std::string>()] = std::move(tags);
  }
  return out;
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage multimodal named entity tagger (exemplar-prompted knowledge + CRF)"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ---- ingest ------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("ingest", "parse and validate a corpus, attach captions");
    auto fl = add_common(cmd);
    auto input = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("--input", *input, "corpus file to ingest")->required();
    cmd->add_option("--out", *out_path, "write the normalized corpus here");
    cmd->callback([fl, input, out_path] {
      const RunConfig cfg = fl->build();
      const auto corpus = load_corpus(*input, cfg, stem_of(*input));
      std::size_t tokens = 0, entities = 0, captions = 0;
      for (const auto& s : corpus) {
        tokens += s.tokens.size();
        entities += spans_from_tags(s.tags).size();
        captions += s.caption ? 1 : 0;
      }
      std::cout << "sentences " << corpus.size() << "\ntokens " << tokens << "\nentities "
                << entities << "\ncaptions " << captions << "\n";
      if (!out_path->empty()) {
        std::ofstream out(*out_path);
        if (!out) throw std::runtime_error("cannot write " + *out_path);
        serialize_conll(corpus, out);
        log_line("normalized corpus written to " + *out_path);
      }
    });
  }

  // ---- embed -------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("embed", "precompute the fusion vector store for a corpus");
    auto fl = add_common(cmd);
    auto input = std::make_shared<std::string>();
    cmd->add_option("--input", *input, "corpus file to embed")->required();
    cmd->callback([fl, input] {
      const RunConfig cfg = fl->build();
      if (cfg.embedder.backend != EmbedderBackend::Hashed)
        throw std::runtime_error("embed computes vectors, so it needs the hashed backend");
      if (cfg.fusion_store_path.empty())
        throw std::runtime_error("set --fusion-store for the output");
      const auto corpus = load_corpus(*input, cfg, stem_of(*input));
      const Embedder embedder(cfg.embedder_spec());
      const FusionStore store = precompute_store(corpus, embedder);
      store.save(cfg.fusion_store_path);
      log_line("fusion store: " + std::to_string(store.size()) + " vectors of d=" +
               std::to_string(store.dim()) + " -> " + cfg.fusion_store_path);
    });
  }

  // ---- retrieve ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("retrieve", "rank exemplars for one sentence");
    auto fl = add_common(cmd);
    auto input = std::make_shared<std::string>();
    auto id = std::make_shared<std::string>();
    auto dry = std::make_shared<bool>(false);
    cmd->add_option("--input", *input, "corpus containing the sentence")->required();
    cmd->add_option("--id", *id, "sentence id")->required();
    cmd->add_flag("--dry-run", *dry, "print the assembled prompt instead of scores");
    cmd->callback([fl, input, id, dry] {
      const RunConfig cfg = fl->build();
      const auto corpus = load_corpus(*input, cfg, stem_of(*input));
      const Embedder embedder(cfg.embedder_spec());
      const auto exemplars = load_exemplars_with_fusion(cfg, embedder);
      const AnnotatedSentence& s = find_sentence(corpus, *id);
      const FusionVector query = embedder.fuse(s.tokens, s.caption, s.id);
      const SelectionResult sel = select_top_n(query, exemplars, cfg.top_n);
      if (*dry) {
        const auto context = build_context(sel, exemplars);
        const PromptDoc doc = assemble(cfg.tmpl, context, s.tokens, s.caption, s.id);
        std::cout << doc.text;
        return;
      }
      for (std::size_t i = 0; i < sel.ids.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", sel.scores[i]);
        std::cout << sel.ids[i] << "\t" << buf << "\n";
      }
    });
  }

  // ---- promptgen ---------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("promptgen", "assemble the full prompt for one sentence");
    auto fl = add_common(cmd);
    auto input = std::make_shared<std::string>();
    auto id = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    auto dry = std::make_shared<bool>(false);
    cmd->add_option("--input", *input, "corpus containing the sentence")->required();
    cmd->add_option("--id", *id, "sentence id")->required();
    cmd->add_option("--out", *out_path, "write the prompt here instead of stdout");
    cmd->add_flag("--dry-run", *dry, "print the prompt on stdout (default action)");
    cmd->callback([fl, input, id, out_path] {
      const RunConfig cfg = fl->build();
      const auto corpus = load_corpus(*input, cfg, stem_of(*input));
      const Embedder embedder(cfg.embedder_spec());
      const AnnotatedSentence& s = find_sentence(corpus, *id);
      std::vector<Exemplar> context;
      if (cfg.top_n > 0) {
        const auto exemplars = load_exemplars_with_fusion(cfg, embedder);
        const FusionVector query = embedder.fuse(s.tokens, s.caption, s.id);
        context = build_context(select_top_n(query, exemplars, cfg.top_n), exemplars);
      }
      const PromptDoc doc = assemble(cfg.tmpl, context, s.tokens, s.caption, s.id);
      log_line("prompt " + doc.content_hash + " with " + std::to_string(doc.example_count) +
               " examples");
      if (out_path->empty()) std::cout << doc.text;
      else write_text(*out_path, doc.text);
    });
  }

  // ---- augment -----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("augment", "generate auxiliary knowledge for a whole corpus");
    auto fl = add_common(cmd);
    auto input = std::make_shared<std::string>();
    auto engine_kind = std::make_shared<std::string>("http");
    auto fixtures = std::make_shared<std::string>();
    auto manifest_path = std::make_shared<std::string>();
    cmd->add_option("--input", *input, "corpus file to augment")->required();
    cmd->add_option("--engine", *engine_kind, "engine: http or mock")->capture_default_str();
    cmd->add_option("--mock-fixtures", *fixtures, "prompt_hash -> content fixtures (JSON lines)");
    cmd->add_option("--manifest", *manifest_path, "manifest output (default <knowledge>.manifest)");
    cmd->callback([fl, input, engine_kind, fixtures, manifest_path, &exit_code] {
      const RunConfig cfg = fl->build();
      if (cfg.knowledge_path.empty())
        throw std::runtime_error("set --knowledge for the output file");
      const auto corpus = load_corpus(*input, cfg, stem_of(*input));
      const Embedder embedder(cfg.embedder_spec());
      std::vector<Exemplar> exemplars;
      if (cfg.top_n > 0) exemplars = load_exemplars_with_fusion(cfg, embedder);
      auto engine = make_engine(*engine_kind, cfg, *fixtures);
      KnowledgeCache cache(cfg.cache_dir);
      const AugmentResult result =
          augment_corpus(corpus, exemplars, cfg.tmpl, embedder, *engine, cfg.engine, cfg.top_n,
                         cfg.concurrency, &cache);
      save_knowledge(result.knowledge, cfg.knowledge_path);
      const std::string mpath =
          manifest_path->empty() ? cfg.knowledge_path + ".manifest" : *manifest_path;
      save_manifest(result, mpath);
      log_line("knowledge: " + std::to_string(result.knowledge.size()) + "/" +
               std::to_string(corpus.size()) + " sentences -> " + cfg.knowledge_path);
      log_line("manifest -> " + mpath);
      for (const auto& [id, reason] : result.failures)
        std::cerr << "failed " << id << ": " << reason << "\n";
      if (!result.failures.empty()) exit_code = 1;
    });
  }

  // ---- train -------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("train", "train the tagger and keep the best dev epoch");
    auto fl = add_common(cmd);
    auto manifest_path = std::make_shared<std::string>();
    cmd->add_option("--run-manifest", *manifest_path,
                    "run manifest output (default <model>.run.json)");
    cmd->callback([fl, manifest_path] {
      const RunConfig cfg = fl->build();
      const auto train_set = load_corpus(cfg.train_path, cfg, "train");
      std::vector<AnnotatedSentence> dev_set;
      if (!cfg.dev_path.empty()) dev_set = load_corpus(cfg.dev_path, cfg, "dev");
      std::map<std::string, KnowledgeText> knowledge;
      if (!cfg.baseline_no_knowledge) {
        if (cfg.knowledge_path.empty())
          throw std::runtime_error("set --knowledge (from augment) or pass --baseline");
        knowledge = load_knowledge(cfg.knowledge_path);
      }
      const TrainOutcome outcome = run_training(train_set, dev_set, knowledge, cfg.pipeline());
      crf::save_model(outcome.model, cfg.model_path);

      nlohmann::json manifest;
      manifest["timestamp"] = utc_timestamp();
      manifest["config"] = cfg.to_kv().entries();
      manifest["seeds"] = {{"master", std::to_string(cfg.seed)},
                           {"embed", std::to_string(cfg.embedder.seed)},
                           {"train", std::to_string(cfg.train.seed)}};
      nlohmann::json epochs = nlohmann::json::array();
      for (std::size_t i = 0; i < outcome.report.epochs.size(); ++i) {
        nlohmann::json e;
        e["epoch"] = outcome.report.epochs[i].epoch;
        e["mean_nll"] = outcome.report.epochs[i].mean_nll;
        if (i < outcome.report.dev_f1.size()) e["dev_f1"] = outcome.report.dev_f1[i];
        epochs.push_back(e);
      }
      manifest["epochs"] = epochs;
      manifest["selected_epoch"] = outcome.report.selected_epoch;
      manifest["selected_dev_f1"] = outcome.report.selected_f1;
      manifest["lr_sequence"] = outcome.report.lr_sequence;
      manifest["model"] = cfg.model_path;
      const std::string mpath =
          manifest_path->empty() ? cfg.model_path + ".run.json" : *manifest_path;
      write_text(mpath, manifest.dump(2) + "\n");

      log_line("model -> " + cfg.model_path);
      log_line("run manifest -> " + mpath);
      std::ostringstream msg;
      msg << "selected epoch " << outcome.report.selected_epoch;
      if (!outcome.report.dev_f1.empty()) msg << " (dev F1 " << outcome.report.selected_f1 << ")";
      log_line(msg.str());
    });
  }

  // ---- predict -----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("predict", "tag a corpus with a trained model");
    auto fl = add_common(cmd);
    auto input = std::make_shared<std::string>();
    auto out_path = std::make_shared<std::string>();
    cmd->add_option("--input", *input, "corpus file to tag")->required();
    cmd->add_option("--out", *out_path, "predictions output (JSON lines; default stdout)");
    cmd->callback([fl, input, out_path] {
      const RunConfig cfg = fl->build();
      const auto corpus = load_corpus(*input, cfg, stem_of(*input));
      const crf::Model model = crf::load_model(cfg.model_path);
      std::map<std::string, KnowledgeText> knowledge;
      if (!cfg.baseline_no_knowledge) {
        if (cfg.knowledge_path.empty())
          throw std::runtime_error("set --knowledge (from augment) or pass --baseline");
        knowledge = load_knowledge(cfg.knowledge_path);
      }
      const auto preds = run_prediction(model, corpus, knowledge, cfg.pipeline());
      if (out_path->empty()) {
        save_predictions(preds, std::cout);
      } else {
        std::ofstream out(*out_path);
        if (!out) throw std::runtime_error("cannot write " + *out_path);
        save_predictions(preds, out);
        log_line("predictions -> " + *out_path);
      }
    });
  }

  // ---- evaluate ----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("evaluate", "score predictions against a gold corpus");
    auto fl = add_common(cmd);
    auto input = std::make_shared<std::string>();
    auto pred_path = std::make_shared<std::string>();
    auto answers_path = std::make_shared<std::string>();
    auto json_path = std::make_shared<std::string>();
    auto direct = std::make_shared<bool>(false);
    auto fold_case = std::make_shared<bool>(false);
    cmd->add_option("--input", *input, "gold corpus file")->required();
    cmd->add_option("--predictions", *pred_path, "tag predictions (JSON lines from predict)");
    cmd->add_option("--answers", *answers_path, "direct answers (JSON lines {id, answer})");
    cmd->add_flag("--direct", *direct, "complete-match scoring of direct answers");
    cmd->add_flag("--fold-case", *fold_case, "case-insensitive surface matching (direct mode)");
    cmd->add_option("--json", *json_path, "also write the report as JSON");
    cmd->callback([fl, input, pred_path, answers_path, json_path, direct, fold_case] {
      const RunConfig cfg = fl->build();
      const auto corpus = load_corpus(*input, cfg, stem_of(*input));
      MetricReport report;
      if (*direct) {
        if (answers_path->empty()) throw std::runtime_error("--direct needs --answers");
        std::ifstream in(*answers_path);
        if (!in) throw std::runtime_error("cannot open answers file: " + *answers_path);
        std::map<std::string, DirectPrediction> preds;
        std::string line;
        std::size_t skipped = 0;
        while (std::getline(in, line)) {
          if (trim(line).empty()) continue;
          nlohmann::json j = nlohmann::json::parse(line);
          DirectPrediction p = parse_direct(j.at("answer").get<std::string>());
          skipped += p.skipped;
          preds[j.at("id").get<std::string>()] = std::move(p);
        }
        if (skipped > 0) log_line(std::to_string(skipped) + " unparseable answer lines skipped");
        std::map<std::string, std::vector<SurfaceEntity>> gold;
        for (const auto& s : corpus) gold[s.id] = surface_entities(s);
        report = score_direct(gold, preds, *fold_case);
      } else {
        if (pred_path->empty()) throw std::runtime_error("pass --predictions (or --direct)");
        const auto preds = load_prediction_file(*pred_path);
        report = score_spans(spans_of(corpus), spans_of_predictions(preds));
      }
      std::cout << render_table({{stem_of(*input), report}});
      if (!json_path->empty()) {
        write_text(*json_path, report_to_json(report) + "\n");
        log_line("report -> " + *json_path);
      }
    });
  }

  // ---- fewshot -----------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("fewshot", "subset training sweep, repeats x repeats per size");
    auto fl = add_common(cmd);
    auto sizes_str = std::make_shared<std::string>();
    auto repeats = std::make_shared<std::size_t>(3);
    cmd->add_option("--sizes", *sizes_str, "comma-separated training set sizes")->required();
    cmd->add_option("--repeats", *repeats, "subsets and seeds per size")->capture_default_str();
    cmd->callback([fl, sizes_str, repeats] {
      const RunConfig cfg = fl->build();
      const auto train_set = load_corpus(cfg.train_path, cfg, "train");
      const auto dev_set = load_corpus(cfg.dev_path, cfg, "dev");
      const auto test_set = load_corpus(cfg.test_path, cfg, "test");
      std::map<std::string, KnowledgeText> knowledge;
      if (!cfg.baseline_no_knowledge) {
        if (cfg.knowledge_path.empty())
          throw std::runtime_error("set --knowledge (from augment) or pass --baseline");
        knowledge = load_knowledge(cfg.knowledge_path);
      }
      std::vector<std::size_t> sizes;
      std::stringstream ss(*sizes_str);
      std::string piece;
      while (std::getline(ss, piece, ',')) {
        const std::string p(trim(piece));
        if (!p.empty()) sizes.push_back(std::stoull(p));
      }
      if (sizes.empty()) throw std::runtime_error("--sizes came out empty");
      const auto rows =
          few_shot_protocol(train_set, dev_set, test_set, knowledge, cfg.pipeline(), sizes,
                            *repeats);
      std::cout << render_few_shot_table(rows);
    });
  }

  // ---- crossdata ---------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("crossdata", "train on one dataset, evaluate on another");
    auto fl = add_common(cmd);
    auto test_knowledge = std::make_shared<std::string>();
    cmd->add_option("--test-knowledge", *test_knowledge,
                    "knowledge file for the test-side corpus");
    cmd->callback([fl, test_knowledge] {
      const RunConfig cfg = fl->build();
      const auto train_set = load_corpus(cfg.train_path, cfg, "train");
      std::vector<AnnotatedSentence> dev_set;
      if (!cfg.dev_path.empty()) dev_set = load_corpus(cfg.dev_path, cfg, "dev");
      const auto test_set = load_corpus(cfg.test_path, cfg, "test");
      std::map<std::string, KnowledgeText> train_knowledge, test_side;
      if (!cfg.baseline_no_knowledge) {
        if (cfg.knowledge_path.empty() || test_knowledge->empty())
          throw std::runtime_error(
              "crossdata needs --knowledge (train side) and --test-knowledge, or --baseline");
        train_knowledge = load_knowledge(cfg.knowledge_path);
        test_side = load_knowledge(*test_knowledge);
      }
      const TrainOutcome outcome = run_training(train_set, dev_set, train_knowledge, cfg.pipeline());
      const auto preds = run_prediction(outcome.model, test_set, test_side, cfg.pipeline());
      const MetricReport report = score_spans(spans_of(test_set), spans_of_predictions(preds));
      std::cout << render_table({{stem_of(cfg.train_path) + "->" + stem_of(cfg.test_path), report}});
    });
  }

  // ---- report ------------------------------------------------------------
  {
    auto* cmd = app.add_subcommand("report", "print a saved run manifest");
    auto manifest_path = std::make_shared<std::string>();
    cmd->add_option("--run-manifest", *manifest_path, "run manifest from train")->required();
    cmd->callback([manifest_path] {
      std::ifstream in(*manifest_path);
      if (!in) throw std::runtime_error("cannot open run manifest: " + *manifest_path);
      nlohmann::json manifest;
      in >> manifest;
      std::cout << "model: " << manifest.value("model", std::string("?")) << "\n";
      if (manifest.contains("seeds"))
        std::cout << "seeds: master " << manifest["seeds"].value("master", std::string("?"))
                  << ", train " << manifest["seeds"].value("train", std::string("?")) << "\n";
      std::cout << "selected epoch: " << manifest.value("selected_epoch", 0) << " (dev F1 "
                << manifest.value("selected_dev_f1", 0.0) << ")\n";
      std::cout << "epoch  mean_nll      dev_f1\n";
      for (const auto& e : manifest.value("epochs", nlohmann::json::array())) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%-6llu %-12.6f",
                      static_cast<unsigned long long>(e.value("epoch", 0)),
                      e.value("mean_nll", 0.0));
        std::cout << buf;
        if (e.contains("dev_f1")) {
          std::snprintf(buf, sizeof(buf), "%8.4f", e["dev_f1"].get<double>());
          std::cout << buf;
        }
        std::cout << "\n";
      }
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}

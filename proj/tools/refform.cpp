// refform: command-line driver for the referential-form toolkit.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "refform/refform.hpp"

namespace fs = std::filesystem;
using namespace refform;

namespace {

struct Common {
  std::string corpus;
  std::string config;
  std::string model;
  std::string out = ".";
  std::uint64_t seed = 7;
  int jobs = 1;
  bool include_empty = false;
  bool subsequent_only = false;
};

// Relative corpus paths that do not exist locally are looked up under
// REFFORM_DATA_DIR.
fs::path resolve_corpus(const std::string& p) {
  require(!p.empty(), "--corpus is required");
  fs::path path(p);
  if (fs::exists(path) || path.is_absolute()) return path;
  if (const char* root = std::getenv("REFFORM_DATA_DIR"); root && *root) {
    fs::path alt = fs::path(root) / path;
    if (fs::exists(alt)) return alt;
  }
  return path;
}

Corpus load_corpus(const Common& c) { return parse_corpus(resolve_corpus(c.corpus), c.include_empty); }

FeatureConfig load_config(const Common& c) {
  require(!c.config.empty(), "--config is required");
  auto cfg = load_feature_config(c.config);
  if (c.subsequent_only) cfg.subsequent_only = true;
  return cfg;
}

nlohmann::json load_json(const std::string& path) {
  try {
    return nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(path + ": invalid JSON: " + e.what());
  }
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

fs::path out_file(const Common& c, const std::string& name) { return fs::path(c.out) / name; }

// Every output of a command is rendered first, then written, so a failure
// leaves nothing behind.
void write_all(const std::vector<std::pair<fs::path, std::string>>& files) {
  for (const auto& [path, content] : files) io::write_file_atomic(path, content);
}

int cmd_stats(const Common& c) {
  const auto st = compute_stats(load_corpus(c));
  std::cout << stats_table(st);
  write_all({{out_file(c, "stats.json"), dump(stats_to_json(st))}});
  return 0;
}

int cmd_split(const Common& c, const std::string& ratios, const std::string& assignment) {
  const Corpus corpus = load_corpus(c);
  CorpusSplit parts;
  if (!assignment.empty()) {
    parts = split_by_assignment(corpus, io::read_lines(assignment), assignment);
  } else {
    SplitSpec spec;
    spec.seed = c.seed;
    const auto r = io::split(ratios, ',');
    require(r.size() == 3, "--ratios expects train,dev,test");
    try {
      spec.train = std::stod(r[0]);
      spec.dev = std::stod(r[1]);
      spec.test = std::stod(r[2]);
    } catch (const std::exception&) {
      fail("--ratios: non-numeric value in '" + ratios + "'");
    }
    parts = split_corpus(corpus, spec);
  }
  write_all({{out_file(c, "train.jsonl"), serialize_corpus(parts.train)},
             {out_file(c, "dev.jsonl"), serialize_corpus(parts.dev)},
             {out_file(c, "test.jsonl"), serialize_corpus(parts.test)}});
  std::cout << "train " << parts.train.documents.size() << ", dev " << parts.dev.documents.size() << ", test "
            << parts.test.documents.size() << " documents\n";
  return 0;
}

int cmd_featurize(const Common& c) {
  const auto table = extract(load_corpus(c), load_config(c));
  write_all({{out_file(c, "features.tsv"), feature_table_tsv(table)}});
  std::cout << table.rows.size() << " rows, " << table.specs.size() << " features\n";
  return 0;
}

nlohmann::json parse_hparams(const std::string& s) {
  if (s.empty()) return nullptr;
  if (io::trim(s).rfind('{', 0) == 0) {
    try {
      return nlohmann::json::parse(s);
    } catch (const nlohmann::json::parse_error& e) {
      fail(std::string("--hparams: invalid JSON: ") + e.what());
    }
  }
  return load_json(s);
}

int cmd_train(const Common& c, const std::string& algorithm, const std::string& hparams) {
  const auto cfg = load_config(c);
  Algorithm alg;
  if (!algorithm.empty()) {
    alg = parse_algorithm(algorithm);
  } else {
    auto d = default_algorithm(cfg.system_name);
    require(d.has_value(), "no default algorithm for system '" + cfg.system_name + "'; pass --algorithm");
    alg = *d;
  }
  const auto hp = parse_hyperparams(alg, parse_hparams(hparams), c.seed);
  const auto table = extract(load_corpus(c), cfg);
  const auto model = train_model(table, alg, hp, cfg, c.seed);
  write_all({{out_file(c, "model.json"), dump(model_to_json(model))}});
  std::cout << "trained " << to_string(alg) << " on " << table.rows.size() << " mentions\n";
  return 0;
}

TrainedModel load_model(const Common& c) {
  require(!c.model.empty(), "--model is required");
  return model_from_json(load_json(c.model));
}

int cmd_predict(const Common& c) {
  const auto model = load_model(c);
  auto cfg = model.config;
  if (c.subsequent_only) cfg.subsequent_only = true;
  const auto table = extract(load_corpus(c), cfg);
  const auto preds = predict(model, table);
  write_all({{out_file(c, "predictions.tsv"), prediction_tsv(preds, table)}});
  std::cout << preds.size() << " predictions\n";
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& predictions) {
  require(!predictions.empty(), "--predictions is required");
  const auto rows = parse_prediction_tsv(io::read_lines(predictions), predictions);
  const auto gold = gold_labels(load_corpus(c), c.subsequent_only);
  std::map<std::string, RefForm> gold_by_key;
  for (const auto& g : gold) gold_by_key[g.doc_id + '\x1f' + g.mention_id] = g.form;
  std::vector<Prediction> preds;
  for (const auto& r : rows) {
    auto it = gold_by_key.find(r.prediction.doc_id + '\x1f' + r.prediction.mention_id);
    require(it == gold_by_key.end() || it->second == r.gold,
            predictions + ": gold label for " + r.prediction.doc_id + "/" + r.prediction.mention_id +
                " disagrees with the corpus");
    preds.push_back(r.prediction);
  }
  if (!c.subsequent_only && preds.size() < gold.size()) {
    // predictions from a subsequent-only model
    std::set<std::string> later;
    for (const auto& g : gold_labels(load_corpus(c), true)) later.insert(g.doc_id + '\x1f' + g.mention_id);
    const bool only_later = preds.size() == later.size() && std::all_of(preds.begin(), preds.end(), [&](const auto& p) {
                              return later.count(p.doc_id + '\x1f' + p.mention_id) > 0;
                            });
    require(!only_later, predictions + " covers subsequent mentions only; rerun with --subsequent-only");
  }
  const auto report = evaluate(preds, gold);
  std::cout << report_table(report);
  write_all({{out_file(c, "report.json"), dump(report_to_json(report))}});
  return 0;
}

// --report MODEL,CORPUS,PATH
ScoreRow report_score(const std::string& spec) {
  const auto parts = io::split(spec, ',');
  require(parts.size() == 3, "--report expects MODEL,CORPUS,PATH, got '" + spec + "'");
  return score_row_from_report(parts[0], parts[1], report_from_json(load_json(parts[2])));
}

int cmd_compare(const Common& c, const std::vector<std::string>& scores, const std::vector<std::string>& reports,
                double prior_a, double prior_b) {
  std::vector<ScoreRow> rows;
  for (const auto& s : scores)
    for (auto& r : parse_scores_csv(io::read_lines(s), s)) rows.push_back(std::move(r));
  for (const auto& r : reports) rows.push_back(report_score(r));
  require(rows.size() >= 2, "compare needs at least 2 reports");
  const auto table = score_table(rows);
  std::vector<std::pair<fs::path, std::string>> files;
  if (table.corpora.size() >= 2 && table.models.size() >= 3) {
    files.emplace_back(out_file(c, "correlation.csv"), correlation_csv(correlation_table(table)));
  } else {
    std::clog << "compare: correlation needs >= 2 corpora and >= 3 models; skipping correlation.csv\n";
  }
  files.emplace_back(out_file(c, "bayes_factors.csv"), bf_csv(bf_matrix(table, {prior_a, prior_b})));
  const auto rankings = rankings_text(table);
  files.emplace_back(out_file(c, "rankings.txt"), rankings);
  write_all(files);
  std::cout << rankings;
  return 0;
}

int cmd_importance(const Common& c, int repeats, const std::string& metric, const std::vector<std::string>& compare,
                   int top_k) {
  if (!compare.empty()) {
    std::vector<std::pair<std::string, ImportanceRanking>> rankings;
    for (const auto& spec : compare) {
      const auto eq = spec.find('=');
      require(eq != std::string::npos, "--compare expects NAME=RANKING_CSV, got '" + spec + "'");
      const auto path = spec.substr(eq + 1);
      rankings.emplace_back(spec.substr(0, eq), parse_importance_csv(io::read_lines(path), path));
    }
    const auto report = importance_report(rankings);
    write_all({{out_file(c, "importance_comparison.csv"), comparison_csv(report)}});
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(top_k), report.overlap.size());
    if (k > 0) std::cout << "top-" << k << " overlap: " << report.overlap[k - 1] << "\n";
    return 0;
  }
  const auto model = load_model(c);
  auto cfg = model.config;
  if (c.subsequent_only) cfg.subsequent_only = true;
  const auto table = extract(load_corpus(c), cfg);
  const auto ranking = permutation_importance(model, table, parse_importance_metric(metric), repeats, c.seed, c.jobs);
  write_all({{out_file(c, "importance.csv"), importance_csv(ranking)},
             {out_file(c, "importance_long.csv"), importance_long_csv(ranking)}});
  std::cout << "baseline " << to_string(ranking.metric) << " " << io::fixed(ranking.baseline, 4) << "\n";
  for (std::size_t i = 0; i < ranking.entries.size(); ++i)
    std::cout << i + 1 << ". " << ranking.entries[i].feature << " " << io::fixed(ranking.entries[i].mean, 4) << "\n";
  return 0;
}

int cmd_synth(const Common& c, synth::SynthSpec spec, const std::string& rule, const std::string& cats) {
  spec.seed = c.seed;
  spec.rule = synth::parse_rule(rule);
  if (!cats.empty()) {
    spec.sem_categories.clear();
    for (const auto& s : io::split(cats, ','))
      if (auto t = io::trim(s); !t.empty()) spec.sem_categories.push_back(t);
  }
  const auto result = synth::generate(spec);
  write_all({{out_file(c, "corpus.jsonl"), serialize_corpus(result.corpus)},
             {out_file(c, "manifest.json"), dump(result.manifest)}});
  std::cout << result.corpus.documents.size() << " documents, " << result.corpus.mention_count() << " mentions\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"refform: referential form selection toolkit"};
  app.require_subcommand(1);
  Common c;

  auto add_corpus = [&](CLI::App* s) {
    s->add_option("--corpus", c.corpus, "JSONL corpus (relative paths fall back to $REFFORM_DATA_DIR)");
    s->add_flag("--include-empty", c.include_empty, "keep empty-form mentions");
  };
  auto add_out = [&](CLI::App* s) { s->add_option("--out", c.out, "output directory")->capture_default_str(); };
  auto add_seed = [&](CLI::App* s) { s->add_option("--seed", c.seed, "random seed")->capture_default_str(); };

  auto* stats = app.add_subcommand("stats", "corpus statistics");
  add_corpus(stats);
  add_out(stats);

  std::string ratios = "0.85,0.05,0.10", assignment;
  auto* split = app.add_subcommand("split", "document-wise train/dev/test split");
  add_corpus(split);
  add_out(split);
  add_seed(split);
  split->add_option("--ratios", ratios, "train,dev,test fractions")->capture_default_str();
  split->add_option("--assignment", assignment, "doc_id<TAB>split file instead of ratios");

  auto* featurize = app.add_subcommand("featurize", "extract the feature table");
  add_corpus(featurize);
  add_out(featurize);
  featurize->add_option("--config", c.config, "feature config");
  featurize->add_flag("--subsequent-only", c.subsequent_only, "drop first mentions");

  std::string algorithm, hparams;
  auto* train = app.add_subcommand("train", "train a classifier");
  add_corpus(train);
  add_out(train);
  add_seed(train);
  train->add_option("--config", c.config, "feature config");
  train->add_flag("--subsequent-only", c.subsequent_only, "drop first mentions");
  train->add_option("--algorithm", algorithm, "knn, tree, maxent, mlp, crf or gbt (default: by system_name)");
  train->add_option("--hparams", hparams, "hyperparameters: JSON object or JSON file");

  auto* predict_cmd = app.add_subcommand("predict", "predict forms with a trained model");
  add_corpus(predict_cmd);
  add_out(predict_cmd);
  predict_cmd->add_option("--model", c.model, "model file");
  predict_cmd->add_flag("--subsequent-only", c.subsequent_only, "drop first mentions");

  std::string predictions;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a prediction file against corpus gold");
  add_corpus(evaluate_cmd);
  add_out(evaluate_cmd);
  evaluate_cmd->add_option("--predictions", predictions, "prediction TSV");
  evaluate_cmd->add_flag("--subsequent-only", c.subsequent_only, "score subsequent mentions only");

  std::vector<std::string> scores, reports;
  double prior_a = 1.0, prior_b = 1.0;
  auto* compare = app.add_subcommand("compare", "Bayes factors, rank correlation and rankings over reports");
  add_out(compare);
  compare->add_option("--scores", scores, "CSV: model,corpus,n,accuracy,macro_f1,weighted_f1 (percent)");
  compare->add_option("--report", reports, "MODEL,CORPUS,report.json");
  compare->add_option("--prior-a", prior_a, "Beta prior a")->capture_default_str();
  compare->add_option("--prior-b", prior_b, "Beta prior b")->capture_default_str();

  int repeats = 10, top_k = 3;
  std::string metric = "macro_f1";
  std::vector<std::string> rankings;
  auto* importance = app.add_subcommand("importance", "permutation feature importance");
  add_corpus(importance);
  add_out(importance);
  add_seed(importance);
  importance->add_option("--model", c.model, "model file");
  importance->add_option("--repeats", repeats, "permutation repeats")->capture_default_str();
  importance->add_option("--metric", metric, "accuracy or macro_f1")->capture_default_str();
  importance->add_option("--jobs", c.jobs, "worker threads")->capture_default_str();
  importance->add_flag("--subsequent-only", c.subsequent_only, "drop first mentions");
  importance->add_option("--compare", rankings, "NAME=importance.csv; compare rankings instead");
  importance->add_option("--top-k", top_k, "overlap depth to print")->capture_default_str();

  synth::SynthSpec sspec;
  std::string rule = "gram_role", cats;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus and its manifest");
  add_out(synth_cmd);
  add_seed(synth_cmd);
  synth_cmd->add_option("--n-docs", sspec.n_docs, "documents")->capture_default_str();
  synth_cmd->add_option("--rule", rule, "gram_role or distance")->capture_default_str();
  synth_cmd->add_option("--q", sspec.q, "probability the rule applies")->capture_default_str();
  synth_cmd->add_option("--sem-categories", cats, "comma list of referent categories");
  synth_cmd->add_option("--name", sspec.name, "corpus name")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (stage == "stats") return cmd_stats(c);
    if (stage == "split") return cmd_split(c, ratios, assignment);
    if (stage == "featurize") return cmd_featurize(c);
    if (stage == "train") return cmd_train(c, algorithm, hparams);
    if (stage == "predict") return cmd_predict(c);
    if (stage == "evaluate") return cmd_evaluate(c, predictions);
    if (stage == "compare") return cmd_compare(c, scores, reports, prior_a, prior_b);
    if (stage == "importance") return cmd_importance(c, repeats, metric, rankings, top_k);
    if (stage == "synth") return cmd_synth(c, sspec, rule, cats);
  } catch (const std::exception& e) {
    std::cerr << "refform " << stage << ": error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

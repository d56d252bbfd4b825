// Acceptance checks. One PASS/FAIL line per criterion, details indented below.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "refform/refform.hpp"

using namespace refform;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

const fs::path kRoot = REFFORM_SOURCE_DIR;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScoreTable published_scores() { return score_table(parse_scores_csv(io::read_lines(kRoot / "data" / "published_scores.csv"), "published_scores.csv")); }

// ---------------------------------------------------------------------------

Outcome correlation_reproduction() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  struct Cell {
    const char* a;
    const char* b;
    std::size_t metric;
    double r_s, p;
  };
  const std::vector<Cell> published = {
      {"msr", "neg", 0, -0.1081, 0.8175}, {"msr", "neg", 1, 0.9643, 0.0005}, {"msr", "neg", 2, 0.4643, 0.2939},
      {"msr", "wsj", 0, 0.2857, 0.5345},  {"msr", "wsj", 1, 0.5357, 0.2152}, {"msr", "wsj", 2, 0.4643, 0.2939},
      {"neg", "wsj", 0, -0.1261, 0.7876}, {"neg", "wsj", 1, 0.5000, 0.2532}, {"neg", "wsj", 2, -0.0357, 0.9394}};
  const auto t = published_scores();
  int matched = 0;
  for (const auto& c : published) {
    const auto got = stats::spearman(t.column(c.a, c.metric), t.column(c.b, c.metric));
    bool ok;
    if (got.tie_corrected)
      ok = std::abs(got.r_s - c.r_s) <= 0.01;
    else
      ok = io::fixed(got.r_s, 4) == io::fixed(c.r_s, 4) && io::fixed(got.p_value, 4) == io::fixed(c.p, 4);
    matched += ok;
    std::ostringstream s;
    s << c.a << "/" << c.b << " " << kMetrics[c.metric] << (got.tie_corrected ? " (ties)" : "") << ": got r_s "
      << io::fixed(got.r_s, 4) << " p " << io::fixed(got.p_value, 4) << ", published r_s " << io::fixed(c.r_s, 4)
      << " p " << io::fixed(c.p, 4);
    o.check(ok, s.str());
  }
  const double secs = seconds_since(t0);
  o.note(std::to_string(matched) + "/9 cells reproduced, " + io::fixed(secs, 3) + " s");
  o.check(secs < 1.0, "runtime under 1 s");
  return o;
}

Outcome table_consistency() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto lines = io::read_lines(kRoot / "data" / "published_per_class.csv");
  std::map<std::pair<std::string, std::string>, std::vector<double>> f1s;
  int rows = 0, row_ok = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const auto c = io::split(lines[i], ',');
    const double p = std::stod(c[3]), r = std::stod(c[4]), f = std::stod(c[5]);
    const double want = f1_score(p, r);
    ++rows;
    const bool ok = std::abs(want - f) <= 0.01 + 1e-9;
    row_ok += ok;
    o.check(ok, "row " + c[0] + "/" + c[1] + "/" + c[2] + ": F1 " + c[5] + " vs 2PR/(P+R) " + io::fixed(want, 2));
    f1s[{c[0], c[2]}].push_back(f);
  }
  o.check(rows == 63, "63 rows present (found " + std::to_string(rows) + ")");
  const auto scores = published_scores();
  int cells = 0, cell_ok = 0;
  for (const auto& m : scores.models)
    for (const auto& corpus : scores.corpora) {
      const auto it = f1s.find({m, corpus});
      ++cells;
      if (it == f1s.end() || it->second.size() != 3) {
        o.check(false, m + "/" + corpus + " has 3 per-class rows");
        continue;
      }
      const double mean = (it->second[0] + it->second[1] + it->second[2]) / 3.0;
      const double published = scores.at(m, corpus).values[1];
      const bool ok = std::abs(mean - published) <= 0.01 + 1e-9;
      cell_ok += ok;
      o.check(ok, m + "/" + corpus + ": per-class F1 mean " + io::fixed(mean, 3) + " vs macro-F1 " +
                      io::fixed(published, 2));
    }
  const double secs = seconds_since(t0);
  o.note(std::to_string(row_ok) + "/" + std::to_string(rows) + " rows and " + std::to_string(cell_ok) + "/" +
         std::to_string(cells) + " means consistent, " + io::fixed(secs, 3) + " s");
  o.check(secs < 1.0, "runtime under 1 s");
  return o;
}

Outcome rankings() {
  Outcome o;
  const std::vector<std::string> published = {
      "accuracy msr: BERT > ICSI > RoBERTa > CNTS > OSU > IS-G > UDel",
      "accuracy neg: UDel = RoBERTa > ICSI > OSU > CNTS > BERT > IS-G",
      "accuracy wsj: RoBERTa > BERT > OSU > IS-G > ICSI > CNTS > UDel",
      "macro_f1 msr: RoBERTa > BERT > ICSI > CNTS > OSU > IS-G > UDel",
      "macro_f1 neg: RoBERTa > BERT > ICSI > CNTS > IS-G > OSU > UDel",
      "macro_f1 wsj: RoBERTa > BERT > OSU > IS-G > CNTS > UDel > ICSI",
      "weighted_f1 msr: BERT > RoBERTa > ICSI > CNTS > OSU > IS-G > UDel",
      "weighted_f1 neg: RoBERTa > ICSI > UDel > BERT > CNTS > OSU > IS-G",
      "weighted_f1 wsj: RoBERTa > BERT > IS-G > OSU > CNTS > ICSI > UDel"};
  auto got = io::split(rankings_text(published_scores()), '\n');
  got.erase(std::remove(got.begin(), got.end(), std::string()), got.end());
  o.check(got.size() == published.size(), "nine ranking lines");
  int ok = 0;
  for (std::size_t i = 0; i < std::min(got.size(), published.size()); ++i) {
    ok += got[i] == published[i];
    o.check(got[i] == published[i], "got '" + got[i] + "', published '" + published[i] + "'");
  }
  o.note(std::to_string(ok) + "/9 lines match");
  return o;
}

Outcome bayes_factor() {
  Outcome o;
  const auto t = published_scores();
  const auto kb = stats::count_from_accuracy(t.at("BERT", "msr").values[0] / 100.0, 1038);
  const auto ku = stats::count_from_accuracy(t.at("UDel", "msr").values[0] / 100.0, 1038);
  const auto r = stats::bayes_factor_accuracy(kb, 1038, ku, 1038);
  o.note("BERT " + std::to_string(kb) + "/1038 vs UDel " + std::to_string(ku) + "/1038: bf10 " + io::fixed(r.bf10, 4) +
         ", band '" + r.band + "'");
  o.check(r.bf10 >= 0.7 && r.bf10 <= 2.1, "bf10 in [0.7, 2.1]");
  o.check(r.band == "not worth more than a bare mention", "band is 'not worth more than a bare mention'");
  const auto swapped = stats::bayes_factor_accuracy(ku, 1038, kb, 1038);
  o.check(std::abs(swapped.log_bf10 - r.log_bf10) <= 1e-12, "exchange symmetry to 1e-12");
  const auto same = stats::bayes_factor_accuracy(800, 1000, 800, 1000);
  o.check(same.bf10 < 1.0, "identical samples give bf10 < 1");
  const auto extreme = stats::bayes_factor_accuracy(900, 1000, 100, 1000);
  o.check(extreme.log_bf10 > std::log(150.0) && extreme.band == "very strong", "900/1000 vs 100/1000 very strong");
  const auto big = stats::bayes_factor_accuracy(600000, 1000000, 600100, 1000000);
  o.check(std::isfinite(big.log_bf10), "finite at n = 10^6");
  return o;
}

// ---- classifier oracles ----

double brute_path(const std::vector<Probs>& u, const crf::Transitions& tr, const std::vector<int>& p) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += u[i][static_cast<std::size_t>(p[i])];
    if (i) s += tr[static_cast<std::size_t>(p[i - 1])][static_cast<std::size_t>(p[i])];
  }
  return s;
}

double entropy_of(const std::array<double, 3>& c) {
  const double n = c[0] + c[1] + c[2];
  double h = 0;
  for (double v : c)
    if (v > 0) h -= v / n * std::log2(v / n);
  return h;
}

Outcome classifier_oracles() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2024);

  // CRF: enumerate all 27 label sequences of length 3
  double worst_z = 0;
  bool viterbi_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Probs> u(3);
    for (auto& a : u)
      for (auto& v : a) v = rng.uniform(-3, 3);
    crf::Transitions tr{};
    for (auto& row : tr)
      for (auto& v : row) v = rng.uniform(-3, 3);
    double z = 0, best = -INFINITY;
    std::vector<int> arg;
    for (int code = 0; code < 27; ++code) {
      const std::vector<int> p = {code % 3, code / 3 % 3, code / 9};
      const double s = brute_path(u, tr, p);
      z += std::exp(s);
      if (s > best) best = s, arg = p;
    }
    worst_z = std::max(worst_z, std::abs(crf::log_partition(u, tr) - std::log(z)));
    const auto v = crf::viterbi(u, tr);
    viterbi_ok = viterbi_ok && v.path == arg && std::abs(v.score - best) <= 1e-8;
  }
  o.check(worst_z <= 1e-8, "CRF log partition within 1e-8 (worst " + std::to_string(worst_z) + ")");
  o.check(viterbi_ok, "CRF Viterbi path and score match enumeration");

  // MaxEnt gradient vs central differences
  {
    Matrix x(6, 4);
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    std::vector<int> y(6);
    for (auto& v : y) v = static_cast<int>(rng.below(3));
    maxent::Model m;
    m.dim = 4;
    for (int i = 0; i < 12; ++i) m.weights.push_back(rng.uniform(-1, 1));
    for (auto& b : m.bias) b = rng.uniform(-1, 1);
    const auto g = maxent::gradient(m, x, y, 0.01);
    double worst = 0;
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
      auto hi = m, lo = m;
      hi.weights[i] += 1e-5;
      lo.weights[i] -= 1e-5;
      const double fd = (maxent::loss(hi, x, y, 0.01) - maxent::loss(lo, x, y, 0.01)) / 2e-5;
      worst = std::max(worst, std::abs(fd - g.weights[i]) / std::max(1.0, std::abs(fd) + std::abs(g.weights[i])));
    }
    o.check(worst < 1e-4, "MaxEnt gradient relative error < 1e-4 (worst " + std::to_string(worst) + ")");
  }

  // MLP gradient vs central differences
  {
    Matrix x(4, 5);
    for (auto& v : x.data) v = rng.uniform(-1, 1);
    std::vector<int> y = {0, 1, 2, 1};
    mlp::Params p;
    auto m = mlp::init(5, p);
    for (auto& L : m.layers)
      for (auto& b : L.b) b = rng.uniform(-0.5, 0.5);
    const std::vector<std::size_t> rows = {0, 1, 2, 3};
    const auto g = mlp::gradient(m, x, y, rows);
    double worst = 0;
    for (std::size_t l = 0; l < m.layers.size(); ++l)
      for (std::size_t i = 0; i < m.layers[l].w.size(); ++i) {
        auto hi = m, lo = m;
        hi.layers[l].w[i] += 1e-5;
        lo.layers[l].w[i] -= 1e-5;
        const double fd = (mlp::loss(hi, x, y, rows) - mlp::loss(lo, x, y, rows)) / 2e-5;
        const double an = g.layers[l].w[i];
        worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd) + std::abs(an)));
      }
    o.check(worst < 1e-3, "MLP gradient relative error < 1e-3 (worst " + std::to_string(worst) + ")");
  }

  // Tree root split vs brute force
  {
    bool ok = true;
    for (int trial = 0; trial < 20; ++trial) {
      Matrix x(20, 3);
      std::vector<int> y(20);
      for (std::size_t r = 0; r < 20; ++r) {
        for (std::size_t c = 0; c < 3; ++c) x(r, c) = static_cast<double>(rng.below(4));
        y[r] = static_cast<int>(rng.below(3));
      }
      std::array<double, 3> all{};
      for (int v : y) all[static_cast<std::size_t>(v)] += 1;
      double best = -1;
      for (std::size_t c = 0; c < 3; ++c)
        for (double thr : {0.5, 1.5, 2.5}) {
          std::array<double, 3> l{}, r{};
          for (std::size_t i = 0; i < 20; ++i) (x(i, c) <= thr ? l : r)[static_cast<std::size_t>(y[i])] += 1;
          const double nl = l[0] + l[1] + l[2], nr = r[0] + r[1] + r[2];
          if (nl < 2 || nr < 2) continue;
          best = std::max(best, entropy_of(all) - nl / 20 * entropy_of(l) - nr / 20 * entropy_of(r));
        }
      std::vector<std::size_t> idx(20);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      const auto s = tree::best_split(x, y, std::vector<double>(20, 0.05), idx, 2);
      ok = ok && std::abs(s.gain - best) <= 1e-12;
    }
    o.check(ok, "tree root split gain equals brute-force maximum");
  }

  // kNN hand fixture: squared distances 1, 1, 4, 25, 50 with k = 3
  {
    Matrix x(5, 2);
    const double pts[5][2] = {{1, 0}, {0, 1}, {2, 0}, {5, 0}, {5, 5}};
    for (std::size_t r = 0; r < 5; ++r) x(r, 0) = pts[r][0], x(r, 1) = pts[r][1];
    const auto m = knn::train({x, {2, 2, 1, 0, 0}, {}}, {3});
    const std::vector<double> q = {0, 0};
    const auto p = knn::predict_row(m, q);
    o.check(p[0] == 0.0 && std::abs(p[1] - 1.0 / 3) < 1e-15 && std::abs(p[2] - 2.0 / 3) < 1e-15,
            "kNN hand-fixture votes (0, 1/3, 2/3)");
  }

  // probability vectors from every algorithm
  {
    synth::SynthSpec s;
    s.n_docs = 30;
    s.q = 0.7;
    const auto c = synth::generate(s).corpus;
    FeatureConfig cfg;
    cfg.system_name = "acceptance";
    cfg.features = registry_names(builtin_registry());
    const auto t = extract(c, cfg);
    for (auto alg : kAlgorithms) {
      const auto hp = parse_hyperparams(alg, nullptr, 7);
      const auto m = train_model(t, alg, hp, cfg, 7);
      double worst = 0;
      for (const auto& pr : predict(m, t)) worst = std::max(worst, std::abs(pr.probs[0] + pr.probs[1] + pr.probs[2] - 1));
      o.check(worst <= 1e-6, to_string(alg) + " probabilities sum to 1 within 1e-6");
    }
  }
  const double secs = seconds_since(t0);
  o.note("oracle suite " + io::fixed(secs, 2) + " s");
  o.check(secs < 60, "suite under 60 s");
  return o;
}

Outcome importance_sanity() {
  Outcome o;
  synth::SynthSpec s;
  s.n_docs = 100;
  s.seed = 7;
  s.q = 1.0;
  const auto train = synth::generate(s).corpus;
  s.seed = 8;
  s.n_docs = 30;
  const auto dev = synth::generate(s).corpus;
  const auto cfg = load_feature_config(kRoot / "configs" / "gbt.cfg");
  const auto tt = extract(train, cfg), dt = extract(dev, cfg);
  const auto model = train_model(tt, Algorithm::Gbt, parse_hyperparams(Algorithm::Gbt, nullptr, 7), cfg, 7);
  const auto r = permutation_importance(model, dt, ImportanceMetric::MacroF1, 10, 7);
  int first = 0;
  for (int k = 0; k < 10; ++k) {
    std::string top;
    double best = -INFINITY;
    for (const auto& e : r.entries)
      if (e.per_repeat[static_cast<std::size_t>(k)] > best) best = e.per_repeat[static_cast<std::size_t>(k)], top = e.feature;
    first += top == "gram_role";
  }
  o.note("gram_role first in " + std::to_string(first) + "/10 repeats (mean " +
         io::fixed(r.entries.empty() ? 0.0 : r.entries[0].mean, 4) + " for " + r.entries[0].feature + ")");
  o.check(first == 10, "gram_role ranked first in 10/10 repeats");

  const auto used = std::get<gbt::Model>(model.params).used_columns(model.columns.size());
  int unused = 0;
  bool zero = true;
  for (const auto& b : model.columns.blocks) {
    bool any = false;
    for (std::size_t k = 0; k < b.width; ++k) any = any || used[b.offset + k];
    if (any) continue;
    ++unused;
    for (const auto& e : r.entries)
      if (e.feature == b.feature)
        for (double v : e.per_repeat) zero = zero && v == 0.0;
  }
  o.note(std::to_string(unused) + " feature(s) never used by the model");
  o.check(unused > 0, "an unused feature exists");
  o.check(zero, "unused features score exactly 0");
  return o;
}

// ---- end-to-end determinism through the CLI ----

int sh(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

bool pipeline(const fs::path& dir, const std::string& alg, std::string& err) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = std::string("\"") + REFFORM_CLI + "\"";
  const auto cfg = kRoot / "configs" / (alg == "gbt" ? "gbt.cfg" : "udel.cfg");
  const std::vector<std::string> steps = {
      "synth --n-docs 100 --seed 7 --out " + q(dir),
      "split --corpus " + q(dir / "corpus.jsonl") + " --seed 7 --out " + q(dir),
      "featurize --corpus " + q(dir / "train.jsonl") + " --config " + q(cfg) + " --out " + q(dir),
      "train --corpus " + q(dir / "train.jsonl") + " --config " + q(cfg) + " --algorithm " + alg +
          " --seed 7 --out " + q(dir),
      "predict --corpus " + q(dir / "test.jsonl") + " --model " + q(dir / "model.json") + " --out " + q(dir),
      "evaluate --corpus " + q(dir / "test.jsonl") + " --predictions " + q(dir / "predictions.tsv") +
          (alg == "gbt" ? " --subsequent-only" : "") + " --out " + q(dir)};
  for (const auto& s : steps)
    if (sh(cli + " " + s) != 0) {
      err = "step failed: " + s.substr(0, s.find(' '));
      return false;
    }
  return true;
}

Outcome determinism() {
  Outcome o;
  const auto base = fs::temp_directory_path() / "refform_acceptance";
  for (const char* alg : {"knn", "tree", "maxent", "mlp", "crf", "gbt"}) {
    const auto a = base / (std::string(alg) + "_1"), b = base / (std::string(alg) + "_2");
    std::string err;
    if (!pipeline(a, alg, err) || !pipeline(b, alg, err)) {
      o.check(false, std::string(alg) + ": " + err);
      continue;
    }
    int files = 0;
    bool same = true;
    for (const auto& e : fs::directory_iterator(a)) {
      ++files;
      const auto other = b / e.path().filename();
      if (!fs::exists(other) || io::read_file(e.path()) != io::read_file(other)) {
        same = false;
        o.note(std::string(alg) + ": " + e.path().filename().string() + " differs");
      }
    }
    o.check(same && files >= 9, std::string(alg) + ": " + std::to_string(files) + " artifacts byte-identical");
    if (same) {
      const auto rep = nlohmann::json::parse(io::read_file(a / "report.json"));
      o.note(std::string(alg) + ": " + std::to_string(files) + " artifacts identical, test accuracy " +
             io::fixed(rep.at("accuracy").get<double>(), 4));
    }
  }
  fs::remove_all(base);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"correlation table reproduction", correlation_reproduction},
      {"per-class / macro-F1 table consistency", table_consistency},
      {"model ranking reproduction", rankings},
      {"Bayes factor target", bayes_factor},
      {"classifier oracle suite", classifier_oracles},
      {"importance sanity", importance_sanity},
      {"end-to-end determinism", determinism}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << "\n";
    for (const auto& n : o.notes)
      if (o.pass ? n.rfind("failed: ", 0) != 0 : true) std::cout << "    " << n << "\n";
    failed += !o.pass;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}

#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "refform/corpus.hpp"
#include "refform/error.hpp"
#include "refform/random.hpp"

// Seeded synthetic corpora whose forms follow a known conditional rule.
namespace refform::synth {

enum class Rule { GramRole, Distance };

inline std::string to_string(Rule r) { return r == Rule::GramRole ? "gram_role" : "distance"; }

inline Rule parse_rule(const std::string& s) {
  if (s == "gram_role") return Rule::GramRole;
  if (s == "distance") return Rule::Distance;
  fail("unknown synth rule '" + s + "' (expected gram_role or distance)");
}

struct SynthSpec {
  int n_docs = 100;
  std::uint64_t seed = 1;
  Rule rule = Rule::GramRole;
  double q = 1.0;  // probability the rule's form is used; otherwise one of the other two
  int min_paragraphs = 1, max_paragraphs = 3;
  int min_sentences = 1, max_sentences = 4;  // per paragraph
  int min_tokens = 6, max_tokens = 14;       // per sentence
  int max_chains = 3;
  int max_mentions_per_sentence = 2;
  std::vector<std::string> sem_categories = {"human", "city", "country", "organization", "object"};
  std::string name = "synth";

  void validate() const {
    require(n_docs >= 1, "synth: n_docs must be >= 1");
    require(q >= 0.0 && q <= 1.0, "synth: q must lie in [0, 1]");
    require(min_paragraphs >= 1 && min_paragraphs <= max_paragraphs, "synth: bad paragraph range");
    require(min_sentences >= 1 && min_sentences <= max_sentences, "synth: bad sentence range");
    require(max_mentions_per_sentence >= 1, "synth: max_mentions_per_sentence must be >= 1");
    require(min_tokens >= max_mentions_per_sentence && min_tokens <= max_tokens, "synth: bad token range");
    require(max_chains >= 1, "synth: max_chains must be >= 1");
    require(!sem_categories.empty(), "synth: sem_categories must not be empty");
  }
};

// Form the rule prescribes. distance_cat: 0 first, 1 same sentence,
// 2 previous sentence, 3 further back.
inline RefForm rule_form(Rule rule, GramRole role, int distance_cat) {
  if (rule == Rule::GramRole) {
    switch (role) {
      case GramRole::Subject: return RefForm::Pronoun;
      case GramRole::Determiner: return RefForm::Description;
      default: return RefForm::Name;
    }
  }
  if (distance_cat == 0) return RefForm::Name;
  return distance_cat == 3 ? RefForm::Description : RefForm::Pronoun;
}

struct SynthResult {
  Corpus corpus;
  nlohmann::ordered_json manifest;
};

namespace detail {

inline const std::vector<std::string>& filler() {
  static const std::vector<std::string> w = {"the", "a", "of", "and", "in", "was", "to", "later", "with", "from",
                                             "after", "moved", "known", "for", "by", "its", "early", "work"};
  return w;
}

inline const std::vector<std::string>& given_names() {
  static const std::vector<std::string> w = {"Ada", "Boris", "Chen", "Dana", "Emeka", "Farah", "Goran", "Hana"};
  return w;
}

inline const std::vector<std::string>& family_names() {
  static const std::vector<std::string> w = {"Park", "Novak", "Silva", "Okafor", "Lind", "Moreau", "Tanaka", "Ruiz"};
  return w;
}

inline const std::vector<std::string>& nouns() {
  static const std::vector<std::string> w = {"scientist", "city", "company", "river", "player", "author", "band"};
  return w;
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

}  // namespace detail

inline SynthResult generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed, 0x5e7);
  SynthResult out;
  out.corpus.name = spec.name;

  // Tallied while generating, independent of compute_stats.
  std::size_t total_tokens = 0, total_sents = 0, total_pars = 0, total_chains = 0, total_mentions = 0;
  std::array<std::size_t, 4> form_count{};

  for (int d = 0; d < spec.n_docs; ++d) {
    Document doc;
    doc.doc_id = "d" + std::to_string(d);
    doc.genre = "synthetic";

    struct Chain {
      std::string id, name, surname, sem, noun;
    };
    std::vector<Chain> chains;
    const int n_chains = static_cast<int>(rng.between(1, spec.max_chains));
    for (int c = 0; c < n_chains; ++c) {
      Chain ch;
      ch.id = doc.doc_id + ".c" + std::to_string(c);
      ch.surname = detail::pick(rng, detail::family_names());
      ch.name = detail::pick(rng, detail::given_names()) + " " + ch.surname;
      ch.sem = detail::pick(rng, spec.sem_categories);
      ch.noun = detail::pick(rng, detail::nouns());
      chains.push_back(std::move(ch));
    }

    std::vector<int> last_sent(chains.size(), -1);
    std::set<std::size_t> used_chains;
    int sent_global = 0, mention_no = 0;
    const int n_pars = static_cast<int>(rng.between(spec.min_paragraphs, spec.max_paragraphs));
    for (int p = 0; p < n_pars; ++p) {
      Paragraph par;
      const int n_sents = static_cast<int>(rng.between(spec.min_sentences, spec.max_sentences));
      for (int s = 0; s < n_sents; ++s, ++sent_global) {
        const int len = static_cast<int>(rng.between(spec.min_tokens, spec.max_tokens));
        Sentence sent;
        for (int t = 0; t < len; ++t) sent.push_back(detail::pick(rng, detail::filler()));
        total_tokens += static_cast<std::size_t>(len);

        // The first sentence of a document always mentions something.
        const int lo = sent_global == 0 ? 1 : 0;
        const int n_m = static_cast<int>(rng.between(lo, spec.max_mentions_per_sentence));
        std::vector<std::size_t> positions = rng.permutation(static_cast<std::size_t>(len));
        positions.resize(static_cast<std::size_t>(n_m));
        std::sort(positions.begin(), positions.end());
        for (auto pos : positions) {
          const std::size_t c = rng.below(chains.size());
          const auto role = static_cast<GramRole>(rng.below(4));
          const int gap = last_sent[c] < 0 ? -1 : sent_global - last_sent[c];
          const int dist_cat = gap < 0 ? 0 : gap == 0 ? 1 : gap == 1 ? 2 : 3;
          RefForm form = rule_form(spec.rule, role, dist_cat);
          if (!rng.bernoulli(spec.q)) {
            std::vector<RefForm> others;
            for (RefForm f : kForms)
              if (f != form) others.push_back(f);
            form = others[rng.below(others.size())];
          }
          const Chain& ch = chains[c];
          std::string surface = form == RefForm::Pronoun ? (ch.sem == "human" ? "they" : "it")
                                : form == RefForm::Name  ? ch.surname
                                                         : ch.noun;
          sent[pos] = surface;
          Mention m;
          m.mention_id = "m" + std::to_string(mention_no++);
          m.chain_id = ch.id;
          m.par_index = p;
          m.sent_index = sent_global;
          m.token_start = static_cast<int>(pos);
          m.token_end = static_cast<int>(pos) + 1;
          m.form = form;
          m.gram_role = role;
          m.sem_category = ch.sem;
          m.canonical_name = ch.name;
          m.surface = std::move(surface);
          doc.mentions.push_back(std::move(m));
          last_sent[c] = sent_global;
          used_chains.insert(c);
          ++form_count[form_index(form)];
          ++total_mentions;
        }
        par.push_back(std::move(sent));
      }
      doc.paragraphs.push_back(std::move(par));
      total_pars += 1;
      total_sents += static_cast<std::size_t>(n_sents);
    }
    total_chains += used_chains.size();
    validate_document(doc, "synth");
    out.corpus.documents.push_back(std::move(doc));
  }

  const double n = static_cast<double>(spec.n_docs);
  CorpusStats expected;
  expected.n_docs = static_cast<std::size_t>(spec.n_docs);
  expected.mean_words = static_cast<double>(total_tokens) / n;
  expected.mean_sentences = static_cast<double>(total_sents) / n;
  expected.mean_paragraphs = static_cast<double>(total_pars) / n;
  expected.mean_referents = static_cast<double>(total_chains) / n;
  expected.n_mentions = total_mentions;
  expected.form_count = form_count;
  for (std::size_t i = 0; i < 4; ++i)
    expected.form_percent[i] = 100.0 * static_cast<double>(form_count[i]) / static_cast<double>(total_mentions);

  auto& j = out.manifest;
  j["generator"] = {{"name", spec.name},
                    {"n_docs", spec.n_docs},
                    {"seed", spec.seed},
                    {"rule", to_string(spec.rule)},
                    {"q", spec.q},
                    {"sem_categories", spec.sem_categories}};
  j["expected_stats"] = stats_to_json(expected);
  nlohmann::ordered_json counts;
  for (RefForm f : kForms) counts[std::string(to_string(f))] = form_count[form_index(f)];
  j["form_counts"] = std::move(counts);
  return out;
}

}  // namespace refform::synth

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace refform;
using testutil::document;
using testutil::mention;

namespace {

std::string jsonl(const std::vector<Document>& docs) {
  std::string s;
  for (const auto& d : docs) s += document_to_json(d).dump() + "\n";
  return s;
}

Corpus two_doc_fixture() {
  // 10 and 20 tokens; forms {P,P,N} and {N,D,D,P}
  auto a = document("a", {{4, 6}});
  a.mentions = {mention("a0", "x", 0, 0, 0, 1, RefForm::Pronoun), mention("a1", "x", 0, 0, 2, 3, RefForm::Pronoun),
                mention("a2", "y", 0, 1, 0, 1, RefForm::Name)};
  auto b = document("b", {{5, 5}, {10}});
  b.mentions = {mention("b0", "x", 0, 0, 0, 1, RefForm::Name), mention("b1", "x", 0, 1, 0, 2, RefForm::Description),
                mention("b2", "y", 1, 2, 0, 1, RefForm::Description),
                mention("b3", "y", 1, 2, 3, 4, RefForm::Pronoun)};
  return {"fixture", {a, b}};
}

}  // namespace

TEST(ParseCorpus, OneDocumentTwoMentions) {
  auto d = document("d1", {{3}});
  d.mentions = {mention("m0", "c", 0, 0, 0, 1, RefForm::Pronoun), mention("m1", "c", 0, 0, 2, 3, RefForm::Name)};
  const auto c = parse_corpus_text(jsonl({d}), "t", false);
  ASSERT_EQ(c.documents.size(), 1u);
  EXPECT_EQ(c.mention_count(), 2u);
  EXPECT_EQ(c.documents[0], d);
}

TEST(ParseCorpus, EmptyMentionsDroppedUnlessRequested) {
  auto d = document("d1", {{4}});
  d.mentions = {mention("m0", "c", 0, 0, 0, 1, RefForm::Name), mention("m1", "c", 0, 0, 1, 2, RefForm::Empty),
                mention("m2", "c", 0, 0, 2, 3, RefForm::Pronoun)};
  const auto dropped = parse_corpus_text(jsonl({d}), "t", false);
  ASSERT_EQ(dropped.documents[0].mentions.size(), 2u);
  EXPECT_EQ(dropped.documents[0].mentions[0].mention_id, "m0");
  EXPECT_EQ(dropped.documents[0].mentions[1].mention_id, "m2");
  const auto kept = parse_corpus_text(jsonl({d}), "t", true);
  EXPECT_EQ(kept.documents[0].mentions.size(), 3u);
}

TEST(ParseCorpus, SpanPastSentenceEndCitesDocId) {
  auto d = document("bad_doc", {{3}});
  d.mentions = {mention("m0", "c", 0, 0, 2, 4, RefForm::Name)};
  try {
    parse_corpus_text(jsonl({d}), "t", false, "f.jsonl");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bad_doc"), std::string::npos) << msg;
    EXPECT_NE(msg.find("f.jsonl:1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("token_end"), std::string::npos) << msg;
  }
}

TEST(ParseCorpus, SchemaErrors) {
  EXPECT_THROW(parse_corpus_text("", "t", false), Error);
  EXPECT_THROW(parse_corpus_text("\n\n", "t", false), Error);
  EXPECT_THROW(parse_corpus_text("{not json}\n", "t", false), Error);
  EXPECT_THROW(parse_corpus_text(R"({"doc_id":"a","genre":"g","paragraphs":[]})", "t", false), Error);
  auto d = document("d", {{3}});
  d.mentions = {mention("m0", "c", 0, 0, 0, 1, RefForm::Name)};
  auto j = document_to_json(d);
  j["mentions"][0]["form"] = "demonstrative";
  EXPECT_THROW(parse_corpus_text(j.dump(), "t", false), Error);
  j = document_to_json(d);
  j["mentions"][0]["par_index"] = 1;
  EXPECT_THROW(parse_corpus_text(j.dump(), "t", false), Error);
  // duplicate doc_id
  EXPECT_THROW(parse_corpus_text(jsonl({d, d}), "t", false), Error);
  // chain disagreement on canonical_name
  auto e = document("e", {{3}});
  e.mentions = {mention("m0", "c", 0, 0, 0, 1, RefForm::Name), mention("m1", "c", 0, 0, 1, 2, RefForm::Pronoun)};
  e.mentions[1].canonical_name = "Someone Else";
  EXPECT_THROW(parse_corpus_text(jsonl({e}), "t", false), Error);
}

TEST(ParseCorpus, MentionsNormalizedToDocumentOrder) {
  auto d = document("d", {{3, 3}});
  d.mentions = {mention("late", "c", 0, 1, 0, 1, RefForm::Pronoun), mention("mid", "c", 0, 0, 2, 3, RefForm::Name),
                mention("early", "c", 0, 0, 0, 1, RefForm::Name)};
  const auto c = parse_corpus_text(jsonl({d}), "t", false);
  const auto& ms = c.documents[0].mentions;
  EXPECT_EQ(ms[0].mention_id, "early");
  EXPECT_EQ(ms[1].mention_id, "mid");
  EXPECT_EQ(ms[2].mention_id, "late");
}

TEST(ParseCorpus, RoundTrip) {
  const auto syn = testutil::synth_corpus(20, 5, 0.7);
  const auto text = serialize_corpus(syn.corpus);
  const auto back = parse_corpus_text(text, syn.corpus.name, true);
  EXPECT_EQ(back, syn.corpus);
  EXPECT_EQ(serialize_corpus(back), text);
}

TEST(ParseCorpus, ExampleFixtureLoads) {
  const auto c = parse_corpus(testutil::source_dir() / "data" / "example1.jsonl");
  EXPECT_EQ(c.name, "example1");
  ASSERT_EQ(c.documents.size(), 1u);
  const auto& d = c.documents[0];
  EXPECT_EQ(d.mentions.size(), 6u);
  EXPECT_EQ(d.mentions[0].surface, "David Chang");
  EXPECT_EQ(d.mentions[1].surface, "He");
  for (const auto& m : d.mentions) EXPECT_EQ(m.canonical_name, "David Chang");
}

TEST(ComputeStats, HandCountedFixture) {
  const auto st = compute_stats(two_doc_fixture());
  EXPECT_EQ(st.n_docs, 2u);
  EXPECT_EQ(st.n_mentions, 7u);
  EXPECT_NEAR(st.percent(RefForm::Pronoun), 42.857, 0.005);
  EXPECT_NEAR(st.percent(RefForm::Name), 28.571, 0.005);
  EXPECT_NEAR(st.percent(RefForm::Description), 28.571, 0.005);
  EXPECT_DOUBLE_EQ(st.mean_words, 15.0);
  EXPECT_DOUBLE_EQ(st.mean_sentences, 2.5);
  EXPECT_DOUBLE_EQ(st.mean_paragraphs, 1.5);
  EXPECT_DOUBLE_EQ(st.mean_referents, 2.0);
  EXPECT_NEAR(st.percent(RefForm::Description) + st.percent(RefForm::Name) + st.percent(RefForm::Pronoun), 100.0,
              0.01);
}

TEST(ComputeStats, SingleNameMention) {
  auto d = document("d", {{2}});
  d.mentions = {mention("m", "c", 0, 0, 0, 1, RefForm::Name)};
  const auto st = compute_stats({"one", {d}});
  EXPECT_DOUBLE_EQ(st.percent(RefForm::Name), 100.0);
  EXPECT_DOUBLE_EQ(st.percent(RefForm::Pronoun), 0.0);
  EXPECT_DOUBLE_EQ(st.percent(RefForm::Description), 0.0);
}

TEST(ComputeStats, EmptyCorpusIsError) { EXPECT_THROW(compute_stats(Corpus{}), Error); }

TEST(ComputeStats, MatchesSynthManifest) {
  const auto syn = testutil::synth_corpus(60, 11, 0.8);
  const auto got = stats_to_json(compute_stats(syn.corpus));
  EXPECT_EQ(got.dump(), syn.manifest["expected_stats"].dump());
}

// Optional: licensed msr training data, when the user has it.
TEST(ComputeStats, LicensedMsrTable2) {
  const char* root = std::getenv("REFFORM_DATA_DIR");
  if (!root) GTEST_SKIP() << "REFFORM_DATA_DIR not set";
  const auto path = std::filesystem::path(root) / "msr" / "train.jsonl";
  if (!std::filesystem::exists(path)) GTEST_SKIP() << "licensed msr corpus not present";
  const auto st = compute_stats(parse_corpus(path, true));
  EXPECT_EQ(st.n_mentions, 11705u);
  EXPECT_NEAR(st.percent(RefForm::Pronoun), 41.79, 0.01);
  EXPECT_NEAR(st.percent(RefForm::Name), 38.09, 0.01);
  EXPECT_NEAR(st.percent(RefForm::Description), 13.84, 0.01);
}

TEST(SplitCorpus, Sizes) {
  const auto c = testutil::synth_corpus(100, 1).corpus;
  const auto s = split_corpus(c, {0.85, 0.05, 0.10, 7});
  EXPECT_EQ(s.train.documents.size(), 85u);
  EXPECT_EQ(s.dev.documents.size(), 5u);
  EXPECT_EQ(s.test.documents.size(), 10u);
}

TEST(SplitCorpus, DeterministicAndDisjoint) {
  const auto c = testutil::synth_corpus(37, 2).corpus;
  const SplitSpec spec{0.7, 0.1, 0.2, 99};
  const auto a = split_corpus(c, spec);
  const auto b = split_corpus(c, spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.dev, b.dev);
  EXPECT_EQ(a.test, b.test);
  std::set<std::string> ids;
  for (const auto* part : {&a.train, &a.dev, &a.test})
    for (const auto& d : part->documents) EXPECT_TRUE(ids.insert(d.doc_id).second) << d.doc_id;
  EXPECT_EQ(ids.size(), c.documents.size());
  const auto other = split_corpus(c, {0.7, 0.1, 0.2, 100});
  EXPECT_NE(other.test, a.test);
}

TEST(SplitCorpus, InvalidRatiosAndTinyCorpora) {
  const auto c = testutil::synth_corpus(10, 1).corpus;
  EXPECT_THROW(split_corpus(c, {0.5, 0.5, 0.5, 1}), Error);
  EXPECT_THROW(split_corpus(c, {0.0, 0.5, 0.5, 1}), Error);
  const auto two = testutil::synth_corpus(2, 1).corpus;
  EXPECT_THROW(split_corpus(two, {}), Error);
  // 3 docs at 85/5/10 rounds dev and test to zero
  EXPECT_THROW(split_corpus(testutil::synth_corpus(3, 1).corpus, {}), Error);
  EXPECT_NO_THROW(split_corpus(testutil::synth_corpus(3, 1).corpus, {0.34, 0.33, 0.33, 1}));
}

TEST(SplitCorpus, Assignment) {
  const auto c = testutil::synth_corpus(4, 1).corpus;
  const std::vector<std::string> lines = {"d0\ttrain", "d1\ttest", "# comment", "d2\tdev", "d3\ttrain"};
  const auto s = split_by_assignment(c, lines);
  EXPECT_EQ(s.train.documents.size(), 2u);
  EXPECT_EQ(s.dev.documents[0].doc_id, "d2");
  EXPECT_EQ(s.test.documents[0].doc_id, "d1");
  EXPECT_THROW(split_by_assignment(c, {"d0\ttrain"}), Error);
  EXPECT_THROW(split_by_assignment(c, {"d0\ttrain", "d1\ttest", "d2\tdev", "d3\tholdout"}), Error);
  EXPECT_THROW(split_by_assignment(c, {"d0\ttrain", "d1\ttest", "d2\tdev", "d3\ttrain", "d9\ttrain"}), Error);
}

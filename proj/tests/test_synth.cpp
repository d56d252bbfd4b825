#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace refform;

TEST(Synth, ByteIdenticalAcrossRuns) {
  const auto a = testutil::synth_corpus(100, 3);
  const auto b = testutil::synth_corpus(100, 3);
  EXPECT_EQ(serialize_corpus(a.corpus), serialize_corpus(b.corpus));
  EXPECT_EQ(a.manifest.dump(2), b.manifest.dump(2));
  EXPECT_NE(serialize_corpus(testutil::synth_corpus(100, 4).corpus), serialize_corpus(a.corpus));
}

TEST(Synth, ManifestAgreesWithComputeStats) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = testutil::synth_corpus(40, seed, 0.5);
    EXPECT_EQ(stats_to_json(compute_stats(s.corpus)).dump(), s.manifest["expected_stats"].dump());
    std::size_t total = 0;
    for (const auto& [k, v] : s.manifest["form_counts"].items()) total += v.get<std::size_t>();
    EXPECT_EQ(total, s.corpus.mention_count());
  }
}

TEST(Synth, GramRoleRuleHoldsAtQOne) {
  const auto c = testutil::synth_corpus(60, 5, 1.0).corpus;
  std::size_t n = 0;
  for (const auto& d : c.documents)
    for (const auto& m : d.mentions) {
      const RefForm want = m.gram_role == GramRole::Subject      ? RefForm::Pronoun
                           : m.gram_role == GramRole::Determiner ? RefForm::Description
                                                                 : RefForm::Name;
      EXPECT_EQ(m.form, want) << d.doc_id << "/" << m.mention_id;
      ++n;
    }
  EXPECT_GT(n, 100u);
}

TEST(Synth, DistanceRuleHoldsAtQOne) {
  const auto c = testutil::synth_corpus(60, 6, 1.0, synth::Rule::Distance).corpus;
  const auto t = extract(c, testutil::all_features());
  const auto f = t.feature_index("sent_distance_cat");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto cat = t.value_label(r, f);
    const RefForm want = cat == "first" ? RefForm::Name : cat == "far" ? RefForm::Description : RefForm::Pronoun;
    EXPECT_EQ(t.rows[r].gold, want) << t.rows[r].doc_id << "/" << t.rows[r].mention_id << " " << cat;
  }
}

TEST(Synth, NoiseBreaksRuleAtRoughlyOneMinusQ) {
  const auto c = testutil::synth_corpus(200, 7, 0.7).corpus;
  std::size_t agree = 0, n = 0;
  for (const auto& d : c.documents)
    for (const auto& m : d.mentions) {
      agree += m.form == synth::rule_form(synth::Rule::GramRole, m.gram_role, 0);
      ++n;
    }
  EXPECT_NEAR(static_cast<double>(agree) / static_cast<double>(n), 0.7, 0.05);
}

TEST(Synth, DocumentsValidAndFirstSentenceMentioned) {
  const auto c = testutil::synth_corpus(50, 8).corpus;
  for (const auto& d : c.documents) {
    EXPECT_NO_THROW(validate_document(d, "t"));
    ASSERT_FALSE(d.mentions.empty());
    EXPECT_EQ(d.mentions[0].sent_index, 0);
  }
}

TEST(Synth, InvalidSpec) {
  synth::SynthSpec s;
  s.q = 1.5;
  EXPECT_THROW(synth::generate(s), Error);
  s = {};
  s.n_docs = 0;
  EXPECT_THROW(synth::generate(s), Error);
  s = {};
  s.sem_categories.clear();
  EXPECT_THROW(synth::generate(s), Error);
  EXPECT_THROW(synth::parse_rule("recency"), Error);
}

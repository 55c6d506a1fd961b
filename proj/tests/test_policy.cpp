#include "paced/policy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "paced/env.hpp"
#include "paced/rng.hpp"

namespace {

using namespace paced;

Dataset small_dataset(int v, int l, int n_prompts, double fraction) {
  TaskSpec spec;
  spec.vocab_size = v;
  spec.seq_len = l;
  spec.num_prompts = n_prompts;
  spec.difficulty_profile = {fraction};
  spec.seed = 5;
  return generate_dataset(spec);
}

TEST(PolicyTable, NodeCountMatchesPrefixTree) {
  EXPECT_EQ(prefix_node_count(2, 3), 7u);   // 1 + 2 + 4
  EXPECT_EQ(prefix_node_count(3, 2), 4u);   // 1 + 3
  EXPECT_EQ(prefix_node_count(2, 1), 1u);
  Dataset ds = small_dataset(2, 3, 2, 0.25);
  PolicyTable p = PolicyTable::uniform(ds);
  EXPECT_EQ(p.nodes_per_prompt(), 7u);
  EXPECT_EQ(p.logits_for(0).size(), 14u);
  EXPECT_THROW(p.logits_for(9), std::out_of_range);
}

TEST(LogProb, UniformPolicyGivesMinusLLogV) {
  Dataset ds = small_dataset(2, 3, 1, 0.25);
  PolicyTable p = PolicyTable::uniform(ds);
  const Prompt& prompt = ds.prompts[0];
  for (SeqIndex i = 0; i < 8; ++i)
    EXPECT_NEAR(log_prob(p, prompt, sequence_from_index(i, 2, 3)), std::log(1.0 / 8.0), 1e-12);
}

TEST(LogProb, ForcedTokenHasNearZeroLogProb) {
  Dataset ds = small_dataset(2, 3, 1, 0.25);
  PolicyTable p = PolicyTable::uniform(ds);
  std::vector<double>& logits = p.logits_for(0);
  for (std::uint64_t node = 0; node < p.nodes_per_prompt(); ++node) logits[node * 2 + 1] = 1000.0;
  EXPECT_NEAR(log_prob(p, ds.prompts[0], {1, 1, 1}), 0.0, 1e-6);
  RngStream rng(1);
  for (int i = 0; i < 20; ++i) {
    auto [seq, lp] = sample(p, ds.prompts[0], rng);
    EXPECT_EQ(seq, (Sequence{1, 1, 1}));
  }
}

TEST(LogProb, RandomPolicyIsNormalized) {
  Dataset ds = small_dataset(3, 4, 3, 0.0);  // 81 sequences
  PolicyTable p = PolicyTable::gaussian_init(ds, 2.0, 17);
  for (const Prompt& prompt : ds.prompts) {
    double total = 0.0;
    for (SeqIndex i = 0; i < 81; ++i)
      total += std::exp(log_prob(p, prompt, sequence_from_index(i, 3, 4)));
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(LogProb, ValidatesShapeAndTokens) {
  Dataset ds = small_dataset(2, 3, 1, 0.25);
  PolicyTable p = PolicyTable::uniform(ds);
  EXPECT_THROW(log_prob(p, ds.prompts[0], {0, 1}), std::invalid_argument);
  EXPECT_THROW(log_prob(p, ds.prompts[0], {0, 1, 2}), std::invalid_argument);
  Prompt other = ds.prompts[0];
  other.seq_len = 2;
  EXPECT_THROW(log_prob(p, other, {0, 1}), std::invalid_argument);
}

TEST(Sample, LogProbOfDrawMatchesLogProbExactly) {
  Dataset ds = small_dataset(2, 4, 1, 0.25);
  PolicyTable p = PolicyTable::gaussian_init(ds, 1.0, 3);
  RngStream rng(42);
  for (int i = 0; i < 10000; ++i) {
    auto [seq, lp] = sample(p, ds.prompts[0], rng);
    ASSERT_EQ(lp, log_prob(p, ds.prompts[0], seq));  // bitwise, same code path
    ASSERT_LE(lp, 0.0);
  }
}

TEST(Sample, UniformPolicyMassTimesSpaceIsOne) {
  Dataset ds = small_dataset(2, 3, 1, 0.25);
  PolicyTable p = PolicyTable::uniform(ds);
  RngStream rng(7);
  for (int i = 0; i < 10000; ++i) {
    auto [seq, lp] = sample(p, ds.prompts[0], rng);
    ASSERT_NEAR(std::exp(lp) * 8.0, 1.0, 1e-12);
  }
}

TEST(Sample, TokenFrequencyTracksProbability) {
  Dataset ds = small_dataset(2, 1, 1, 0.5);
  PolicyTable p = PolicyTable::uniform(ds);
  RngStream rng(99);
  int zeros = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto [seq, lp] = sample(p, ds.prompts[0], rng);
    zeros += (seq[0] == 0);
  }
  double freq = static_cast<double>(zeros) / n;
  EXPECT_GE(freq, 0.48);
  EXPECT_LE(freq, 0.52);
}

TEST(Sample, IdenticalStreamsGiveIdenticalDraws) {
  Dataset ds = small_dataset(3, 3, 1, 0.0);
  PolicyTable p = PolicyTable::gaussian_init(ds, 1.5, 11);
  RngStream a(1234), b(1234), c(1235);
  bool any_diff = false;
  for (int i = 0; i < 200; ++i) {
    auto [sa, la] = sample(p, ds.prompts[0], a);
    auto [sb, lb] = sample(p, ds.prompts[0], b);
    auto [sc, lc] = sample(p, ds.prompts[0], c);
    ASSERT_EQ(sa, sb);
    ASSERT_EQ(la, lb);
    any_diff |= (sa != sc);
  }
  EXPECT_TRUE(any_diff);
}

TEST(Sample, EmpiricalFrequenciesMatchEnumeratedProbabilities) {
  Dataset ds = small_dataset(2, 3, 1, 0.25);
  PolicyTable p = PolicyTable::gaussian_init(ds, 1.0, 23);
  std::map<SeqIndex, int> counts;
  RngStream rng(55);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    auto [seq, lp] = sample(p, ds.prompts[0], rng);
    counts[sequence_index(seq, 2)]++;
  }
  for (SeqIndex i = 0; i < 8; ++i) {
    double prob = std::exp(log_prob(p, ds.prompts[0], sequence_from_index(i, 2, 3)));
    double freq = static_cast<double>(counts[i]) / n;
    EXPECT_NEAR(freq, prob, 0.005);
  }
}

TEST(Snapshot, IsAValueCopyUnaffectedByLaterUpdates) {
  Dataset ds = small_dataset(2, 2, 2, 0.25);
  PolicyTable p = PolicyTable::uniform(ds);
  PolicyTable snap = p.snapshot();
  double before = log_prob(snap, ds.prompts[0], {0, 0});
  p.logits_for(0)[0] = 50.0;
  EXPECT_EQ(log_prob(snap, ds.prompts[0], {0, 0}), before);
  EXPECT_NE(log_prob(p, ds.prompts[0], {0, 0}), before);
  // and the copy is independent in the other direction too
  PolicyTable snap2 = p.snapshot();
  snap2.logits_for(0)[0] = -50.0;
  EXPECT_EQ(p.logits_for(0)[0], 50.0);
}

TEST(GaussianInit, ZeroStddevIsUniformAndSeedIsRespected) {
  Dataset ds = small_dataset(2, 3, 2, 0.25);
  PolicyTable z = PolicyTable::gaussian_init(ds, 0.0, 9);
  for (double v : z.logits_for(0)) EXPECT_EQ(v, 0.0);
  PolicyTable a = PolicyTable::gaussian_init(ds, 1.0, 9);
  PolicyTable b = PolicyTable::gaussian_init(ds, 1.0, 9);
  PolicyTable c = PolicyTable::gaussian_init(ds, 1.0, 10);
  EXPECT_EQ(a.logits_for(0), b.logits_for(0));
  EXPECT_NE(a.logits_for(0), c.logits_for(0));
  EXPECT_NE(a.logits_for(0), a.logits_for(1));  // per-prompt independent streams
  EXPECT_THROW(PolicyTable::gaussian_init(ds, -1.0, 9), std::invalid_argument);
}

}  // namespace

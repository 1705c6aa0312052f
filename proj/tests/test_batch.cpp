#include <gtest/gtest.h>

#include <omp.h>

#include <limits>
#include <random>

#include "retune/batch.hpp"
#include "retune/errors.hpp"
#include "retune/synth.hpp"

using namespace retune;

namespace {

class ThreadCounts : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override {
    saved_ = omp_get_max_threads();
    omp_set_num_threads(GetParam());
  }
  void TearDown() override { omp_set_num_threads(saved_); }

 private:
  int saved_ = 1;
};

const SynthData& data() {
  static const SynthData d = [] {
    SynthConfig c;
    c.n_stocks = 6;
    c.n_days = 80;
    c.malformed_rate = 0.2;
    return synthesize(c, 31);
  }();
  return d;
}

std::vector<RolloutGroup> groups(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> r(0, 4), lp(-5, -0.1), d(-0.4, 0.4);
  std::uniform_int_distribution<int> len(1, 20);
  std::vector<RolloutGroup> out(n);
  for (auto& g : out) {
    for (int i = 0; i < 8; ++i) {
      g.rewards.push_back(i % 3 == 0 ? 1.0 : r(rng));
      std::vector<double> c, o, f;
      for (int t = len(rng); t > 0; --t) {
        o.push_back(lp(rng));
        c.push_back(o.back() + d(rng));
        f.push_back(o.back() + d(rng));
      }
      g.logprobs.current.push_back(c);
      g.logprobs.old.push_back(o);
      g.logprobs.ref.push_back(f);
    }
  }
  return out;
}

bool same(const ObjectiveResult& a, const ObjectiveResult& b) {
  return a.advantages == b.advantages && a.objective == b.objective && a.gradients == b.gradients;
}

}  // namespace

TEST_P(ThreadCounts, ShapeMatchesSerial) {
  std::vector<std::string> texts;
  std::vector<MovementLabel> truths;
  for (const auto& r : data().rollouts) {
    texts.push_back(r.text);
    truths.push_back(r.truth);
  }
  const RewardWeights w{0.5, 2.0, 1.25};
  const auto par = batch::shape_all(texts, truths, w);
  const auto ser = batch::serial::shape_all(texts, truths, w);
  ASSERT_EQ(par.size(), texts.size());
  EXPECT_EQ(par, ser);
  for (std::size_t i = 0; i < texts.size(); i += 97) EXPECT_EQ(par[i], shape(texts[i], truths[i], w));
}

TEST_P(ThreadCounts, AdvantagesMatchSerial) {
  std::vector<std::vector<double>> rewards;
  for (const auto& g : groups(300)) rewards.push_back(g.rewards);
  rewards.push_back({2.0, 2.0, 2.0});
  EXPECT_EQ(batch::advantages_all(rewards, 1e-8), batch::serial::advantages_all(rewards, 1e-8));
}

TEST_P(ThreadCounts, ObjectiveMatchesSerial) {
  const auto gs = groups(200);
  const auto par = batch::objective_all(gs, {});
  const auto ser = batch::serial::objective_all(gs, {});
  ASSERT_EQ(par.size(), ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) EXPECT_TRUE(same(par[i], ser[i])) << i;
  EXPECT_TRUE(same(par[17], group_objective(gs[17], {})));
}

TEST_P(ThreadCounts, VotesMatchSerial) {
  const auto& b = data().predictions;
  EXPECT_EQ(batch::vote_all(b), batch::serial::vote_all(b));
  for (std::size_t k : {1u, 3u, 16u, 32u}) {
    EXPECT_EQ(batch::subsample_vote_all(b, k, 5), batch::serial::subsample_vote_all(b, k, 5)) << k;
  }
}

TEST_P(ThreadCounts, RandomScoresMatchSerial) {
  std::vector<MovementLabel> truths;
  for (const auto& s : data().samples) truths.push_back(s.label);
  const auto seeds = default_random_seeds(40);
  EXPECT_EQ(batch::random_scores(truths, seeds, F1Average::macro),
            batch::serial::random_scores(truths, seeds, F1Average::macro));
}

TEST_P(ThreadCounts, LowestFailingIndexWins) {
  auto gs = groups(100);
  gs[40].rewards.pop_back();  // ValidationError
  gs[70].rewards[0] = std::numeric_limits<double>::quiet_NaN();  // DomainError
  gs[90].rewards[0] = std::numeric_limits<double>::quiet_NaN();
  for (int rep = 0; rep < 20; ++rep) {
    EXPECT_THROW(batch::objective_all(gs, {}), ValidationError);
    EXPECT_THROW(batch::serial::objective_all(gs, {}), ValidationError);
  }
}

INSTANTIATE_TEST_SUITE_P(Threads, ThreadCounts, ::testing::Values(1, 2, 4, 7));

TEST(Batch, EmptyInputs) {
  EXPECT_TRUE(batch::shape_all({}, {}, {}).empty());
  EXPECT_TRUE(batch::vote_all({}).empty());
  EXPECT_TRUE(batch::objective_all({}, {}).empty());
  EXPECT_GE(batch::max_threads(), 1);
}

TEST(Batch, LengthMismatch) {
  std::vector<std::string> t{"a", "b"};
  std::vector<MovementLabel> l{MovementLabel::up};
  EXPECT_THROW(batch::shape_all(t, l, {}), ValidationError);
}

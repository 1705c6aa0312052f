// Serial vs OpenMP batch kernels on synthetic inputs.
#include <benchmark/benchmark.h>

#include <cmath>

#include "retune/batch.hpp"
#include "retune/seeding.hpp"
#include "retune/synth.hpp"

namespace {

using namespace retune;

struct Corpus {
  std::vector<std::string> texts;
  std::vector<MovementLabel> truths;
  std::vector<Ballot> ballots;
  std::vector<RolloutGroup> groups;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    SynthConfig cfg;
    cfg.n_stocks = 40;
    cfg.n_days = 260;
    SynthData d = synthesize(cfg, 7);
    Corpus out;
    for (const Rollout& r : d.rollouts) {
      out.texts.push_back(r.text);
      out.truths.push_back(r.truth);
    }
    out.ballots = std::move(d.predictions);
    Rng rng(derive_seed(7, "bench.groups"));
    std::normal_distribution<double> noise(0.0, 0.05);
    std::uniform_real_distribution<double> reward(0.0, 4.0);
    for (int g = 0; g < 512; ++g) {
      RolloutGroup grp;
      for (int i = 0; i < 8; ++i) {
        grp.rewards.push_back(reward(rng));
        std::vector<double> cur, old, ref;
        for (int t = 0; t < 256; ++t) {
          const double base = -1.0 - std::abs(noise(rng)) * 10.0;
          cur.push_back(base + noise(rng));
          old.push_back(base);
          ref.push_back(base + noise(rng));
        }
        grp.logprobs.current.push_back(std::move(cur));
        grp.logprobs.old.push_back(std::move(old));
        grp.logprobs.ref.push_back(std::move(ref));
      }
      out.groups.push_back(std::move(grp));
    }
    return out;
  }();
  return c;
}

void BM_ShapeSerial(benchmark::State& s) {
  const auto& c = corpus();
  for (auto _ : s) benchmark::DoNotOptimize(batch::serial::shape_all(c.texts, c.truths, {}));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(c.texts.size()));
}
void BM_ShapeParallel(benchmark::State& s) {
  const auto& c = corpus();
  for (auto _ : s) benchmark::DoNotOptimize(batch::shape_all(c.texts, c.truths, {}));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(c.texts.size()));
}

void BM_ObjectiveSerial(benchmark::State& s) {
  const auto& c = corpus();
  for (auto _ : s) benchmark::DoNotOptimize(batch::serial::objective_all(c.groups, {}));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(c.groups.size()));
}
void BM_ObjectiveParallel(benchmark::State& s) {
  const auto& c = corpus();
  for (auto _ : s) benchmark::DoNotOptimize(batch::objective_all(c.groups, {}));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(c.groups.size()));
}

void BM_SubsampleVoteSerial(benchmark::State& s) {
  const auto& c = corpus();
  for (auto _ : s) benchmark::DoNotOptimize(batch::serial::subsample_vote_all(c.ballots, 16, 3));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(c.ballots.size()));
}
void BM_SubsampleVoteParallel(benchmark::State& s) {
  const auto& c = corpus();
  for (auto _ : s) benchmark::DoNotOptimize(batch::subsample_vote_all(c.ballots, 16, 3));
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(c.ballots.size()));
}

void BM_RandomBoundSerial(benchmark::State& s) {
  const auto& c = corpus();
  std::vector<std::uint64_t> seeds(32);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i;
  for (auto _ : s) benchmark::DoNotOptimize(batch::serial::random_scores(c.truths, seeds, F1Average::macro));
}
void BM_RandomBoundParallel(benchmark::State& s) {
  const auto& c = corpus();
  std::vector<std::uint64_t> seeds(32);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i;
  for (auto _ : s) benchmark::DoNotOptimize(batch::random_scores(c.truths, seeds, F1Average::macro));
}

}  // namespace

BENCHMARK(BM_ShapeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ShapeParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ObjectiveSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ObjectiveParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SubsampleVoteSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SubsampleVoteParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomBoundSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomBoundParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

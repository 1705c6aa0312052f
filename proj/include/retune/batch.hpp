#pragma once

// Data-parallel batch kernels. Every kernel in retune::batch runs its outer loop
// under OpenMP and has a twin in retune::batch::serial that does the same work
// in a plain loop; the twins are the reference the tests and the benchmark
// compare against. Results are bit-identical regardless of thread count: each
// item is computed independently and written to its own slot.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "retune/grpo.hpp"
#include "retune/labels.hpp"
#include "retune/reward.hpp"
#include "retune/vote.hpp"

namespace retune::batch {

std::vector<RewardBreakdown> shape_all(std::span<const std::string> texts, std::span<const MovementLabel> truths,
                                       const RewardWeights& weights);

std::vector<std::vector<double>> advantages_all(std::span<const std::vector<double>> groups, double std_guard);

std::vector<ObjectiveResult> objective_all(std::span<const RolloutGroup> groups, const GrpoConfig& config);

std::vector<MovementLabel> vote_all(std::span<const Ballot> ballots);

/// Majority of k votes drawn without replacement from each ballot. Ballot i uses
/// an RNG seeded from (seed, k, i).
std::vector<MovementLabel> subsample_vote_all(std::span<const Ballot> ballots, std::size_t k, std::uint64_t seed);

/// F1 of uniform-random predictions against `truths`, one entry per seed.
std::vector<double> random_scores(std::span<const MovementLabel> truths, std::span<const std::uint64_t> seeds,
                                  F1Average average);

int max_threads();

namespace serial {

std::vector<RewardBreakdown> shape_all(std::span<const std::string> texts, std::span<const MovementLabel> truths,
                                       const RewardWeights& weights);
std::vector<std::vector<double>> advantages_all(std::span<const std::vector<double>> groups, double std_guard);
std::vector<ObjectiveResult> objective_all(std::span<const RolloutGroup> groups, const GrpoConfig& config);
std::vector<MovementLabel> vote_all(std::span<const Ballot> ballots);
std::vector<MovementLabel> subsample_vote_all(std::span<const Ballot> ballots, std::size_t k, std::uint64_t seed);
std::vector<double> random_scores(std::span<const MovementLabel> truths, std::span<const std::uint64_t> seeds,
                                  F1Average average);

}  // namespace serial

}  // namespace retune::batch

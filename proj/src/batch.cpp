#include "retune/batch.hpp"

#include <omp.h>

#include <exception>
#include <mutex>

#include "retune/errors.hpp"
#include "retune/seeding.hpp"

namespace retune::batch {

namespace {

// Exceptions cannot cross an OpenMP region; keep the one from the lowest index
// so the error a caller sees matches the serial loop.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::exception_ptr error;
  std::size_t error_index = n;
  std::mutex mu;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(mu);
      if (static_cast<std::size_t>(i) < error_index) {
        error_index = static_cast<std::size_t>(i);
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

template <typename Fn>
void serial_for(std::size_t n, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ValidationError(std::string(what) + ": input lengths differ");
}

MovementLabel subsample_vote(const Ballot& ballot, std::size_t k, std::uint64_t seed, std::size_t index) {
  if (ballot.votes.size() < k) {
    throw ValidationError("sample " + ballot.sample_id + " has " + std::to_string(ballot.votes.size()) +
                          " predictions, fewer than k=" + std::to_string(k));
  }
  Rng rng(derive_seed(derive_seed(seed, "vote_curve", k), "ballot", index));
  std::vector<MovementLabel> pool = ballot.votes;
  // Partial Fisher-Yates: the first k slots become a uniform draw without replacement.
  for (std::size_t j = 0; j < k; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
    std::swap(pool[j], pool[pick(rng)]);
  }
  return majority_vote(std::span(pool).first(k));
}

double random_score(std::span<const MovementLabel> truths, std::uint64_t seed, F1Average average) {
  Rng rng(derive_seed(seed, "random_bound"));
  std::uniform_int_distribution<int> pick(0, static_cast<int>(kLabelCount) - 1);
  ConfusionMatrix cm;
  for (MovementLabel t : truths) cm.add(t, kAllLabels[static_cast<std::size_t>(pick(rng))]);
  return f1_score(cm, average);
}

// Both variants share these bodies and differ only in the loop driver.
template <typename Loop>
std::vector<RewardBreakdown> shape_impl(Loop loop, std::span<const std::string> texts,
                                        std::span<const MovementLabel> truths, const RewardWeights& weights) {
  check_same_size(texts.size(), truths.size(), "shape_all");
  std::vector<RewardBreakdown> out(texts.size());
  loop(texts.size(), [&](std::size_t i) { out[i] = shape(texts[i], truths[i], weights); });
  return out;
}

template <typename Loop>
std::vector<std::vector<double>> advantages_impl(Loop loop, std::span<const std::vector<double>> groups,
                                                 double std_guard) {
  std::vector<std::vector<double>> out(groups.size());
  loop(groups.size(), [&](std::size_t i) { out[i] = group_advantages(groups[i], std_guard); });
  return out;
}

template <typename Loop>
std::vector<ObjectiveResult> objective_impl(Loop loop, std::span<const RolloutGroup> groups,
                                            const GrpoConfig& config) {
  validate(config);
  std::vector<ObjectiveResult> out(groups.size());
  loop(groups.size(), [&](std::size_t i) { out[i] = group_objective(groups[i], config); });
  return out;
}

template <typename Loop>
std::vector<MovementLabel> vote_impl(Loop loop, std::span<const Ballot> ballots) {
  std::vector<MovementLabel> out(ballots.size());
  loop(ballots.size(), [&](std::size_t i) { out[i] = majority_vote(ballots[i].votes); });
  return out;
}

template <typename Loop>
std::vector<MovementLabel> subsample_impl(Loop loop, std::span<const Ballot> ballots, std::size_t k,
                                          std::uint64_t seed) {
  if (k == 0) throw DomainError("subsample_vote_all: k must be at least 1");
  std::vector<MovementLabel> out(ballots.size());
  loop(ballots.size(), [&](std::size_t i) { out[i] = subsample_vote(ballots[i], k, seed, i); });
  return out;
}

template <typename Loop>
std::vector<double> random_impl(Loop loop, std::span<const MovementLabel> truths,
                                std::span<const std::uint64_t> seeds, F1Average average) {
  std::vector<double> out(seeds.size());
  loop(seeds.size(), [&](std::size_t i) { out[i] = random_score(truths, seeds[i], average); });
  return out;
}

constexpr auto kParallel = [](std::size_t n, auto&& fn) { parallel_for(n, fn); };
constexpr auto kSerial = [](std::size_t n, auto&& fn) { serial_for(n, fn); };

}  // namespace

int max_threads() { return omp_get_max_threads(); }

std::vector<RewardBreakdown> shape_all(std::span<const std::string> texts, std::span<const MovementLabel> truths,
                                       const RewardWeights& weights) {
  return shape_impl(kParallel, texts, truths, weights);
}

std::vector<std::vector<double>> advantages_all(std::span<const std::vector<double>> groups, double std_guard) {
  return advantages_impl(kParallel, groups, std_guard);
}

std::vector<ObjectiveResult> objective_all(std::span<const RolloutGroup> groups, const GrpoConfig& config) {
  return objective_impl(kParallel, groups, config);
}

std::vector<MovementLabel> vote_all(std::span<const Ballot> ballots) { return vote_impl(kParallel, ballots); }

std::vector<MovementLabel> subsample_vote_all(std::span<const Ballot> ballots, std::size_t k, std::uint64_t seed) {
  return subsample_impl(kParallel, ballots, k, seed);
}

std::vector<double> random_scores(std::span<const MovementLabel> truths, std::span<const std::uint64_t> seeds,
                                  F1Average average) {
  return random_impl(kParallel, truths, seeds, average);
}

namespace serial {

std::vector<RewardBreakdown> shape_all(std::span<const std::string> texts, std::span<const MovementLabel> truths,
                                       const RewardWeights& weights) {
  return shape_impl(kSerial, texts, truths, weights);
}

std::vector<std::vector<double>> advantages_all(std::span<const std::vector<double>> groups, double std_guard) {
  return advantages_impl(kSerial, groups, std_guard);
}

std::vector<ObjectiveResult> objective_all(std::span<const RolloutGroup> groups, const GrpoConfig& config) {
  return objective_impl(kSerial, groups, config);
}

std::vector<MovementLabel> vote_all(std::span<const Ballot> ballots) { return vote_impl(kSerial, ballots); }

std::vector<MovementLabel> subsample_vote_all(std::span<const Ballot> ballots, std::size_t k, std::uint64_t seed) {
  return subsample_impl(kSerial, ballots, k, seed);
}

std::vector<double> random_scores(std::span<const MovementLabel> truths, std::span<const std::uint64_t> seeds,
                                  F1Average average) {
  return random_impl(kSerial, truths, seeds, average);
}

}  // namespace serial

}  // namespace retune::batch

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retune/labels.hpp"
#include "retune/market.hpp"

namespace retune {

struct Ballot {
  std::string sample_id;
  std::vector<MovementLabel> votes;
  friend bool operator==(const Ballot&, const Ballot&) = default;
};

/// Plurality winner; ties go to hold, then down, then up. Throws DomainError on an empty ballot.
MovementLabel majority_vote(std::span<const MovementLabel> votes);

struct ConfusionMatrix {
  // counts[truth][predicted], indexed by index_of(MovementLabel).
  std::array<std::array<std::uint64_t, kLabelCount>, kLabelCount> counts{};

  void add(MovementLabel truth, MovementLabel predicted) { ++counts[index_of(truth)][index_of(predicted)]; }
  std::uint64_t total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

enum class F1Average { macro, micro, weighted };

std::optional<F1Average> f1_average_from_string(std::string_view s);
std::string_view to_string(F1Average a);

/// 2 tp / (2 tp + fp + fn) per class; 0 for a class never predicted and never present.
std::array<double, kLabelCount> per_class_f1(const ConfusionMatrix& cm);

/// Unweighted mean of per_class_f1. Throws DomainError on an empty matrix.
double macro_f1(const ConfusionMatrix& cm);
double f1_score(const ConfusionMatrix& cm, F1Average average);

struct Metrics {
  std::uint64_t count = 0;
  ConfusionMatrix confusion;
  std::array<double, kLabelCount> per_class_f1{};
  double f1 = 0.0;  // aggregated per `average`
};

Metrics evaluate(const ConfusionMatrix& cm, F1Average average = F1Average::macro);

struct EvalReport {
  int k = 0;  // votes per sample; 0 means the whole prediction pool
  F1Average average = F1Average::macro;
  Metrics overall;
  // Empty subsets are omitted.
  std::map<SplitTag, Metrics> per_split;
  std::map<MovementLabel, Metrics> per_label;
};

struct Prediction {
  std::string sample_id;
  MovementLabel label = MovementLabel::hold;
};

/// Evaluates predictions against samples matched one-to-one by sample_id.
/// Throws ValidationError on unknown, missing or duplicate ids.
EvalReport grouped_report(std::span<const Prediction> predictions, std::span<const LabeledSample> samples,
                          F1Average average = F1Average::macro);

/// For each k: draw k votes per sample without replacement (seeded per k and sample),
/// majority-vote them and evaluate.
std::vector<EvalReport> vote_curve(std::span<const Ballot> ballots, std::span<const LabeledSample> samples,
                                   std::span<const int> ks, std::uint64_t seed,
                                   F1Average average = F1Average::macro);

inline constexpr std::size_t kRandomBoundSeeds = 32;

struct RandomBound {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> per_seed;
};

/// Seeds 0 .. count-1.
std::vector<std::uint64_t> default_random_seeds(std::size_t count = kRandomBoundSeeds);

/// F1 band of a predictor that draws each label uniformly at random, one run per seed.
RandomBound random_bound(std::span<const LabeledSample> test, std::span<const std::uint64_t> seeds,
                         F1Average average = F1Average::macro);

}  // namespace retune

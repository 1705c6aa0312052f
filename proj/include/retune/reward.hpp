#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retune/labels.hpp"
#include "retune/response.hpp"

namespace retune {

struct RewardWeights {
  double alpha = 1.0;  // format
  double beta = 2.0;   // accuracy
  double gamma = 1.0;  // consistency
  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

/// Throws DomainError unless every weight is finite and non-negative.
void validate(const RewardWeights& w);

struct RewardBreakdown {
  double format = 0.0;
  double accuracy = 0.0;
  double consistency = 0.0;
  double total = 0.0;
  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

double accuracy_score(MovementLabel predicted, MovementLabel truth);

/// 1 iff classify(change_pct) == answer.
double consistency_score(double change_pct, MovementLabel answer);

/// R = alpha * format + beta * accuracy + gamma * consistency. A response that
/// fails the format check scores zero on every component.
RewardBreakdown shape(std::string_view text, MovementLabel truth, const RewardWeights& weights);

/// Indices of the candidates that are well-formed, correct, and self-consistent.
std::vector<std::size_t> filter_for_sft(std::span<const std::string> candidates, MovementLabel truth);

}  // namespace retune

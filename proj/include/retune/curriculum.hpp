#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <optional>
#include <vector>

#include "retune/reward.hpp"

namespace retune {

inline constexpr int kDefaultRollouts = 8;

enum class DifficultyBin { easy, medium, hard };

std::string_view to_string(DifficultyBin b);

struct DifficultyRecord {
  std::string sample_id;
  int n_rollouts = kDefaultRollouts;
  int n_correct = 0;
};

/// hard: 3c < N; medium: N <= 3c < 2N; easy: 3c >= 2N (c == N included).
DifficultyBin bin(int n_correct, int n_rollouts);

/// Fraction of incorrect rollouts, (N - c) / N.
double difficulty(int n_correct, int n_rollouts);

/// Medium records only, easiest first, ties broken by sample_id.
std::vector<DifficultyRecord> curriculum_order(std::span<const DifficultyRecord> records);

/// What counts as a correct rollout when turning scored rollouts into records.
enum class CorrectnessRule {
  accuracy_and_format,  // format == 1 and accuracy == 1
  accuracy_only,
  all_components,  // format, accuracy and consistency all 1
};

std::optional<CorrectnessRule> correctness_rule_from_string(std::string_view s);
std::string_view to_string(CorrectnessRule r);

bool is_correct(const RewardBreakdown& b, CorrectnessRule rule);

}  // namespace retune

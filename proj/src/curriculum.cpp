#include "retune/curriculum.hpp"

#include <algorithm>

#include "retune/errors.hpp"

namespace retune {

namespace {

void check_counts(int n_correct, int n_rollouts) {
  if (n_rollouts < 1) throw DomainError("curriculum: n_rollouts must be at least 1");
  if (n_correct < 0 || n_correct > n_rollouts) {
    throw DomainError("curriculum: n_correct " + std::to_string(n_correct) + " outside [0, " +
                      std::to_string(n_rollouts) + "]");
  }
}

}  // namespace

std::string_view to_string(DifficultyBin b) {
  switch (b) {
    case DifficultyBin::easy: return "easy";
    case DifficultyBin::medium: return "medium";
    case DifficultyBin::hard: return "hard";
  }
  return "hard";
}

DifficultyBin bin(int n_correct, int n_rollouts) {
  check_counts(n_correct, n_rollouts);
  const long long c3 = 3LL * n_correct;
  if (c3 < n_rollouts) return DifficultyBin::hard;
  if (c3 < 2LL * n_rollouts) return DifficultyBin::medium;
  return DifficultyBin::easy;
}

double difficulty(int n_correct, int n_rollouts) {
  check_counts(n_correct, n_rollouts);
  return static_cast<double>(n_rollouts - n_correct) / static_cast<double>(n_rollouts);
}

std::vector<DifficultyRecord> curriculum_order(std::span<const DifficultyRecord> records) {
  std::vector<DifficultyRecord> medium;
  for (const DifficultyRecord& r : records) {
    if (bin(r.n_correct, r.n_rollouts) == DifficultyBin::medium) medium.push_back(r);
  }
  // Compare (N1 - c1) / N1 < (N2 - c2) / N2 by cross-multiplication.
  std::sort(medium.begin(), medium.end(), [](const DifficultyRecord& a, const DifficultyRecord& b) {
    const long long lhs = static_cast<long long>(a.n_rollouts - a.n_correct) * b.n_rollouts;
    const long long rhs = static_cast<long long>(b.n_rollouts - b.n_correct) * a.n_rollouts;
    if (lhs != rhs) return lhs < rhs;
    return a.sample_id < b.sample_id;
  });
  return medium;
}

std::optional<CorrectnessRule> correctness_rule_from_string(std::string_view s) {
  if (s == "accuracy_and_format") return CorrectnessRule::accuracy_and_format;
  if (s == "accuracy_only") return CorrectnessRule::accuracy_only;
  if (s == "all_components") return CorrectnessRule::all_components;
  return std::nullopt;
}

std::string_view to_string(CorrectnessRule r) {
  switch (r) {
    case CorrectnessRule::accuracy_and_format: return "accuracy_and_format";
    case CorrectnessRule::accuracy_only: return "accuracy_only";
    case CorrectnessRule::all_components: return "all_components";
  }
  return "accuracy_and_format";
}

bool is_correct(const RewardBreakdown& b, CorrectnessRule rule) {
  switch (rule) {
    case CorrectnessRule::accuracy_only: return b.accuracy == 1.0;
    case CorrectnessRule::accuracy_and_format: return b.accuracy == 1.0 && b.format == 1.0;
    case CorrectnessRule::all_components:
      return b.accuracy == 1.0 && b.format == 1.0 && b.consistency == 1.0;
  }
  return false;
}

}  // namespace retune

#include "retune/reward.hpp"

#include <cmath>

#include "retune/errors.hpp"
#include "retune/market.hpp"

namespace retune {

void validate(const RewardWeights& w) {
  for (double v : {w.alpha, w.beta, w.gamma}) {
    if (!std::isfinite(v) || v < 0.0) throw DomainError("reward weights must be finite and non-negative");
  }
}

double accuracy_score(MovementLabel predicted, MovementLabel truth) {
  return predicted == truth ? 1.0 : 0.0;
}

double consistency_score(double change_pct, MovementLabel answer) {
  if (!std::isfinite(change_pct)) return 0.0;
  return classify(change_pct) == answer ? 1.0 : 0.0;
}

RewardBreakdown shape(std::string_view text, MovementLabel truth, const RewardWeights& weights) {
  const ParseResult parsed = parse_response(text);
  RewardBreakdown b;
  if (!parsed.report.parse_ok || !parsed.response) return b;
  b.format = format_score(parsed.report);
  b.accuracy = accuracy_score(parsed.response->answer, truth);
  b.consistency = consistency_score(parsed.response->change_pct, parsed.response->answer);
  b.total = weights.alpha * b.format + weights.beta * b.accuracy + weights.gamma * b.consistency;
  return b;
}

std::vector<std::size_t> filter_for_sft(std::span<const std::string> candidates, MovementLabel truth) {
  // Unit weights: acceptance only looks at the components.
  const RewardWeights unit{1.0, 1.0, 1.0};
  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const RewardBreakdown b = shape(candidates[i], truth, unit);
    if (b.format == 1.0 && b.accuracy == 1.0 && b.consistency == 1.0) accepted.push_back(i);
  }
  return accepted;
}

}  // namespace retune

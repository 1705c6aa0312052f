#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retune/labels.hpp"
#include "retune/market.hpp"
#include "retune/vote.hpp"

namespace retune {

/// Probability that a simulated vote equals the truth, per true class. Wrong
/// votes are spread uniformly over the other two labels.
struct AccuracyProfile {
  std::array<double, kLabelCount> per_class{0.5, 0.5, 0.5};
  friend bool operator==(const AccuracyProfile&, const AccuracyProfile&) = default;
};

/// "0.5" (all classes) or "up=0.6,down=0.5,hold=0.7" (missing classes keep 0.5).
std::optional<AccuracyProfile> parse_accuracy_profile(std::string_view s);
std::string to_string(const AccuracyProfile& p);

struct SynthConfig {
  int n_stocks = 20;
  int n_days = 120;
  double volatility = 0.03;  // std of the overnight log-return; intraday uses half
  AccuracyProfile accuracy;
  int n_votes = 32;     // predictions per sample written to predictions.jsonl
  int n_rollouts = 8;   // response texts per sample written to rollouts.jsonl
  double consistency_rate = 0.9;  // P(change_pct agrees with the answer)
  double malformed_rate = 0.05;   // P(a response text breaks the format)
  Date start = Date{std::chrono::year{2024}, std::chrono::January, std::chrono::day{2}};
  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

void validate(const SynthConfig& c);

struct Rollout {
  std::string id;
  std::string sample_id;
  std::string text;
  MovementLabel truth = MovementLabel::hold;
};

struct SynthData {
  std::vector<PriceBar> bars;  // stock-major, dates ascending
  std::vector<LabeledSample> samples;
  std::vector<Ballot> predictions;  // one per sample, n_votes labels
  std::vector<Rollout> rollouts;    // n_rollouts per sample, rendered from the first votes
};

/// Geometric random walk OHLCV on weekdays plus simulated policy output.
SynthData synthesize(const SynthConfig& config, std::uint64_t seed);

}  // namespace retune

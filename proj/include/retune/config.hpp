#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "retune/curriculum.hpp"
#include "retune/grpo.hpp"
#include "retune/jsonl.hpp"
#include "retune/market.hpp"
#include "retune/reward.hpp"
#include "retune/service.hpp"
#include "retune/synth.hpp"
#include "retune/vote.hpp"

namespace retune {

struct OodConfig {
  std::size_t stock_count = 50;
  /// nullopt: the last calendar month present in the data.
  std::optional<DateRange> dates;
  OodStockPolicy policy = OodStockPolicy::exclude_entirely;
};

/// Everything a CLI run depends on. Precedence: flags > config file > defaults.
struct RunConfig {
  std::uint64_t seed = 0;
  std::optional<std::string> input;
  std::optional<std::string> output;
  RewardWeights weights;
  GrpoConfig grpo;
  int curriculum_rollouts = kDefaultRollouts;
  CorrectnessRule correct_rule = CorrectnessRule::accuracy_and_format;
  std::vector<int> vote_ks{1, 2, 4, 8, 16, 32};
  F1Average average = F1Average::macro;
  std::size_t random_seeds = kRandomBoundSeeds;
  OodConfig ood;
  std::size_t similarity_window = kDefaultSimilarityWindow;
  std::size_t similarity_k = kDefaultSimilarK;
  SynthConfig synth;
  ServiceConfig service;
};

/// Overlays `j` on `base`. Unknown keys at any level are a ValidationError.
RunConfig config_from_json(const Json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
OrderedJson to_json(const RunConfig& c);

/// Throws ValidationError/DomainError on the first invalid field.
void validate(const RunConfig& c);

std::optional<OodStockPolicy> ood_policy_from_string(std::string_view s);
std::string_view to_string(OodStockPolicy p);

/// "host:port"; throws ValidationError on anything else.
std::pair<std::string, int> parse_listen(std::string_view s);

}  // namespace retune

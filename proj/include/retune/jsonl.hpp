#pragma once

// File formats: price CSV, JSON Lines readers/writers, and the JSON codecs for
// every record type that crosses a file or wire boundary.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "retune/curriculum.hpp"
#include "retune/errors.hpp"
#include "retune/grpo.hpp"
#include "retune/market.hpp"
#include "retune/response.hpp"
#include "retune/reward.hpp"
#include "retune/vote.hpp"

namespace retune {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path);
/// Writes via a temporary file in the same directory, then renames.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

struct JsonLine {
  std::size_t line = 0;  // 1-based
  Json value;
};

/// Blank lines are skipped. Throws ValidationError "source:line: ..." on bad JSON.
std::vector<JsonLine> parse_jsonl(std::string_view text, std::string_view source);
std::vector<JsonLine> read_jsonl(const std::filesystem::path& path);

std::string to_jsonl(const std::vector<OrderedJson>& rows);

/// Runs `decode` on every line, prefixing any ValidationError/DomainError with source:line.
template <typename T, typename Decode>
std::vector<T> decode_lines(const std::vector<JsonLine>& lines, std::string_view source, Decode decode);

// ---------------------------------------------------------------------------
// Price CSV: header `stock_id,date,open,high,low,close,volume`.

inline constexpr std::string_view kPriceCsvHeader = "stock_id,date,open,high,low,close,volume";

struct PriceTable {
  std::vector<PriceBar> bars;
  std::vector<std::size_t> lines;  // source line of each bar
};

PriceTable parse_prices_csv(std::string_view text, std::string_view source);
PriceTable read_prices_csv(const std::filesystem::path& path);
std::string to_prices_csv(std::span<const PriceBar> bars);

// ---------------------------------------------------------------------------
// Field helpers. All throw ValidationError naming the key.

const Json& require(const Json& obj, std::string_view key);
std::string require_string(const Json& obj, std::string_view key);
double require_number(const Json& obj, std::string_view key);
int require_int(const Json& obj, std::string_view key);
MovementLabel require_label(const Json& obj, std::string_view key);
std::vector<double> as_number_array(const Json& v, std::string_view what);
std::vector<std::vector<double>> as_matrix(const Json& v, std::string_view what);

// ---------------------------------------------------------------------------
// Codecs

OrderedJson to_json(const LabeledSample& s);
LabeledSample sample_from_json(const Json& j);

OrderedJson to_json(const ParsedResponse& p);
OrderedJson to_json(const FormatReport& r);

OrderedJson breakdown_json(const Json& id, const RewardBreakdown& b);

RewardWeights weights_from_json(const Json& j, RewardWeights defaults);
OrderedJson to_json(const RewardWeights& w);
GrpoConfig grpo_config_from_json(const Json& j, GrpoConfig defaults);
OrderedJson to_json(const GrpoConfig& c);

/// `rewards[]` plus optional `token_logprobs{current,old,ref}`.
struct GroupRecord {
  Json group_id;
  RolloutGroup group;
  bool has_logprobs = false;
};
GroupRecord group_from_json(const Json& j);
OrderedJson to_json(const Json& group_id, const ObjectiveResult& r, bool with_objective);

Ballot ballot_from_json(const Json& j);

DifficultyRecord difficulty_from_json(const Json& j);

OrderedJson to_json(const Metrics& m);
OrderedJson to_json(const EvalReport& r);
OrderedJson to_json(const RandomBound& rb);

// ---------------------------------------------------------------------------

template <typename T, typename Decode>
std::vector<T> decode_lines(const std::vector<JsonLine>& lines, std::string_view source, Decode decode) {
  std::vector<T> out;
  out.reserve(lines.size());
  for (const JsonLine& l : lines) {
    try {
      out.push_back(decode(l.value));
    } catch (const std::exception& e) {
      throw ValidationError(std::string(source) + ":" + std::to_string(l.line) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace retune

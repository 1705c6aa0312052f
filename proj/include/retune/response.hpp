#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "retune/labels.hpp"

namespace retune {

// Canonical response layout:
//
//   <think>
//   free-form reasoning
//   </think>
//   <score>
//   up: 6.5
//   down: 2
//   </score>
//   <change_pct>3.4</change_pct>
//   <answer>up</answer>
//
// The think block is optional; the other three are mandatory and must appear in
// this order with only whitespace between blocks.

struct EvidenceScores {
  double up = 0.0;
  double down = 0.0;
  friend bool operator==(const EvidenceScores&, const EvidenceScores&) = default;
};

inline constexpr double kMaxEvidenceScore = 10.0;

struct ParsedResponse {
  std::string reasoning;  // trimmed contents of <think>, empty when absent
  EvidenceScores evidence;
  double change_pct = 0.0;
  MovementLabel answer = MovementLabel::hold;
  friend bool operator==(const ParsedResponse&, const ParsedResponse&) = default;
};

struct FormatViolation {
  std::string rule;  // machine-readable rule id, e.g. "duplicate_tag"
  std::string message;
  friend bool operator==(const FormatViolation&, const FormatViolation&) = default;
};

struct FormatReport {
  bool parse_ok = false;
  std::vector<std::string> missing_fields;  // subset of {"score", "change_pct", "answer"}
  std::vector<FormatViolation> violations;

  bool has_violation(std::string_view rule) const;
};

struct ParseResult {
  /// Present whenever every mandatory field parsed, even if the report has violations.
  std::optional<ParsedResponse> response;
  FormatReport report;
};

/// Never throws on any input; problems are reported in `report`.
ParseResult parse_response(std::string_view text);

double format_score(const FormatReport& report);

/// Canonical text; parse_response(render_response(p)).response == p for every valid p.
/// Throws DomainError when `p` cannot round-trip (scores outside [0, 10], non-finite
/// change, reasoning with surrounding whitespace or containing "</think>").
std::string render_response(const ParsedResponse& p);

/// Strict number grammar shared by the parser: [+-]digits[.digits][%], no exponent
/// or thousands separators. Surrounding whitespace is ignored.
std::optional<double> parse_decimal(std::string_view s);

/// Shortest decimal in fixed notation that reads back to the same double.
std::string format_decimal(double v);

/// Case-insensitive, whitespace-trimmed up|down|hold.
std::optional<MovementLabel> parse_answer(std::string_view s);

}  // namespace retune

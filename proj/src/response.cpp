#include "retune/response.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

#include "retune/errors.hpp"

namespace retune {

namespace {

constexpr std::string_view kWhitespace = " \t\n\r\f\v";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(kWhitespace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kWhitespace);
  return s.substr(b, e - b + 1);
}

bool is_blank(std::string_view s) { return s.find_first_not_of(kWhitespace) == std::string_view::npos; }

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + needle.size())) {
    ++n;
  }
  return n;
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

struct Block {
  std::string_view name;
  std::size_t begin = 0;  // offset of '<' of the opening tag within the body
  std::size_t end = 0;    // one past the closing tag
  std::string_view content;
};

constexpr std::array<std::string_view, 3> kMandatory{"score", "change_pct", "answer"};

class ResponseParser {
 public:
  explicit ResponseParser(std::string_view text) : text_(text) {}

  ParseResult run() {
    const std::string_view body = split_think();
    std::array<std::optional<Block>, kMandatory.size()> blocks;
    for (std::size_t i = 0; i < kMandatory.size(); ++i) blocks[i] = find_block(body, kMandatory[i]);
    if (count_occurrences(body, "<think>") + count_occurrences(body, "</think>") > 0) {
      if (has_think_) {
        violate("duplicate_tag", "think tags after the reasoning block");
      } else {
        violate("unmatched_tag", "</think> without <think>");
      }
      broken_ = true;
    }
    check_layout(body, blocks);

    auto scores = blocks[0] ? parse_scores(blocks[0]->content) : std::nullopt;
    std::optional<double> change;
    if (blocks[1]) {
      change = parse_decimal(blocks[1]->content);
      if (!change) violate("malformed_change_pct", "change_pct is not a plain decimal number");
    }
    std::optional<MovementLabel> answer;
    if (blocks[2]) {
      answer = parse_answer(blocks[2]->content);
      if (!answer) violate("invalid_answer", "answer must be one of up, down, hold");
    }

    ParseResult result;
    if (scores && change && answer) {
      result.response = ParsedResponse{std::string(reasoning_), *scores, *change, *answer};
    }
    report_.parse_ok = report_.missing_fields.empty() && report_.violations.empty();
    result.report = std::move(report_);
    return result;
  }

 private:
  void violate(std::string rule, std::string message) {
    report_.violations.push_back({std::move(rule), std::move(message)});
  }

  // Consumes the optional think block and returns the text after it. The think
  // block is matched to its own closing tag before anything else is scanned.
  std::string_view split_think() {
    constexpr std::string_view open = "<think>", close = "</think>";
    const auto o = text_.find(open);
    if (o == std::string_view::npos) return text_;
    has_think_ = true;
    if (!is_blank(text_.substr(0, o))) violate("stray_text", "text before <think>");
    const auto c = text_.find(close, o + open.size());
    if (c == std::string_view::npos) {
      violate("unclosed_tag", "<think> is never closed");
      broken_ = true;
      return {};
    }
    reasoning_ = trim(text_.substr(o + open.size(), c - o - open.size()));
    return text_.substr(c + close.size());
  }

  std::optional<Block> find_block(std::string_view body, std::string_view name) {
    const std::string open = "<" + std::string(name) + ">";
    const std::string close = "</" + std::string(name) + ">";
    const std::size_t opens = count_occurrences(body, open);
    const std::size_t closes = count_occurrences(body, close);
    if (opens == 0) {
      report_.missing_fields.emplace_back(name);
      if (closes > 0) {
        violate("unmatched_tag", close + " without " + open);
        broken_ = true;
      }
      return std::nullopt;
    }
    if (opens > 1 || closes > 1) {
      violate("duplicate_tag", open + " appears " + std::to_string(std::max(opens, closes)) + " times");
      broken_ = true;
      return std::nullopt;
    }
    const auto o = body.find(open);
    const auto c = body.find(close, o + open.size());
    if (c == std::string_view::npos) {
      violate("unclosed_tag", open + " is never closed");
      broken_ = true;
      return std::nullopt;
    }
    const std::size_t begin = o + open.size();
    return Block{name, o, c + close.size(), body.substr(begin, c - begin)};
  }

  void check_layout(std::string_view body,
                    const std::array<std::optional<Block>, kMandatory.size()>& blocks) {
    std::vector<Block> present;
    for (const auto& b : blocks) {
      if (b) present.push_back(*b);
    }
    // kMandatory order is the required order; any inversion is a violation.
    for (std::size_t i = 1; i < present.size(); ++i) {
      if (present[i].begin < present[i - 1].begin) {
        violate("out_of_order", "blocks must appear as score, change_pct, answer");
        break;
      }
    }
    std::sort(present.begin(), present.end(),
              [](const Block& a, const Block& b) { return a.begin < b.begin; });
    for (std::size_t i = 1; i < present.size(); ++i) {
      if (present[i].begin < present[i - 1].end) {
        violate("overlapping_tags", "<" + std::string(present[i].name) + "> is nested inside <" +
                                        std::string(present[i - 1].name) + ">");
        return;
      }
    }
    // Leftover tags from a broken block would all show up as stray text.
    if (broken_) return;
    std::size_t cursor = 0;
    bool stray = false;
    for (const Block& b : present) {
      stray = stray || !is_blank(body.substr(cursor, b.begin - cursor));
      cursor = b.end;
    }
    stray = stray || !is_blank(body.substr(std::min(cursor, body.size())));
    if (stray) violate("stray_text", "non-whitespace text outside the tagged blocks");
  }

  std::optional<EvidenceScores> parse_scores(std::string_view content) {
    std::optional<double> up, down;
    bool malformed = false;
    std::size_t start = 0;
    while (start <= content.size()) {
      auto nl = content.find('\n', start);
      if (nl == std::string_view::npos) nl = content.size();
      const std::string_view line = trim(content.substr(start, nl - start));
      start = nl + 1;
      if (line.empty()) continue;
      const auto colon = line.find(':');
      if (colon == std::string_view::npos) {
        malformed = true;
        continue;
      }
      const std::string key = lower_ascii(trim(line.substr(0, colon)));
      const auto value = parse_decimal(line.substr(colon + 1));
      std::optional<double>* slot = key == "up" ? &up : key == "down" ? &down : nullptr;
      if (slot == nullptr || slot->has_value() || !value) {
        malformed = true;
        continue;
      }
      *slot = value;
    }
    if (malformed || !up || !down) {
      violate("malformed_score", "score block must hold exactly one 'up: <n>' and one 'down: <n>' line");
      return std::nullopt;
    }
    if (*up < 0.0 || *up > kMaxEvidenceScore || *down < 0.0 || *down > kMaxEvidenceScore) {
      violate("score_out_of_range", "evidence scores must lie in [0, 10]");
      return std::nullopt;
    }
    return EvidenceScores{*up, *down};
  }

  std::string_view text_;
  std::string_view reasoning_;
  bool has_think_ = false;
  bool broken_ = false;  // a duplicate, unclosed or unmatched tag was reported
  FormatReport report_;
};

}  // namespace

bool FormatReport::has_violation(std::string_view rule) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const FormatViolation& v) { return v.rule == rule; });
}

std::optional<double> parse_decimal(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.back() == '%') s.remove_suffix(1);
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  std::size_t digits = 0, dots = 0;
  for (char c : s) {
    if (c >= '0' && c <= '9') {
      ++digits;
    } else if (c == '.') {
      ++dots;
    } else {
      return std::nullopt;
    }
  }
  if (digits == 0 || dots > 1) return std::nullopt;
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::fixed);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return negative ? -v : v;
}

std::string format_decimal(double v) {
  std::array<char, 512> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
  if (ec != std::errc{}) throw DomainError("format_decimal: value does not fit");
  return std::string(buf.data(), p);
}

std::optional<MovementLabel> parse_answer(std::string_view s) {
  return label_from_string(lower_ascii(trim(s)));
}

ParseResult parse_response(std::string_view text) { return ResponseParser(text).run(); }

double format_score(const FormatReport& report) { return report.parse_ok ? 1.0 : 0.0; }

std::string render_response(const ParsedResponse& p) {
  auto score_ok = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= kMaxEvidenceScore; };
  if (!score_ok(p.evidence.up) || !score_ok(p.evidence.down)) {
    throw DomainError("render_response: evidence scores must lie in [0, 10]");
  }
  if (!std::isfinite(p.change_pct)) throw DomainError("render_response: change_pct must be finite");
  if (trim(p.reasoning) != p.reasoning) {
    throw DomainError("render_response: reasoning has leading or trailing whitespace");
  }
  if (p.reasoning.find("</think>") != std::string::npos) {
    throw DomainError("render_response: reasoning contains </think>");
  }
  std::string out;
  if (!p.reasoning.empty()) out += "<think>\n" + p.reasoning + "\n</think>\n";
  out += "<score>\nup: " + format_decimal(p.evidence.up) + "\ndown: " + format_decimal(p.evidence.down) +
         "\n</score>\n";
  out += "<change_pct>" + format_decimal(p.change_pct) + "</change_pct>\n";
  out += "<answer>" + std::string(to_string(p.answer)) + "</answer>\n";
  return out;
}

}  // namespace retune

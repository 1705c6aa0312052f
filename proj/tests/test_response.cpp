#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "retune/errors.hpp"
#include "retune/jsonl.hpp"
#include "retune/response.hpp"
#include "test_util.hpp"

using namespace retune;

namespace {

std::vector<std::string> rules(const FormatReport& r) {
  std::vector<std::string> out;
  for (const auto& v : r.violations) out.push_back(v.rule);
  return out;
}

ParsedResponse random_response(std::mt19937_64& rng) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyz ABCXYZ0123456789.,:;!?<>/_-\n\t%+*()[]{}";
  std::uniform_int_distribution<std::size_t> len(0, 80), pick(0, alphabet.size() - 1);
  std::uniform_real_distribution<double> score(0.0, 10.0);
  std::uniform_int_distribution<int> kind(0, 5), label(0, 2), exp10(-12, 12);
  std::normal_distribution<double> gauss(0.0, 5.0);

  ParsedResponse p;
  if (kind(rng) != 0) {
    std::string s;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) s += alphabet[pick(rng)];
    // Tag-like noise inside the reasoning must not confuse the parser.
    if (kind(rng) == 1) s += "<answer>down</answer><score>";
    const auto b = s.find_first_not_of(" \t\n");
    s = b == std::string::npos ? "" : s.substr(b, s.find_last_not_of(" \t\n") - b + 1);
    p.reasoning = s;
  }
  switch (kind(rng)) {
    case 0: p.evidence = {0.0, 10.0}; break;
    case 1: p.evidence = {std::round(score(rng) * 10) / 10, std::round(score(rng))}; break;
    default: p.evidence = {score(rng), score(rng)};
  }
  switch (kind(rng)) {
    case 0: p.change_pct = 3.0; break;
    case 1: p.change_pct = -3.0; break;
    case 2: p.change_pct = gauss(rng) * std::pow(10.0, exp10(rng)); break;
    default: p.change_pct = std::round(gauss(rng) * 100) / 100;
  }
  p.answer = static_cast<MovementLabel>(label(rng));
  return p;
}

}  // namespace

TEST(ParserCorpus, ExpectedReports) {
  const auto lines = read_jsonl(test::data_path("parser_corpus.jsonl"));
  int valid = 0, malformed = 0;
  for (const auto& l : lines) {
    const Json& c = l.value;
    const std::string id = c["id"];
    SCOPED_TRACE(id);
    const ParseResult r = parse_response(c["text"].get<std::string>());
    EXPECT_EQ(format_score(r.report), c["format_score"].get<double>());
    EXPECT_EQ(r.report.missing_fields, c["missing_fields"].get<std::vector<std::string>>());
    EXPECT_EQ(rules(r.report), c["violations"].get<std::vector<std::string>>());
    EXPECT_EQ(r.report.parse_ok, r.report.missing_fields.empty() && r.report.violations.empty());
    for (const auto& v : r.report.violations) EXPECT_FALSE(v.message.empty());
    if (c.contains("parsed")) {
      ++valid;
      ASSERT_TRUE(r.response);
      const Json& p = c["parsed"];
      EXPECT_EQ(r.response->reasoning, p["reasoning_text"].get<std::string>());
      EXPECT_EQ(r.response->evidence.up, p["evidence_scores"]["up"].get<double>());
      EXPECT_EQ(r.response->evidence.down, p["evidence_scores"]["down"].get<double>());
      EXPECT_EQ(r.response->change_pct, p["change_pct"].get<double>());
      EXPECT_EQ(to_string(r.response->answer), p["answer"].get<std::string>());
    } else {
      ++malformed;
      EXPECT_EQ(r.response.has_value(), c["has_parsed"].get<bool>());
    }
  }
  EXPECT_GE(valid, 20);
  EXPECT_GE(malformed, 20);
}

TEST(Parser, SpecExamples) {
  const std::string canonical =
      "<think>\nwhy\n</think>\n<score>\nup: 6.5\ndown: 2\n</score>\n<change_pct>3.4</change_pct>\n<answer>up</answer>\n";
  auto r = parse_response(canonical);
  EXPECT_TRUE(r.report.parse_ok);
  ASSERT_TRUE(r.response);
  EXPECT_EQ(r.response->reasoning, "why");
  EXPECT_EQ(r.response->evidence, (EvidenceScores{6.5, 2.0}));
  EXPECT_EQ(r.response->change_pct, 3.4);
  EXPECT_EQ(r.response->answer, MovementLabel::up);

  r = parse_response("<score>up: 1\ndown: 2</score><change_pct>1</change_pct>");
  EXPECT_FALSE(r.report.parse_ok);
  EXPECT_EQ(r.report.missing_fields, std::vector<std::string>{"answer"});

  r = parse_response(
      "<score>up: 1\ndown: 2</score><change_pct>1</change_pct><change_pct>2</change_pct><answer>up</answer>");
  EXPECT_FALSE(r.report.parse_ok);
  EXPECT_TRUE(r.report.has_violation("duplicate_tag"));
}

TEST(Parser, FormatScore) {
  FormatReport ok{true, {}, {}};
  EXPECT_EQ(format_score(ok), 1.0);
  FormatReport missing{false, {"score"}, {}};
  EXPECT_EQ(format_score(missing), 0.0);
  FormatReport violated{false, {}, {{"stray_text", "x"}}};
  EXPECT_EQ(format_score(violated), 0.0);
}

TEST(Parser, ThinkBlockScannedFirst) {
  // A closing answer tag inside the reasoning must not terminate anything.
  auto r = parse_response(
      "<think>draft: <answer>down</answer> </change_pct> <score></think>"
      "<score>up: 9\ndown: 1</score><change_pct>4</change_pct><answer>up</answer>");
  EXPECT_TRUE(r.report.parse_ok) << (r.report.violations.empty() ? "" : r.report.violations[0].message);
  ASSERT_TRUE(r.response);
  EXPECT_EQ(r.response->answer, MovementLabel::up);
}

TEST(Parser, WhitespaceIndependent) {
  const std::string core = "<score>up: 2\ndown: 3</score><change_pct>-1</change_pct><answer>hold</answer>";
  const auto a = parse_response(core);
  const auto b = parse_response("\n\n  \t" + core + "\n \r\n");
  ASSERT_TRUE(a.response && b.response);
  EXPECT_EQ(*a.response, *b.response);
  EXPECT_TRUE(b.report.parse_ok);
}

TEST(Decimal, Grammar) {
  EXPECT_EQ(parse_decimal("3.4"), 3.4);
  EXPECT_EQ(parse_decimal(" -2 "), -2.0);
  EXPECT_EQ(parse_decimal("+7.5%"), 7.5);
  EXPECT_EQ(parse_decimal("5."), 5.0);
  EXPECT_EQ(parse_decimal(".25"), 0.25);
  for (const char* bad : {"", "-", ".", "1,000", "1e3", "inf", "nan", "0x10", "1.2.3", "--1", "%", "3 %", "4%%"}) {
    EXPECT_FALSE(parse_decimal(bad)) << bad;
  }
}

TEST(Decimal, ShortestRoundTrip) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 20000; ++i) {
    double v;
    const std::uint64_t b = bits(rng);
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    const std::string s = format_decimal(v);
    auto back = parse_decimal(s);
    ASSERT_TRUE(back) << s;
    EXPECT_EQ(*back, v) << s;
  }
  EXPECT_EQ(format_decimal(3.4), "3.4");
  EXPECT_EQ(format_decimal(-3.0), "-3");
  EXPECT_EQ(format_decimal(0.1 + 0.2), "0.30000000000000004");
}

TEST(Answer, Lenient) {
  EXPECT_EQ(parse_answer(" UP\n"), MovementLabel::up);
  EXPECT_EQ(parse_answer("Hold"), MovementLabel::hold);
  EXPECT_FALSE(parse_answer("upward"));
  EXPECT_FALSE(parse_answer(""));
}

TEST(Render, RoundTrip500) {
  std::mt19937_64 rng(500);
  for (int i = 0; i < 500; ++i) {
    const ParsedResponse p = random_response(rng);
    const std::string text = render_response(p);
    const auto r = parse_response(text);
    ASSERT_TRUE(r.report.parse_ok) << text;
    ASSERT_TRUE(r.response);
    EXPECT_EQ(*r.response, p) << text;
    // Bitwise, so -0 and 0 are not conflated.
    EXPECT_EQ(std::signbit(r.response->change_pct), std::signbit(p.change_pct));
  }
}

TEST(Render, EmptyReasoningOmitsThink) {
  ParsedResponse p{"", {1, 2}, -4.5, MovementLabel::down};
  const std::string text = render_response(p);
  EXPECT_EQ(text.find("<think>"), std::string::npos);
  EXPECT_EQ(parse_response(text).response, p);
}

TEST(Render, RejectsInvalid) {
  EXPECT_THROW(render_response({"", {11, 2}, 0, MovementLabel::up}), DomainError);
  EXPECT_THROW(render_response({"", {1, -0.5}, 0, MovementLabel::up}), DomainError);
  EXPECT_THROW(render_response({"", {1, 2}, std::numeric_limits<double>::infinity(), MovementLabel::up}),
               DomainError);
  EXPECT_THROW(render_response({" padded", {1, 2}, 0, MovementLabel::up}), DomainError);
  EXPECT_THROW(render_response({"a</think>b", {1, 2}, 0, MovementLabel::up}), DomainError);
}

TEST(Parser, FuzzNeverThrows) {
  std::mt19937_64 rng(77);
  const std::vector<std::string> pieces{"<think>", "</think>", "<score>", "</score>", "<change_pct>",
                                        "</change_pct>", "<answer>", "</answer>", "up: 5\n", "down: 3\n",
                                        "up", "down", "hold", "4.2", "-3", "%", " ", "\n", "x", "<", ">",
                                        ":", std::string("\0", 1), "\xE2\x86\x91", "\xFF"};
  std::uniform_int_distribution<std::size_t> n(0, 40), pick(0, pieces.size() - 1);
  for (int i = 0; i < 20000; ++i) {
    std::string s;
    const std::size_t len = n(rng);
    for (std::size_t k = 0; k < len; ++k) s += pieces[pick(rng)];
    ParseResult r;
    ASSERT_NO_THROW(r = parse_response(s)) << s;
    EXPECT_EQ(r.report.parse_ok, r.report.missing_fields.empty() && r.report.violations.empty());
    if (r.report.parse_ok) EXPECT_TRUE(r.response);
  }
}

TEST(ParsedJson, Shape) {
  ParsedResponse p{"r", {1.5, 2}, 3.25, MovementLabel::hold};
  const OrderedJson j = to_json(p);
  EXPECT_EQ(j.dump(),
            R"({"reasoning_text":"r","evidence_scores":{"up":1.5,"down":2.0},"change_pct":3.25,"answer":"hold"})");
  const auto r = parse_response("<score>up: 1\ndown: 1</score>");
  const OrderedJson f = to_json(r.report);
  EXPECT_EQ(f["parse_ok"], false);
  EXPECT_EQ(f["missing_fields"].size(), 2u);
}

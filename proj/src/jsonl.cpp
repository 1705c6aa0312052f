#include "retune/jsonl.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace retune {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return std::move(ss).str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed: " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
}

namespace {

template <typename Fn>
void for_each_line(std::string_view text, Fn fn) {
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(++line_no, line);
    start = nl + 1;
  }
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r") == std::string_view::npos; }

}  // namespace

std::vector<JsonLine> parse_jsonl(std::string_view text, std::string_view source) {
  std::vector<JsonLine> out;
  for_each_line(text, [&](std::size_t n, std::string_view line) {
    if (blank(line)) return;
    Json v = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (v.is_discarded()) {
      throw ValidationError(std::string(source) + ":" + std::to_string(n) + ": invalid JSON");
    }
    if (!v.is_object()) {
      throw ValidationError(std::string(source) + ":" + std::to_string(n) + ": expected a JSON object");
    }
    out.push_back({n, std::move(v)});
  });
  return out;
}

std::vector<JsonLine> read_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(read_text_file(path), path.string());
}

std::string to_jsonl(const std::vector<OrderedJson>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::optional<double> parse_csv_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

PriceTable parse_prices_csv(std::string_view text, std::string_view source) {
  PriceTable table;
  bool header_seen = false;
  for_each_line(text, [&](std::size_t n, std::string_view line) {
    const std::string where = std::string(source) + ":" + std::to_string(n) + ": ";
    if (!header_seen) {
      if (line.size() >= 3 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
      if (line != kPriceCsvHeader) {
        throw ValidationError(where + "expected header '" + std::string(kPriceCsvHeader) + "'");
      }
      header_seen = true;
      return;
    }
    if (blank(line)) return;
    const auto f = split_commas(line);
    if (f.size() != 7) throw ValidationError(where + "expected 7 fields, got " + std::to_string(f.size()));
    PriceBar bar;
    bar.stock_id = std::string(f[0]);
    if (bar.stock_id.empty()) throw ValidationError(where + "empty stock_id");
    auto date = parse_date(f[1]);
    if (!date) throw ValidationError(where + "bad date '" + std::string(f[1]) + "'");
    bar.date = *date;
    static constexpr std::array<const char*, 5> kNames{"open", "high", "low", "close", "volume"};
    std::array<double*, 5> slots{&bar.open, &bar.high, &bar.low, &bar.close, &bar.volume};
    for (std::size_t i = 0; i < slots.size(); ++i) {
      auto v = parse_csv_number(f[i + 2]);
      if (!v) throw ValidationError(where + "bad " + kNames[i] + " '" + std::string(f[i + 2]) + "'");
      *slots[i] = *v;
    }
    try {
      validate_bar(bar);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    table.bars.push_back(std::move(bar));
    table.lines.push_back(n);
  });
  if (!header_seen) throw ValidationError(std::string(source) + ": empty file, missing header");
  return table;
}

PriceTable read_prices_csv(const std::filesystem::path& path) {
  return parse_prices_csv(read_text_file(path), path.string());
}

std::string to_prices_csv(std::span<const PriceBar> bars) {
  std::string out(kPriceCsvHeader);
  out += '\n';
  for (const PriceBar& b : bars) {
    out += b.stock_id + ',' + format_date(b.date) + ',' + format_decimal(b.open) + ',' + format_decimal(b.high) +
           ',' + format_decimal(b.low) + ',' + format_decimal(b.close) + ',' + format_decimal(b.volume) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

const Json& require(const Json& obj, std::string_view key) {
  if (!obj.is_object()) throw ValidationError("expected a JSON object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError("missing key '" + std::string(key) + "'");
  return *it;
}

std::string require_string(const Json& obj, std::string_view key) {
  const Json& v = require(obj, key);
  if (!v.is_string()) throw ValidationError("'" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

double require_number(const Json& obj, std::string_view key) {
  const Json& v = require(obj, key);
  if (!v.is_number()) throw ValidationError("'" + std::string(key) + "' must be a number");
  return v.get<double>();
}

int require_int(const Json& obj, std::string_view key) {
  const Json& v = require(obj, key);
  if (!v.is_number_integer()) throw ValidationError("'" + std::string(key) + "' must be an integer");
  const auto i = v.get<std::int64_t>();
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) {
    throw ValidationError("'" + std::string(key) + "' out of range");
  }
  return static_cast<int>(i);
}

MovementLabel require_label(const Json& obj, std::string_view key) {
  const std::string s = require_string(obj, key);
  auto l = label_from_string(s);
  if (!l) throw ValidationError("'" + std::string(key) + "' must be up, down or hold (got '" + s + "')");
  return *l;
}

std::vector<double> as_number_array(const Json& v, std::string_view what) {
  if (!v.is_array()) throw ValidationError("'" + std::string(what) + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const Json& x : v) {
    if (!x.is_number()) throw ValidationError("'" + std::string(what) + "' must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> as_matrix(const Json& v, std::string_view what) {
  if (!v.is_array()) throw ValidationError("'" + std::string(what) + "' must be an array of arrays");
  std::vector<std::vector<double>> out;
  out.reserve(v.size());
  for (const Json& row : v) out.push_back(as_number_array(row, what));
  return out;
}

// ---------------------------------------------------------------------------

OrderedJson to_json(const LabeledSample& s) {
  OrderedJson j;
  j["stock_id"] = s.stock_id;
  j["date"] = format_date(s.date);
  j["change_pct"] = s.change_pct;
  j["label"] = to_string(s.label);
  j["split"] = to_string(s.split);
  return j;
}

LabeledSample sample_from_json(const Json& j) {
  LabeledSample s;
  s.stock_id = require_string(j, "stock_id");
  const std::string d = require_string(j, "date");
  auto date = parse_date(d);
  if (!date) throw ValidationError("bad date '" + d + "'");
  s.date = *date;
  s.change_pct = require_number(j, "change_pct");
  s.label = require_label(j, "label");
  if (!std::isfinite(s.change_pct) || classify(s.change_pct) != s.label) {
    throw ValidationError("label '" + std::string(to_string(s.label)) + "' disagrees with change_pct " +
                          format_decimal(s.change_pct));
  }
  if (j.contains("split")) {
    const std::string sp = require_string(j, "split");
    auto tag = split_from_string(sp);
    if (!tag) throw ValidationError("unknown split '" + sp + "'");
    s.split = *tag;
  }
  return s;
}

OrderedJson to_json(const ParsedResponse& p) {
  OrderedJson j;
  j["reasoning_text"] = p.reasoning;
  j["evidence_scores"] = {{"up", p.evidence.up}, {"down", p.evidence.down}};
  j["change_pct"] = p.change_pct;
  j["answer"] = to_string(p.answer);
  return j;
}

OrderedJson to_json(const FormatReport& r) {
  OrderedJson j;
  j["parse_ok"] = r.parse_ok;
  j["missing_fields"] = r.missing_fields;
  OrderedJson violations = OrderedJson::array();
  for (const auto& v : r.violations) violations.push_back({{"rule", v.rule}, {"message", v.message}});
  j["violations"] = std::move(violations);
  return j;
}

OrderedJson breakdown_json(const Json& id, const RewardBreakdown& b) {
  OrderedJson j;
  j["id"] = id;
  j["format"] = b.format;
  j["accuracy"] = b.accuracy;
  j["consistency"] = b.consistency;
  j["total"] = b.total;
  return j;
}

namespace {

void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError("unknown key '" + key + "' in " + std::string(what));
    }
  }
}

double optional_number(const Json& j, std::string_view key, double fallback) {
  return j.contains(key) ? require_number(j, key) : fallback;
}

}  // namespace

RewardWeights weights_from_json(const Json& j, RewardWeights defaults) {
  if (!j.is_object()) throw ValidationError("weights must be an object");
  reject_unknown_keys(j, {"alpha", "beta", "gamma"}, "weights");
  RewardWeights w{optional_number(j, "alpha", defaults.alpha), optional_number(j, "beta", defaults.beta),
                  optional_number(j, "gamma", defaults.gamma)};
  validate(w);
  return w;
}

OrderedJson to_json(const RewardWeights& w) {
  return OrderedJson{{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}};
}

GrpoConfig grpo_config_from_json(const Json& j, GrpoConfig defaults) {
  if (!j.is_object()) throw ValidationError("grpo config must be an object");
  reject_unknown_keys(j, {"epsilon", "kl_coef", "std_guard"}, "grpo config");
  GrpoConfig c{optional_number(j, "epsilon", defaults.epsilon), optional_number(j, "kl_coef", defaults.kl_coef),
               optional_number(j, "std_guard", defaults.std_guard)};
  validate(c);
  return c;
}

OrderedJson to_json(const GrpoConfig& c) {
  return OrderedJson{{"epsilon", c.epsilon}, {"kl_coef", c.kl_coef}, {"std_guard", c.std_guard}};
}

GroupRecord group_from_json(const Json& j) {
  GroupRecord rec;
  rec.group_id = require(j, "group_id");
  rec.group.rewards = as_number_array(require(j, "rewards"), "rewards");
  if (j.contains("token_logprobs")) {
    const Json& lp = j.at("token_logprobs");
    rec.group.logprobs.current = as_matrix(require(lp, "current"), "token_logprobs.current");
    rec.group.logprobs.old = as_matrix(require(lp, "old"), "token_logprobs.old");
    rec.group.logprobs.ref = as_matrix(require(lp, "ref"), "token_logprobs.ref");
    rec.has_logprobs = true;
  }
  return rec;
}

OrderedJson to_json(const Json& group_id, const ObjectiveResult& r, bool with_objective) {
  OrderedJson j;
  j["group_id"] = group_id;
  j["advantages"] = r.advantages;
  if (with_objective) {
    j["objective"] = r.objective;
    j["gradients"] = r.gradients;
  }
  return j;
}

Ballot ballot_from_json(const Json& j) {
  Ballot b;
  b.sample_id = require_string(j, "sample_id");
  const Json& votes = require(j, "votes");
  if (!votes.is_array()) throw ValidationError("'votes' must be an array of labels");
  for (const Json& v : votes) {
    if (!v.is_string()) throw ValidationError("'votes' must be an array of labels");
    auto l = label_from_string(v.get<std::string>());
    if (!l) throw ValidationError("unknown vote '" + v.get<std::string>() + "'");
    b.votes.push_back(*l);
  }
  return b;
}

DifficultyRecord difficulty_from_json(const Json& j) {
  DifficultyRecord r;
  r.sample_id = require_string(j, "sample_id");
  r.n_rollouts = j.contains("n_rollouts") ? require_int(j, "n_rollouts") : kDefaultRollouts;
  r.n_correct = require_int(j, "n_correct");
  // Range checks happen in bin(); surface them here with the line number.
  (void)bin(r.n_correct, r.n_rollouts);
  return r;
}

OrderedJson to_json(const Metrics& m) {
  OrderedJson j;
  j["count"] = m.count;
  j["f1"] = m.f1;
  OrderedJson per_class;
  for (MovementLabel l : kAllLabels) per_class[std::string(to_string(l))] = m.per_class_f1[index_of(l)];
  j["per_class_f1"] = std::move(per_class);
  OrderedJson cm = OrderedJson::array();
  for (const auto& row : m.confusion.counts) cm.push_back(row);
  j["confusion"] = std::move(cm);
  return j;
}

OrderedJson to_json(const EvalReport& r) {
  OrderedJson j;
  j["k"] = r.k;
  j["average"] = to_string(r.average);
  j["overall"] = to_json(r.overall);
  OrderedJson splits = OrderedJson::object();
  for (const auto& [tag, m] : r.per_split) splits[std::string(to_string(tag))] = to_json(m);
  j["per_split"] = std::move(splits);
  OrderedJson labels = OrderedJson::object();
  for (const auto& [label, m] : r.per_label) labels[std::string(to_string(label))] = to_json(m);
  j["per_label"] = std::move(labels);
  return j;
}

OrderedJson to_json(const RandomBound& rb) {
  return OrderedJson{{"mean", rb.mean}, {"min", rb.min}, {"max", rb.max}, {"per_seed", rb.per_seed}};
}

}  // namespace retune

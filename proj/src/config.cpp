#include "retune/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace retune {

namespace {

void only_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError("unknown config key '" + std::string(where) + "." + key + "'");
    }
  }
}

std::size_t require_count(const Json& j, std::string_view key) {
  const int v = require_int(j, key);
  if (v < 0) throw ValidationError("'" + std::string(key) + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

Date require_date(const Json& j, std::string_view key) {
  const std::string s = require_string(j, key);
  auto d = parse_date(s);
  if (!d) throw ValidationError("'" + std::string(key) + "' must be YYYY-MM-DD, got '" + s + "'");
  return *d;
}

}  // namespace

std::optional<OodStockPolicy> ood_policy_from_string(std::string_view s) {
  if (s == "exclude_entirely") return OodStockPolicy::exclude_entirely;
  if (s == "eval_only") return OodStockPolicy::eval_only;
  return std::nullopt;
}

std::string_view to_string(OodStockPolicy p) {
  return p == OodStockPolicy::eval_only ? "eval_only" : "exclude_entirely";
}

std::pair<std::string, int> parse_listen(std::string_view s) {
  const auto colon = s.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw ValidationError("listen address must be host:port, got '" + std::string(s) + "'");
  }
  int port = -1;
  const auto digits = s.substr(colon + 1);
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || p != digits.data() + digits.size() || port < 0 || port > 65535) {
    throw ValidationError("bad port in listen address '" + std::string(s) + "'");
  }
  return {std::string(s.substr(0, colon)), port};
}

RunConfig config_from_json(const Json& j, RunConfig c) {
  only_keys(j, {"seed", "paths", "weights", "grpo", "curriculum", "vote", "ood", "similarity", "synth", "service"},
            "config");
  if (j.contains("seed")) {
    const Json& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      throw ValidationError("'seed' must be a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("paths")) {
    const Json& p = j.at("paths");
    only_keys(p, {"input", "output"}, "paths");
    if (p.contains("input")) c.input = require_string(p, "input");
    if (p.contains("output")) c.output = require_string(p, "output");
  }
  if (j.contains("weights")) c.weights = weights_from_json(j.at("weights"), c.weights);
  if (j.contains("grpo")) c.grpo = grpo_config_from_json(j.at("grpo"), c.grpo);
  if (j.contains("curriculum")) {
    const Json& cu = j.at("curriculum");
    only_keys(cu, {"n_rollouts", "correct_rule"}, "curriculum");
    if (cu.contains("n_rollouts")) c.curriculum_rollouts = require_int(cu, "n_rollouts");
    if (cu.contains("correct_rule")) {
      const std::string r = require_string(cu, "correct_rule");
      auto rule = correctness_rule_from_string(r);
      if (!rule) throw ValidationError("unknown curriculum.correct_rule '" + r + "'");
      c.correct_rule = *rule;
    }
  }
  if (j.contains("vote")) {
    const Json& v = j.at("vote");
    only_keys(v, {"ks", "average", "random_seeds"}, "vote");
    if (v.contains("ks")) {
      c.vote_ks.clear();
      const Json& ks = v.at("ks");
      if (!ks.is_array()) throw ValidationError("'vote.ks' must be an array of integers");
      for (const Json& k : ks) {
        if (!k.is_number_integer()) throw ValidationError("'vote.ks' must be an array of integers");
        c.vote_ks.push_back(k.get<int>());
      }
    }
    if (v.contains("average")) {
      const std::string a = require_string(v, "average");
      auto avg = f1_average_from_string(a);
      if (!avg) throw ValidationError("unknown vote.average '" + a + "'");
      c.average = *avg;
    }
    if (v.contains("random_seeds")) c.random_seeds = require_count(v, "random_seeds");
  }
  if (j.contains("ood")) {
    const Json& o = j.at("ood");
    only_keys(o, {"stock_count", "date_from", "date_to", "policy"}, "ood");
    if (o.contains("stock_count")) c.ood.stock_count = require_count(o, "stock_count");
    if (o.contains("date_from") != o.contains("date_to")) {
      throw ValidationError("ood.date_from and ood.date_to must be given together");
    }
    if (o.contains("date_from")) c.ood.dates = DateRange{require_date(o, "date_from"), require_date(o, "date_to")};
    if (o.contains("policy")) {
      const std::string p = require_string(o, "policy");
      auto policy = ood_policy_from_string(p);
      if (!policy) throw ValidationError("unknown ood.policy '" + p + "'");
      c.ood.policy = *policy;
    }
  }
  if (j.contains("similarity")) {
    const Json& s = j.at("similarity");
    only_keys(s, {"window", "k"}, "similarity");
    if (s.contains("window")) c.similarity_window = require_count(s, "window");
    if (s.contains("k")) c.similarity_k = require_count(s, "k");
  }
  if (j.contains("synth")) {
    const Json& s = j.at("synth");
    only_keys(s, {"n_stocks", "n_days", "volatility", "accuracy_profile", "n_votes", "n_rollouts",
                  "consistency_rate", "malformed_rate", "start_date"},
              "synth");
    if (s.contains("n_stocks")) c.synth.n_stocks = require_int(s, "n_stocks");
    if (s.contains("n_days")) c.synth.n_days = require_int(s, "n_days");
    if (s.contains("volatility")) c.synth.volatility = require_number(s, "volatility");
    if (s.contains("accuracy_profile")) {
      const Json& a = s.at("accuracy_profile");
      std::optional<AccuracyProfile> profile;
      if (a.is_number()) {
        profile = parse_accuracy_profile(format_decimal(a.get<double>()));
      } else if (a.is_string()) {
        profile = parse_accuracy_profile(a.get<std::string>());
      }
      if (!profile) throw ValidationError("bad synth.accuracy_profile");
      c.synth.accuracy = *profile;
    }
    if (s.contains("n_votes")) c.synth.n_votes = require_int(s, "n_votes");
    if (s.contains("n_rollouts")) c.synth.n_rollouts = require_int(s, "n_rollouts");
    if (s.contains("consistency_rate")) c.synth.consistency_rate = require_number(s, "consistency_rate");
    if (s.contains("malformed_rate")) c.synth.malformed_rate = require_number(s, "malformed_rate");
    if (s.contains("start_date")) c.synth.start = require_date(s, "start_date");
  }
  if (j.contains("service")) {
    const Json& s = j.at("service");
    only_keys(s, {"listen", "batch_cap", "threads"}, "service");
    if (s.contains("listen")) std::tie(c.service.host, c.service.port) = parse_listen(require_string(s, "listen"));
    if (s.contains("batch_cap")) c.service.batch_cap = require_count(s, "batch_cap");
    if (s.contains("threads")) c.service.threads = require_int(s, "threads");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  const std::string text = read_text_file(path);
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError(path.string() + ": invalid JSON");
  try {
    return config_from_json(j, std::move(base));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

OrderedJson to_json(const RunConfig& c) {
  OrderedJson j;
  j["seed"] = c.seed;
  OrderedJson paths = OrderedJson::object();
  if (c.input) paths["input"] = *c.input;
  if (c.output) paths["output"] = *c.output;
  j["paths"] = std::move(paths);
  j["weights"] = to_json(c.weights);
  j["grpo"] = to_json(c.grpo);
  j["curriculum"] = {{"n_rollouts", c.curriculum_rollouts}, {"correct_rule", to_string(c.correct_rule)}};
  j["vote"] = {{"ks", c.vote_ks}, {"average", to_string(c.average)}, {"random_seeds", c.random_seeds}};
  OrderedJson ood{{"stock_count", c.ood.stock_count}, {"policy", to_string(c.ood.policy)}};
  if (c.ood.dates) {
    ood["date_from"] = format_date(c.ood.dates->first);
    ood["date_to"] = format_date(c.ood.dates->last);
  }
  j["ood"] = std::move(ood);
  j["similarity"] = {{"window", c.similarity_window}, {"k", c.similarity_k}};
  j["synth"] = {{"n_stocks", c.synth.n_stocks},
                {"n_days", c.synth.n_days},
                {"volatility", c.synth.volatility},
                {"accuracy_profile", to_string(c.synth.accuracy)},
                {"n_votes", c.synth.n_votes},
                {"n_rollouts", c.synth.n_rollouts},
                {"consistency_rate", c.synth.consistency_rate},
                {"malformed_rate", c.synth.malformed_rate},
                {"start_date", format_date(c.synth.start)}};
  j["service"] = {{"listen", c.service.host + ":" + std::to_string(c.service.port)},
                  {"batch_cap", c.service.batch_cap},
                  {"threads", c.service.threads}};
  return j;
}

void validate(const RunConfig& c) {
  validate(c.weights);
  validate(c.grpo);
  if (c.curriculum_rollouts < 1) throw ValidationError("curriculum.n_rollouts must be at least 1");
  if (c.vote_ks.empty()) throw ValidationError("vote.ks must not be empty");
  for (int k : c.vote_ks) {
    if (k < 1) throw ValidationError("vote.ks entries must be at least 1");
  }
  if (c.random_seeds < 1) throw ValidationError("vote.random_seeds must be at least 1");
  if (c.ood.dates && c.ood.dates->last < c.ood.dates->first) {
    throw ValidationError("ood.date_to precedes ood.date_from");
  }
  if (c.similarity_window < 1 || c.similarity_k < 1) throw ValidationError("similarity window and k must be >= 1");
  validate(c.synth);
  if (c.service.threads < 1) throw ValidationError("service.threads must be at least 1");
}

}  // namespace retune

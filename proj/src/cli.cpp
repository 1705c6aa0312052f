#include "retune/cli.hpp"

#include <CLI11.hpp>

#include <pthread.h>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <map>
#include <ostream>
#include <thread>

#include "retune/batch.hpp"
#include "retune/config.hpp"
#include "retune/errors.hpp"
#include "retune/jsonl.hpp"
#include "retune/seeding.hpp"
#include "retune/service.hpp"

namespace retune {

namespace {

namespace fs = std::filesystem;

// Values given on the command line; unset ones fall back to the config file.
struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> input;

  std::optional<double> alpha, beta, gamma;
  std::optional<double> epsilon, kl_coef, std_guard;

  std::optional<std::size_t> ood_stocks;
  std::optional<std::string> ood_from, ood_to, ood_policy;
  bool balance = false;

  std::optional<int> n_stocks, n_days, n_votes, n_rollouts;
  std::optional<double> volatility, consistency_rate, malformed_rate;
  std::optional<std::string> accuracy_profile;

  std::optional<int> curriculum_rollouts;
  std::optional<std::string> rule;
  std::optional<std::string> from_scores;
  bool all_records = false;

  std::optional<int> vote_k;
  std::string predictions, samples;
  std::optional<std::vector<int>> ks;
  std::optional<std::string> average;
  std::optional<std::size_t> random_seeds;
  std::optional<std::string> csv;
  double temperature = 0.6;

  std::string target;
  std::optional<std::size_t> window, top_k;

  std::optional<std::string> listen;
  std::optional<std::size_t> batch_cap;
  std::optional<int> threads;
};

RunConfig resolve_config(const Flags& f) {
  RunConfig c;
  if (!f.config_path.empty()) c = load_config(f.config_path);
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.output = *f.out;
  if (f.input) c.input = *f.input;
  if (f.alpha) c.weights.alpha = *f.alpha;
  if (f.beta) c.weights.beta = *f.beta;
  if (f.gamma) c.weights.gamma = *f.gamma;
  if (f.epsilon) c.grpo.epsilon = *f.epsilon;
  if (f.kl_coef) c.grpo.kl_coef = *f.kl_coef;
  if (f.std_guard) c.grpo.std_guard = *f.std_guard;
  if (f.ood_stocks) c.ood.stock_count = *f.ood_stocks;
  if (f.ood_from.has_value() != f.ood_to.has_value()) {
    throw ValidationError("--ood-from and --ood-to must be given together");
  }
  if (f.ood_from) {
    auto from = parse_date(*f.ood_from);
    auto to = parse_date(*f.ood_to);
    if (!from || !to) throw ValidationError("--ood-from/--ood-to must be YYYY-MM-DD");
    c.ood.dates = DateRange{*from, *to};
  }
  if (f.ood_policy) {
    auto p = ood_policy_from_string(*f.ood_policy);
    if (!p) throw ValidationError("unknown --ood-policy '" + *f.ood_policy + "'");
    c.ood.policy = *p;
  }
  if (f.n_stocks) c.synth.n_stocks = *f.n_stocks;
  if (f.n_days) c.synth.n_days = *f.n_days;
  if (f.n_votes) c.synth.n_votes = *f.n_votes;
  if (f.n_rollouts) c.synth.n_rollouts = *f.n_rollouts;
  if (f.volatility) c.synth.volatility = *f.volatility;
  if (f.consistency_rate) c.synth.consistency_rate = *f.consistency_rate;
  if (f.malformed_rate) c.synth.malformed_rate = *f.malformed_rate;
  if (f.accuracy_profile) {
    auto p = parse_accuracy_profile(*f.accuracy_profile);
    if (!p) throw ValidationError("bad --accuracy-profile '" + *f.accuracy_profile + "'");
    c.synth.accuracy = *p;
  }
  if (f.curriculum_rollouts) c.curriculum_rollouts = *f.curriculum_rollouts;
  if (f.rule) {
    auto r = correctness_rule_from_string(*f.rule);
    if (!r) throw ValidationError("unknown --rule '" + *f.rule + "'");
    c.correct_rule = *r;
  }
  if (f.ks) c.vote_ks = *f.ks;
  if (f.average) {
    auto a = f1_average_from_string(*f.average);
    if (!a) throw ValidationError("unknown --average '" + *f.average + "'");
    c.average = *a;
  }
  if (f.random_seeds) c.random_seeds = *f.random_seeds;
  if (f.window) c.similarity_window = *f.window;
  if (f.top_k) c.similarity_k = *f.top_k;
  if (f.listen) std::tie(c.service.host, c.service.port) = parse_listen(*f.listen);
  if (f.batch_cap) c.service.batch_cap = *f.batch_cap;
  if (f.threads) c.service.threads = *f.threads;
  c.service.weights = c.weights;
  c.service.grpo = c.grpo;
  validate(c);
  return c;
}

class Output {
 public:
  Output(const RunConfig& c, std::ostream& out) : path_(c.output), out_(out) {}
  void write(std::string_view contents) const {
    if (path_) {
      write_text_file(*path_, contents);
    } else {
      out_ << contents;
    }
  }

 private:
  std::optional<std::string> path_;
  std::ostream& out_;
};

std::string require_input(const RunConfig& c, std::string_view what) {
  if (!c.input) throw ValidationError(std::string(what) + ": no input file given");
  return *c.input;
}

// ---------------------------------------------------------------------------

void cmd_label(const RunConfig& c, const Flags& f, std::ostream& out) {
  const std::string path = require_input(c, "label");
  const PriceTable table = read_prices_csv(path);

  std::map<std::string, std::pair<Date, std::size_t>> last_seen;
  for (std::size_t i = 0; i < table.bars.size(); ++i) {
    const PriceBar& b = table.bars[i];
    auto [it, inserted] = last_seen.try_emplace(b.stock_id, b.date, table.lines[i]);
    if (inserted) continue;
    const std::string where = path + ":" + std::to_string(table.lines[i]) + ": ";
    if (b.date == it->second.first) {
      throw ValidationError(where + "duplicate date " + format_date(b.date) + " for " + b.stock_id);
    }
    if (b.date < it->second.first) {
      throw ValidationError(where + "unsorted dates for " + b.stock_id + ": " + format_date(b.date) + " after " +
                            format_date(it->second.first) + " (line " + std::to_string(it->second.second) + ")");
    }
    it->second = {b.date, table.lines[i]};
  }

  std::vector<LabeledSample> samples = label_universe(table.bars);
  std::vector<std::string> stocks;
  for (const auto& [id, _] : last_seen) stocks.push_back(id);
  // Keep at least one in-distribution stock.
  const std::size_t max_ood = stocks.size() > 1 ? stocks.size() - 1 : 0;
  SplitPlan plan;
  plan.ood_stocks = choose_ood_stocks(stocks, std::min(c.ood.stock_count, max_ood), c.seed);
  plan.ood_dates = c.ood.dates ? c.ood.dates : last_month_range(samples);
  plan.policy = c.ood.policy;
  samples = assign_splits(std::move(samples), plan);
  if (f.balance) samples = balance_labels(samples, c.seed);

  std::vector<OrderedJson> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(to_json(s));
  Output(c, out).write(to_jsonl(rows));
}

void cmd_synth(const RunConfig& c, std::ostream& out) {
  const fs::path dir = c.output.value_or(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const SynthData data = synthesize(c.synth, c.seed);

  write_text_file(dir / "prices.csv", to_prices_csv(data.bars));
  std::vector<OrderedJson> rollouts;
  rollouts.reserve(data.rollouts.size());
  for (const Rollout& r : data.rollouts) {
    rollouts.push_back(
        {{"id", r.id}, {"sample_id", r.sample_id}, {"text", r.text}, {"truth_label", to_string(r.truth)}});
  }
  write_text_file(dir / "rollouts.jsonl", to_jsonl(rollouts));
  std::vector<OrderedJson> predictions;
  predictions.reserve(data.predictions.size());
  for (const Ballot& b : data.predictions) {
    OrderedJson votes = OrderedJson::array();
    for (MovementLabel v : b.votes) votes.push_back(to_string(v));
    predictions.push_back({{"sample_id", b.sample_id}, {"votes", std::move(votes)}});
  }
  write_text_file(dir / "predictions.jsonl", to_jsonl(predictions));
  out << OrderedJson{{"bars", data.bars.size()},
                     {"samples", data.samples.size()},
                     {"rollouts", data.rollouts.size()},
                     {"dir", dir.string()}}
             .dump()
      << '\n';
}

void cmd_parse(const RunConfig& c, std::ostream& out) {
  const std::string path = require_input(c, "parse");
  const auto lines = read_jsonl(path);
  std::vector<OrderedJson> rows;
  rows.reserve(lines.size());
  for (const auto& l : lines) {
    const Json& id = require(l.value, "id");
    const auto text = decode_lines<std::string>({l}, path, [](const Json& j) { return require_string(j, "text"); });
    const ParseResult r = parse_response(text.front());
    OrderedJson row;
    row["id"] = id;
    row["parsed"] = r.response ? to_json(*r.response) : OrderedJson(nullptr);
    row["format"] = to_json(r.report);
    rows.push_back(std::move(row));
  }
  Output(c, out).write(to_jsonl(rows));
}

struct ScoreItem {
  Json id;
  std::optional<std::string> sample_id;
  std::string text;
  MovementLabel truth;
};

void cmd_score(const RunConfig& c, std::ostream& out) {
  const std::string path = require_input(c, "score");
  const auto items = decode_lines<ScoreItem>(read_jsonl(path), path, [](const Json& j) {
    ScoreItem item{require(j, "id"), std::nullopt, require_string(j, "text"), require_label(j, "truth_label")};
    if (j.contains("sample_id")) item.sample_id = require_string(j, "sample_id");
    return item;
  });
  std::vector<std::string> texts;
  std::vector<MovementLabel> truths;
  for (const auto& i : items) {
    texts.push_back(i.text);
    truths.push_back(i.truth);
  }
  const auto scores = batch::shape_all(texts, truths, c.weights);
  std::vector<OrderedJson> rows;
  rows.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    OrderedJson row = breakdown_json(items[i].id, scores[i]);
    if (items[i].sample_id) row["sample_id"] = *items[i].sample_id;
    rows.push_back(std::move(row));
  }
  Output(c, out).write(to_jsonl(rows));
}

void cmd_advantage(const RunConfig& c, std::ostream& out) {
  const std::string path = require_input(c, "advantage");
  const auto records = decode_lines<GroupRecord>(read_jsonl(path), path, [](const Json& j) {
    GroupRecord r = group_from_json(j);
    if (r.group.rewards.size() < 2) throw ValidationError("group needs at least 2 rewards");
    if (r.has_logprobs) validate(r.group);
    return r;
  });
  std::vector<OrderedJson> rows;
  rows.reserve(records.size());
  std::vector<RolloutGroup> groups;
  std::vector<std::vector<double>> plain;
  for (const auto& r : records) {
    if (r.has_logprobs) {
      groups.push_back(r.group);
    } else {
      plain.push_back(r.group.rewards);
    }
  }
  const auto objectives = batch::objective_all(groups, c.grpo);
  const auto advantages = batch::advantages_all(plain, c.grpo.std_guard);
  std::size_t o = 0, a = 0;
  for (const auto& r : records) {
    if (r.has_logprobs) {
      rows.push_back(to_json(r.group_id, objectives[o++], true));
    } else {
      ObjectiveResult res;
      res.advantages = advantages[a++];
      rows.push_back(to_json(r.group_id, res, false));
    }
  }
  Output(c, out).write(to_jsonl(rows));
}

std::vector<DifficultyRecord> records_from_scores(const std::string& path, CorrectnessRule rule) {
  struct Row {
    std::string sample_id;
    RewardBreakdown b;
  };
  const auto rows = decode_lines<Row>(read_jsonl(path), path, [](const Json& j) {
    return Row{require_string(j, "sample_id"),
               {require_number(j, "format"), require_number(j, "accuracy"), require_number(j, "consistency"),
                require_number(j, "total")}};
  });
  std::vector<DifficultyRecord> records;
  std::map<std::string, std::size_t> index;
  for (const Row& r : rows) {
    auto [it, inserted] = index.try_emplace(r.sample_id, records.size());
    if (inserted) records.push_back({r.sample_id, 0, 0});
    DifficultyRecord& rec = records[it->second];
    ++rec.n_rollouts;
    if (is_correct(r.b, rule)) ++rec.n_correct;
  }
  return records;
}

void cmd_curriculum(const RunConfig& c, const Flags& f, std::ostream& out) {
  std::vector<DifficultyRecord> records;
  if (f.from_scores) {
    records = records_from_scores(*f.from_scores, c.correct_rule);
  } else {
    const std::string path = require_input(c, "curriculum");
    const int default_n = c.curriculum_rollouts;
    records = decode_lines<DifficultyRecord>(read_jsonl(path), path, [default_n](const Json& j) {
      Json filled = j;
      if (!filled.contains("n_rollouts")) filled["n_rollouts"] = default_n;
      return difficulty_from_json(filled);
    });
  }
  const auto ordered = curriculum_order(records);
  auto row = [](const DifficultyRecord& r, OrderedJson rank) {
    return OrderedJson{{"sample_id", r.sample_id},
                       {"bin", to_string(bin(r.n_correct, r.n_rollouts))},
                       {"difficulty", difficulty(r.n_correct, r.n_rollouts)},
                       {"rank", std::move(rank)}};
  };
  std::vector<OrderedJson> rows;
  if (f.all_records) {
    std::map<std::string, std::size_t> rank;
    for (std::size_t i = 0; i < ordered.size(); ++i) rank[ordered[i].sample_id] = i;
    for (const auto& r : records) {
      auto it = rank.find(r.sample_id);
      rows.push_back(row(r, it == rank.end() ? OrderedJson(nullptr) : OrderedJson(it->second)));
    }
  } else {
    for (std::size_t i = 0; i < ordered.size(); ++i) rows.push_back(row(ordered[i], i));
  }
  Output(c, out).write(to_jsonl(rows));
}

std::vector<Ballot> read_ballots(const std::string& path) {
  return decode_lines<Ballot>(read_jsonl(path), path, [](const Json& j) {
    Ballot b = ballot_from_json(j);
    if (b.votes.empty()) throw ValidationError("empty ballot for " + b.sample_id);
    return b;
  });
}

void cmd_vote(const RunConfig& c, const Flags& f, std::ostream& out) {
  const std::string path = require_input(c, "vote");
  const auto ballots = read_ballots(path);
  std::vector<MovementLabel> winners;
  if (f.vote_k) {
    if (*f.vote_k < 1) throw ValidationError("--k must be at least 1");
    winners = batch::subsample_vote_all(ballots, static_cast<std::size_t>(*f.vote_k), c.seed);
  } else {
    winners = batch::vote_all(ballots);
  }
  std::vector<OrderedJson> rows;
  rows.reserve(ballots.size());
  for (std::size_t i = 0; i < ballots.size(); ++i) {
    rows.push_back({{"sample_id", ballots[i].sample_id}, {"winner", to_string(winners[i])}});
  }
  Output(c, out).write(to_jsonl(rows));
}

void append_csv_rows(std::string& csv, const EvalReport& r) {
  auto line = [&](const std::string& subset, const Metrics& m) {
    csv += std::to_string(r.k) + ',' + subset + ',' + std::to_string(m.count) + ',' + format_decimal(m.f1);
    for (MovementLabel l : kAllLabels) csv += ',' + format_decimal(m.per_class_f1[index_of(l)]);
    csv += '\n';
  };
  line("overall", r.overall);
  for (const auto& [tag, m] : r.per_split) line("split:" + std::string(to_string(tag)), m);
  for (const auto& [label, m] : r.per_label) line("label:" + std::string(to_string(label)), m);
}

void cmd_eval(const RunConfig& c, const Flags& f, std::ostream& out) {
  if (f.predictions.empty() || f.samples.empty()) throw ValidationError("eval: --predictions and --samples are required");
  const auto ballots = read_ballots(f.predictions);
  const auto samples =
      decode_lines<LabeledSample>(read_jsonl(f.samples), f.samples, [](const Json& j) { return sample_from_json(j); });

  std::vector<Prediction> pooled;
  pooled.reserve(ballots.size());
  const auto winners = batch::vote_all(ballots);
  for (std::size_t i = 0; i < ballots.size(); ++i) pooled.push_back({ballots[i].sample_id, winners[i]});

  OrderedJson report;
  report["samples"] = samples.size();
  report["average"] = to_string(c.average);
  report["seed"] = c.seed;
  report["metadata"] = {{"temperature", f.temperature}};
  report["global"] = to_json(grouped_report(pooled, samples, c.average));
  const auto curve = vote_curve(ballots, samples, c.vote_ks, c.seed, c.average);
  OrderedJson per_k = OrderedJson::array();
  std::string csv = "k,subset,count,f1,f1_hold,f1_down,f1_up\n";
  for (const auto& r : curve) {
    per_k.push_back(to_json(r));
    append_csv_rows(csv, r);
  }
  report["per_k"] = std::move(per_k);
  report["random_bound"] = to_json(random_bound(samples, default_random_seeds(c.random_seeds), c.average));
  Output(c, out).write(report.dump(2) + "\n");
  if (f.csv) write_text_file(*f.csv, csv);
}

void cmd_similar(const RunConfig& c, const Flags& f, std::ostream& out) {
  const std::string path = require_input(c, "similar");
  const PriceTable table = read_prices_csv(path);
  std::map<std::string, std::vector<PriceBar>> universe;
  for (const PriceBar& b : table.bars) universe[b.stock_id].push_back(b);
  const SimilarityResult r = top_similar(f.target, universe, c.similarity_window, c.similarity_k);
  OrderedJson ranked = OrderedJson::array();
  for (const auto& s : r.ranked) ranked.push_back({{"stock_id", s.stock_id}, {"correlation", s.correlation}});
  const OrderedJson doc{{"target", f.target}, {"ranked", std::move(ranked)}, {"zero_variance", r.zero_variance}};
  Output(c, out).write(doc.dump() + "\n");
}

void cmd_serve(const RunConfig& c, std::ostream& out) {
  // SIGINT/SIGTERM are blocked in every thread and collected by one waiter,
  // which asks the server to stop; run() returns once in-flight requests finish.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &stop_signals, &previous);

  ServiceHost host(ScoringService(c.service), &out);
  int port = 0;
  try {
    port = host.bind(c.service.host, c.service.port);
  } catch (...) {
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    throw;
  }
  out << OrderedJson{{"event", "listening"}, {"host", c.service.host}, {"port", port}, {"version", kVersion}}.dump()
      << '\n'
      << std::flush;

  std::atomic<bool> done{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    if (!done.load()) host.stop();
  });
  std::exception_ptr error;
  try {
    host.run();
  } catch (...) {
    error = std::current_exception();
  }
  done.store(true);
  // Wake the waiter if the server ended on its own; the signal stays blocked.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  sigset_t pending;
  sigpending(&pending);
  if (sigismember(&pending, SIGTERM) || sigismember(&pending, SIGINT)) {
    int sig = 0;
    sigwait(&stop_signals, &sig);
  }
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  if (error) std::rethrow_exception(error);
  out << OrderedJson{{"event", "stopped"}}.dump() << '\n' << std::flush;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"retune: labeling, reward shaping, GRPO math, curriculum and vote evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config_path, "JSON config file (flags override it)")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Seed for every random stream");
  app.add_option("--out", f.out, "Output file (synth: output directory)");

  auto weights = [&](CLI::App* sub) {
    sub->add_option("--alpha", f.alpha, "Format weight");
    sub->add_option("--beta", f.beta, "Accuracy weight");
    sub->add_option("--gamma", f.gamma, "Consistency weight");
  };
  auto grpo = [&](CLI::App* sub) {
    sub->add_option("--epsilon", f.epsilon, "Clip half-width");
    sub->add_option("--kl-coef", f.kl_coef, "KL penalty coefficient");
    sub->add_option("--std-guard", f.std_guard, "Zero-variance guard");
  };

  auto* label = app.add_subcommand("label", "Label a price CSV into samples JSONL");
  label->add_option("input", f.input, "prices.csv");
  label->add_option("--ood-stocks", f.ood_stocks, "Number of held-out stocks");
  label->add_option("--ood-from", f.ood_from, "First OOD date (YYYY-MM-DD)");
  label->add_option("--ood-to", f.ood_to, "Last OOD date (YYYY-MM-DD)");
  label->add_option("--ood-policy", f.ood_policy, "exclude_entirely | eval_only");
  label->add_flag("--balance", f.balance, "Downsample to equal class counts");

  auto* synth = app.add_subcommand("synth", "Generate synthetic prices, rollouts and predictions");
  synth->add_option("--n-stocks", f.n_stocks);
  synth->add_option("--n-days", f.n_days);
  synth->add_option("--volatility", f.volatility, "Daily overnight log-return std");
  synth->add_option("--accuracy-profile", f.accuracy_profile, "0.5 or up=0.6,down=0.5,hold=0.7");
  synth->add_option("--n-votes", f.n_votes, "Predictions per sample");
  synth->add_option("--n-rollouts", f.n_rollouts, "Response texts per sample");
  synth->add_option("--consistency-rate", f.consistency_rate);
  synth->add_option("--malformed-rate", f.malformed_rate);

  auto* parse = app.add_subcommand("parse", "Parse responses JSONL (id, text)");
  parse->add_option("input", f.input);

  auto* score = app.add_subcommand("score", "Shape rewards for responses JSONL (id, text, truth_label)");
  score->add_option("input", f.input);
  weights(score);

  auto* advantage = app.add_subcommand("advantage", "Group advantages and GRPO objective per group");
  advantage->add_option("input", f.input);
  grpo(advantage);

  auto* curriculum = app.add_subcommand("curriculum", "Bin samples by rollout difficulty and order medium ones");
  curriculum->add_option("input", f.input, "records JSONL (sample_id, n_rollouts, n_correct)");
  curriculum->add_option("--from-scores", f.from_scores, "Build records from `score` output with sample_id");
  curriculum->add_option("--n-rollouts", f.curriculum_rollouts, "N for records that omit n_rollouts");
  curriculum->add_option("--rule", f.rule, "accuracy_and_format | accuracy_only | all_components");
  curriculum->add_flag("--all", f.all_records, "Emit every record; discarded ones get rank null");

  auto* vote = app.add_subcommand("vote", "Majority-vote predictions JSONL (sample_id, votes)");
  vote->add_option("input", f.input);
  vote->add_option("--k", f.vote_k, "Vote over k seeded draws instead of the whole pool");

  auto* eval = app.add_subcommand("eval", "F1 report: pooled, per-k, per-split, per-label, random bound");
  eval->add_option("--predictions", f.predictions)->required();
  eval->add_option("--samples", f.samples)->required();
  eval->add_option("--ks", f.ks, "Vote counts, e.g. 1,2,4,8,16,32")->delimiter(',');
  eval->add_option("--average", f.average, "macro | micro | weighted");
  eval->add_option("--random-seeds", f.random_seeds, "Seeds for the random bound");
  eval->add_option("--csv", f.csv, "Also write a flat CSV of the curve");
  eval->add_option("--temperature", f.temperature, "Sampling temperature, recorded as metadata");

  auto* similar = app.add_subcommand("similar", "Top-k similar stocks by log-return correlation");
  similar->add_option("input", f.input);
  similar->add_option("--target", f.target)->required();
  similar->add_option("--window", f.window);
  similar->add_option("--k", f.top_k);

  auto* serve = app.add_subcommand("serve", "Run the HTTP scoring service");
  serve->add_option("--listen", f.listen, "host:port")->envname("RETUNE_LISTEN");
  serve->add_option("--batch-cap", f.batch_cap)->envname("RETUNE_BATCH_CAP");
  serve->add_option("--threads", f.threads)->envname("RETUNE_THREADS");
  weights(serve);
  grpo(serve);

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("retune");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "retune: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    const RunConfig c = resolve_config(f);
    if (label->parsed()) cmd_label(c, f, out);
    else if (synth->parsed()) cmd_synth(c, out);
    else if (parse->parsed()) cmd_parse(c, out);
    else if (score->parsed()) cmd_score(c, out);
    else if (advantage->parsed()) cmd_advantage(c, out);
    else if (curriculum->parsed()) cmd_curriculum(c, f, out);
    else if (vote->parsed()) cmd_vote(c, f, out);
    else if (eval->parsed()) cmd_eval(c, f, out);
    else if (similar->parsed()) cmd_similar(c, f, out);
    else if (serve->parsed()) cmd_serve(c, out);
    return kExitOk;
  } catch (const IoError& e) {
    err << "retune: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "retune: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "retune: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace retune

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <unistd.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "retune/cli.hpp"
#include "retune/curriculum.hpp"
#include "retune/grpo.hpp"
#include "retune/jsonl.hpp"
#include "retune/market.hpp"
#include "retune/response.hpp"
#include "retune/reward.hpp"
#include "retune/service.hpp"
#include "retune/synth.hpp"
#include "retune/vote.hpp"

using namespace retune;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double limit_s;  // 0: no time limit
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

const std::array<MovementLabel, 3> kLabels{MovementLabel::hold, MovementLabel::down, MovementLabel::up};

std::vector<LabeledSample> balanced_samples(std::size_t n) {
  std::vector<LabeledSample> out;
  Date d{std::chrono::year{2020}, std::chrono::January, std::chrono::day{1}};
  for (std::size_t i = 0; i < n; ++i) {
    const MovementLabel l = kLabels[i % 3];
    const double pct = l == MovementLabel::up ? 4.0 : l == MovementLabel::down ? -4.0 : 0.0;
    out.push_back({"S" + std::to_string(i / 1000), d, pct, l, SplitTag::train});
    d = std::chrono::sys_days(d) + std::chrono::days(1);
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome label_thresholds() {
  const double grid[] = {-5, -3.01, -3, -2.99, 0, 2.99, 3, 3.01, 5};
  const MovementLabel D = MovementLabel::down, H = MovementLabel::hold, U = MovementLabel::up;
  const MovementLabel want[] = {D, D, H, H, H, H, H, U, U};
  for (std::size_t i = 0; i < std::size(grid); ++i) {
    if (classify(grid[i]) != want[i]) {
      return {false, "classify(" + format_decimal(grid[i]) + ") = " + std::string(to_string(classify(grid[i])))};
    }
  }
  return {true, "9/9 grid points"};
}

Outcome random_bound_balanced() {
  const auto test = balanced_samples(9000);
  const RandomBound rb = random_bound(test, default_random_seeds());
  const bool ok = rb.per_seed.size() == 32 && std::abs(rb.mean - 0.3333) <= 0.01;
  return {ok, "mean macro-F1 " + fmt("%.4f", rb.mean) + " over " + std::to_string(rb.per_seed.size()) + " seeds"};
}

Outcome advantage_oracle() {
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> cont(-5, 5);
  std::uniform_int_distribution<int> disc(0, 4);
  double worst = 0;
  for (int g = 0; g < 1000; ++g) {
    std::vector<double> r(8);
    for (auto& x : r) x = g % 2 ? cont(rng) : disc(rng);
    long double sum = 0;
    for (double x : r) sum += x;
    const long double mean = sum / 8;
    long double ss = 0;
    for (double x : r) ss += (x - mean) * (x - mean);
    const long double sd = std::sqrt(ss / 8);
    const auto got = group_advantages(r);
    for (std::size_t i = 0; i < 8; ++i) {
      const double want = sd < 1e-8L ? 0.0 : static_cast<double>((r[i] - mean) / sd);
      worst = std::max(worst, std::abs(got[i] - want));
    }
  }
  for (double v : {0.0, 1.0, -2.5, 4.0}) {
    const std::vector<double> flat(8, v);
    for (double a : group_advantages(flat)) {
      if (a != 0.0 || std::signbit(a)) return {false, "zero-variance group gave " + format_decimal(a)};
    }
  }
  return {worst <= 1e-12, "max abs error " + fmt("%.2e", worst) + "; zero-variance groups exact"};
}

Outcome gradient_check() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> reward(0, 4), lp(-6, -0.05), d(-0.6, 0.6);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  const GrpoConfig cfg{0.2, 0.04, 1e-8};
  const double h = 1e-6;
  double worst = 0;
  int checked = 0;
  while (checked < 100) {
    RolloutGroup g;
    bool near_kink = false;
    for (int i = 0; i < 4; ++i) {
      g.rewards.push_back(reward(rng));
      std::vector<double> cur, old, ref;
      for (std::size_t t = len(rng); t > 0; --t) {
        old.push_back(lp(rng));
        cur.push_back(old.back() + d(rng));
        ref.push_back(old.back() + d(rng));
        const double rho = std::exp(cur.back() - old.back());
        near_kink = near_kink || std::abs(rho - (1 - cfg.epsilon)) <= 1e-4 || std::abs(rho - (1 + cfg.epsilon)) <= 1e-4;
      }
      g.logprobs.current.push_back(cur);
      g.logprobs.old.push_back(old);
      g.logprobs.ref.push_back(ref);
    }
    if (near_kink) continue;
    const auto r = group_objective(g, cfg);
    double num = 0, den_a = 0, den_f = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t t = 0; t < g.logprobs.current[i].size(); ++t) {
        RolloutGroup plus = g, minus = g;
        plus.logprobs.current[i][t] += h;
        minus.logprobs.current[i][t] -= h;
        const double fd = (group_objective(plus, cfg).objective - group_objective(minus, cfg).objective) / (2 * h);
        num += (r.gradients[i][t] - fd) * (r.gradients[i][t] - fd);
        den_a += r.gradients[i][t] * r.gradients[i][t];
        den_f += fd * fd;
      }
    }
    const double denom = std::max(std::sqrt(den_a), std::sqrt(den_f));
    worst = std::max(worst, denom == 0 ? std::sqrt(num) : std::sqrt(num) / denom);
    ++checked;
  }
  return {worst <= 1e-6, "max relative error " + fmt("%.2e", worst) + " over 100 instances"};
}

Outcome surrogate_spots() {
  for (double a : {-3.0, -1.0, 0.5, 1.0, 2.25}) {
    for (double eps : {0.1, 0.2, 0.3}) {
      if (clipped_surrogate_from_ratio(a, 1.0, eps) != a) return {false, "rho=1 did not return A=" + format_decimal(a)};
    }
  }
  if (clipped_surrogate_from_ratio(1.0, 2.0, 0.2) != 1.2) return {false, "(A=1, rho=2, eps=0.2) != 1.2"};
  for (double rho : {0.1, 0.8, 1.0, 1.2, 5.0}) {
    if (clipped_surrogate_from_ratio(0.0, rho, 0.2) != 0.0) return {false, "A=0 gave a nonzero value"};
  }
  return {true, "rho=1 -> A, (1, 2, 0.2) -> 1.2, A=0 -> 0"};
}

Outcome curriculum_exhaustive() {
  for (int c = 0; c <= 8; ++c) {
    const DifficultyBin want = c <= 2 ? DifficultyBin::hard : c <= 5 ? DifficultyBin::medium : DifficultyBin::easy;
    if (bin(c, 8) != want) return {false, "n_correct=" + std::to_string(c) + " -> " + std::string(to_string(bin(c, 8)))};
  }
  return {true, "0-2 hard, 3-5 medium, 6-8 easy"};
}

Outcome voting_oracle() {
  std::mt19937_64 rng(10000);
  std::uniform_int_distribution<int> size(1, 33), lab(0, 2);
  for (int b = 0; b < 10000; ++b) {
    std::vector<MovementLabel> votes(static_cast<std::size_t>(size(rng)));
    int count[3] = {0, 0, 0};
    for (auto& v : votes) {
      v = static_cast<MovementLabel>(lab(rng));
      ++count[index_of(v)];
    }
    MovementLabel want = kLabels[0];
    for (MovementLabel l : kLabels) {
      if (count[index_of(l)] > count[index_of(want)]) want = l;
    }
    if (majority_vote(votes) != want) return {false, "ballot " + std::to_string(b) + " disagrees"};
  }
  return {true, "10000 ballots"};
}

Outcome scaling() {
  const auto samples = balanced_samples(3000);
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution correct(0.5), coin(0.5);
  std::vector<Ballot> ballots;
  for (const auto& s : samples) {
    Ballot b{s.sample_id(), {}};
    for (int i = 0; i < 32; ++i) {
      const std::size_t t = index_of(s.label);
      b.votes.push_back(correct(rng) ? s.label : static_cast<MovementLabel>((t + (coin(rng) ? 1 : 2)) % 3));
    }
    ballots.push_back(std::move(b));
  }
  const std::vector<int> ks{1, 32};
  const auto a = vote_curve(ballots, samples, ks, 2024);
  const auto b = vote_curve(ballots, samples, ks, 2024);
  const double f1 = a[0].overall.f1, f32 = a[1].overall.f1;
  const bool deterministic = same_bits(f1, b[0].overall.f1) && same_bits(f32, b[1].overall.f1);
  return {f32 > f1 && deterministic,
          "macro-F1 k=1 " + fmt("%.4f", f1) + ", k=32 " + fmt("%.4f", f32) + (deterministic ? "" : ", not deterministic")};
}

ParsedResponse random_response(std::mt19937_64& rng) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz ABCXYZ0123456789.,:;!?<>/_-\n%";
  std::uniform_int_distribution<std::size_t> len(0, 60), pick(0, alphabet.size() - 1);
  std::uniform_real_distribution<double> score(0.0, 10.0);
  std::normal_distribution<double> gauss(0.0, 5.0);
  std::uniform_int_distribution<int> label(0, 2);
  ParsedResponse p;
  std::string s;
  for (std::size_t i = len(rng); i > 0; --i) s += alphabet[pick(rng)];
  const auto b = s.find_first_not_of(" \n");
  p.reasoning = b == std::string::npos ? "" : s.substr(b, s.find_last_not_of(" \n") - b + 1);
  p.evidence = {score(rng), std::round(score(rng))};
  p.change_pct = gauss(rng);
  p.answer = static_cast<MovementLabel>(label(rng));
  return p;
}

Outcome parser_corpus() {
  const auto lines = read_jsonl(fs::path(RETUNE_TEST_DATA) / "parser_corpus.jsonl");
  int valid = 0, malformed = 0;
  for (const auto& l : lines) {
    const Json& c = l.value;
    const std::string id = c["id"];
    const ParseResult r = parse_response(c["text"].get<std::string>());
    std::vector<std::string> rules;
    for (const auto& v : r.report.violations) rules.push_back(v.rule);
    if (format_score(r.report) != c["format_score"].get<double>() ||
        r.report.missing_fields != c["missing_fields"].get<std::vector<std::string>>() ||
        rules != c["violations"].get<std::vector<std::string>>()) {
      return {false, "corpus case " + id + " report mismatch"};
    }
    if (c.contains("parsed")) {
      ++valid;
      const Json& p = c["parsed"];
      const ParsedResponse want{p["reasoning_text"], {p["evidence_scores"]["up"], p["evidence_scores"]["down"]},
                                p["change_pct"], *label_from_string(p["answer"].get<std::string>())};
      if (!r.response || *r.response != want) return {false, "corpus case " + id + " parsed fields mismatch"};
    } else {
      ++malformed;
      if (r.response.has_value() != c["has_parsed"].get<bool>()) return {false, "corpus case " + id + " has_parsed"};
    }
  }
  if (valid < 20 || malformed < 20) return {false, "corpus too small"};
  std::mt19937_64 rng(500);
  for (int i = 0; i < 500; ++i) {
    const ParsedResponse p = random_response(rng);
    const auto r = parse_response(render_response(p));
    if (!r.report.parse_ok || !r.response || *r.response != p) return {false, "round trip " + std::to_string(i)};
  }
  return {true, std::to_string(valid) + " valid + " + std::to_string(malformed) + " malformed cases, 500 round trips"};
}

Outcome sft_filter() {
  const Json fx = Json::parse(read_text_file(fs::path(RETUNE_TEST_DATA) / "sft_fixture.json"));
  std::vector<std::string> texts;
  std::vector<std::size_t> want;
  for (const auto& c : fx["candidates"]) {
    if (c["accept"].get<bool>()) want.push_back(texts.size());
    texts.push_back(c["text"]);
  }
  const auto got = filter_for_sft(texts, *label_from_string(fx["truth"].get<std::string>()));
  std::string ids;
  for (auto i : got) ids += (ids.empty() ? "" : ",") + std::to_string(i);
  return {texts.size() == 8 && want.size() == 2 && got == want, "accepted {" + ids + "} of " + std::to_string(texts.size())};
}

Outcome service_equivalence() {
  SynthConfig sc;
  sc.n_stocks = 2;
  sc.n_days = 10;
  sc.malformed_rate = 0.3;
  const SynthData data = synthesize(sc, 64);
  const RewardWeights w{0.5, 2.0, 1.5};

  Json score_req{{"items", Json::array()}, {"weights", {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}}}};
  for (std::size_t i = 0; i < 64; ++i) {
    const Rollout& r = data.rollouts[i];
    score_req["items"].push_back({{"id", r.id}, {"text", r.text}, {"truth_label", to_string(r.truth)}});
  }

  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> reward(0, 4), lp(-5, -0.1), d(-0.4, 0.4);
  std::uniform_int_distribution<int> len(1, 12);
  const GrpoConfig gc{0.2, 0.01, 1e-8};
  std::vector<RolloutGroup> groups(16);
  Json adv_req{{"groups", Json::array()},
               {"config", {{"epsilon", gc.epsilon}, {"kl_coef", gc.kl_coef}, {"std_guard", gc.std_guard}}}};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& grp = groups[g];
    for (int i = 0; i < 8; ++i) {
      grp.rewards.push_back(g == 3 ? 2.0 : std::round(reward(rng)));
      std::vector<double> c, o, f;
      for (int t = len(rng); t > 0; --t) {
        o.push_back(lp(rng));
        c.push_back(o.back() + d(rng));
        f.push_back(o.back() + d(rng));
      }
      grp.logprobs.current.push_back(c);
      grp.logprobs.old.push_back(o);
      grp.logprobs.ref.push_back(f);
    }
    adv_req["groups"].push_back(
        {{"group_id", "g" + std::to_string(g)},
         {"rewards", grp.rewards},
         {"token_logprobs",
          {{"current", grp.logprobs.current}, {"old", grp.logprobs.old}, {"ref", grp.logprobs.ref}}}});
  }

  std::ostringstream log;
  ServiceConfig cfg;
  cfg.threads = 4;
  ServiceHost host(ScoringService(cfg), &log);
  const int port = host.bind("127.0.0.1", 0);
  std::thread server([&] { host.run(); });
  Outcome out{true, ""};
  auto fail = [&](std::string why) {
    if (out.ok) out = {false, std::move(why)};
  };
  {
    httplib::Client cli("127.0.0.1", port);
    cli.set_connection_timeout(2);
    auto sr = cli.Post("/v1/score", score_req.dump(), "application/json");
    auto ar = cli.Post("/v1/advantage", adv_req.dump(), "application/json");
    if (!sr || sr->status != 200) {
      fail("score request failed");
    } else {
      const Json res = Json::parse(sr->body)["results"];
      if (res.size() != 64) fail("score returned " + std::to_string(res.size()) + " results");
      for (std::size_t i = 0; i < res.size() && i < 64; ++i) {
        const auto lib = shape(data.rollouts[i].text, data.rollouts[i].truth, w);
        if (res[i]["id"] != data.rollouts[i].id || !same_bits(res[i]["format"], lib.format) ||
            !same_bits(res[i]["accuracy"], lib.accuracy) || !same_bits(res[i]["consistency"], lib.consistency) ||
            !same_bits(res[i]["total"], lib.total)) {
          fail("score item " + std::to_string(i) + " differs");
        }
      }
    }
    if (!ar || ar->status != 200) {
      fail("advantage request failed");
    } else {
      const Json res = Json::parse(ar->body)["results"];
      if (res.size() != groups.size()) fail("advantage returned " + std::to_string(res.size()) + " results");
      for (std::size_t g = 0; g < res.size() && g < groups.size(); ++g) {
        const auto lib = group_objective(groups[g], gc);
        const auto adv = res[g]["advantages"].get<std::vector<double>>();
        const auto grads = res[g]["gradients"].get<std::vector<std::vector<double>>>();
        bool same = same_bits(res[g]["objective"], lib.objective) && adv.size() == lib.advantages.size() &&
                    grads.size() == lib.gradients.size();
        for (std::size_t i = 0; same && i < adv.size(); ++i) {
          same = same_bits(adv[i], lib.advantages[i]) && grads[i].size() == lib.gradients[i].size();
          for (std::size_t t = 0; same && t < grads[i].size(); ++t) same = same_bits(grads[i][t], lib.gradients[i][t]);
        }
        if (!same) fail("advantage group " + std::to_string(g) + " differs");
      }
    }
  }
  host.stop();
  server.join();
  if (out.ok) out.detail = "64 score items and 16 groups bit-identical over HTTP";
  return out;
}

Outcome end_to_end() {
  const fs::path root = fs::temp_directory_path() / ("retune_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::string> artifacts{"prices.csv",     "rollouts.jsonl",   "predictions.jsonl", "samples.jsonl",
                                           "scores.jsonl",   "curriculum.jsonl", "votes.jsonl",       "eval.json",
                                           "eval_curve.csv"};
  auto pipeline = [&](const fs::path& dir) -> std::string {
    const std::string d = dir.string();
    const std::vector<std::vector<std::string>> steps{
        {"--seed", "42", "--out", d, "synth", "--n-stocks", "12", "--n-days", "90"},
        {"--seed", "42", "--out", d + "/samples.jsonl", "label", d + "/prices.csv", "--ood-stocks", "3"},
        {"--out", d + "/scores.jsonl", "score", d + "/rollouts.jsonl"},
        {"--out", d + "/curriculum.jsonl", "curriculum", "--from-scores", d + "/scores.jsonl"},
        {"--seed", "42", "--out", d + "/votes.jsonl", "vote", d + "/predictions.jsonl", "--k", "8"},
        {"--seed", "42", "--out", d + "/eval.json", "eval", "--predictions", d + "/predictions.jsonl", "--samples",
         d + "/samples.jsonl", "--csv", d + "/eval_curve.csv"},
    };
    for (const auto& args : steps) {
      std::ostringstream out, err;
      if (run_cli(args, out, err) != 0) return args[args.size() > 4 ? 4 : 0] + " failed: " + err.str();
    }
    return "";
  };
  std::string error = pipeline(root / "a");
  if (error.empty()) error = pipeline(root / "b");
  std::size_t bytes = 0;
  for (const auto& name : artifacts) {
    if (!error.empty()) break;
    const std::string a = read_text_file(root / "a" / name), b = read_text_file(root / "b" / name);
    if (a.empty()) error = name + " is empty";
    else if (a != b) error = name + " differs between runs";
    bytes += a.size();
  }
  fs::remove_all(root);
  if (!error.empty()) return {false, error};
  return {true, std::to_string(artifacts.size()) + " artifacts (" + std::to_string(bytes) + " bytes) identical"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"label_thresholds", 1, label_thresholds},
      {"random_bound", 5, random_bound_balanced},
      {"advantage_oracle", 1, advantage_oracle},
      {"gradient_check", 10, gradient_check},
      {"surrogate_spot_values", 0, surrogate_spots},
      {"curriculum_exhaustive", 0, curriculum_exhaustive},
      {"voting_oracle", 2, voting_oracle},
      {"scaling_sanity", 10, scaling},
      {"parser_corpus", 2, parser_corpus},
      {"rejection_filter", 0, sft_filter},
      {"service_equivalence", 5, service_equivalence},
      {"end_to_end_determinism", 60, end_to_end},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && c.limit_s > 0 && s >= c.limit_s) o = {false, o.detail + "; over the " + fmt("%g", c.limit_s) + " s limit"};
    failed += !o.ok;
    std::printf("%s  %-24s %8.3f s  %s\n", o.ok ? "PASS" : "FAIL", c.name.c_str(), s, o.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}

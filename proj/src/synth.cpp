#include "retune/synth.hpp"

#include <cmath>
#include <cstdio>

#include "retune/errors.hpp"
#include "retune/response.hpp"
#include "retune/seeding.hpp"

namespace retune {

std::optional<AccuracyProfile> parse_accuracy_profile(std::string_view s) {
  AccuracyProfile p;
  auto valid = [](std::optional<double> v) { return v && *v >= 0.0 && *v <= 1.0; };
  if (s.find('=') == std::string_view::npos) {
    auto v = parse_decimal(s);
    if (!valid(v) || s.find('%') != std::string_view::npos) return std::nullopt;
    p.per_class.fill(*v);
    return p;
  }
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    if (comma == std::string_view::npos) comma = s.size();
    const std::string_view item = s.substr(start, comma - start);
    start = comma + 1;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) return std::nullopt;
    auto label = label_from_string(item.substr(0, eq));
    auto v = parse_decimal(item.substr(eq + 1));
    if (!label || !valid(v)) return std::nullopt;
    p.per_class[index_of(*label)] = *v;
  }
  return p;
}

std::string to_string(const AccuracyProfile& p) {
  std::string out;
  for (MovementLabel l : {MovementLabel::up, MovementLabel::down, MovementLabel::hold}) {
    if (!out.empty()) out += ',';
    out += std::string(to_string(l)) + "=" + format_decimal(p.per_class[index_of(l)]);
  }
  return out;
}

void validate(const SynthConfig& c) {
  auto prob = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (c.n_stocks < 1) throw ValidationError("synth: n_stocks must be at least 1");
  if (c.n_days < 2) throw ValidationError("synth: n_days must be at least 2");
  if (!std::isfinite(c.volatility) || c.volatility < 0.0) throw ValidationError("synth: volatility must be >= 0");
  for (double a : c.accuracy.per_class) {
    if (!prob(a)) throw ValidationError("synth: accuracy must lie in [0, 1]");
  }
  if (c.n_votes < 1) throw ValidationError("synth: n_votes must be at least 1");
  if (c.n_rollouts < 0 || c.n_rollouts > c.n_votes) throw ValidationError("synth: n_rollouts must lie in [0, n_votes]");
  if (!prob(c.consistency_rate) || !prob(c.malformed_rate)) throw ValidationError("synth: rates must lie in [0, 1]");
  if (!c.start.ok()) throw ValidationError("synth: bad start date");
}

namespace {

double cents(double x) { return std::max(0.01, std::round(x * 100.0) / 100.0); }

std::vector<Date> trading_days(Date start, int n) {
  using namespace std::chrono;
  std::vector<Date> days;
  sys_days d{start};
  while (static_cast<int>(days.size()) < n) {
    const weekday w{d};
    if (w != Saturday && w != Sunday) days.emplace_back(d);
    d += std::chrono::days{1};
  }
  return days;
}

std::vector<PriceBar> random_walk(const std::string& stock, const std::vector<Date>& days, double vol, Rng& rng) {
  std::uniform_real_distribution<double> start_price(20.0, 200.0);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> volume(100000, 1000000);
  std::vector<PriceBar> bars;
  bars.reserve(days.size());
  double prev_close = cents(start_price(rng));
  for (std::size_t t = 0; t < days.size(); ++t) {
    PriceBar b;
    b.stock_id = stock;
    b.date = days[t];
    b.open = t == 0 ? prev_close : cents(prev_close * std::exp(vol * z(rng)));
    b.close = cents(b.open * std::exp(0.5 * vol * z(rng)));
    b.high = std::max(cents(std::max(b.open, b.close) * std::exp(0.25 * vol * std::abs(z(rng)))),
                      std::max(b.open, b.close));
    b.low = std::min(cents(std::min(b.open, b.close) * std::exp(-0.25 * vol * std::abs(z(rng)))),
                     std::min(b.open, b.close));
    b.volume = volume(rng);
    bars.push_back(std::move(b));
    prev_close = bars.back().close;
  }
  return bars;
}

MovementLabel other_label(MovementLabel truth, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, 1);
  std::array<MovementLabel, 2> others{};
  std::size_t n = 0;
  for (MovementLabel l : kAllLabels) {
    if (l != truth) others[n++] = l;
  }
  return others[static_cast<std::size_t>(pick(rng))];
}

// A change in hundredths of a percent that classifies as `label`.
double change_for(MovementLabel label, Rng& rng) {
  int lo = -300, hi = 300;
  if (label == MovementLabel::up) lo = 301, hi = 800;
  if (label == MovementLabel::down) lo = -800, hi = -301;
  std::uniform_int_distribution<int> pick(lo, hi);
  return pick(rng) / 100.0;
}

std::string corrupt(std::string text, Rng& rng) {
  std::uniform_int_distribution<int> kind(0, 3);
  auto replace = [&](std::string_view from, std::string_view to) {
    const auto p = text.find(from);
    if (p != std::string::npos) text.replace(p, from.size(), to);
  };
  switch (kind(rng)) {
    case 0: {  // drop the answer block
      const auto p = text.find("<answer>");
      if (p != std::string::npos) text.erase(p);
      break;
    }
    case 1: {  // duplicate change_pct
      const auto p = text.find("<change_pct>");
      const auto e = text.find('\n', p);
      if (p != std::string::npos && e != std::string::npos) text.insert(e + 1, text.substr(p, e - p + 1));
      break;
    }
    case 2:
      replace("<answer>", "<answer>sideways ");
      break;
    default:
      replace("down: ", "bearish: ");
      break;
  }
  return text;
}

}  // namespace

SynthData synthesize(const SynthConfig& config, std::uint64_t seed) {
  validate(config);
  SynthData data;
  const auto days = trading_days(config.start, config.n_days);
  Rng price_rng(derive_seed(seed, "synth.prices"));
  for (int s = 0; s < config.n_stocks; ++s) {
    char id[16];
    std::snprintf(id, sizeof id, "S%03d", s);
    auto bars = random_walk(id, days, config.volatility, price_rng);
    data.bars.insert(data.bars.end(), bars.begin(), bars.end());
  }
  data.samples = label_universe(data.bars);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> tenths(0, 100);
  data.predictions.reserve(data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const LabeledSample& sample = data.samples[i];
    const std::string sid = sample.sample_id();
    Rng vote_rng(derive_seed(seed, "synth.votes", i));
    Ballot ballot{sid, {}};
    ballot.votes.reserve(static_cast<std::size_t>(config.n_votes));
    for (int v = 0; v < config.n_votes; ++v) {
      const bool hit = unit(vote_rng) < config.accuracy.per_class[index_of(sample.label)];
      ballot.votes.push_back(hit ? sample.label : other_label(sample.label, vote_rng));
    }

    Rng text_rng(derive_seed(seed, "synth.texts", i));
    for (int r = 0; r < config.n_rollouts; ++r) {
      ParsedResponse p;
      p.answer = ballot.votes[static_cast<std::size_t>(r)];
      const bool consistent = unit(text_rng) < config.consistency_rate;
      p.change_pct = change_for(consistent ? p.answer : other_label(p.answer, text_rng), text_rng);
      p.evidence = {tenths(text_rng) / 10.0, tenths(text_rng) / 10.0};
      p.reasoning = "Rollout " + std::to_string(r) + " for " + sid + ": weighing the evidence, the call is " +
                    std::string(to_string(p.answer)) + ".";
      std::string text = render_response(p);
      if (unit(text_rng) < config.malformed_rate) text = corrupt(std::move(text), text_rng);
      data.rollouts.push_back({sid + "#r" + std::to_string(r), sid, std::move(text), sample.label});
    }
    data.predictions.push_back(std::move(ballot));
  }
  return data;
}

}  // namespace retune

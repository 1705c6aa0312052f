#include "retune/market.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "retune/errors.hpp"
#include "retune/seeding.hpp"

namespace retune {

std::string_view to_string(MovementLabel l) {
  switch (l) {
    case MovementLabel::hold: return "hold";
    case MovementLabel::down: return "down";
    case MovementLabel::up: return "up";
  }
  return "hold";
}

std::optional<MovementLabel> label_from_string(std::string_view s) {
  if (s == "up") return MovementLabel::up;
  if (s == "down") return MovementLabel::down;
  if (s == "hold") return MovementLabel::hold;
  return std::nullopt;
}

std::string_view to_string(SplitTag s) {
  switch (s) {
    case SplitTag::train: return "train";
    case SplitTag::ood_stock: return "ood_stock";
    case SplitTag::ood_date: return "ood_date";
    case SplitTag::ood_stock_date: return "ood_stock_date";
  }
  return "train";
}

std::optional<SplitTag> split_from_string(std::string_view s) {
  for (SplitTag t : kAllSplits) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

namespace {

bool parse_fixed_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!parse_fixed_int(s.substr(0, 4), y) || !parse_fixed_int(s.substr(5, 2), m) ||
      !parse_fixed_int(s.substr(8, 2), d)) {
    return std::nullopt;
  }
  Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
            std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::string LabeledSample::sample_id() const { return stock_id + ":" + format_date(date); }

void validate_bar(const PriceBar& bar) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("bar " + bar.stock_id + " " + format_date(bar.date) + ": " + what);
  };
  for (double p : {bar.open, bar.high, bar.low, bar.close}) {
    if (!std::isfinite(p) || p <= 0.0) fail("prices must be finite and positive");
  }
  if (!std::isfinite(bar.volume) || bar.volume < 0.0) fail("volume must be finite and non-negative");
  if (bar.low > std::min(bar.open, bar.close)) fail("low exceeds min(open, close)");
  if (bar.high < std::max(bar.open, bar.close)) fail("high is below max(open, close)");
}

double compute_change_pct(double prev_close, double open) {
  if (!std::isfinite(prev_close) || !std::isfinite(open) || prev_close <= 0.0 || open <= 0.0) {
    throw DomainError("compute_change_pct: prices must be finite and positive");
  }
  // Subtract first: the difference is exact for nearby prices, so e.g. 100 -> 103
  // lands on exactly 3.0 instead of 3.0000000000000027.
  return (open - prev_close) * 100.0 / prev_close;
}

MovementLabel classify(double change_pct) {
  if (!std::isfinite(change_pct)) throw DomainError("classify: change_pct must be finite");
  if (change_pct > kMovementThresholdPct) return MovementLabel::up;
  if (change_pct < -kMovementThresholdPct) return MovementLabel::down;
  return MovementLabel::hold;
}

std::vector<LabeledSample> label_series(std::span<const PriceBar> bars) {
  std::vector<LabeledSample> out;
  if (bars.empty()) return out;
  const std::string& stock = bars.front().stock_id;
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const PriceBar& bar = bars[i];
    if (bar.stock_id != stock) {
      throw ValidationError("label_series: mixed stock ids (" + stock + ", " + bar.stock_id + ")");
    }
    if (i > 0) {
      const Date& prev = bars[i - 1].date;
      if (bar.date == prev) {
        throw ValidationError("label_series: duplicate date " + format_date(bar.date) +
                              " for " + stock);
      }
      if (bar.date < prev) {
        throw ValidationError("label_series: unsorted dates for " + stock + " at " +
                              format_date(bar.date));
      }
    }
  }
  out.reserve(bars.size() - 1);
  for (std::size_t i = 1; i < bars.size(); ++i) {
    LabeledSample s;
    s.stock_id = stock;
    s.date = bars[i].date;
    s.change_pct = compute_change_pct(bars[i - 1].close, bars[i].open);
    s.label = classify(s.change_pct);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledSample> label_universe(std::span<const PriceBar> bars) {
  std::map<std::string, std::vector<PriceBar>> by_stock;
  for (const PriceBar& b : bars) by_stock[b.stock_id].push_back(b);
  std::vector<LabeledSample> out;
  for (const auto& [id, series] : by_stock) {
    auto labeled = label_series(series);
    out.insert(out.end(), std::make_move_iterator(labeled.begin()),
               std::make_move_iterator(labeled.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> log_returns(std::span<const double> closes) {
  std::vector<double> r;
  r.reserve(closes.size() > 0 ? closes.size() - 1 : 0);
  for (std::size_t i = 1; i < closes.size(); ++i) r.push_back(std::log(closes[i] / closes[i - 1]));
  return r;
}

// nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::map<Date, double> closes_by_date(const std::vector<PriceBar>& series) {
  std::map<Date, double> m;
  for (const PriceBar& b : series) m[b.date] = b.close;
  return m;
}

}  // namespace

SimilarityResult top_similar(const std::string& target,
                             const std::map<std::string, std::vector<PriceBar>>& universe,
                             std::size_t window, std::size_t k) {
  if (k < 1) throw DomainError("top_similar: k must be at least 1");
  if (window < 1) throw DomainError("top_similar: window must be at least 1");
  auto target_it = universe.find(target);
  if (target_it == universe.end()) {
    throw ValidationError("top_similar: target " + target + " not in universe");
  }
  const auto target_closes = closes_by_date(target_it->second);

  SimilarityResult result;
  for (const auto& [id, series] : universe) {
    if (id == target) continue;
    const auto closes = closes_by_date(series);
    std::vector<double> xt, xc;
    for (const auto& [date, close] : closes) {
      auto it = target_closes.find(date);
      if (it == target_closes.end()) continue;
      xt.push_back(it->second);
      xc.push_back(close);
    }
    if (xt.size() < 2) {
      throw InsufficientDataError("top_similar: " + id + " shares fewer than 2 dates with " +
                                  target);
    }
    // Trailing window of returns needs window + 1 closes.
    const std::size_t keep = std::min(xt.size(), window + 1);
    const auto rt = log_returns(std::span(xt).last(keep));
    const auto rc = log_returns(std::span(xc).last(keep));
    auto corr = pearson(rt, rc);
    if (!corr) {
      result.zero_variance.push_back(id);
      continue;
    }
    result.ranked.push_back({id, *corr});
  }
  // universe is a std::map, so candidates arrive in id order and stable_sort keeps it for ties.
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const SimilarStock& a, const SimilarStock& b) {
                     return a.correlation > b.correlation;
                   });
  if (result.ranked.size() > k) result.ranked.resize(k);
  return result;
}

// ---------------------------------------------------------------------------

SplitTag split_for(const SplitPlan& plan, const std::string& stock_id, const Date& date) {
  const bool in_date = plan.ood_dates && plan.ood_dates->contains(date);
  bool in_stock = plan.ood_stocks.contains(stock_id);
  if (plan.policy == OodStockPolicy::eval_only && in_stock && plan.ood_dates &&
      date < plan.ood_dates->first) {
    in_stock = false;
  }
  if (in_stock && in_date) return SplitTag::ood_stock_date;
  if (in_stock) return SplitTag::ood_stock;
  if (in_date) return SplitTag::ood_date;
  return SplitTag::train;
}

std::vector<LabeledSample> assign_splits(std::vector<LabeledSample> samples, const SplitPlan& plan) {
  for (LabeledSample& s : samples) s.split = split_for(plan, s.stock_id, s.date);
  return samples;
}

std::set<std::string> choose_ood_stocks(std::vector<std::string> stock_ids, std::size_t count,
                                        std::uint64_t seed) {
  std::sort(stock_ids.begin(), stock_ids.end());
  stock_ids.erase(std::unique(stock_ids.begin(), stock_ids.end()), stock_ids.end());
  if (count > stock_ids.size()) {
    throw ValidationError("choose_ood_stocks: requested " + std::to_string(count) +
                          " of " + std::to_string(stock_ids.size()) + " stocks");
  }
  Rng rng(derive_seed(seed, "splits.ood_stocks"));
  std::shuffle(stock_ids.begin(), stock_ids.end(), rng);
  return {stock_ids.begin(), stock_ids.begin() + static_cast<std::ptrdiff_t>(count)};
}

std::optional<DateRange> last_month_range(std::span<const LabeledSample> samples) {
  if (samples.empty()) return std::nullopt;
  Date latest = samples.front().date;
  for (const auto& s : samples) latest = std::max(latest, s.date);
  const std::chrono::year_month ym{latest.year(), latest.month()};
  return DateRange{Date{ym / std::chrono::day{1}}, Date{ym / std::chrono::last}};
}

// ---------------------------------------------------------------------------

std::vector<LabeledSample> balance_labels(std::span<const LabeledSample> samples, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kLabelCount> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) by_class[index_of(samples[i].label)].push_back(i);
  std::size_t minority = samples.size();
  for (MovementLabel l : kAllLabels) {
    const auto& members = by_class[index_of(l)];
    if (members.empty()) {
      throw ValidationError("balance_labels: class '" + std::string(to_string(l)) + "' is empty");
    }
    minority = std::min(minority, members.size());
  }
  Rng rng(derive_seed(seed, "balance_labels"));
  std::vector<std::size_t> chosen;
  chosen.reserve(minority * kLabelCount);
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    chosen.insert(chosen.end(), members.begin(),
                  members.begin() + static_cast<std::ptrdiff_t>(minority));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<LabeledSample> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(samples[i]);
  return out;
}

FilterResult filter_incomplete(std::span<const RawRecord> records) {
  FilterResult result;
  for (const RawRecord& r : records) {
    if (!r.prev_close || !r.open) {
      result.dropped.push_back({r.id, "missing_price"});
    } else if (!std::isfinite(*r.prev_close) || !std::isfinite(*r.open) || *r.prev_close <= 0.0 ||
               *r.open <= 0.0) {
      result.dropped.push_back({r.id, "invalid_price"});
    } else if (!r.truth) {
      result.dropped.push_back({r.id, "missing_label"});
    } else {
      result.kept.push_back(r);
    }
  }
  return result;
}

}  // namespace retune

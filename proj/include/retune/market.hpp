#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retune/labels.hpp"

namespace retune {

using Date = std::chrono::year_month_day;

/// Parses `YYYY-MM-DD`; rejects anything else, including impossible dates.
std::optional<Date> parse_date(std::string_view s);
std::string format_date(const Date& d);

struct PriceBar {
  std::string stock_id;
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
};

/// Throws ValidationError describing the first violated bar invariant.
void validate_bar(const PriceBar& bar);

struct LabeledSample {
  std::string stock_id;
  Date date;
  double change_pct = 0.0;
  MovementLabel label = MovementLabel::hold;
  SplitTag split = SplitTag::train;

  /// `stock_id:YYYY-MM-DD`, the key used to align predictions and rollouts.
  std::string sample_id() const;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

inline constexpr double kMovementThresholdPct = 3.0;

/// Percent change from the previous close to the current open.
double compute_change_pct(double prev_close, double open);

/// up iff change > 3, down iff change < -3, hold otherwise (the boundaries are hold).
MovementLabel classify(double change_pct);

/// One sample per consecutive pair of bars; calendar gaps are ignored.
std::vector<LabeledSample> label_series(std::span<const PriceBar> bars);

/// Groups bars by stock (file order within each stock) and labels each series.
/// Output is ordered by stock_id, then date.
std::vector<LabeledSample> label_universe(std::span<const PriceBar> bars);

// ---------------------------------------------------------------------------
// Similar stocks

struct SimilarStock {
  std::string stock_id;
  double correlation = 0.0;
};

struct SimilarityResult {
  std::vector<SimilarStock> ranked;
  /// Candidates left unranked because either side's log returns have zero variance.
  std::vector<std::string> zero_variance;
};

inline constexpr std::size_t kDefaultSimilarityWindow = 60;
inline constexpr std::size_t kDefaultSimilarK = 3;

/// Ranks the universe by Pearson correlation of daily log close-returns against
/// the target over the trailing `window` returns on common dates.
SimilarityResult top_similar(const std::string& target,
                             const std::map<std::string, std::vector<PriceBar>>& universe,
                             std::size_t window = kDefaultSimilarityWindow,
                             std::size_t k = kDefaultSimilarK);

// ---------------------------------------------------------------------------
// Splits

struct DateRange {
  Date first;
  Date last;  // inclusive
  bool contains(const Date& d) const { return first <= d && d <= last; }
};

enum class OodStockPolicy {
  /// OOD stocks never appear in train: every sample of an OOD stock is tagged ood_stock*.
  exclude_entirely,
  /// OOD stocks are held out only inside the OOD date range; earlier samples stay in train.
  eval_only,
};

struct SplitPlan {
  std::set<std::string> ood_stocks;
  std::optional<DateRange> ood_dates;
  OodStockPolicy policy = OodStockPolicy::exclude_entirely;
};

SplitTag split_for(const SplitPlan& plan, const std::string& stock_id, const Date& date);

std::vector<LabeledSample> assign_splits(std::vector<LabeledSample> samples, const SplitPlan& plan);

/// Seeded uniform choice of `count` distinct stock ids, returned sorted.
std::set<std::string> choose_ood_stocks(std::vector<std::string> stock_ids, std::size_t count,
                                        std::uint64_t seed);

/// The calendar month containing the latest date in `samples`.
std::optional<DateRange> last_month_range(std::span<const LabeledSample> samples);

// ---------------------------------------------------------------------------
// Dataset hygiene

/// Downsamples every class to the minority count. Survivors keep their input order.
std::vector<LabeledSample> balance_labels(std::span<const LabeledSample> samples, std::uint64_t seed);

enum class InfoSource { news, fundamentals, analyst, quantitative, macro, similar_stocks };

struct RawRecord {
  std::string id;
  std::optional<double> prev_close;
  std::optional<double> open;
  std::optional<MovementLabel> truth;
  std::set<InfoSource> present_sources;
};

struct DroppedRecord {
  std::string id;
  std::string reason;  // missing_price | invalid_price | missing_label
};

struct FilterResult {
  std::vector<RawRecord> kept;
  std::vector<DroppedRecord> dropped;
};

/// Drops records without a usable price pair or ground-truth label. Optional
/// information sources never cause a drop.
FilterResult filter_incomplete(std::span<const RawRecord> records);

}  // namespace retune

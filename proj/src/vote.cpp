#include "retune/vote.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "retune/batch.hpp"
#include "retune/errors.hpp"

namespace retune {

MovementLabel majority_vote(std::span<const MovementLabel> votes) {
  if (votes.empty()) throw DomainError("majority_vote: empty ballot");
  std::array<std::size_t, kLabelCount> counts{};
  for (MovementLabel v : votes) ++counts[index_of(v)];
  // kAllLabels runs hold, down, up; a strict > keeps the earlier label on ties.
  MovementLabel best = kAllLabels[0];
  for (MovementLabel l : kAllLabels) {
    if (counts[index_of(l)] > counts[index_of(best)]) best = l;
  }
  return best;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t t = 0; t < kLabelCount; ++t) {
    for (std::size_t p = 0; p < kLabelCount; ++p) counts[t][p] += other.counts[t][p];
  }
  return *this;
}

std::optional<F1Average> f1_average_from_string(std::string_view s) {
  if (s == "macro") return F1Average::macro;
  if (s == "micro") return F1Average::micro;
  if (s == "weighted") return F1Average::weighted;
  return std::nullopt;
}

std::string_view to_string(F1Average a) {
  switch (a) {
    case F1Average::macro: return "macro";
    case F1Average::micro: return "micro";
    case F1Average::weighted: return "weighted";
  }
  return "macro";
}

std::array<double, kLabelCount> per_class_f1(const ConfusionMatrix& cm) {
  std::array<double, kLabelCount> f1{};
  for (std::size_t c = 0; c < kLabelCount; ++c) {
    const std::uint64_t tp = cm.counts[c][c];
    std::uint64_t fp = 0, fn = 0;
    for (std::size_t o = 0; o < kLabelCount; ++o) {
      if (o == c) continue;
      fp += cm.counts[o][c];
      fn += cm.counts[c][o];
    }
    const std::uint64_t denom = 2 * tp + fp + fn;
    f1[c] = denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
  }
  return f1;
}

double macro_f1(const ConfusionMatrix& cm) { return f1_score(cm, F1Average::macro); }

double f1_score(const ConfusionMatrix& cm, F1Average average) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw DomainError("f1: empty confusion matrix");
  const auto f1 = per_class_f1(cm);
  switch (average) {
    case F1Average::macro:
      return (f1[0] + f1[1] + f1[2]) / static_cast<double>(kLabelCount);
    case F1Average::micro: {
      // Single-label multiclass: micro F1 equals accuracy.
      std::uint64_t correct = 0;
      for (std::size_t c = 0; c < kLabelCount; ++c) correct += cm.counts[c][c];
      return static_cast<double>(correct) / static_cast<double>(total);
    }
    case F1Average::weighted: {
      double acc = 0.0;
      for (std::size_t c = 0; c < kLabelCount; ++c) {
        const auto& row = cm.counts[c];
        const auto support = std::accumulate(row.begin(), row.end(), std::uint64_t{0});
        acc += f1[c] * static_cast<double>(support);
      }
      return acc / static_cast<double>(total);
    }
  }
  return 0.0;
}

Metrics evaluate(const ConfusionMatrix& cm, F1Average average) {
  Metrics m;
  m.count = cm.total();
  m.confusion = cm;
  m.per_class_f1 = per_class_f1(cm);
  m.f1 = f1_score(cm, average);
  return m;
}

namespace {

std::unordered_map<std::string, const LabeledSample*> index_samples(std::span<const LabeledSample> samples) {
  std::unordered_map<std::string, const LabeledSample*> by_id;
  by_id.reserve(samples.size());
  for (const LabeledSample& s : samples) {
    if (!by_id.emplace(s.sample_id(), &s).second) {
      throw ValidationError("duplicate sample id " + s.sample_id());
    }
  }
  return by_id;
}

// predictions[i] is matched with the returned samples[i]; every sample must be covered once.
template <typename Item, typename IdOf>
std::vector<const LabeledSample*> align(std::span<const Item> items, std::span<const LabeledSample> samples,
                                        IdOf id_of) {
  const auto by_id = index_samples(samples);
  std::vector<const LabeledSample*> out;
  out.reserve(items.size());
  std::unordered_map<std::string, bool> seen;
  for (const Item& item : items) {
    const std::string& id = id_of(item);
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("prediction for unknown sample " + id);
    if (!seen.emplace(id, true).second) throw ValidationError("duplicate prediction for sample " + id);
    out.push_back(it->second);
  }
  if (out.size() != samples.size()) {
    for (const LabeledSample& s : samples) {
      if (!seen.contains(s.sample_id())) throw ValidationError("no prediction for sample " + s.sample_id());
    }
  }
  return out;
}

EvalReport build_report(std::span<const MovementLabel> predicted, std::span<const LabeledSample* const> truth,
                        F1Average average, int k) {
  ConfusionMatrix overall;
  std::map<SplitTag, ConfusionMatrix> by_split;
  std::map<MovementLabel, ConfusionMatrix> by_label;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const LabeledSample& s = *truth[i];
    overall.add(s.label, predicted[i]);
    by_split[s.split].add(s.label, predicted[i]);
    by_label[s.label].add(s.label, predicted[i]);
  }
  EvalReport r;
  r.k = k;
  r.average = average;
  r.overall = evaluate(overall, average);
  for (const auto& [tag, cm] : by_split) r.per_split.emplace(tag, evaluate(cm, average));
  for (const auto& [label, cm] : by_label) r.per_label.emplace(label, evaluate(cm, average));
  return r;
}

}  // namespace

EvalReport grouped_report(std::span<const Prediction> predictions, std::span<const LabeledSample> samples,
                          F1Average average) {
  const auto truth = align(predictions, samples, [](const Prediction& p) -> const std::string& { return p.sample_id; });
  std::vector<MovementLabel> labels;
  labels.reserve(predictions.size());
  for (const Prediction& p : predictions) labels.push_back(p.label);
  return build_report(labels, truth, average, 0);
}

std::vector<EvalReport> vote_curve(std::span<const Ballot> ballots, std::span<const LabeledSample> samples,
                                   std::span<const int> ks, std::uint64_t seed, F1Average average) {
  const auto truth = align(ballots, samples, [](const Ballot& b) -> const std::string& { return b.sample_id; });
  int max_k = 0;
  for (int k : ks) {
    if (k < 1) throw DomainError("vote_curve: every k must be at least 1");
    max_k = std::max(max_k, k);
  }
  for (const Ballot& b : ballots) {
    if (b.votes.size() < static_cast<std::size_t>(max_k)) {
      throw ValidationError("sample " + b.sample_id + " has " + std::to_string(b.votes.size()) +
                            " predictions; vote_curve needs " + std::to_string(max_k));
    }
  }
  std::vector<EvalReport> reports;
  reports.reserve(ks.size());
  for (int k : ks) {
    const auto winners = batch::subsample_vote_all(ballots, static_cast<std::size_t>(k), seed);
    reports.push_back(build_report(winners, truth, average, k));
  }
  return reports;
}

std::vector<std::uint64_t> default_random_seeds(std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  std::iota(seeds.begin(), seeds.end(), std::uint64_t{0});
  return seeds;
}

RandomBound random_bound(std::span<const LabeledSample> test, std::span<const std::uint64_t> seeds,
                         F1Average average) {
  if (test.empty()) throw DomainError("random_bound: empty test set");
  if (seeds.empty()) throw DomainError("random_bound: no seeds");
  std::vector<MovementLabel> truths;
  truths.reserve(test.size());
  for (const LabeledSample& s : test) truths.push_back(s.label);
  RandomBound rb;
  rb.per_seed = batch::random_scores(truths, seeds, average);
  rb.min = *std::min_element(rb.per_seed.begin(), rb.per_seed.end());
  rb.max = *std::max_element(rb.per_seed.begin(), rb.per_seed.end());
  double sum = 0.0;
  for (double v : rb.per_seed) sum += v;
  rb.mean = sum / static_cast<double>(rb.per_seed.size());
  return rb;
}

}  // namespace retune

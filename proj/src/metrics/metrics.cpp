#include "medq/metrics/metrics.hpp"

#include <cmath>
#include <map>

#include "medq/error.hpp"

namespace medq::metrics {

std::vector<double> VoteDistribution::shares() const {
  std::vector<double> p(counts.size(), 0.0);
  if (trials == 0) return p;
  for (std::size_t i = 0; i < counts.size(); ++i) p[i] = static_cast<double>(counts[i]) / trials;
  return p;
}

double VoteDistribution::abstain_share() const {
  return trials == 0 ? 0.0 : static_cast<double>(abstained) / trials;
}

VoteDistribution vote_distribution(std::span<const std::optional<char>> labels, std::size_t k) {
  if (labels.empty()) throw InvalidArgument("vote distribution needs at least one trial");
  if (k < 2) throw InvalidArgument("vote distribution needs k >= 2");
  VoteDistribution v;
  v.counts.assign(k, 0);
  v.trials = static_cast<int>(labels.size());
  for (const auto& l : labels) {
    if (!l) {
      ++v.abstained;
      continue;
    }
    const auto idx = option_index(*l);
    if (!idx || *idx >= k) throw InvalidArgument(std::string("label '") + *l + "' outside the option set");
    ++v.counts[*idx];
  }
  return v;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

double confidence(std::span<const double> p, std::size_t k) {
  if (k < 2) throw InvalidArgument("confidence needs k >= 2");
  return 1.0 - entropy(p) / std::log(static_cast<double>(k));
}

double confidence(const VoteDistribution& votes) {
  if (votes.k() < 2) throw InvalidArgument("confidence needs k >= 2");
  const int m = votes.answered();
  if (m == 0) return 0.0;
  // Options sharing a count contribute identical terms; grouping them keeps the
  // uniform case exact: H = Σ_c (g_c·c/m)·log(m/c).
  std::map<int, int> groups;
  for (int c : votes.counts) {
    if (c > 0) ++groups[c];
  }
  double h = 0.0;
  for (const auto& [c, g] : groups) {
    h += (static_cast<double>(g) * c / m) * std::log(static_cast<double>(m) / c);
  }
  return 1.0 - h / std::log(static_cast<double>(votes.k()));
}

std::optional<char> majority_label(const VoteDistribution& votes) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < votes.counts.size(); ++i) {
    if (votes.counts[i] > 0 && (!best || votes.counts[i] > votes.counts[*best])) best = i;
  }
  if (!best) return std::nullopt;
  return option_label(*best);
}

double SampleMetrics::accuracy(AccuracyMode mode) const {
  if (mode == AccuracyMode::Majority) return majority && *majority == answer ? 1.0 : 0.0;
  if (correct.empty()) return 0.0;
  std::size_t hits = 0;
  for (bool c : correct) hits += c;
  return static_cast<double>(hits) / static_cast<double>(correct.size());
}

SampleMetrics sample_metrics(const eval::TrialRecord& record, const QAPair& pair) {
  std::vector<std::optional<char>> labels;
  labels.reserve(record.trials.size());
  for (const auto& t : record.trials) labels.push_back(t.label);
  SampleMetrics m;
  m.sample_id = record.sample_id;
  m.answer = pair.answer;
  m.votes = vote_distribution(labels, pair.options.size());
  m.confidence = confidence(m.votes);
  m.majority = majority_label(m.votes);
  for (const auto& l : labels) m.correct.push_back(l && *l == pair.answer);
  return m;
}

double accuracy(std::span<const SampleMetrics> samples, AccuracyMode mode) {
  if (samples.empty()) throw InvalidArgument("accuracy of an empty set");
  double sum = 0.0;
  for (const auto& s : samples) sum += s.accuracy(mode);
  return sum / static_cast<double>(samples.size());
}

double calibration_shift(std::span<const double> confidences, double acc) {
  if (confidences.empty()) throw InvalidArgument("calibration shift of an empty set");
  double sum = 0.0;
  for (double c : confidences) sum += c;
  return sum / static_cast<double>(confidences.size()) - acc;
}

RunMetrics run_metrics(std::string id, std::span<const SampleMetrics> samples, AccuracyMode mode) {
  RunMetrics r;
  r.id = std::move(id);
  r.accuracy = accuracy(samples, mode);
  std::vector<double> conf;
  conf.reserve(samples.size());
  for (const auto& s : samples) conf.push_back(s.confidence);
  r.calibration_shift = calibration_shift(conf, r.accuracy);
  r.mean_confidence = calibration_shift(conf, 0.0);
  r.n = samples.size();
  return r;
}

bool intra_model_dke(double acc_l0, double acc_l2, double delta_l0, double delta_l2) {
  return acc_l0 > acc_l2 && delta_l0 <= delta_l2;
}

InterModelResult inter_model_dke(std::span<const std::pair<double, double>> models) {
  if (models.size() < 2) throw InvalidArgument("inter-model comparison needs at least two models");
  InterModelResult r;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = 0; j < models.size(); ++j) {
      if (i == j) continue;
      const bool f = models[i].first < models[j].first && models[i].second > models[j].second;
      r.pairs.push_back({i, j, f});
      flagged += f;
    }
  }
  r.fraction = static_cast<double>(flagged) / static_cast<double>(r.pairs.size());
  return r;
}

}  // namespace medq::metrics

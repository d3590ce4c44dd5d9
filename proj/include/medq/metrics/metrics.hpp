#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medq/eval/harness.hpp"
#include "medq/types.hpp"

namespace medq::metrics {

/// Vote shares over k options; abstentions (no label) are kept as separate mass.
struct VoteDistribution {
  std::vector<int> counts;
  int abstained = 0;
  int trials = 0;

  std::size_t k() const { return counts.size(); }
  int answered() const { return trials - abstained; }
  /// counts[i] / trials
  std::vector<double> shares() const;
  double abstain_share() const;
};

/// Throws InvalidArgument when there are no trials, k < 2, or a label is outside A..(A+k-1).
VoteDistribution vote_distribution(std::span<const std::optional<char>> labels, std::size_t k);

/// −Σ p log p in nats with 0·log 0 = 0.
double entropy(std::span<const double> p);

/// 1 − H(p)/log k for a distribution over k options.
double confidence(std::span<const double> p, std::size_t k);

/// Confidence of a vote set. Abstentions are dropped before normalizing; an all-abstain
/// set has confidence 0. Entropy is evaluated from integer counts, so unanimity gives
/// exactly 1 and a uniform split exactly 0.
double confidence(const VoteDistribution& votes);

/// Most-voted label; ties go to the earliest option. nullopt when nothing was answered.
std::optional<char> majority_label(const VoteDistribution& votes);

enum class AccuracyMode { PerTrial, Majority };

struct SampleMetrics {
  std::string sample_id;
  VoteDistribution votes;
  double confidence = 0.0;
  std::vector<bool> correct;
  std::optional<char> majority;
  char answer = 'A';

  /// Per-trial mean or 0/1 majority correctness.
  double accuracy(AccuracyMode mode = AccuracyMode::PerTrial) const;
};

SampleMetrics sample_metrics(const eval::TrialRecord& record, const QAPair& pair);

struct RunMetrics {
  std::string id;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
  double calibration_shift = 0.0;
  std::size_t n = 0;
};

/// Mean over samples of per-sample accuracy. Throws InvalidArgument on an empty set.
double accuracy(std::span<const SampleMetrics> samples, AccuracyMode mode = AccuracyMode::PerTrial);

/// mean(confidences) − accuracy; positive means overconfident.
double calibration_shift(std::span<const double> confidences, double accuracy);

RunMetrics run_metrics(std::string id, std::span<const SampleMetrics> samples,
                       AccuracyMode mode = AccuracyMode::PerTrial);

/// Accuracy falls from L0 to L2 while the calibration shift does not shrink.
bool intra_model_dke(double acc_l0, double acc_l2, double delta_l0, double delta_l2);

struct InterModelFlag {
  std::size_t lower;   // f1
  std::size_t higher;  // f2
  bool flagged = false;
};

struct InterModelResult {
  std::vector<InterModelFlag> pairs;  // every ordered pair (i, j), i != j
  double fraction = 0.0;
};

/// flag(f1, f2) = Acc(f1) < Acc(f2) and Δ(f1) > Δ(f2). Input is (Acc, Δ) per model.
InterModelResult inter_model_dke(std::span<const std::pair<double, double>> models);

}  // namespace medq::metrics

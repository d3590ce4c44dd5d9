#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medq/eval/harness.hpp"
#include "medq/manifest.hpp"
#include "medq/metrics/metrics.hpp"

namespace medq::metrics {

enum class Axis { Severity, CapabilityMid, DegradationCategory, Modality, Model };

std::string_view to_string(Axis a);
Axis parse_axis(std::string_view name);
/// Comma-separated axis names; duplicates rejected.
std::vector<Axis> parse_axes(std::string_view csv);

struct Cell {
  std::size_t n = 0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
  double calibration_shift = 0.0;

  bool empty() const { return n == 0; }
};

/// Accuracy differences in percentage points, rounded to two decimals.
struct Drops {
  std::optional<double> l1;
  std::optional<double> l2;
  std::optional<double> l1l2;
};

double round2(double v);
/// round2(level − base) for accuracies given in percent.
double severity_drop(double level_pct, double base_pct);

struct ReportRow {
  std::vector<std::string> key;  // one value per non-severity axis
  Cell l0, l1, l2, l1l2;         // filled when severity is an axis
  Cell all;
  Drops drops;
};

struct Report {
  std::vector<Axis> axes;
  bool by_severity = false;
  AccuracyMode mode = AccuracyMode::PerTrial;
  std::vector<ReportRow> rows;
  /// Every evaluated sample once, regardless of axes.
  Cell overall;
};

Cell make_cell(std::span<const SampleMetrics* const> samples, AccuracyMode mode);

/// Joins results with the manifest and groups by the requested axes. On the
/// degradation_category axis an L0 sample is counted under each category assigned to its
/// pair, so that every category row has a clean baseline. Throws InvalidArgument for
/// results whose sample id is missing from the manifest.
Report aggregate_report(const std::vector<eval::TrialRecord>& results, const std::vector<DegradedSample>& manifest,
                        const std::vector<Axis>& axes, AccuracyMode mode = AccuracyMode::PerTrial);

std::string format_markdown(const Report& r);
std::string format_csv(const Report& r);
Json to_json(const Report& r);

}  // namespace medq::metrics

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medq/degrade/registry.hpp"
#include "medq/manifest.hpp"
#include "medq/types.hpp"

namespace medq::dataset {

struct PipelineConfig {
  double jaccard_threshold = 0.9;
  /// Relative sampling weight per type; missing types weigh 1.
  std::map<DegradationType, double> weights;
  unsigned threads = 1;
  degrade::SeverityTable table = degrade::SeverityTable::defaults();
};

/// Reads `[dedup] jaccard_threshold`, `[assignment.weights] <type> = w`, `[render] threads`
/// and the severity-table sections from one TOML file.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& toml_text);

// ---- dedup -------------------------------------------------------------------------------

/// Lowercased alphanumeric runs.
std::vector<std::string> question_tokens(const std::string& text);
/// |A ∩ B| / |A ∪ B| over token sets; two empty questions count as identical.
double token_jaccard(const std::string& a, const std::string& b);

struct DedupDrop {
  std::string pair_id;
  std::string duplicate_of;
  double similarity = 0.0;
};

struct DedupWarning {
  std::string pair_id;
  std::string message;
};

struct DedupResult {
  std::vector<QAPair> kept;
  std::vector<DedupDrop> dropped;
  std::vector<DedupWarning> warnings;
};

/// Core rule over precomputed digests (nullopt = unreadable image, skipped with a warning).
DedupResult dedup_by_digest(const std::vector<QAPair>& pairs, const std::vector<std::optional<std::string>>& digests,
                            double threshold = 0.9);

/// Loads each image (paths relative to `base_dir`) and applies dedup_by_digest.
DedupResult dedup_pool(const std::vector<QAPair>& pairs, const std::filesystem::path& base_dir,
                       double threshold = 0.9);

// ---- assignment --------------------------------------------------------------------------

inline constexpr int kTypesPerPair = 3;

std::string sample_id_for(const std::string& pair_id, const DegradationSpec& spec);

/// One L0 sample plus three distinct compatible types at L1 and L2 (seven samples).
/// Specs carry the severity but not yet resolved parameters.
std::vector<DegradedSample> assign_degradations(const QAPair& pair, std::uint64_t run_seed,
                                                const PipelineConfig& config = {});

// ---- review ------------------------------------------------------------------------------

enum class ReviewAction { Retain, Discard };

struct ReviewDecision {
  std::string sample_id;
  ReviewAction action = ReviewAction::Retain;
  std::optional<DiscardReason> reason;
  std::string annotator;
  std::string timestamp;
};

Json to_json(const ReviewDecision& d);
/// Throws ParseError for unknown actions, unknown reasons or a discard without reason.
ReviewDecision decision_from_json(const Json& j);
std::vector<ReviewDecision> read_decisions(const std::filesystem::path& path);

struct ReviewSummary {
  std::size_t total = 0;
  std::size_t retained = 0;
  std::size_t discarded = 0;
  std::size_t pending = 0;
  double removal_fraction = 0.0;
  std::map<std::string, std::size_t> reasons;
};

struct ReviewOutcome {
  std::vector<DegradedSample> manifest;  // discarded samples removed
  std::vector<DegradedSample> removed;
  ReviewSummary summary;
};

/// A discard from any annotator wins over retains for the same sample.
/// Throws InvalidArgument for unknown or already-reviewed samples and reasonless discards.
ReviewOutcome apply_review(const std::vector<DegradedSample>& manifest, const std::vector<ReviewDecision>& decisions);

Json to_json(const ReviewSummary& s);

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

// ---- build -------------------------------------------------------------------------------

/// Per-category and per-type counts over degraded (non-L0) samples.
Json compute_stats(const std::vector<DegradedSample>& samples);

struct BuildResult {
  std::vector<DegradedSample> samples;
  DedupResult dedup;
  Json stats;
};

/// Reads `<pool_dir>/pool.jsonl`, dedups, assigns, renders `<out_dir>/images/<sample_id>.png`
/// and writes manifest.jsonl, stats.json and build_info.json (timestamps only live there).
BuildResult build_manifest(const std::filesystem::path& pool_dir, const std::filesystem::path& out_dir,
                           const PipelineConfig& config, std::uint64_t run_seed);

}  // namespace medq::dataset

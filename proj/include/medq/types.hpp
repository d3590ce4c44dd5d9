#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace medq {

enum class Modality { MRI, CT, XRay, Ultrasound, Dermoscopy, Histopathology, Endoscopy };

inline constexpr std::array<Modality, 7> kAllModalities = {
    Modality::MRI,        Modality::CT,         Modality::XRay,     Modality::Ultrasound,
    Modality::Dermoscopy, Modality::Histopathology, Modality::Endoscopy};

std::string_view to_string(Modality m);
/// Accepts canonical names case-insensitively plus the aliases "X-ray" and "Pathology".
Modality parse_modality(std::string_view name);

enum class Severity { L0 = 0, L1 = 1, L2 = 2 };

std::string_view to_string(Severity s);
Severity parse_severity(std::string_view name);

enum class Category { Artifacts, Motion, Intensity, Noise, ResolutionBlur };

inline constexpr std::array<Category, 5> kAllCategories = {
    Category::Artifacts, Category::Motion, Category::Intensity, Category::Noise,
    Category::ResolutionBlur};

std::string_view to_string(Category c);
Category parse_category(std::string_view name);

enum class DegradationType {
  LimitedAngle,
  SparseView,
  BiasField,
  Undersampling,
  Ghosting,
  BloodCell,
  DarkSpots,
  ObjectRotation,
  ObjectMovement,
  AdjustBrightness,
  Exposure,
  ReduceContrast,
  GaussianNoise,
  LowDose,
  LowResolution,
  MotionBlur,
  GaussianBlur,
  Bubble,
};

inline constexpr std::size_t kDegradationTypeCount = 18;

/// Static taxonomy entry: identifier, parent category and the modalities it applies to.
struct DegradationInfo {
  DegradationType type;
  std::string_view name;
  Category category;
  /// Empty means every modality.
  std::span<const Modality> modalities;

  bool general() const noexcept { return modalities.empty(); }
  bool supports(Modality m) const noexcept;
};

std::span<const DegradationInfo> degradation_catalog();
const DegradationInfo& info(DegradationType t);
std::string_view to_string(DegradationType t);
DegradationType parse_degradation_type(std::string_view name);

/// Named scalar parameters of one applied degradation. Integers are stored as reals.
using ParamMap = std::map<std::string, double>;

struct DegradationSpec {
  /// Unset only for the L0 identity spec.
  std::optional<DegradationType> type;
  Severity severity = Severity::L0;
  ParamMap params;
  std::uint64_t seed = 0;

  static DegradationSpec identity() { return {}; }
  bool operator==(const DegradationSpec&) const = default;
};

struct CapabilityPath {
  std::string high;
  std::string mid;
  std::string fine;
  bool operator==(const CapabilityPath&) const = default;
};

struct QAPair {
  std::string id;
  std::string image_path;
  std::string question;
  std::vector<std::string> options;
  char answer = 'A';
  Modality modality = Modality::CT;
  CapabilityPath capability;
  std::string source;

  bool operator==(const QAPair&) const = default;
};

/// Option label for zero-based index: 0 -> 'A'.
constexpr char option_label(std::size_t index) { return static_cast<char>('A' + index); }
/// Zero-based index of a label, or nullopt when outside A..Z.
std::optional<std::size_t> option_index(char label);

enum class DiscardReason {
  PoorBaseline,
  ModalityMismatch,
  SevereOverDegradation,
  InsufficientL2,
  ClinicallyIrrelevant,
};

inline constexpr std::array<DiscardReason, 5> kAllDiscardReasons = {
    DiscardReason::PoorBaseline, DiscardReason::ModalityMismatch,
    DiscardReason::SevereOverDegradation, DiscardReason::InsufficientL2,
    DiscardReason::ClinicallyIrrelevant};

std::string_view to_string(DiscardReason r);
DiscardReason parse_discard_reason(std::string_view name);

enum class ReviewState { Pending, Retained, Discarded };

std::string_view to_string(ReviewState s);
ReviewState parse_review_state(std::string_view name);

struct ReviewStatus {
  ReviewState state = ReviewState::Pending;
  std::optional<DiscardReason> reason;
  bool operator==(const ReviewStatus&) const = default;
};

/// One manifest record: a QA pair bound to one applied degradation.
struct DegradedSample {
  std::string sample_id;
  QAPair pair;  // pair.id is the parent id; pair.image_path is the degraded image
  DegradationSpec spec;
  ReviewStatus review;

  bool operator==(const DegradedSample&) const = default;
};

/// Predicate selecting a subset of the manifest.
struct EvalFilter {
  std::optional<Severity> severity;
  std::optional<Category> category;
  std::optional<Modality> modality;
  std::optional<std::string> capability_mid;

  bool matches(const DegradedSample& s) const;
};

struct EvalSet {
  std::string name;
  EvalFilter filter;
  std::vector<std::string> sample_ids;
};

/// Builds an eval set over non-discarded samples; throws when the result is empty.
EvalSet select(std::string name, std::span<const DegradedSample> samples, const EvalFilter& filter);

struct ModelEndpoint {
  std::string name;
  std::string base_url;
  /// Environment variable holding the API key.
  std::string credential_env = "MEDQ_API_KEY";
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  double temperature = 1.0;
};

}  // namespace medq

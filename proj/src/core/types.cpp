#include "medq/types.hpp"

#include <algorithm>
#include <cctype>

#include "medq/error.hpp"

namespace medq {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

constexpr std::array<Modality, 1> kCtOnly = {Modality::CT};
constexpr std::array<Modality, 1> kMriOnly = {Modality::MRI};
constexpr std::array<Modality, 1> kPathologyOnly = {Modality::Histopathology};

// Order follows the taxonomy table: Artifacts, Motion, Intensity, Noise, Resolution & Blur.
constexpr std::array<DegradationInfo, kDegradationTypeCount> kCatalog = {{
    {DegradationType::LimitedAngle, "limited_angle", Category::Artifacts, kCtOnly},
    {DegradationType::SparseView, "sparse_view", Category::Artifacts, kCtOnly},
    {DegradationType::BiasField, "bias_field_artifact", Category::Artifacts, kMriOnly},
    {DegradationType::Undersampling, "undersampling_artifact", Category::Artifacts, kMriOnly},
    {DegradationType::Ghosting, "ghosting_artifact", Category::Artifacts, kMriOnly},
    {DegradationType::BloodCell, "blood_cell_artifact", Category::Artifacts, kPathologyOnly},
    {DegradationType::DarkSpots, "dark_spots_artifact", Category::Artifacts, kPathologyOnly},
    {DegradationType::ObjectRotation, "object_rotation", Category::Motion, {}},
    {DegradationType::ObjectMovement, "object_movement", Category::Motion, {}},
    {DegradationType::AdjustBrightness, "adjust_brightness", Category::Intensity, {}},
    {DegradationType::Exposure, "exposure", Category::Intensity, {}},
    {DegradationType::ReduceContrast, "reduce_contrast", Category::Intensity, {}},
    {DegradationType::GaussianNoise, "gaussian_noise", Category::Noise, {}},
    {DegradationType::LowDose, "low_dose", Category::Noise, kCtOnly},
    {DegradationType::LowResolution, "low_resolution", Category::ResolutionBlur, {}},
    {DegradationType::MotionBlur, "motion_blur", Category::ResolutionBlur, {}},
    {DegradationType::GaussianBlur, "gaussian_blur", Category::ResolutionBlur, {}},
    {DegradationType::Bubble, "bubble", Category::ResolutionBlur, kPathologyOnly},
}};

}  // namespace

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::MRI: return "MRI";
    case Modality::CT: return "CT";
    case Modality::XRay: return "XRay";
    case Modality::Ultrasound: return "Ultrasound";
    case Modality::Dermoscopy: return "Dermoscopy";
    case Modality::Histopathology: return "Histopathology";
    case Modality::Endoscopy: return "Endoscopy";
  }
  return "?";
}

Modality parse_modality(std::string_view name) {
  for (Modality m : kAllModalities) {
    if (iequals(name, to_string(m))) return m;
  }
  if (iequals(name, "X-ray") || iequals(name, "X-Ray")) return Modality::XRay;
  if (iequals(name, "Pathology")) return Modality::Histopathology;
  throw InvalidArgument("unknown modality: " + std::string(name));
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::L0: return "L0";
    case Severity::L1: return "L1";
    case Severity::L2: return "L2";
  }
  return "?";
}

Severity parse_severity(std::string_view name) {
  if (iequals(name, "L0") || name == "0") return Severity::L0;
  if (iequals(name, "L1") || name == "1") return Severity::L1;
  if (iequals(name, "L2") || name == "2") return Severity::L2;
  throw InvalidArgument("unknown severity: " + std::string(name));
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Artifacts: return "Artifacts";
    case Category::Motion: return "Motion";
    case Category::Intensity: return "Intensity";
    case Category::Noise: return "Noise";
    case Category::ResolutionBlur: return "ResolutionBlur";
  }
  return "?";
}

Category parse_category(std::string_view name) {
  for (Category c : kAllCategories) {
    if (iequals(name, to_string(c))) return c;
  }
  throw InvalidArgument("unknown degradation category: " + std::string(name));
}

bool DegradationInfo::supports(Modality m) const noexcept {
  return general() || std::find(modalities.begin(), modalities.end(), m) != modalities.end();
}

std::span<const DegradationInfo> degradation_catalog() { return kCatalog; }

const DegradationInfo& info(DegradationType t) {
  for (const auto& entry : kCatalog) {
    if (entry.type == t) return entry;
  }
  throw InvalidArgument("unknown degradation type");
}

std::string_view to_string(DegradationType t) { return info(t).name; }

DegradationType parse_degradation_type(std::string_view name) {
  for (const auto& entry : kCatalog) {
    if (entry.name == name) return entry.type;
  }
  throw InvalidArgument("unknown degradation type: " + std::string(name));
}

std::optional<std::size_t> option_index(char label) {
  if (label < 'A' || label > 'Z') return std::nullopt;
  return static_cast<std::size_t>(label - 'A');
}

std::string_view to_string(DiscardReason r) {
  switch (r) {
    case DiscardReason::PoorBaseline: return "poor_baseline";
    case DiscardReason::ModalityMismatch: return "modality_mismatch";
    case DiscardReason::SevereOverDegradation: return "severe_over_degradation";
    case DiscardReason::InsufficientL2: return "insufficient_L2";
    case DiscardReason::ClinicallyIrrelevant: return "clinically_irrelevant";
  }
  return "?";
}

DiscardReason parse_discard_reason(std::string_view name) {
  for (DiscardReason r : kAllDiscardReasons) {
    if (name == to_string(r)) return r;
  }
  throw InvalidArgument("unknown discard reason: " + std::string(name));
}

std::string_view to_string(ReviewState s) {
  switch (s) {
    case ReviewState::Pending: return "pending";
    case ReviewState::Retained: return "retained";
    case ReviewState::Discarded: return "discarded";
  }
  return "?";
}

ReviewState parse_review_state(std::string_view name) {
  if (name == "pending") return ReviewState::Pending;
  if (name == "retained") return ReviewState::Retained;
  if (name == "discarded") return ReviewState::Discarded;
  throw InvalidArgument("unknown review status: " + std::string(name));
}

bool EvalFilter::matches(const DegradedSample& s) const {
  if (severity && s.spec.severity != *severity) return false;
  if (category) {
    if (!s.spec.type || info(*s.spec.type).category != *category) return false;
  }
  if (modality && s.pair.modality != *modality) return false;
  if (capability_mid && s.pair.capability.mid != *capability_mid) return false;
  return true;
}

EvalSet select(std::string name, std::span<const DegradedSample> samples, const EvalFilter& filter) {
  EvalSet set{std::move(name), filter, {}};
  for (const auto& s : samples) {
    if (s.review.state == ReviewState::Discarded) continue;
    if (filter.matches(s)) set.sample_ids.push_back(s.sample_id);
  }
  if (set.sample_ids.empty()) throw InvalidArgument("evaluation set '" + set.name + "' is empty");
  return set;
}

}  // namespace medq

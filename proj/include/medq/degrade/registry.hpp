#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "medq/degrade/pathology.hpp"
#include "medq/degrade/toml_lite.hpp"
#include "medq/image.hpp"
#include "medq/types.hpp"

namespace medq::degrade {

/// One parameter of the continuous severity map: value(t) = identity + t·(at_one - identity),
/// rounded for integer parameters.
struct ParamCurve {
  std::string name;
  double identity = 0.0;
  double at_one = 0.0;
  bool integer = false;

  double at(double t) const;
};

struct SeverityEntry {
  DegradationType type{};
  std::vector<ParamCurve> curves;
  /// Parameters that do not vary with severity.
  ParamMap fixed;
  /// Severity-map positions of L1 and L2: 0 < t_l1 < t_l2 <= 1.
  double t_l1 = 0.5;
  double t_l2 = 1.0;
};

/// Maps (type, severity or continuous t) to concrete operator parameters.
class SeverityTable {
 public:
  /// Built-in calibration defaults.
  static SeverityTable defaults();

  /// Defaults overridden by a TOML document. Type sections accept `t_l1`, `t_l2`, any curve
  /// name (its value at t = 1) or fixed parameter; `[<type>.modality.<Modality>]` sections
  /// override t_l1/t_l2 for one modality; `[overlay]` sets the pathology overlay colors.
  static SeverityTable from_toml(const toml::Document& doc);
  static SeverityTable from_toml_text(const std::string& text);

  const SeverityEntry& entry(DegradationType type) const;

  ParamMap identity(DegradationType type) const;
  ParamMap params_at(DegradationType type, double t) const;
  ParamMap severity_params(DegradationType type, Severity severity,
                           std::optional<Modality> modality = std::nullopt) const;
  /// Name-based lookup; throws InvalidArgument for unknown type names.
  ParamMap severity_params(const std::string& type_name, Severity severity) const;

  std::pair<double, double> thresholds(DegradationType type,
                                       std::optional<Modality> modality = std::nullopt) const;
  /// Validates 0 < t_l1 < t_l2 <= 1.
  void set_thresholds(DegradationType type, std::optional<Modality> modality, double t_l1, double t_l2);

  const OverlayStyle& overlay_style() const { return overlay_; }

  std::string to_toml() const;

 private:
  std::array<SeverityEntry, kDegradationTypeCount> entries_{};
  std::map<std::pair<DegradationType, Modality>, std::pair<double, double>> per_modality_;
  OverlayStyle overlay_;
};

const SeverityTable& default_table();

/// Types whose modality set contains `modality`, in catalog order.
std::vector<DegradationType> compatible_types(Modality modality);

/// True when every severity-dependent parameter sits at its identity value.
bool is_identity(DegradationType type, const ParamMap& params, const SeverityTable& table = default_table());

/// Fills seed-dependent and size-dependent parameters (directions, angles, coefficients,
/// pixel radii, photon counts). Keys already present are kept, so the call is idempotent.
ParamMap materialize(DegradationType type, const ParamMap& params, std::uint64_t seed, int width, int height);

/// Calls the concrete operator for `type` with fully materialized parameters.
Image apply_params(const Image& img, DegradationType type, const ParamMap& params, std::uint64_t seed,
                   const OverlayStyle& style = {});

/// Completes a spec against the table and image size: table parameters for its severity
/// (when none are given) plus materialized extras. L0 specs come back as the identity spec.
DegradationSpec resolve_spec(const DegradationSpec& spec, Modality modality, int width, int height,
                             const SeverityTable& table = default_table());

/// I_c = C(I_0; θ). L0 and identity parameters return the input unchanged.
/// Throws IncompatibleModality, or InvalidArgument for bad parameters or images under 8 px.
Image apply_degradation(const Image& img, Modality modality, const DegradationSpec& spec,
                        const SeverityTable& table = default_table());

}  // namespace medq::degrade

#include "medq/degrade/registry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "medq/degrade/ct.hpp"
#include "medq/degrade/general.hpp"
#include "medq/degrade/mri.hpp"
#include "medq/error.hpp"

namespace medq::degrade {

double ParamCurve::at(double t) const {
  const double v = identity + t * (at_one - identity);
  return integer ? static_cast<double>(std::lround(v)) : v;
}

namespace {

using DT = DegradationType;

// Calibration defaults. Each curve runs from the identity point (t = 0) to its t = 1 value;
// L1/L2 sit at t_l1/t_l2 on that map.
std::array<SeverityEntry, kDegradationTypeCount> default_entries() {
  return {{
      {DT::LimitedAngle, {{"arc_deg", 180.0, 90.0, false}}, {{"views", kFullViews}}, 2.0 / 3.0, 1.0},
      {DT::SparseView, {{"stride", 1.0, 12.0, true}}, {{"views", kFullViews}}, 3.0 / 11.0, 1.0},
      {DT::BiasField, {{"scale", 0.0, 0.7, false}}, {{"order", 3.0}}, 3.0 / 7.0, 1.0},
      {DT::Undersampling, {{"retain", 1.0, 0.2, false}}, {{"acs", 0.08}}, 0.75, 1.0},
      {DT::Ghosting, {{"alpha", 0.0, 0.35, false}}, {{"ghosts", 4.0}, {"axis", 0.0}}, 3.0 / 7.0, 1.0},
      {DT::BloodCell,
       {{"count", 0.0, 24.0, true}, {"opacity", 0.0, 0.9, false}},
       {{"r_min_frac", 0.025}, {"r_max_frac", 0.045}},
       0.5,
       1.0},
      {DT::DarkSpots,
       {{"count", 0.0, 10.0, true}, {"opacity", 0.0, 0.85, false}},
       {{"r_min_frac", 0.03}, {"r_max_frac", 0.06}},
       0.5,
       1.0},
      {DT::ObjectRotation, {{"degrees", 0.0, 25.0, false}}, {}, 0.4, 1.0},
      {DT::ObjectMovement, {{"shift_frac", 0.0, 0.12, false}}, {}, 5.0 / 12.0, 1.0},
      {DT::AdjustBrightness, {{"delta", 0.0, 0.30, false}}, {}, 0.5, 1.0},
      {DT::Exposure, {{"gamma", 1.0, 2.5, false}}, {}, 1.0 / 3.0, 1.0},
      {DT::ReduceContrast, {{"alpha", 1.0, 0.35, false}}, {}, 8.0 / 13.0, 1.0},
      {DT::GaussianNoise, {{"sigma", 0.0, 0.10, false}}, {}, 0.4, 1.0},
      // noise_scale = 1/sqrt(photons): 10^5 photons at L1, 10^4 at L2.
      {DT::LowDose, {{"noise_scale", 0.0, 0.01, false}}, {{"views", kFullViews}}, 0.31622776601683794, 1.0},
      {DT::LowResolution, {{"factor", 1.0, 4.0, true}}, {}, 1.0 / 3.0, 1.0},
      {DT::MotionBlur, {{"length", 1.0, 15.0, true}}, {}, 3.0 / 7.0, 1.0},
      {DT::GaussianBlur, {{"sigma", 0.0, 3.0, false}}, {}, 0.5, 1.0},
      {DT::Bubble,
       {{"count", 0.0, 6.0, true}, {"opacity", 0.0, 0.9, false}},
       {{"r_min_frac", 0.06}, {"r_max_frac", 0.12}},
       0.5,
       1.0},
  }};
}

void check_thresholds(double t_l1, double t_l2) {
  if (!(t_l1 > 0.0 && t_l1 < t_l2 && t_l2 <= 1.0)) {
    throw InvalidArgument("severity thresholds must satisfy 0 < t_l1 < t_l2 <= 1");
  }
}

double number_value(const toml::Value& v, const std::string& key) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw ParseError("config key '" + key + "' must be a number");
}

double param(const ParamMap& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw InvalidArgument("missing degradation parameter '" + key + "'");
  return it->second;
}

double param_or(const ParamMap& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

int int_param(const ParamMap& p, const std::string& key) { return static_cast<int>(std::lround(param(p, key))); }

}  // namespace

SeverityTable SeverityTable::defaults() {
  SeverityTable t;
  auto entries = default_entries();
  for (auto& e : entries) t.entries_[static_cast<std::size_t>(e.type)] = std::move(e);
  return t;
}

SeverityTable SeverityTable::from_toml(const toml::Document& doc) {
  SeverityTable t = defaults();
  for (const auto& [header, table] : doc.tables) {
    if (header.empty()) continue;
    if (header == "overlay") {
      for (const auto& [key, value] : table) {
        if (key == "blood_cell_rgb") {
          const auto* arr = std::get_if<std::vector<double>>(&value);
          if (!arr || arr->size() != 3) throw ParseError("overlay.blood_cell_rgb must be a 3-element array");
          std::copy(arr->begin(), arr->end(), t.overlay_.blood_cell_rgb.begin());
        } else if (key == "dark_spot_intensity") {
          t.overlay_.dark_spot_intensity = number_value(value, key);
        } else if (key == "bubble_brightening") {
          t.overlay_.bubble_brightening = number_value(value, key);
        } else if (key == "bubble_rim_factor") {
          t.overlay_.bubble_rim_factor = number_value(value, key);
        } else if (key == "bubble_interior_weight") {
          t.overlay_.bubble_interior_weight = number_value(value, key);
        } else {
          throw ParseError("unknown overlay key '" + key + "'");
        }
      }
      continue;
    }
    const auto dot = header.find('.');
    const std::string type_name = header.substr(0, dot);
    std::optional<DegradationType> type;
    for (const auto& e : degradation_catalog()) {
      if (e.name == type_name) type = e.type;
    }
    if (!type) continue;  // sections owned by other components
    if (dot != std::string::npos) {
      const std::string rest = header.substr(dot + 1);
      if (rest.rfind("modality.", 0) != 0) throw ParseError("unknown section [" + header + "]");
      const Modality m = parse_modality(rest.substr(9));
      auto [t1, t2] = t.thresholds(*type);
      if (auto it = table.find("t_l1"); it != table.end()) t1 = number_value(it->second, "t_l1");
      if (auto it = table.find("t_l2"); it != table.end()) t2 = number_value(it->second, "t_l2");
      for (const auto& [key, _] : table) {
        if (key != "t_l1" && key != "t_l2") throw ParseError("only t_l1/t_l2 may vary per modality: " + key);
      }
      t.set_thresholds(*type, m, t1, t2);
      continue;
    }
    auto& entry = t.entries_[static_cast<std::size_t>(*type)];
    for (const auto& [key, value] : table) {
      const double v = number_value(value, key);
      if (key == "t_l1") {
        entry.t_l1 = v;
      } else if (key == "t_l2") {
        entry.t_l2 = v;
      } else if (auto c = std::find_if(entry.curves.begin(), entry.curves.end(),
                                       [&](const ParamCurve& pc) { return pc.name == key; });
                 c != entry.curves.end()) {
        c->at_one = v;
      } else if (entry.fixed.count(key)) {
        entry.fixed[key] = v;
      } else {
        throw ParseError("unknown parameter '" + key + "' for " + type_name);
      }
    }
    check_thresholds(entry.t_l1, entry.t_l2);
  }
  return t;
}

SeverityTable SeverityTable::from_toml_text(const std::string& text) { return from_toml(toml::parse(text)); }

const SeverityEntry& SeverityTable::entry(DegradationType type) const {
  return entries_.at(static_cast<std::size_t>(type));
}

ParamMap SeverityTable::identity(DegradationType type) const { return params_at(type, 0.0); }

ParamMap SeverityTable::params_at(DegradationType type, double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("severity position t must be in [0, 1]");
  const auto& e = entry(type);
  ParamMap p = e.fixed;
  for (const auto& c : e.curves) p[c.name] = c.at(t);
  return p;
}

ParamMap SeverityTable::severity_params(DegradationType type, Severity severity,
                                        std::optional<Modality> modality) const {
  if (severity == Severity::L0) return identity(type);
  const auto [t1, t2] = thresholds(type, modality);
  return params_at(type, severity == Severity::L1 ? t1 : t2);
}

ParamMap SeverityTable::severity_params(const std::string& type_name, Severity severity) const {
  return severity_params(parse_degradation_type(type_name), severity);
}

std::pair<double, double> SeverityTable::thresholds(DegradationType type, std::optional<Modality> modality) const {
  if (modality) {
    auto it = per_modality_.find({type, *modality});
    if (it != per_modality_.end()) return it->second;
  }
  const auto& e = entry(type);
  return {e.t_l1, e.t_l2};
}

void SeverityTable::set_thresholds(DegradationType type, std::optional<Modality> modality, double t_l1,
                                   double t_l2) {
  check_thresholds(t_l1, t_l2);
  if (modality) {
    per_modality_[{type, *modality}] = {t_l1, t_l2};
  } else {
    auto& e = entries_.at(static_cast<std::size_t>(type));
    e.t_l1 = t_l1;
    e.t_l2 = t_l2;
  }
}

std::string SeverityTable::to_toml() const {
  std::ostringstream os;
  os << "[overlay]\n";
  os << "blood_cell_rgb = [" << toml::format_number(overlay_.blood_cell_rgb[0]) << ", "
     << toml::format_number(overlay_.blood_cell_rgb[1]) << ", " << toml::format_number(overlay_.blood_cell_rgb[2])
     << "]\n";
  os << "dark_spot_intensity = " << toml::format_number(overlay_.dark_spot_intensity) << "\n";
  os << "bubble_brightening = " << toml::format_number(overlay_.bubble_brightening) << "\n";
  os << "bubble_rim_factor = " << toml::format_number(overlay_.bubble_rim_factor) << "\n";
  os << "bubble_interior_weight = " << toml::format_number(overlay_.bubble_interior_weight) << "\n";
  for (const auto& e : entries_) {
    os << "\n[" << to_string(e.type) << "]\n";
    os << "t_l1 = " << toml::format_number(e.t_l1) << "\n";
    os << "t_l2 = " << toml::format_number(e.t_l2) << "\n";
    for (const auto& c : e.curves) os << c.name << " = " << toml::format_number(c.at_one) << "\n";
    for (const auto& [k, v] : e.fixed) os << k << " = " << toml::format_number(v) << "\n";
    for (const auto& [key, th] : per_modality_) {
      if (key.first != e.type) continue;
      os << "\n[" << to_string(e.type) << ".modality." << to_string(key.second) << "]\n";
      os << "t_l1 = " << toml::format_number(th.first) << "\n";
      os << "t_l2 = " << toml::format_number(th.second) << "\n";
    }
  }
  return os.str();
}

const SeverityTable& default_table() {
  static const SeverityTable table = SeverityTable::defaults();
  return table;
}

std::vector<DegradationType> compatible_types(Modality modality) {
  std::vector<DegradationType> out;
  for (const auto& e : degradation_catalog()) {
    if (e.supports(modality)) out.push_back(e.type);
  }
  return out;
}

bool is_identity(DegradationType type, const ParamMap& params, const SeverityTable& table) {
  for (const auto& c : table.entry(type).curves) {
    auto it = params.find(c.name);
    if (it != params.end() && it->second != c.identity) return false;
  }
  return true;
}

namespace {

constexpr std::uint64_t kNuisanceStream = 0x9e3779b97f4a7c15ULL;

std::vector<double> bias_coefficients(double scale, int order, std::mt19937_64& rng) {
  const int n = bias_basis_size(order);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> raw(n, 0.0);
  for (int j = 1; j < n; ++j) raw[j] = unit(rng);
  // Normalize so the log-field peaks at |scale| over [-1, 1]^2 (sampled on a 33 x 33 grid).
  const auto field = bias_field_map(33, 33, raw, order);
  double peak = 0.0;
  for (double f : field) peak = std::max(peak, std::abs(std::log(f)));
  if (peak > 0.0) {
    for (double& c : raw) c *= scale / peak;
  }
  return raw;
}

}  // namespace

ParamMap materialize(DegradationType type, const ParamMap& params, std::uint64_t seed, int width, int height) {
  ParamMap p = params;
  std::mt19937_64 rng(seed ^ kNuisanceStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto direction = [&] { return unit(rng) < 0.5 ? -1.0 : 1.0; };
  const double short_edge = std::min(width, height);
  switch (type) {
    case DT::MotionBlur:
      if (!p.count("angle_deg")) p["angle_deg"] = 180.0 * unit(rng);
      break;
    case DT::AdjustBrightness:
    case DT::Exposure:
    case DT::ObjectRotation:
      if (!p.count("direction")) p["direction"] = direction();
      break;
    case DT::ObjectMovement:
      if (!p.count("dx_px") || !p.count("dy_px")) {
        const double frac = param(p, "shift_frac");
        const double theta = 2.0 * 3.14159265358979323846 * unit(rng);
        p["dx_px"] = frac * width * std::cos(theta);
        p["dy_px"] = frac * height * std::sin(theta);
      }
      break;
    case DT::LowDose:
      if (!p.count("photons")) {
        const double s = param(p, "noise_scale");
        if (s > 0.0) p["photons"] = 1.0 / (s * s);
      }
      break;
    case DT::BiasField:
      if (!p.count("c0")) {
        const int order = int_param(p, "order");
        const auto coeffs = bias_coefficients(param(p, "scale"), order, rng);
        for (std::size_t j = 0; j < coeffs.size(); ++j) p["c" + std::to_string(j)] = coeffs[j];
      }
      break;
    case DT::BloodCell:
    case DT::DarkSpots:
    case DT::Bubble:
      if (!p.count("r_min_px") || !p.count("r_max_px")) {
        const double cap = 0.5 * short_edge;
        const double lo = std::min(cap, std::max(1.0, param(p, "r_min_frac") * short_edge));
        const double hi = std::min(cap, std::max(lo, param(p, "r_max_frac") * short_edge));
        p["r_min_px"] = lo;
        p["r_max_px"] = hi;
      }
      break;
    default:
      break;
  }
  return p;
}

Image apply_params(const Image& img, DegradationType type, const ParamMap& p, std::uint64_t seed,
                   const OverlayStyle& style) {
  switch (type) {
    case DT::GaussianNoise: return gaussian_noise(img, param(p, "sigma"), seed);
    case DT::GaussianBlur: return gaussian_blur(img, param(p, "sigma"));
    case DT::MotionBlur: return motion_blur(img, int_param(p, "length"), param(p, "angle_deg"));
    case DT::LowResolution: return low_resolution(img, int_param(p, "factor"));
    case DT::AdjustBrightness: return adjust_brightness(img, param(p, "delta") * param_or(p, "direction", 1.0));
    case DT::Exposure: {
      const double g = param(p, "gamma");
      return gamma_exposure(img, param_or(p, "direction", 1.0) < 0 ? 1.0 / g : g);
    }
    case DT::ReduceContrast: return reduce_contrast(img, param(p, "alpha"));
    case DT::ObjectRotation: return rotate_image(img, param(p, "degrees") * param_or(p, "direction", 1.0));
    case DT::ObjectMovement: return translate_image(img, param(p, "dx_px"), param(p, "dy_px"));
    case DT::SparseView:
      return sparse_view(img, int_param(p, "stride"), static_cast<int>(param_or(p, "views", kFullViews)));
    case DT::LimitedAngle:
      return limited_angle(img, param(p, "arc_deg"), static_cast<int>(param_or(p, "views", kFullViews)));
    case DT::LowDose:
      return low_dose(img, param(p, "photons"), seed, static_cast<int>(param_or(p, "views", kFullViews)));
    case DT::Undersampling: return undersample_kspace(img, param(p, "retain"), param(p, "acs"), seed);
    case DT::Ghosting:
      return ghosting(img, int_param(p, "ghosts"), param(p, "alpha"),
                      param_or(p, "axis", 0.0) == 0.0 ? GhostAxis::Rows : GhostAxis::Cols);
    case DT::BiasField: {
      const int order = int_param(p, "order");
      std::vector<double> coeffs(bias_basis_size(order));
      for (std::size_t j = 0; j < coeffs.size(); ++j) coeffs[j] = param(p, "c" + std::to_string(j));
      return bias_field(img, coeffs, order);
    }
    case DT::BloodCell:
    case DT::DarkSpots:
    case DT::Bubble: {
      const OverlayKind kind = type == DT::BloodCell   ? OverlayKind::BloodCell
                               : type == DT::DarkSpots ? OverlayKind::DarkSpot
                                                       : OverlayKind::Bubble;
      return overlay_artifact(img, kind, int_param(p, "count"), param(p, "r_min_px"), param(p, "r_max_px"),
                              param(p, "opacity"), seed, style);
    }
  }
  throw InvalidArgument("unknown degradation type");
}

DegradationSpec resolve_spec(const DegradationSpec& spec, Modality modality, int width, int height,
                             const SeverityTable& table) {
  if (spec.severity == Severity::L0) {
    DegradationSpec id = DegradationSpec::identity();
    id.seed = spec.seed;
    return id;
  }
  if (!spec.type) throw InvalidArgument("degraded spec has no degradation type");
  DegradationSpec out = spec;
  ParamMap p = table.severity_params(*spec.type, spec.severity, modality);
  for (const auto& [k, v] : spec.params) p[k] = v;
  out.params = is_identity(*spec.type, p, table) ? p : materialize(*spec.type, p, spec.seed, width, height);
  return out;
}

Image apply_degradation(const Image& img, Modality modality, const DegradationSpec& spec,
                        const SeverityTable& table) {
  if (!spec.type) {
    if (spec.severity == Severity::L0) return img;
    throw InvalidArgument("degraded spec has no degradation type");
  }
  if (!info(*spec.type).supports(modality)) {
    throw IncompatibleModality("degradation '" + std::string(to_string(*spec.type)) +
                               "' is not compatible with modality " + std::string(to_string(modality)));
  }
  if (img.width() < Image::kMinEdge || img.height() < Image::kMinEdge) {
    throw InvalidArgument("image edges must be at least 8 pixels");
  }
  if (spec.severity == Severity::L0) return img;
  const DegradationSpec resolved = resolve_spec(spec, modality, img.width(), img.height(), table);
  if (is_identity(*spec.type, resolved.params, table)) return img;
  Image out = apply_params(img, *spec.type, resolved.params, spec.seed, table.overlay_style());
  clamp_unit(out);
  return out;
}

}  // namespace medq::degrade

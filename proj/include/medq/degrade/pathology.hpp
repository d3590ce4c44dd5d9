#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "medq/image.hpp"

namespace medq::degrade {

enum class OverlayKind { BloodCell, DarkSpot, Bubble };

std::string_view to_string(OverlayKind k);

struct OverlayStyle {
  std::array<double, 3> blood_cell_rgb = {0.55, 0.08, 0.10};
  double dark_spot_intensity = 0.08;
  double bubble_brightening = 0.15;
  /// Bubble rims are drawn at this fraction of the underlying intensity.
  double bubble_rim_factor = 0.5;
  /// Interior mask weight of a bubble (rims weigh 1).
  double bubble_interior_weight = 0.5;
};

/// Rasterized artifact mask m in [0,1] for one overlay draw (same RNG stream as overlay_artifact).
std::vector<float> overlay_mask(int width, int height, OverlayKind kind, int count, double radius_min,
                                double radius_max, std::uint64_t seed);

/// out = (1 - m·opacity)·in + m·opacity·artifact_color. Disk centers are uniform over the
/// image and overlaps are allowed.
Image overlay_artifact(const Image& img, OverlayKind kind, int count, double radius_min_px,
                       double radius_max_px, double opacity, std::uint64_t seed,
                       const OverlayStyle& style = {});

}  // namespace medq::degrade

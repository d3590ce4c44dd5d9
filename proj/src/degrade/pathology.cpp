#include "medq/degrade/pathology.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "medq/error.hpp"

namespace medq::degrade {

namespace {

enum : std::uint8_t { kNone = 0, kSolid = 1, kInterior = 2 };

struct Layer {
  std::vector<float> mask;
  std::vector<std::uint8_t> tag;
};

void stamp_disk(Layer& layer, int width, int height, double cx, double cy, double r, float weight,
                std::uint8_t tag) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(cx + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(cy + r)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      if (dx * dx + dy * dy > r * r) continue;
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (weight > layer.mask[i] || (weight == layer.mask[i] && tag == kSolid)) {
        layer.mask[i] = weight;
        layer.tag[i] = tag;
      }
    }
  }
}

void stamp_ring(Layer& layer, int width, int height, double cx, double cy, double r, double thickness,
                float interior_weight) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(cx + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(cy + r)));
  const double inner = std::max(0.0, r - thickness);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      if (d > r) continue;
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (d >= inner) {
        layer.mask[i] = 1.0f;
        layer.tag[i] = kSolid;
      } else if (interior_weight > layer.mask[i]) {
        layer.mask[i] = interior_weight;
        layer.tag[i] = kInterior;
      }
    }
  }
}

Layer rasterize(int width, int height, OverlayKind kind, int count, double r_min, double r_max,
                std::uint64_t seed, float interior_weight) {
  if (count < 0) throw InvalidArgument("overlay: count must be >= 0");
  if (!(r_min > 0.0) || r_max < r_min) throw InvalidArgument("overlay: invalid radius range");
  if (r_max > 0.5 * std::min(width, height)) throw InvalidArgument("overlay: radius exceeds image half-size");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  Layer layer{std::vector<float>(n, 0.0f), std::vector<std::uint8_t>(n, kNone)};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    const double cx = unit(rng) * width;
    const double cy = unit(rng) * height;
    const double r = r_min + unit(rng) * (r_max - r_min);
    switch (kind) {
      case OverlayKind::BloodCell:
        stamp_disk(layer, width, height, cx, cy, r, 1.0f, kSolid);
        break;
      case OverlayKind::DarkSpot: {
        // Irregular blob: 3-6 jittered sub-disks around the anchor.
        const int parts = 3 + static_cast<int>(unit(rng) * 4.0);
        for (int p = 0; p < std::min(parts, 6); ++p) {
          const double jx = (unit(rng) * 2.0 - 1.0) * 0.6 * r;
          const double jy = (unit(rng) * 2.0 - 1.0) * 0.6 * r;
          const double pr = r * (0.4 + 0.4 * unit(rng));
          stamp_disk(layer, width, height, cx + jx, cy + jy, pr, 1.0f, kSolid);
        }
        break;
      }
      case OverlayKind::Bubble:
        stamp_ring(layer, width, height, cx, cy, r, std::max(1.0, 0.15 * r), interior_weight);
        break;
    }
  }
  return layer;
}

}  // namespace

std::string_view to_string(OverlayKind k) {
  switch (k) {
    case OverlayKind::BloodCell: return "blood_cell";
    case OverlayKind::DarkSpot: return "dark_spot";
    case OverlayKind::Bubble: return "bubble";
  }
  return "?";
}

std::vector<float> overlay_mask(int width, int height, OverlayKind kind, int count, double radius_min,
                                double radius_max, std::uint64_t seed) {
  return rasterize(width, height, kind, count, radius_min, radius_max, seed,
                   static_cast<float>(OverlayStyle{}.bubble_interior_weight))
      .mask;
}

Image overlay_artifact(const Image& img, OverlayKind kind, int count, double radius_min_px,
                       double radius_max_px, double opacity, std::uint64_t seed, const OverlayStyle& style) {
  if (!(opacity >= 0.0 && opacity <= 1.0)) throw InvalidArgument("overlay: opacity must be in [0, 1]");
  const Layer layer = rasterize(img.width(), img.height(), kind, count, radius_min_px, radius_max_px, seed,
                                static_cast<float>(style.bubble_interior_weight));
  if (count == 0 || opacity == 0.0) return img;
  const int ch = img.channels();
  const auto& rgb = style.blood_cell_rgb;
  const double blood_gray = 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
  Image out = img;
  auto px = out.pixels();
  for (std::size_t i = 0; i < layer.mask.size(); ++i) {
    if (layer.tag[i] == kNone) continue;
    const double w = layer.mask[i] * opacity;
    for (int c = 0; c < ch; ++c) {
      const double in = px[i * ch + c];
      double color = 0.0;
      switch (kind) {
        case OverlayKind::BloodCell: color = ch == 3 ? rgb[c] : blood_gray; break;
        case OverlayKind::DarkSpot: color = style.dark_spot_intensity; break;
        case OverlayKind::Bubble:
          color = layer.tag[i] == kSolid ? in * style.bubble_rim_factor
                                         : std::min(1.0, in + style.bubble_brightening);
          break;
      }
      px[i * ch + c] = static_cast<float>((1.0 - w) * in + w * color);
    }
  }
  clamp_unit(out);
  return out;
}

}  // namespace medq::degrade

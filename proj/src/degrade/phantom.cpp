#include "medq/degrade/phantom.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "medq/error.hpp"

namespace medq::degrade {

namespace {

struct Ellipse {
  double intensity;
  double semi_x;
  double semi_y;
  double center_x;
  double center_y;
  double angle_deg;
};

// Toft's contrast-enhanced parameter set, normalized coordinates in [-1, 1], y up.
constexpr std::array<Ellipse, 10> kModifiedSheppLogan = {{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

double phantom_value(double x, double y) {
  double v = 0.0;
  for (const auto& e : kModifiedSheppLogan) {
    const double phi = e.angle_deg * std::numbers::pi / 180.0;
    const double dx = x - e.center_x;
    const double dy = y - e.center_y;
    const double xr = dx * std::cos(phi) + dy * std::sin(phi);
    const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
    if ((xr * xr) / (e.semi_x * e.semi_x) + (yr * yr) / (e.semi_y * e.semi_y) <= 1.0) v += e.intensity;
  }
  return v;
}

}  // namespace

Image shepp_logan(int size, int oversample) {
  if (size <= 0 || oversample < 1) throw InvalidArgument("shepp_logan: invalid size");
  Image img(size, size, 1);
  const double inv = 1.0 / (oversample * oversample);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int sy = 0; sy < oversample; ++sy) {
        for (int sx = 0; sx < oversample; ++sx) {
          const double px = x + (sx + 0.5) / oversample;
          const double py = y + (sy + 0.5) / oversample;
          acc += phantom_value(2.0 * px / size - 1.0, 1.0 - 2.0 * py / size);
        }
      }
      img.at(x, y) = static_cast<float>(std::clamp(acc * inv, 0.0, 1.0));
    }
  }
  return img;
}

Image disk_phantom(int size, double radius, double value, int oversample) {
  if (size <= 0 || oversample < 1 || radius <= 0.0) throw InvalidArgument("disk_phantom: invalid arguments");
  Image img(size, size, 1);
  const double c = 0.5 * (size - 1);
  const double inv = 1.0 / (oversample * oversample);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      int inside = 0;
      for (int sy = 0; sy < oversample; ++sy) {
        for (int sx = 0; sx < oversample; ++sx) {
          const double dx = x - 0.5 + (sx + 0.5) / oversample - c;
          const double dy = y - 0.5 + (sy + 0.5) / oversample - c;
          if (dx * dx + dy * dy <= radius * radius) ++inside;
        }
      }
      img.at(x, y) = static_cast<float>(value * inside * inv);
    }
  }
  return img;
}

}  // namespace medq::degrade

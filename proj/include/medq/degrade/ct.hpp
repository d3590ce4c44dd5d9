#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "medq/image.hpp"

namespace medq::degrade {

/// Parallel-beam projections: one row of `bins` line integrals per view angle.
struct Sinogram {
  int views = 0;
  int bins = 0;
  std::vector<double> angles;  // radians
  std::vector<double> values;  // views x bins, row-major

  double at(int view, int bin) const { return values[static_cast<std::size_t>(view) * bins + bin]; }
  double& at(int view, int bin) { return values[static_cast<std::size_t>(view) * bins + bin]; }
};

inline constexpr int kFullViews = 720;

/// Odd detector count covering the diagonal of a size x size image.
int detector_bins(int size);

/// `views` angles evenly spaced over [0, π).
std::vector<double> full_angles(int views);

/// Rotate-and-sum line integrals with bilinear sampling, unit step along each ray.
/// Input must be square and gray (use prepare_square for others).
Sinogram radon_forward(const Image& img, std::span<const double> angles);

/// Ram-Lak filtered back-projection without clamping; returns size*size row-major values.
std::vector<double> fbp_reconstruct_raw(const Sinogram& sino, int size);

/// Filtered back-projection clamped to [0,1].
Image fbp_reconstruct(const Sinogram& sino, int size);

/// Luminance, zero-padded (centered) to a square of side max(width, height).
Image prepare_square(const Image& img);

/// Forward-project over `angles` and reconstruct; handles padding, cropping and channels.
Image reconstruct_from_views(const Image& img, std::span<const double> angles);

/// Full `full_views` round trip.
Image ct_roundtrip(const Image& img, int full_views = kFullViews);

/// Keeps every `stride`-th of the full views.
Image sparse_view(const Image& img, int stride, int full_views = kFullViews);

/// Keeps the contiguous arc [0°, arc_deg).
Image limited_angle(const Image& img, double arc_deg, int full_views = kFullViews);

/// Attenuation normalization: the largest line integral maps to this value.
inline constexpr double kMaxAttenuation = 4.0;

/// Poisson photon noise in the attenuation domain. Values are scaled by `scale` to attenuation,
/// counts ~ Poisson(photons·exp(-p)) floored at 1, then mapped back and unscaled.
Sinogram add_poisson_noise(const Sinogram& sino, double photons, double scale, std::uint64_t seed);

/// Scale mapping the sinogram maximum to kMaxAttenuation (1 for an all-zero sinogram).
double attenuation_scale(const Sinogram& sino);

Image low_dose(const Image& img, double photons, std::uint64_t seed, int full_views = kFullViews);

}  // namespace medq::degrade

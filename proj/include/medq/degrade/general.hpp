#pragma once

#include <cstdint>
#include <vector>

#include "medq/image.hpp"

namespace medq::degrade {

/// Dense 2-D kernel with its anchor at (width/2, height/2).
struct Kernel {
  int width = 0;
  int height = 0;
  std::vector<double> weights;  // row-major

  double at(int x, int y) const { return weights[static_cast<std::size_t>(y) * width + x]; }
  double sum() const;
};

/// Reflect-mode index mapping (d c b a | a b c d | d c b a).
int reflect_index(int i, int n);

/// Correlation with reflective boundary handling, applied per channel; not clamped.
Image convolve(const Image& img, const Kernel& kernel);

/// Sampled Gaussian of radius ceil(3*sigma), normalized to sum 1.
std::vector<double> gaussian_kernel_1d(double sigma);

/// Line kernel of `length` samples through the center at `angle_deg`
/// (counter-clockwise, 0 = horizontal), bilinearly splatted; sums to 1.
Kernel motion_kernel(int length, double angle_deg);

/// Bilinear sample; neighbours outside the raster read as `fill`.
float sample_bilinear(const Image& img, double x, double y, int channel, float fill);

Image gaussian_noise(const Image& img, double sigma, std::uint64_t seed);
Image gaussian_blur(const Image& img, double sigma);
Image motion_blur(const Image& img, int length_px, double angle_deg);
/// Box-downsample by `factor`, bilinear-upsample back to the original size.
Image low_resolution(const Image& img, int factor);
Image adjust_brightness(const Image& img, double delta);
Image gamma_exposure(const Image& img, double gamma);
/// Pulls every channel toward its own mean: mu + alpha * (x - mu).
Image reduce_contrast(const Image& img, double alpha);
/// Size-preserving bilinear rotation about the image center; positive = counter-clockwise.
Image rotate_image(const Image& img, double degrees, float fill = 0.0f);
Image translate_image(const Image& img, double dx_px, double dy_px, float fill = 0.0f);

}  // namespace medq::degrade

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace medq {

/// Row-major raster with interleaved channels (1 = gray, 3 = RGB).
/// Pixel values are normalized reals; public operations keep them in [0,1].
class Image {
 public:
  /// Smallest edge accepted by the degradation registry.
  static constexpr int kMinEdge = 8;

  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);
  Image(int width, int height, int channels, std::vector<float> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  float& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<float> pixels() noexcept { return data_; }
  std::span<const float> pixels() const noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Bitwise equality of shape and pixel storage.
bool identical(const Image& a, const Image& b);

/// True when every pixel is finite and within [0,1].
bool in_unit_range(const Image& img);

void clamp_unit(Image& img);

/// Rec.601 luminance for RGB input; gray input is returned unchanged.
Image to_luminance(const Image& img);

/// Replicates a single-channel image into `channels` channels.
Image broadcast_channels(const Image& gray, int channels);

/// Per-channel view as a gray image.
Image extract_channel(const Image& img, int channel);

double mean_squared_error(const Image& a, const Image& b);

/// PSNR with peak 1.0; +inf for identical inputs.
double psnr(const Image& a, const Image& b);

}  // namespace medq

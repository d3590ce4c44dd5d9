#include "medq/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "medq/error.hpp"

namespace medq {

namespace {

void check_shape(int width, int height, int channels) {
  if (width <= 0 || height <= 0) throw InvalidArgument("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw InvalidArgument("image must have 1 or 3 channels");
}

}  // namespace

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  check_shape(width, height, channels);
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<float> pixels)
    : width_(width), height_(height), channels_(channels), data_(std::move(pixels)) {
  check_shape(width, height, channels);
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw InvalidArgument("pixel buffer size does not match image shape");
  }
}

bool identical(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    return false;
  }
  return std::memcmp(a.pixels().data(), b.pixels().data(), a.size() * sizeof(float)) == 0;
}

bool in_unit_range(const Image& img) {
  return std::all_of(img.pixels().begin(), img.pixels().end(),
                     [](float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; });
}

void clamp_unit(Image& img) {
  for (float& v : img.pixels()) {
    if (!(v > 0.0f)) {
      v = 0.0f;  // also maps NaN to 0
    } else if (v > 1.0f) {
      v = 1.0f;
    }
  }
}

Image to_luminance(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double l = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
      out.at(x, y) = static_cast<float>(l);
    }
  }
  return out;
}

Image broadcast_channels(const Image& gray, int channels) {
  if (gray.channels() != 1) throw InvalidArgument("broadcast_channels expects a gray image");
  if (channels == 1) return gray;
  Image out(gray.width(), gray.height(), channels);
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      for (int c = 0; c < channels; ++c) out.at(x, y, c) = gray.at(x, y);
    }
  }
  return out;
}

Image extract_channel(const Image& img, int channel) {
  Image out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(x, y) = img.at(x, y, channel);
  }
  return out;
}

double mean_squared_error(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw InvalidArgument("mean_squared_error: shape mismatch");
  }
  double acc = 0.0;
  auto pa = a.pixels();
  auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    double d = static_cast<double>(pa[i]) - pb[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pa.size());
}

double psnr(const Image& a, const Image& b) {
  double mse = mean_squared_error(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace medq

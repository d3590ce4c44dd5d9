#include "medq/degrade/general.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "medq/error.hpp"

namespace medq::degrade {

double Kernel::sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

Image convolve(const Image& img, const Kernel& kernel) {
  Image out(img.width(), img.height(), img.channels());
  const int cx = kernel.width / 2;
  const int cy = kernel.height / 2;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double acc = 0.0;
        for (int ky = 0; ky < kernel.height; ++ky) {
          const int sy = reflect_index(y + ky - cy, img.height());
          for (int kx = 0; kx < kernel.width; ++kx) {
            const double w = kernel.at(kx, ky);
            if (w == 0.0) continue;
            acc += w * img.at(reflect_index(x + kx - cx, img.width()), sy, c);
          }
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

std::vector<double> gaussian_kernel_1d(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += k[i + radius];
  }
  for (double& v : k) v /= total;
  return k;
}

Kernel motion_kernel(int length, double angle_deg) {
  if (length < 1) throw InvalidArgument("motion blur length must be >= 1");
  const int radius = (length - 1) / 2 + 2;
  Kernel k{2 * radius + 1, 2 * radius + 1, {}};
  k.weights.assign(static_cast<std::size_t>(k.width) * k.height, 0.0);
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double dx = std::cos(theta);
  const double dy = -std::sin(theta);  // image rows grow downward
  const double w = 1.0 / length;
  for (int i = 0; i < length; ++i) {
    const double t = i - 0.5 * (length - 1);
    const double px = radius + t * dx;
    const double py = radius + t * dy;
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0;
    const double fy = py - y0;
    k.weights[static_cast<std::size_t>(y0) * k.width + x0] += w * (1 - fx) * (1 - fy);
    if (fx > 0) k.weights[static_cast<std::size_t>(y0) * k.width + x0 + 1] += w * fx * (1 - fy);
    if (fy > 0) k.weights[static_cast<std::size_t>(y0 + 1) * k.width + x0] += w * (1 - fx) * fy;
    if (fx > 0 && fy > 0) k.weights[static_cast<std::size_t>(y0 + 1) * k.width + x0 + 1] += w * fx * fy;
  }
  return k;
}

float sample_bilinear(const Image& img, double x, double y, int channel, float fill) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  auto px = [&](int xi, int yi) -> double {
    if (xi < 0 || yi < 0 || xi >= img.width() || yi >= img.height()) return fill;
    return img.at(xi, yi, channel);
  };
  double v = (1 - fx) * (1 - fy) * px(x0, y0);
  if (fx > 0) v += fx * (1 - fy) * px(x0 + 1, y0);
  if (fy > 0) v += (1 - fx) * fy * px(x0, y0 + 1);
  if (fx > 0 && fy > 0) v += fx * fy * px(x0 + 1, y0 + 1);
  return static_cast<float>(v);
}

Image gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("gaussian_noise: sigma must be >= 0");
  if (sigma == 0.0) return img;
  Image out = img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (float& v : out.pixels()) v = static_cast<float>(v + noise(rng));
  clamp_unit(out);
  return out;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (!(sigma >= 0.0)) throw InvalidArgument("gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0) return img;
  const auto k = gaussian_kernel_1d(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  std::vector<double> tmp(img.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * img.at(reflect_index(x + i, w), y, c);
        tmp[(static_cast<std::size_t>(y) * w + x) * ch + c] = acc;
      }
    }
  }
  Image out(w, h, ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) {
          acc += k[i + r] * tmp[(static_cast<std::size_t>(reflect_index(y + i, h)) * w + x) * ch + c];
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  clamp_unit(out);
  return out;
}

Image motion_blur(const Image& img, int length_px, double angle_deg) {
  if (length_px < 1) throw InvalidArgument("motion_blur: length must be >= 1");
  if (length_px == 1) return img;
  Image out = convolve(img, motion_kernel(length_px, angle_deg));
  clamp_unit(out);
  return out;
}

Image low_resolution(const Image& img, int factor) {
  if (factor < 1) throw InvalidArgument("low_resolution: factor must be >= 1");
  if (factor == 1) return img;
  if (factor > std::min(img.width(), img.height()) / 4) {
    throw InvalidArgument("low_resolution: factor exceeds min(width, height) / 4");
  }
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  const int dw = (w + factor - 1) / factor;
  const int dh = (h + factor - 1) / factor;
  Image small(dw, dh, ch);
  for (int by = 0; by < dh; ++by) {
    for (int bx = 0; bx < dw; ++bx) {
      const int x_end = std::min(w, (bx + 1) * factor);
      const int y_end = std::min(h, (by + 1) * factor);
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        int n = 0;
        for (int y = by * factor; y < y_end; ++y) {
          for (int x = bx * factor; x < x_end; ++x, ++n) acc += img.at(x, y, c);
        }
        small.at(bx, by, c) = static_cast<float>(acc / n);
      }
    }
  }
  Image out(w, h, ch);
  const double sx = static_cast<double>(dw) / w;
  const double sy = static_cast<double>(dh) / h;
  for (int y = 0; y < h; ++y) {
    const double src_y = std::clamp((y + 0.5) * sy - 0.5, 0.0, dh - 1.0);
    for (int x = 0; x < w; ++x) {
      const double src_x = std::clamp((x + 0.5) * sx - 0.5, 0.0, dw - 1.0);
      for (int c = 0; c < ch; ++c) out.at(x, y, c) = sample_bilinear(small, src_x, src_y, c, 0.0f);
    }
  }
  clamp_unit(out);
  return out;
}

Image adjust_brightness(const Image& img, double delta) {
  if (std::abs(delta) > 1.0) throw InvalidArgument("adjust_brightness: |delta| must be <= 1");
  if (delta == 0.0) return img;
  Image out = img;
  for (float& v : out.pixels()) v = static_cast<float>(v + delta);
  clamp_unit(out);
  return out;
}

Image gamma_exposure(const Image& img, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma_exposure: gamma must be > 0");
  if (gamma == 1.0) return img;
  Image out = img;
  for (float& v : out.pixels()) v = static_cast<float>(std::pow(static_cast<double>(v), gamma));
  clamp_unit(out);
  return out;
}

Image reduce_contrast(const Image& img, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("reduce_contrast: alpha must be in [0, 1]");
  if (alpha == 1.0) return img;
  Image out = img;
  const int ch = img.channels();
  const std::size_t n = img.size() / ch;
  auto px = out.pixels();
  for (int c = 0; c < ch; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += px[i * ch + c];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      px[i * ch + c] = static_cast<float>(mean + alpha * (px[i * ch + c] - mean));
    }
  }
  clamp_unit(out);
  return out;
}

namespace {

// Exact values at multiples of 90 degrees so quarter turns are pure permutations.
void exact_cos_sin(double degrees, double& c, double& s) {
  const double quarter = degrees / 90.0;
  if (quarter == std::round(quarter)) {
    static constexpr double kCos[4] = {1, 0, -1, 0};
    static constexpr double kSin[4] = {0, 1, 0, -1};
    int q = static_cast<int>(std::llround(quarter)) % 4;
    if (q < 0) q += 4;
    c = kCos[q];
    s = kSin[q];
    return;
  }
  const double rad = degrees * std::numbers::pi / 180.0;
  c = std::cos(rad);
  s = std::sin(rad);
}

}  // namespace

Image rotate_image(const Image& img, double degrees, float fill) {
  if (!std::isfinite(degrees)) throw InvalidArgument("rotate_image: angle must be finite");
  double d = std::fmod(degrees, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  if (d == 0.0) return img;
  double c = 0;
  double s = 0;
  exact_cos_sin(d, c, s);
  const double cx = 0.5 * (img.width() - 1);
  const double cy = 0.5 * (img.height() - 1);
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double ox = x - cx;
      const double oy = y - cy;
      // Inverse map from output to source. Rows grow downward, so the visual
      // counter-clockwise rotation uses the standard matrix in (x, y) pixel space.
      const double sx = cx + c * ox - s * oy;
      const double sy = cy + s * ox + c * oy;
      for (int ch = 0; ch < img.channels(); ++ch) out.at(x, y, ch) = sample_bilinear(img, sx, sy, ch, fill);
    }
  }
  clamp_unit(out);
  return out;
}

Image translate_image(const Image& img, double dx_px, double dy_px, float fill) {
  if (!(std::abs(dx_px) < img.width()) || !(std::abs(dy_px) < img.height())) {
    throw InvalidArgument("translate_image: shift must be smaller than the image");
  }
  if (dx_px == 0.0 && dy_px == 0.0) return img;
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = sample_bilinear(img, x - dx_px, y - dy_px, c, fill);
      }
    }
  }
  clamp_unit(out);
  return out;
}

}  // namespace medq::degrade

#include "medq/degrade/ct.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "medq/degrade/fourier.hpp"
#include "medq/error.hpp"

namespace medq::degrade {

int detector_bins(int size) {
  int b = static_cast<int>(std::ceil(size * std::numbers::sqrt2));
  return b % 2 == 0 ? b + 1 : b;
}

std::vector<double> full_angles(int views) {
  std::vector<double> a(views);
  for (int i = 0; i < views; ++i) a[i] = std::numbers::pi * i / views;
  return a;
}

Sinogram radon_forward(const Image& img, std::span<const double> angles) {
  if (angles.empty()) throw InvalidArgument("radon_forward: empty angle list");
  if (img.channels() != 1 || img.width() != img.height()) {
    throw InvalidArgument("radon_forward: expects a square gray image");
  }
  const int n = img.width();
  Sinogram s;
  s.views = static_cast<int>(angles.size());
  s.bins = detector_bins(n);
  s.angles.assign(angles.begin(), angles.end());
  s.values.assign(static_cast<std::size_t>(s.views) * s.bins, 0.0);
  const double c = 0.5 * (n - 1);
  const double half = 0.5 * (s.bins - 1);
  const auto px = img.pixels();
  auto pixel = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= n || y >= n) return 0.0;
    return px[static_cast<std::size_t>(y) * n + x];
  };
  for (int v = 0; v < s.views; ++v) {
    const double cos_t = std::cos(s.angles[v]);
    const double sin_t = std::sin(s.angles[v]);
    for (int b = 0; b < s.bins; ++b) {
      const double u = b - half;
      double acc = 0.0;
      for (int k = 0; k < s.bins; ++k) {
        const double t = k - half;
        const double x = c + u * cos_t - t * sin_t;
        const double y = c + u * sin_t + t * cos_t;
        if (x <= -1.0 || y <= -1.0 || x >= n || y >= n) continue;
        const int x0 = static_cast<int>(std::floor(x));
        const int y0 = static_cast<int>(std::floor(y));
        const double fx = x - x0;
        const double fy = y - y0;
        acc += (1 - fx) * (1 - fy) * pixel(x0, y0) + fx * (1 - fy) * pixel(x0 + 1, y0) +
               (1 - fx) * fy * pixel(x0, y0 + 1) + fx * fy * pixel(x0 + 1, y0 + 1);
      }
      s.at(v, b) = acc;
    }
  }
  return s;
}

namespace {

// Frequency response of the spatially sampled Ram-Lak kernel (unit detector spacing).
std::vector<Complex> ramp_response(int padded) {
  std::vector<Complex> h(padded, Complex(0.0, 0.0));
  h[0] = 0.25;
  for (int k = 1; k < padded / 2; k += 2) {
    const double v = -1.0 / (std::numbers::pi * std::numbers::pi * k * k);
    h[k] = v;
    h[padded - k] = v;
  }
  fft_1d(h, false);
  return h;
}

double angular_step(const std::vector<double>& angles) {
  if (angles.size() < 2) return std::numbers::pi;
  return (angles.back() - angles.front()) / static_cast<double>(angles.size() - 1);
}

}  // namespace

std::vector<double> fbp_reconstruct_raw(const Sinogram& sino, int size) {
  if (sino.views <= 0) throw InvalidArgument("fbp_reconstruct: sinogram has no views");
  if (size <= 0) throw InvalidArgument("fbp_reconstruct: size must be positive");
  if (static_cast<int>(sino.angles.size()) != sino.views ||
      sino.values.size() != static_cast<std::size_t>(sino.views) * sino.bins) {
    throw InvalidArgument("fbp_reconstruct: inconsistent sinogram shape");
  }
  int padded = 1;
  while (padded < 2 * sino.bins) padded <<= 1;
  const auto response = ramp_response(padded);

  std::vector<double> filtered(sino.values.size());
  std::vector<Complex> row(padded);
  for (int v = 0; v < sino.views; ++v) {
    std::fill(row.begin(), row.end(), Complex(0.0, 0.0));
    for (int b = 0; b < sino.bins; ++b) row[b] = sino.at(v, b);
    fft_1d(row, false);
    for (int k = 0; k < padded; ++k) row[k] *= response[k];
    fft_1d(row, true);
    for (int b = 0; b < sino.bins; ++b) {
      filtered[static_cast<std::size_t>(v) * sino.bins + b] = row[b].real() / padded;
    }
  }

  const double step = angular_step(sino.angles);
  const double c = 0.5 * (size - 1);
  const double half = 0.5 * (sino.bins - 1);
  std::vector<double> cos_t(sino.views);
  std::vector<double> sin_t(sino.views);
  for (int v = 0; v < sino.views; ++v) {
    cos_t[v] = std::cos(sino.angles[v]);
    sin_t[v] = std::sin(sino.angles[v]);
  }
  std::vector<double> out(static_cast<std::size_t>(size) * size, 0.0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int v = 0; v < sino.views; ++v) {
        const double t = (x - c) * cos_t[v] + (y - c) * sin_t[v] + half;
        const int t0 = static_cast<int>(std::floor(t));
        if (t0 < 0 || t0 >= sino.bins) continue;
        const double f = t - t0;
        const double* q = &filtered[static_cast<std::size_t>(v) * sino.bins];
        const double next = t0 + 1 < sino.bins ? q[t0 + 1] : 0.0;
        acc += (1 - f) * q[t0] + f * next;
      }
      out[static_cast<std::size_t>(y) * size + x] = acc * step;
    }
  }
  return out;
}

Image fbp_reconstruct(const Sinogram& sino, int size) {
  const auto raw = fbp_reconstruct_raw(sino, size);
  std::vector<float> px(raw.begin(), raw.end());
  Image img(size, size, 1, std::move(px));
  clamp_unit(img);
  return img;
}

Image prepare_square(const Image& img) {
  Image gray = to_luminance(img);
  const int n = std::max(img.width(), img.height());
  if (gray.width() == n && gray.height() == n) return gray;
  Image sq(n, n, 1, 0.0f);
  const int ox = (n - gray.width()) / 2;
  const int oy = (n - gray.height()) / 2;
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) sq.at(x + ox, y + oy) = gray.at(x, y);
  }
  return sq;
}

namespace {

Image finish(const Image& original, const Image& recon_square) {
  const int n = recon_square.width();
  const int ox = (n - original.width()) / 2;
  const int oy = (n - original.height()) / 2;
  Image gray(original.width(), original.height(), 1);
  for (int y = 0; y < original.height(); ++y) {
    for (int x = 0; x < original.width(); ++x) gray.at(x, y) = recon_square.at(x + ox, y + oy);
  }
  return broadcast_channels(gray, original.channels());
}

void check_views(std::size_t kept) {
  if (kept < 8) throw InvalidArgument("CT degradation keeps fewer than 8 views");
}

}  // namespace

Image reconstruct_from_views(const Image& img, std::span<const double> angles) {
  const Image sq = prepare_square(img);
  const Sinogram s = radon_forward(sq, angles);
  return finish(img, fbp_reconstruct(s, sq.width()));
}

Image ct_roundtrip(const Image& img, int full_views) {
  const auto angles = full_angles(full_views);
  return reconstruct_from_views(img, angles);
}

Image sparse_view(const Image& img, int stride, int full_views) {
  if (stride < 1) throw InvalidArgument("sparse_view: stride must be >= 1");
  const auto all = full_angles(full_views);
  std::vector<double> kept;
  for (int i = 0; i < full_views; i += stride) kept.push_back(all[i]);
  check_views(kept.size());
  return reconstruct_from_views(img, kept);
}

Image limited_angle(const Image& img, double arc_deg, int full_views) {
  if (!(arc_deg > 0.0 && arc_deg <= 180.0)) throw InvalidArgument("limited_angle: arc must be in (0, 180]");
  const auto all = full_angles(full_views);
  const double limit = arc_deg * std::numbers::pi / 180.0;
  std::vector<double> kept;
  for (double a : all) {
    if (a < limit) kept.push_back(a);
  }
  check_views(kept.size());
  return reconstruct_from_views(img, kept);
}

double attenuation_scale(const Sinogram& sino) {
  const double peak = sino.values.empty() ? 0.0 : *std::max_element(sino.values.begin(), sino.values.end());
  return peak > 0.0 ? kMaxAttenuation / peak : 1.0;
}

Sinogram add_poisson_noise(const Sinogram& sino, double photons, double scale, std::uint64_t seed) {
  if (!(photons > 0.0)) throw InvalidArgument("low_dose: photon count must be > 0");
  Sinogram noisy = sino;
  std::mt19937_64 rng(seed);
  for (double& v : noisy.values) {
    const double p = v * scale;
    std::poisson_distribution<long long> counts(photons * std::exp(-p));
    const double n = static_cast<double>(std::max<long long>(counts(rng), 1));
    v = -std::log(n / photons) / scale;
  }
  return noisy;
}

Image low_dose(const Image& img, double photons, std::uint64_t seed, int full_views) {
  if (!(photons > 0.0)) throw InvalidArgument("low_dose: photon count must be > 0");
  const Image sq = prepare_square(img);
  const Sinogram clean = radon_forward(sq, full_angles(full_views));
  const Sinogram noisy = add_poisson_noise(clean, photons, attenuation_scale(clean), seed);
  return finish(img, fbp_reconstruct(noisy, sq.width()));
}

}  // namespace medq::degrade

#include "medq/degrade/mri.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "medq/error.hpp"

namespace medq::degrade {

namespace {

// out[(i + n/2) % n] = in[i] along both axes (inverse = true undoes it).
std::vector<Complex> shift_2d(const std::vector<Complex>& in, int rows, int cols, bool inverse) {
  std::vector<Complex> out(in.size());
  const int sr = inverse ? rows - rows / 2 : rows / 2;
  const int sc = inverse ? cols - cols / 2 : cols / 2;
  for (int r = 0; r < rows; ++r) {
    const int rr = (r + sr) % rows;
    for (int c = 0; c < cols; ++c) {
      out[static_cast<std::size_t>(rr) * cols + (c + sc) % cols] = in[static_cast<std::size_t>(r) * cols + c];
    }
  }
  return out;
}

Image magnitude_image(const std::vector<Complex>& values, int width, int height) {
  Image out(width, height, 1);
  auto px = out.pixels();
  for (std::size_t i = 0; i < values.size(); ++i) px[i] = static_cast<float>(std::abs(values[i]));
  clamp_unit(out);
  return out;
}

}  // namespace

KSpace kspace_forward(const Image& img) {
  const Image gray = to_luminance(img);
  KSpace k{gray.height(), gray.width(), {}};
  std::vector<Complex> buf(gray.size());
  const auto px = gray.pixels();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = px[i];
  buf = shift_2d(buf, k.rows, k.cols, true);
  fft_2d(buf, k.rows, k.cols, false);
  buf = shift_2d(buf, k.rows, k.cols, false);
  const double norm = 1.0 / std::sqrt(static_cast<double>(buf.size()));
  for (auto& v : buf) v *= norm;
  k.data = std::move(buf);
  return k;
}

std::vector<Complex> kspace_inverse_complex(const KSpace& k) {
  std::vector<Complex> buf = shift_2d(k.data, k.rows, k.cols, true);
  fft_2d(buf, k.rows, k.cols, true);
  buf = shift_2d(buf, k.rows, k.cols, false);
  const double norm = 1.0 / std::sqrt(static_cast<double>(buf.size()));
  for (auto& v : buf) v *= norm;
  return buf;
}

Image kspace_inverse(const KSpace& k) { return magnitude_image(kspace_inverse_complex(k), k.cols, k.rows); }

std::vector<std::uint8_t> phase_encode_mask(int rows, double retain_frac, double acs_frac, std::uint64_t seed) {
  if (!(retain_frac > 0.0 && retain_frac <= 1.0)) throw InvalidArgument("undersampling: retain must be in (0, 1]");
  if (!(acs_frac >= 0.0 && acs_frac <= 1.0)) throw InvalidArgument("undersampling: ACS fraction must be in [0, 1]");
  if (retain_frac < acs_frac) throw InvalidArgument("undersampling: retain fraction below ACS coverage");
  const int acs = static_cast<int>(std::ceil(acs_frac * rows - 1e-9));
  const int target = std::max(acs, static_cast<int>(std::lround(retain_frac * rows)));
  std::vector<std::uint8_t> mask(rows, 0);
  const int start = rows / 2 - acs / 2;
  for (int r = start; r < start + acs; ++r) mask[r] = 1;
  std::vector<int> candidates;
  for (int r = 0; r < rows; ++r) {
    if (!mask[r]) candidates.push_back(r);
  }
  std::mt19937_64 rng(seed);
  const int extra = target - acs;
  // Partial Fisher-Yates: the first `extra` slots become the drawn rows.
  for (int i = 0; i < extra; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(candidates.size()) - 1);
    std::swap(candidates[i], candidates[pick(rng)]);
    mask[candidates[i]] = 1;
  }
  return mask;
}

void apply_row_mask(KSpace& k, std::span<const std::uint8_t> mask) {
  if (static_cast<int>(mask.size()) != k.rows) throw InvalidArgument("row mask length mismatch");
  for (int r = 0; r < k.rows; ++r) {
    if (mask[r]) continue;
    for (int c = 0; c < k.cols; ++c) k.at(r, c) = 0.0;
  }
}

Image undersample_kspace(const Image& img, double retain_frac, double acs_frac, std::uint64_t seed) {
  KSpace k = kspace_forward(img);
  apply_row_mask(k, phase_encode_mask(k.rows, retain_frac, acs_frac, seed));
  return broadcast_channels(kspace_inverse(k), img.channels());
}

Image ghosting(const Image& img, int ghosts, double alpha, GhostAxis axis) {
  if (ghosts < 2) throw InvalidArgument("ghosting: need at least 2 ghosts");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidArgument("ghosting: alpha must be in [0, 1)");
  KSpace k = kspace_forward(img);
  const int lines = axis == GhostAxis::Rows ? k.rows : k.cols;
  const int center = lines / 2;
  for (int line = 0; line < lines; ++line) {
    if (((line - center) % ghosts + ghosts) % ghosts != 0) continue;
    if (axis == GhostAxis::Rows) {
      for (int c = 0; c < k.cols; ++c) k.at(line, c) *= 1.0 - alpha;
    } else {
      for (int r = 0; r < k.rows; ++r) k.at(r, line) *= 1.0 - alpha;
    }
  }
  return broadcast_channels(kspace_inverse(k), img.channels());
}

int bias_basis_size(int order) {
  if (order < 0) throw InvalidArgument("bias field order must be >= 0");
  return (order + 1) * (order + 2) / 2;
}

namespace {

struct Monomial {
  int pu;
  int pv;
};

std::vector<Monomial> monomials(int order) {
  std::vector<Monomial> m;
  for (int d = 0; d <= order; ++d) {
    for (int a = d; a >= 0; --a) m.push_back({a, d - a});
  }
  return m;
}

double normalized(int i, int n) { return n > 1 ? 2.0 * i / (n - 1) - 1.0 : 0.0; }

}  // namespace

std::vector<double> bias_field_map(int width, int height, std::span<const double> coeffs, int order) {
  if (static_cast<int>(coeffs.size()) != bias_basis_size(order)) {
    throw InvalidArgument("bias field: coefficient count does not match basis size");
  }
  const auto basis = monomials(order);
  std::vector<double> field(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const double v = normalized(y, height);
    for (int x = 0; x < width; ++x) {
      const double u = normalized(x, width);
      double g = 0.0;
      for (std::size_t j = 0; j < basis.size(); ++j) {
        g += coeffs[j] * std::pow(u, basis[j].pu) * std::pow(v, basis[j].pv);
      }
      field[static_cast<std::size_t>(y) * width + x] = std::exp(g);
    }
  }
  return field;
}

double bias_field_step_bound(int width, int height, std::span<const double> coeffs, int order) {
  if (static_cast<int>(coeffs.size()) != bias_basis_size(order)) {
    throw InvalidArgument("bias field: coefficient count does not match basis size");
  }
  const auto basis = monomials(order);
  double abs_sum = 0.0;
  double du = 0.0;
  double dv = 0.0;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    abs_sum += std::abs(coeffs[j]);
    du += std::abs(coeffs[j]) * basis[j].pu;
    dv += std::abs(coeffs[j]) * basis[j].pv;
  }
  const double peak = std::exp(abs_sum);
  const double sx = width > 1 ? 2.0 / (width - 1) : 0.0;
  const double sy = height > 1 ? 2.0 / (height - 1) : 0.0;
  return peak * std::max(du * sx, dv * sy);
}

Image bias_field(const Image& img, std::span<const double> coeffs, int order) {
  const auto field = bias_field_map(img.width(), img.height(), coeffs, order);
  if (std::all_of(coeffs.begin(), coeffs.end(), [](double c) { return c == 0.0; })) return img;
  Image out = img;
  const int ch = img.channels();
  auto px = out.pixels();
  for (std::size_t i = 0; i < field.size(); ++i) {
    for (int c = 0; c < ch; ++c) px[i * ch + c] = static_cast<float>(px[i * ch + c] * field[i]);
  }
  clamp_unit(out);
  return out;
}

}  // namespace medq::degrade

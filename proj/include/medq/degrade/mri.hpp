#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "medq/degrade/fourier.hpp"
#include "medq/image.hpp"

namespace medq::degrade {

/// Centered 2-D spectrum: DC at (rows/2, cols/2), orthonormal scaling.
/// Rows are the phase-encode direction.
struct KSpace {
  int rows = 0;
  int cols = 0;
  std::vector<Complex> data;

  Complex& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  const Complex& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

/// Transforms the luminance of `img`.
KSpace kspace_forward(const Image& img);
/// Complex inverse transform, no magnitude or clamping.
std::vector<Complex> kspace_inverse_complex(const KSpace& k);
/// Magnitude of the inverse transform, clamped to [0,1]; single channel.
Image kspace_inverse(const KSpace& k);

/// Phase-encode row mask: the central ceil(acs_frac·rows) rows always, plus rows drawn
/// uniformly without replacement until round(retain_frac·rows) rows are kept.
std::vector<std::uint8_t> phase_encode_mask(int rows, double retain_frac, double acs_frac, std::uint64_t seed);

/// Zeroes every row whose mask entry is 0.
void apply_row_mask(KSpace& k, std::span<const std::uint8_t> mask);

Image undersample_kspace(const Image& img, double retain_frac, double acs_frac, std::uint64_t seed);

enum class GhostAxis { Rows, Cols };

/// Scales every `ghosts`-th phase-encode line (the DC line included) by (1 - alpha),
/// producing ghosts-1 replicas spaced size/ghosts apart along the axis.
Image ghosting(const Image& img, int ghosts, double alpha, GhostAxis axis = GhostAxis::Rows);

/// Number of monomials u^a v^b with a + b <= order.
int bias_basis_size(int order);

/// exp(Σ c_j u^a v^b) sampled on the pixel grid, u along columns and v along rows, both
/// spanning [-1, 1]. Monomials are ordered by total degree, then by descending power of u.
std::vector<double> bias_field_map(int width, int height, std::span<const double> coeffs, int order);

/// Upper bound on |field(x+1,y) - field(x,y)| and |field(x,y+1) - field(x,y)|.
double bias_field_step_bound(int width, int height, std::span<const double> coeffs, int order);

/// Multiplies every channel by the bias field and clamps.
Image bias_field(const Image& img, std::span<const double> coeffs, int order = 3);

}  // namespace medq::degrade

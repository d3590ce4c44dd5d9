#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "medq/image.hpp"

namespace medq {

/// Decodes PNG (8/16-bit, gray/RGB, alpha dropped) into a normalized image.
Image decode_png(std::span<const std::uint8_t> bytes);

/// Encodes at 8 or 16 bits per sample; values are clamped and rounded.
std::vector<std::uint8_t> encode_png(const Image& img, int bit_depth = 8);

Image decode_jpeg(std::span<const std::uint8_t> bytes);

/// NumPy .npy: 2-D (H,W) or 3-D (H,W,C) arrays of uint8, uint16, float32 or float64.
/// Integer arrays are scaled to [0,1]; float arrays are taken as already normalized.
Image decode_npy(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_npy(const Image& img);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Dispatches on extension (.png, .jpg/.jpeg, .npy).
Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

}  // namespace medq

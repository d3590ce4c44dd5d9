#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "medq/image.hpp"
#include "medq/types.hpp"

namespace medq {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> bytes);
std::string to_hex(const Digest& d);

/// Content digest of an image's shape and normalized pixel storage.
std::string pixel_digest(const Image& img);

/// First 8 bytes (big-endian) of SHA-256 over a canonical, length-prefixed encoding of the parts.
std::uint64_t hash64(std::initializer_list<std::string_view> parts);

/// Per-sample RNG seed derived from (pair id, type name, severity, run seed).
std::uint64_t sample_seed(std::string_view pair_id, std::string_view type_name, Severity severity,
                          std::uint64_t run_seed);

}  // namespace medq

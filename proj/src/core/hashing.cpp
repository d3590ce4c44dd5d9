#include "medq/hashing.hpp"

#include <openssl/sha.h>

#include <cstring>
#include <vector>

namespace medq {

Digest sha256(std::span<const std::uint8_t> bytes) {
  Digest d{};
  SHA256(bytes.data(), bytes.size(), d.data());
  return d;
}

std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(d.size() * 2);
  for (std::uint8_t b : d) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

std::string pixel_digest(const Image& img) {
  std::vector<std::uint8_t> buf(12 + img.size() * sizeof(float));
  const std::int32_t dims[3] = {img.width(), img.height(), img.channels()};
  std::memcpy(buf.data(), dims, sizeof(dims));
  std::memcpy(buf.data() + 12, img.pixels().data(), img.size() * sizeof(float));
  return to_hex(sha256(buf));
}

std::uint64_t hash64(std::initializer_list<std::string_view> parts) {
  std::vector<std::uint8_t> buf;
  for (std::string_view p : parts) {
    const std::uint64_t n = p.size();
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
    buf.insert(buf.end(), p.begin(), p.end());
  }
  const Digest d = sha256(buf);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d[i];
  return v;
}

std::uint64_t sample_seed(std::string_view pair_id, std::string_view type_name, Severity severity,
                          std::uint64_t run_seed) {
  const std::string run = std::to_string(run_seed);
  return hash64({pair_id, type_name, to_string(severity), run});
}

}  // namespace medq

#pragma once

#include <cstdint>
#include <filesystem>

#include "lwg/feature_map.hpp"

namespace lwg {

// 8-bit <-> [0, 1] conversions: v / 255 in, round-half-up on the way out.
inline float from_u8(uint8_t v) { return static_cast<float>(v) / 255.0f; }
uint8_t to_u8(float v);

/// Reads any PNG as 3-channel RGB in [0, 1] (gray is replicated, alpha dropped,
/// 16-bit reduced to 8).
Image read_png(const std::filesystem::path& path);

/// Writes a 1- or 3-channel map as 8-bit PNG.
void write_png(const Image& image, const std::filesystem::path& path);

/// Quantizes to 8 bits and back, as a PNG write/read round trip would.
Image quantize_u8(const Image& image);

}  // namespace lwg

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hspr/cube.hpp"

namespace hspr::io {

// HSC1: "HSC1", u32le K, H, W, then K*H*W (f64le real, f64le imag) in
// (k, row, col) order.
void write_hsc1(const std::filesystem::path& path, const ComplexCube& cube);
ComplexCube read_hsc1(const std::filesystem::path& path);

// HSR1: "HSR1", u32le count, H, W, then count*H*W f32le in (image, row, col)
// order. Values are narrowed to single precision on write.
void write_hsr1(const std::filesystem::path& path, const std::vector<RealImage>& images);
std::vector<RealImage> read_hsr1(const std::filesystem::path& path);

/// Binary 8-bit PGM (P5). Values are clamped to [0, 1] and scaled to 0..255.
void write_pgm(const std::filesystem::path& path, const RealImage& image);
/// Reads P5 with maxval <= 255; returns values divided by maxval.
RealImage read_pgm(const std::filesystem::path& path);

}  // namespace hspr::io

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace melm {

// 8-bit grayscale image, row-major. 0 is black, 255 is white.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // width * height entries

    std::uint8_t at(std::size_t row, std::size_t col) const {
        return pixels[row * width + col];
    }
};

// Normalized feature vector; every element lies in [0, 1].
using FeatureVector = std::vector<double>;

// Image width bucket for a file of the given size. Buckets follow the usual
// malware-visualization table (1 kB = 1024 bytes, lower bound inclusive):
// <10 kB -> 32, 10-30 -> 64, 30-60 -> 128, 60-100 -> 256, 100-200 -> 384,
// 200-500 -> 512, 500-1000 -> 768, >=1000 kB -> 1024.
std::size_t width_for_size(std::uint64_t byte_count);

// Lays the bytes out row-major at the bucketed width (or a caller-forced
// width); the last partial row is padded with 0. Throws on empty input.
GrayImage bytes_to_image(std::span<const std::uint8_t> bytes);
GrayImage bytes_to_image(std::span<const std::uint8_t> bytes, std::size_t forced_width);

enum class ResizeMethod { Bilinear, NearestNeighbor };

// Resample to exactly target_width x target_height. Bilinear uses the
// pixel-center convention (src = (dst + 0.5) * scale - 0.5, edges clamped),
// which makes resizing to the source dimensions an identity.
GrayImage resize(const GrayImage& image, std::size_t target_width, std::size_t target_height,
                 ResizeMethod method = ResizeMethod::Bilinear);

// Row-major pixels scaled by 1/255 into [0, 1].
FeatureVector flatten_2d(const GrayImage& image);

// Fixed-length resample: zero-pads to the nearest multiple of n, then emits
// the mean of each of the n consecutive blocks. Empty input gives n zeros.
// When n divides the input length the global mean is preserved exactly.
FeatureVector resample_1d(const FeatureVector& values, std::size_t n);

}  // namespace melm

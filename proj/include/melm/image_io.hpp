#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "melm/image.hpp"

namespace melm {

// Reads a whole file; throws std::runtime_error naming the path on failure.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// Writes bytes through a temp file + rename so readers never see a torn file.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

// PNG (any color type, coerced to 8-bit gray) or binary PGM (P5), detected
// from the file's magic bytes.
GrayImage load_image(const std::filesystem::path& path);

void save_png(const GrayImage& image, const std::filesystem::path& path);
void save_pgm(const GrayImage& image, const std::filesystem::path& path);

}  // namespace melm

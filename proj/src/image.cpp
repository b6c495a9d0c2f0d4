#include "melm/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace melm {

std::size_t width_for_size(std::uint64_t byte_count) {
    constexpr std::uint64_t kKiB = 1024;
    if (byte_count < 10 * kKiB) return 32;
    if (byte_count < 30 * kKiB) return 64;
    if (byte_count < 60 * kKiB) return 128;
    if (byte_count < 100 * kKiB) return 256;
    if (byte_count < 200 * kKiB) return 384;
    if (byte_count < 500 * kKiB) return 512;
    if (byte_count < 1000 * kKiB) return 768;
    return 1024;
}

GrayImage bytes_to_image(std::span<const std::uint8_t> bytes) {
    return bytes_to_image(bytes, width_for_size(bytes.size()));
}

GrayImage bytes_to_image(std::span<const std::uint8_t> bytes, std::size_t forced_width) {
    if (bytes.empty()) throw std::invalid_argument("bytes_to_image: empty file");
    if (forced_width == 0) throw std::invalid_argument("bytes_to_image: zero width");
    GrayImage img;
    img.width = forced_width;
    img.height = (bytes.size() + forced_width - 1) / forced_width;
    img.pixels.assign(img.width * img.height, 0);
    std::copy(bytes.begin(), bytes.end(), img.pixels.begin());
    return img;
}

namespace {

GrayImage resize_nearest(const GrayImage& src, std::size_t w, std::size_t h) {
    GrayImage dst;
    dst.width = w;
    dst.height = h;
    dst.pixels.resize(w * h);
    const double sx = static_cast<double>(src.width) / static_cast<double>(w);
    const double sy = static_cast<double>(src.height) / static_cast<double>(h);
    for (std::size_t y = 0; y < h; ++y) {
        const auto src_y = std::min<std::size_t>(
            src.height - 1, static_cast<std::size_t>((static_cast<double>(y) + 0.5) * sy));
        for (std::size_t x = 0; x < w; ++x) {
            const auto src_x = std::min<std::size_t>(
                src.width - 1, static_cast<std::size_t>((static_cast<double>(x) + 0.5) * sx));
            dst.pixels[y * w + x] = src.at(src_y, src_x);
        }
    }
    return dst;
}

GrayImage resize_bilinear(const GrayImage& src, std::size_t w, std::size_t h) {
    GrayImage dst;
    dst.width = w;
    dst.height = h;
    dst.pixels.resize(w * h);
    const double sx = static_cast<double>(src.width) / static_cast<double>(w);
    const double sy = static_cast<double>(src.height) / static_cast<double>(h);
    const auto last_x = static_cast<std::ptrdiff_t>(src.width) - 1;
    const auto last_y = static_cast<std::ptrdiff_t>(src.height) - 1;
    auto clampi = [](std::ptrdiff_t v, std::ptrdiff_t hi) {
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, hi));
    };
    for (std::size_t y = 0; y < h; ++y) {
        const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        const double floor_y = std::floor(fy);
        const double ty = fy - floor_y;
        const std::size_t y0 = clampi(static_cast<std::ptrdiff_t>(floor_y), last_y);
        const std::size_t y1 = clampi(static_cast<std::ptrdiff_t>(floor_y) + 1, last_y);
        for (std::size_t x = 0; x < w; ++x) {
            const double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
            const double floor_x = std::floor(fx);
            const double tx = fx - floor_x;
            const std::size_t x0 = clampi(static_cast<std::ptrdiff_t>(floor_x), last_x);
            const std::size_t x1 = clampi(static_cast<std::ptrdiff_t>(floor_x) + 1, last_x);
            const double top = (1.0 - tx) * src.at(y0, x0) + tx * src.at(y0, x1);
            const double bottom = (1.0 - tx) * src.at(y1, x0) + tx * src.at(y1, x1);
            const double value = (1.0 - ty) * top + ty * bottom;
            dst.pixels[y * w + x] =
                static_cast<std::uint8_t>(std::clamp(std::lround(value), 0l, 255l));
        }
    }
    return dst;
}

}  // namespace

GrayImage resize(const GrayImage& image, std::size_t target_width, std::size_t target_height,
                 ResizeMethod method) {
    if (target_width == 0 || target_height == 0) {
        throw std::invalid_argument("resize: target dimensions must be positive");
    }
    if (image.width == 0 || image.height == 0) {
        throw std::invalid_argument("resize: source image is empty");
    }
    return method == ResizeMethod::Bilinear ? resize_bilinear(image, target_width, target_height)
                                            : resize_nearest(image, target_width, target_height);
}

FeatureVector flatten_2d(const GrayImage& image) {
    FeatureVector out(image.pixels.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<double>(image.pixels[i]) / 255.0;
    }
    return out;
}

FeatureVector resample_1d(const FeatureVector& values, std::size_t n) {
    if (n == 0) throw std::invalid_argument("resample_1d: target length must be positive");
    FeatureVector out(n, 0.0);
    if (values.empty()) return out;
    const std::size_t block = (values.size() + n - 1) / n;  // padded length / n
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        const std::size_t begin = i * block;
        const std::size_t end = std::min(begin + block, values.size());
        for (std::size_t j = begin; j < end; ++j) sum += values[j];
        out[i] = sum / static_cast<double>(block);
    }
    return out;
}

}  // namespace melm

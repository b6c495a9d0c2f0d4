#include "melm/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace melm {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::vector<std::uint8_t> bytes(
        (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw std::runtime_error("error reading file: " + path.string());
    return bytes;
}

void atomic_write_file(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot create file: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("error writing file: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() +
                                 ": " + ec.message());
    }
}

namespace {

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* file = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (file) std::fclose(file);
    }
};

GrayImage load_png(const fs::path& path) {
    PngReadCloser ctx;
    ctx.file = std::fopen(path.string().c_str(), "rb");
    if (!ctx.file) throw std::runtime_error("cannot open image: " + path.string());

    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw std::runtime_error("png: allocation failure");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw std::runtime_error("png: allocation failure");

    if (setjmp(png_jmpbuf(ctx.png))) {
        throw std::runtime_error("corrupt PNG: " + path.string());
    }

    png_init_io(ctx.png, ctx.file);
    png_read_info(ctx.png, ctx.info);

    // Coerce every color layout to plain 8-bit grayscale.
    const png_byte color = png_get_color_type(ctx.png, ctx.info);
    const png_byte depth = png_get_bit_depth(ctx.png, ctx.info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    if (depth == 16) png_set_strip_16(ctx.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ctx.png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE) {
        png_set_rgb_to_gray_fixed(ctx.png, 1, -1, -1);
    }
    png_read_update_info(ctx.png, ctx.info);

    GrayImage img;
    img.width = png_get_image_width(ctx.png, ctx.info);
    img.height = png_get_image_height(ctx.png, ctx.info);
    if (img.width == 0 || img.height == 0) {
        throw std::runtime_error("corrupt PNG (zero dimension): " + path.string());
    }
    if (png_get_rowbytes(ctx.png, ctx.info) != img.width) {
        throw std::runtime_error("PNG did not reduce to 8-bit gray: " + path.string());
    }
    img.pixels.resize(img.width * img.height);
    std::vector<png_bytep> rows(img.height);
    for (std::size_t y = 0; y < img.height; ++y) rows[y] = img.pixels.data() + y * img.width;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
    return img;
}

// Binary PGM (P5), maxval <= 255.
GrayImage load_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image: " + path.string());
    auto next_token = [&in, &path]() {
        std::string tok;
        while (true) {
            int c = in.get();
            if (c == EOF) throw std::runtime_error("corrupt PGM (truncated header): " + path.string());
            if (c == '#') {
                while (c != EOF && c != '\n') c = in.get();
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) return tok;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
    };
    if (next_token() != "P5") throw std::runtime_error("not a binary PGM: " + path.string());
    const long width = std::stol(next_token());
    const long height = std::stol(next_token());
    const long maxval = std::stol(next_token());
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
        throw std::runtime_error("unsupported PGM header: " + path.string());
    }
    GrayImage img;
    img.width = static_cast<std::size_t>(width);
    img.height = static_cast<std::size_t>(height);
    img.pixels.resize(img.width * img.height);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
        throw std::runtime_error("corrupt PGM (truncated data): " + path.string());
    }
    return img;
}

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* file = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (file) std::fclose(file);
    }
};

}  // namespace

GrayImage load_image(const fs::path& path) {
    const auto bytes_needed = 8u;
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw std::runtime_error("cannot open image: " + path.string());
    unsigned char magic[bytes_needed] = {};
    probe.read(reinterpret_cast<char*>(magic), bytes_needed);
    probe.close();

    static const unsigned char png_magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (std::memcmp(magic, png_magic, 8) == 0) return load_png(path);
    if (magic[0] == 'P' && magic[1] == '5') return load_pgm(path);
    throw std::runtime_error("unrecognized image format: " + path.string());
}

void save_png(const GrayImage& image, const fs::path& path) {
    if (image.width == 0 || image.height == 0 ||
        image.pixels.size() != image.width * image.height) {
        throw std::invalid_argument("save_png: malformed image");
    }
    fs::path tmp = path;
    tmp += ".tmp";

    {
        PngWriteCloser ctx;
        ctx.file = std::fopen(tmp.string().c_str(), "wb");
        if (!ctx.file) throw std::runtime_error("cannot create file: " + tmp.string());
        ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!ctx.png) throw std::runtime_error("png: allocation failure");
        ctx.info = png_create_info_struct(ctx.png);
        if (!ctx.info) throw std::runtime_error("png: allocation failure");
        if (setjmp(png_jmpbuf(ctx.png))) {
            throw std::runtime_error("png write failure: " + tmp.string());
        }
        png_init_io(ctx.png, ctx.file);
        png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(image.width),
                     static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_GRAY,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(ctx.png, ctx.info);
        for (std::size_t y = 0; y < image.height; ++y) {
            png_write_row(ctx.png, const_cast<png_bytep>(image.pixels.data() + y * image.width));
        }
        png_write_end(ctx.png, nullptr);
    }

    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() +
                                 ": " + ec.message());
    }
}

void save_pgm(const GrayImage& image, const fs::path& path) {
    if (image.width == 0 || image.height == 0 ||
        image.pixels.size() != image.width * image.height) {
        throw std::invalid_argument("save_pgm: malformed image");
    }
    std::string out = "P5\n" + std::to_string(image.width) + " " +
                      std::to_string(image.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
    atomic_write_file(path, out);
}

}  // namespace melm

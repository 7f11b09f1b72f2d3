#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "calyx/core.hpp"

namespace calyx {

namespace detail {

// RAII for C-style FILE handles used by libpng.
class FileHandle {
public:
    FileHandle(const std::filesystem::path& path, const char* mode)
        : f_(std::fopen(path.string().c_str(), mode)) {}
    ~FileHandle() {
        if (f_) std::fclose(f_);
    }
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;

    FILE* get() const noexcept { return f_; }
    explicit operator bool() const noexcept { return f_ != nullptr; }

private:
    FILE* f_ = nullptr;
};

inline RgbImage load_png(const std::filesystem::path& path) {
    FileHandle f(path, "rb");
    if (!f) raise(ErrorCode::FileNotFound, "cannot open " + path.string());

    unsigned char sig[8] = {};
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        raise(ErrorCode::UnsupportedFormat, "not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::IoError, "libpng init failed");
    }

    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 w = 0, h = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::CorruptData, "corrupt PNG data: " + path.string());
    }

    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    int bit_depth = 0, color_type = 0;
    png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);
    if (bit_depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::UnsupportedFormat, "16-bit PNG is not supported: " + path.string());
    }

    // Normalize everything to 8-bit RGB: expand palettes and low bit depths,
    // promote grayscale, strip alpha.
    png_set_expand(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::UnsupportedFormat, "unexpected PNG channel layout: " + path.string());
    }

    pixels.resize(static_cast<std::size_t>(w) * h * 3);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * 3;

    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    return RgbImage(static_cast<int>(w), static_cast<int>(h), std::move(pixels));
}

inline void save_png(const RgbImage& img, const std::filesystem::path& path) {
    FileHandle f(path, "wb");
    if (!f) raise(ErrorCode::IoError, "cannot open for writing: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        raise(ErrorCode::IoError, "libpng init failed");
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        raise(ErrorCode::IoError, "PNG write failed: " + path.string());
    }

    png_init_io(png, f.get());
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::uint8_t* base = img.pixels().data();
    for (int y = 0; y < img.height(); ++y)
        png_write_row(png, const_cast<png_bytep>(base + static_cast<std::size_t>(y) * img.width() * 3));

    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Reads one PPM header token, skipping whitespace and '#' comments.
inline std::string ppm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

inline RgbImage load_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::FileNotFound, "cannot open " + path.string());

    const std::string magic = ppm_token(in);
    if (magic != "P6" && magic != "P3")
        raise(ErrorCode::UnsupportedFormat, "not a P6/P3 PPM file: " + path.string());

    long w = 0, h = 0, maxval = 0;
    try {
        w = std::stol(ppm_token(in));
        h = std::stol(ppm_token(in));
        maxval = std::stol(ppm_token(in));
    } catch (const std::exception&) {
        raise(ErrorCode::CorruptData, "malformed PPM header: " + path.string());
    }
    if (w < 1 || h < 1)
        raise(ErrorCode::CorruptData, "bad PPM dimensions: " + path.string());
    if (maxval != 255)
        raise(ErrorCode::UnsupportedFormat,
              "only 8-bit PPM (maxval 255) is supported: " + path.string());

    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(w) * h * 3);
    if (magic == "P6") {
        in.read(reinterpret_cast<char*>(pixels.data()),
                static_cast<std::streamsize>(pixels.size()));
        if (in.gcount() != static_cast<std::streamsize>(pixels.size()))
            raise(ErrorCode::CorruptData, "truncated PPM data: " + path.string());
    } else {
        for (auto& v : pixels) {
            const std::string tok = ppm_token(in);
            if (tok.empty())
                raise(ErrorCode::CorruptData, "truncated PPM data: " + path.string());
            long value = 0;
            try {
                value = std::stol(tok);
            } catch (const std::exception&) {
                raise(ErrorCode::CorruptData, "malformed PPM sample: " + path.string());
            }
            if (value < 0 || value > 255)
                raise(ErrorCode::CorruptData, "PPM sample out of range: " + path.string());
            v = static_cast<std::uint8_t>(value);
        }
    }
    return RgbImage(static_cast<int>(w), static_cast<int>(h), std::move(pixels));
}

inline void save_ppm(const RgbImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot open for writing: " + path.string());
    out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels().data()),
              static_cast<std::streamsize>(img.pixels().size()));
    if (!out) raise(ErrorCode::IoError, "PPM write failed: " + path.string());
}

}  // namespace detail

/// Decodes a PNG or PPM raster to 8-bit RGB. Alpha is discarded, palettes and
/// grayscale are expanded; 16-bit inputs are rejected as UnsupportedFormat.
inline RgbImage load_image(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) raise(ErrorCode::FileNotFound, "cannot open " + path.string());
    unsigned char sig[8] = {};
    probe.read(reinterpret_cast<char*>(sig), 8);
    const std::size_t got = static_cast<std::size_t>(probe.gcount());
    probe.close();

    if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) return detail::load_png(path);
    if (got >= 2 && sig[0] == 'P' && (sig[1] == '6' || sig[1] == '3'))
        return detail::load_ppm(path);
    raise(ErrorCode::UnsupportedFormat, "unrecognized raster format: " + path.string());
}

/// Encodes to PNG or PPM (P6) depending on the file extension.
inline void save_image(const RgbImage& img, const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".png" || ext == ".PNG") {
        detail::save_png(img, path);
    } else if (ext == ".ppm" || ext == ".PPM") {
        detail::save_ppm(img, path);
    } else {
        raise(ErrorCode::UnsupportedFormat, "unsupported output extension: " + path.string());
    }
}

}  // namespace calyx

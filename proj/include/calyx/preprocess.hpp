#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "calyx/core.hpp"
#include "calyx/lighting.hpp"

namespace calyx {

using Plane = std::vector<std::uint8_t>;

/// Planar full-range BT.601 YCbCr image.
struct YCbCrImage {
    int width = 0, height = 0;
    Plane y, cb, cr;

    YCbCrImage() = default;

    YCbCrImage(int w, int h, Plane y_, Plane cb_, Plane cr_)
        : width(w), height(h), y(std::move(y_)), cb(std::move(cb_)), cr(std::move(cr_)) {
        const auto n = static_cast<std::size_t>(w) * h;
        if (w < 1 || h < 1 || y.size() != n || cb.size() != n || cr.size() != n)
            raise(ErrorCode::InvalidParam, "YCbCr planes must match dimensions");
    }
};

namespace detail {

inline std::uint8_t round_clamp_u8(double v) {
    const double r = std::floor(v + 0.5);  // round half up
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

// Per-channel coefficient products, tabulated once. Summing table entries is
// bit-identical to evaluating the formulas directly (same products, same
// order), just without the per-pixel multiplications.
struct Bt601Tables {
    double yr[256], yg[256], yb[256];
    double cbr[256], cbg[256];
    double crg[256], crb[256];
    double rcr[256], gcb[256], gcr[256], bcb[256];

    Bt601Tables() {
        for (int v = 0; v < 256; ++v) {
            const double d = v;
            yr[v] = 0.299 * d;
            yg[v] = 0.587 * d;
            yb[v] = 0.114 * d;
            cbr[v] = 0.168736 * d;
            cbg[v] = 0.331264 * d;
            crg[v] = 0.418688 * d;
            crb[v] = 0.081312 * d;
            rcr[v] = 1.402 * (d - 128.0);
            gcb[v] = 0.344136 * (d - 128.0);
            gcr[v] = 0.714136 * (d - 128.0);
            bcb[v] = 1.772 * (d - 128.0);
        }
    }
};

inline const Bt601Tables& bt601() {
    static const Bt601Tables tables;
    return tables;
}

}  // namespace detail

/// Full-range BT.601:
///   Y  =       0.299 R + 0.587 G + 0.114 B
///   Cb = 128 - 0.168736 R - 0.331264 G + 0.5 B
///   Cr = 128 + 0.5 R - 0.418688 G - 0.081312 B
/// rounded half up and clamped to [0,255].
inline YCbCrImage rgb_to_ycbcr(const RgbImage& img) {
    const auto& t = detail::bt601();
    const auto n = img.pixel_count();
    Plane y(n), cb(n), cr(n);
    const auto& px = img.pixels();
    for (std::size_t p = 0; p < n; ++p) {
        const std::uint8_t r = px[p * 3], g = px[p * 3 + 1], b = px[p * 3 + 2];
        y[p] = detail::round_clamp_u8(t.yr[r] + t.yg[g] + t.yb[b]);
        cb[p] = detail::round_clamp_u8(128.0 - t.cbr[r] - t.cbg[g] + 0.5 * double(b));
        cr[p] = detail::round_clamp_u8(128.0 + 0.5 * double(r) - t.crg[g] - t.crb[b]);
    }
    return YCbCrImage(img.width(), img.height(), std::move(y), std::move(cb), std::move(cr));
}

inline RgbImage ycbcr_to_rgb(const YCbCrImage& img) {
    const auto& t = detail::bt601();
    const auto n = static_cast<std::size_t>(img.width) * img.height;
    std::vector<std::uint8_t> px(n * 3);
    for (std::size_t p = 0; p < n; ++p) {
        const double y = img.y[p];
        const std::uint8_t cb = img.cb[p], cr = img.cr[p];
        px[p * 3] = detail::round_clamp_u8(y + t.rcr[cr]);
        px[p * 3 + 1] = detail::round_clamp_u8(y - t.gcb[cb] - t.gcr[cr]);
        px[p * 3 + 2] = detail::round_clamp_u8(y + t.bcb[cb]);
    }
    return RgbImage(img.width, img.height, std::move(px));
}

/// Monotone 8-bit remapping table produced by histogram equalization.
struct EqualizationLut {
    std::array<std::uint8_t, 256> mapping{};

    std::uint8_t operator()(std::uint8_t v) const { return mapping[v]; }
};

/// CDF equalization: lut[v] = round(255 * (cdf(v) - cdf_min) / (N - cdf_min))
/// where cdf_min is the CDF at the lowest occupied bin. A constant plane maps
/// to itself.
inline EqualizationLut build_equalization_lut(const Plane& plane) {
    if (plane.empty()) raise(ErrorCode::InvalidParam, "cannot equalize an empty plane");

    std::array<std::uint64_t, 256> hist{};
    for (const auto v : plane) ++hist[v];

    EqualizationLut lut;
    int lo = 0;
    while (hist[lo] == 0) ++lo;
    const std::uint64_t cdf_min = hist[lo];
    const std::uint64_t n = plane.size();

    if (n == cdf_min) {  // single occupied bin: identity
        for (int v = 0; v < 256; ++v) lut.mapping[v] = static_cast<std::uint8_t>(v);
        return lut;
    }

    std::uint64_t cdf = 0;
    for (int v = 0; v < 256; ++v) {
        cdf += hist[v];
        if (v < lo) {
            lut.mapping[v] = 0;
        } else {
            const double scaled = 255.0 * double(cdf - cdf_min) / double(n - cdf_min);
            lut.mapping[v] = detail::round_clamp_u8(scaled);
        }
    }
    return lut;
}

inline std::pair<Plane, EqualizationLut> equalize_histogram(const Plane& plane) {
    const EqualizationLut lut = build_equalization_lut(plane);
    Plane out(plane.size());
    for (std::size_t i = 0; i < plane.size(); ++i) out[i] = lut(plane[i]);
    return {std::move(out), lut};
}

/// Whole-image Y-channel equalization; chroma untouched.
inline RgbImage preprocess_overexposed(const RgbImage& img) {
    YCbCrImage ycc = rgb_to_ycbcr(img);
    ycc.y = equalize_histogram(ycc.y).first;
    return ycbcr_to_rgb(ycc);
}

/// Exchanges the blue and green channels; an exact involution.
inline RgbImage swap_blue_green(const RgbImage& img) {
    RgbImage out = img;
    auto& px = out.pixels();
    for (std::size_t i = 0; i < px.size(); i += 3) std::swap(px[i + 1], px[i + 2]);
    return out;
}

/// Y-channel equalization confined to one tile.
inline RgbImage preprocess_glare_tile(const RgbImage& tile) {
    return preprocess_overexposed(tile);
}

/// Whether glare-path equalization runs on disjoint 500x500 blocks of the
/// whole image (default) or is deferred to the overlapped inference tiles.
enum class GlareHeBlocks {
    Disjoint,
    OverlapTiles,
};

/// The per-condition transform sequence. Typical is the identity; overexposed
/// equalizes once globally; glare swaps blue/green and equalizes per block.
struct PreprocessPlan {
    LightingClass lighting = LightingClass::Typical;
    bool global_equalize = false;
    bool swap_channels = false;
    bool block_equalize = false;

    bool is_noop() const {
        return !global_equalize && !swap_channels && !block_equalize;
    }
};

inline PreprocessPlan make_preprocess_plan(LightingClass cls) {
    PreprocessPlan plan;
    plan.lighting = cls;
    switch (cls) {
        case LightingClass::Typical:
            break;
        case LightingClass::Overexposed:
            plan.global_equalize = true;
            break;
        case LightingClass::Glare:
            plan.swap_channels = true;
            plan.block_equalize = true;
            break;
    }
    return plan;
}

namespace detail {

inline void equalize_block_in_place(RgbImage& img, int x0, int y0, int w, int h) {
    const auto n = static_cast<std::size_t>(w) * h;
    std::vector<std::uint8_t> block(n * 3);
    for (int y = 0; y < h; ++y) {
        const auto* src = img.pixels().data() + (static_cast<std::size_t>(y0 + y) * img.width() + x0) * 3;
        std::copy(src, src + static_cast<std::size_t>(w) * 3,
                  block.begin() + static_cast<std::size_t>(y) * w * 3);
    }
    const RgbImage eq = preprocess_glare_tile(RgbImage(w, h, std::move(block)));
    for (int y = 0; y < h; ++y) {
        const auto* src = eq.pixels().data() + static_cast<std::size_t>(y) * w * 3;
        auto* dst = img.pixels().data() + (static_cast<std::size_t>(y0 + y) * img.width() + x0) * 3;
        std::copy(src, src + static_cast<std::size_t>(w) * 3, dst);
    }
}

}  // namespace detail

/// Applies the whole-image part of a plan. With GlareHeBlocks::Disjoint the
/// glare block equalization happens here on a disjoint grid (edge blocks may
/// be smaller); with OverlapTiles it is left for the per-tile stage.
inline RgbImage apply_plan_whole_image(const RgbImage& img, const PreprocessPlan& plan,
                                       GlareHeBlocks mode = GlareHeBlocks::Disjoint,
                                       int block_size = 500) {
    if (plan.is_noop()) return img;
    if (block_size < 1) raise(ErrorCode::InvalidParam, "block size must be >= 1");

    RgbImage out = img;
    if (plan.swap_channels) out = swap_blue_green(out);
    if (plan.global_equalize) out = preprocess_overexposed(out);
    if (plan.block_equalize && mode == GlareHeBlocks::Disjoint) {
        for (int y0 = 0; y0 < out.height(); y0 += block_size) {
            const int h = std::min(block_size, out.height() - y0);
            for (int x0 = 0; x0 < out.width(); x0 += block_size) {
                const int w = std::min(block_size, out.width() - x0);
                detail::equalize_block_in_place(out, x0, y0, w, h);
            }
        }
    }
    return out;
}

/// Applies the per-tile part of a plan (only glare block equalization in
/// OverlapTiles mode does anything here).
inline RgbImage apply_plan_tile(const RgbImage& tile, const PreprocessPlan& plan,
                                GlareHeBlocks mode = GlareHeBlocks::Disjoint) {
    if (plan.block_equalize && mode == GlareHeBlocks::OverlapTiles)
        return preprocess_glare_tile(tile);
    return tile;
}

}  // namespace calyx

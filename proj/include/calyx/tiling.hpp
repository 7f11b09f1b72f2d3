#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "calyx/core.hpp"

namespace calyx {

struct TileRect {
    int x0 = 0, y0 = 0, w = 0, h = 0;

    friend bool operator==(const TileRect&, const TileRect&) = default;
};

/// Crop layout over an image: anchors step by tile - round(overlap * tile),
/// the final anchor per axis is clamped so the last tile abuts the edge.
struct TilePlan {
    int image_w = 0, image_h = 0;
    int tile_w = 0, tile_h = 0;
    double overlap_frac = 0.0;
    std::vector<TileRect> rects;
};

namespace detail {

inline std::vector<int> axis_anchors(int image, int tile, double overlap_frac) {
    if (image <= tile) return {0};
    const int stride = tile - static_cast<int>(std::lround(overlap_frac * tile));
    std::vector<int> anchors;
    for (int a = 0;; a += stride) {
        if (a + tile >= image) {
            const int last = image - tile;
            if (anchors.empty() || anchors.back() != last) anchors.push_back(last);
            break;
        }
        anchors.push_back(a);
    }
    return anchors;
}

}  // namespace detail

inline TilePlan plan_tiles(int img_w, int img_h, int tile_w = 500, int tile_h = 500,
                           double overlap_frac = 0.20) {
    if (img_w < 1 || img_h < 1)
        raise(ErrorCode::InvalidParam, "image dimensions must be >= 1");
    if (tile_w < 1 || tile_h < 1)
        raise(ErrorCode::InvalidParam, "tile dimensions must be >= 1");
    if (overlap_frac < 0.0 || overlap_frac > 0.9)
        raise(ErrorCode::InvalidParam, "overlap fraction must be in [0, 0.9]");

    TilePlan plan;
    plan.image_w = img_w;
    plan.image_h = img_h;
    plan.tile_w = tile_w;
    plan.tile_h = tile_h;
    plan.overlap_frac = overlap_frac;

    // An image smaller than the tile along an axis yields one full-span rect.
    const int w = std::min(tile_w, img_w);
    const int h = std::min(tile_h, img_h);
    for (const int y : detail::axis_anchors(img_h, tile_h, overlap_frac))
        for (const int x : detail::axis_anchors(img_w, tile_w, overlap_frac))
            plan.rects.push_back({x, y, w, h});
    return plan;
}

/// Pixel-exact crop.
inline RgbImage extract_tile(const RgbImage& img, const TileRect& rect) {
    if (rect.w < 1 || rect.h < 1 || rect.x0 < 0 || rect.y0 < 0 ||
        rect.x0 + rect.w > img.width() || rect.y0 + rect.h > img.height())
        raise(ErrorCode::OutOfBounds, "tile rect outside image");

    std::vector<std::uint8_t> px(static_cast<std::size_t>(rect.w) * rect.h * 3);
    for (int y = 0; y < rect.h; ++y) {
        const auto* src = img.pixels().data() +
                          (static_cast<std::size_t>(rect.y0 + y) * img.width() + rect.x0) * 3;
        std::copy(src, src + static_cast<std::size_t>(rect.w) * 3,
                  px.begin() + static_cast<std::size_t>(y) * rect.w * 3);
    }
    return RgbImage(rect.w, rect.h, std::move(px));
}

using MergedMap = ClassMap;

/// Resolves overlap by maximum class confidence: for each pixel the covering
/// tile whose best class probability is largest wins; ties go to the lowest
/// tile index. Writes that tile's argmax class and probability.
inline MergedMap merge_maps(const TilePlan& plan, const std::vector<ProbMap>& tiles) {
    if (tiles.size() != plan.rects.size())
        raise(ErrorCode::ShapeMismatch, "tile count does not match plan");
    for (std::size_t i = 0; i < tiles.size(); ++i)
        if (tiles[i].width() != plan.rects[i].w || tiles[i].height() != plan.rects[i].h)
            raise(ErrorCode::ShapeMismatch, "tile dimensions do not match plan rect");

    MergedMap merged(plan.image_w, plan.image_h);
    std::vector<char> written(static_cast<std::size_t>(plan.image_w) * plan.image_h, 0);

    for (std::size_t t = 0; t < tiles.size(); ++t) {
        const TileRect& r = plan.rects[t];
        const ProbMap& pm = tiles[t];
        const int classes = pm.classes();
        for (int ty = 0; ty < r.h; ++ty) {
            for (int tx = 0; tx < r.w; ++tx) {
                float best = -1.0f;
                int best_cls = 0;
                for (int c = 0; c < classes; ++c) {
                    const float v = pm.at(tx, ty, c);
                    if (v > best) {  // tie within a tile: lowest class id wins
                        best = v;
                        best_cls = c;
                    }
                }
                const std::size_t idx =
                    static_cast<std::size_t>(r.y0 + ty) * plan.image_w + (r.x0 + tx);
                // Strict > keeps the earliest tile on cross-tile ties.
                if (!written[idx] || best > merged.confidence[idx]) {
                    written[idx] = 1;
                    merged.labels[idx] = static_cast<std::uint8_t>(best_cls);
                    merged.confidence[idx] = best;
                }
            }
        }
    }

    for (const char w : written)
        if (!w) raise(ErrorCode::ShapeMismatch, "tile plan does not cover the image");
    return merged;
}

}  // namespace calyx

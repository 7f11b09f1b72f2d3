#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "calyx/core.hpp"

namespace calyx {

/// Backend bounds: the largest tile a backend accepts, and the class count it
/// must emit. Backends must be deterministic: identical tiles give identical
/// maps.
struct SegmenterContract {
    int max_tile_w = 500;
    int max_tile_h = 500;
    int classes = kNumClasses;
};

class Segmenter {
public:
    virtual ~Segmenter() = default;

    virtual SegmenterContract contract() const { return {}; }

    /// tile_index identifies the crop within the current tile plan; pixel-wise
    /// backends ignore it, replay backends use it to locate stored output.
    virtual ProbMap segment_tile(const RgbImage& tile, int tile_index) const = 0;
};

/// Contract-checked entry point.
inline ProbMap segment(const Segmenter& backend, const RgbImage& tile, int tile_index = 0) {
    const SegmenterContract c = backend.contract();
    if (tile.width() > c.max_tile_w || tile.height() > c.max_tile_h)
        raise(ErrorCode::TileTooLarge,
              "tile " + std::to_string(tile.width()) + "x" + std::to_string(tile.height()) +
                  " exceeds backend maximum " + std::to_string(c.max_tile_w) + "x" +
                  std::to_string(c.max_tile_h));
    return backend.segment_tile(tile, tile_index);
}

/// Per-pixel argmax of a probability map; ties pick the lowest class id.
inline ClassMap argmax_classmap(const ProbMap& pm) {
    ClassMap cm(pm.width(), pm.height());
    const int classes = pm.classes();
    for (int y = 0; y < pm.height(); ++y) {
        for (int x = 0; x < pm.width(); ++x) {
            float best = -1.0f;
            int best_cls = 0;
            for (int c = 0; c < classes; ++c) {
                const float v = pm.at(x, y, c);
                if (v > best) {
                    best = v;
                    best_cls = c;
                }
            }
            const std::size_t i = cm.index(x, y);
            cm.labels[i] = static_cast<std::uint8_t>(best_cls);
            cm.confidence[i] = best;
        }
    }
    return cm;
}

/// First-match-wins color rule: a pixel matches when every channel is within
/// its tolerance of the center.
struct ChromaRule {
    ClassId cls = ClassId::Background;
    Rgb center;
    std::array<std::uint8_t, 3> tolerance{0, 0, 0};

    bool matches(Rgb px) const {
        return std::abs(int(px.r) - int(center.r)) <= int(tolerance[0]) &&
               std::abs(int(px.g) - int(center.g)) <= int(tolerance[1]) &&
               std::abs(int(px.b) - int(center.b)) <= int(tolerance[2]);
    }
};

/// Flat key colors shared by the reference segmenter and the synthetic scene
/// generator. The calyx tolerances are wide enough that the glare-recovery
/// path (blue/green swap plus per-block equalization) keeps matching, while a
/// raw glare cast (blue clipped, green suppressed) does not.
struct ScenePalette {
    Rgb background{40, 70, 45};
    Rgb calyx{60, 220, 175};
    Rgb branch{150, 80, 50};
    Rgb wire{210, 210, 230};

    // Occluder paints; leaf/fruit/post/beam deliberately land in no rule's
    // tolerance box and segment as background.
    Rgb leaf{70, 130, 60};
    Rgb fruit{95, 115, 50};
    Rgb post{90, 90, 90};
    Rgb beam{170, 150, 110};
};

inline ScenePalette default_palette() { return {}; }

inline std::vector<ChromaRule> default_chroma_rules(const ScenePalette& pal = default_palette()) {
    // The calyx windows [0,145] x [175,255] x [130,250] accept the clean key
    // color and its swap-plus-equalization appearance under glare, but reject
    // the raw glare cast (green suppressed below 175, blue clipped past 250).
    return {
        {ClassId::Calyx, Rgb{60, 215, 190}, {85, 40, 60}},
        {ClassId::Branch, pal.branch, {50, 50, 50}},
        {ClassId::Wire, pal.wire, {45, 45, 45}},
        {ClassId::Background, pal.background, {255, 255, 255}},  // catch-all
    };
}

/// Applies ordered chroma rules per pixel; the winning class takes probability
/// 0.99 and the remainder is spread uniformly over the other classes (so merge
/// tie-break paths stay exercised by non-degenerate maps).
inline ProbMap reference_segment(const std::vector<ChromaRule>& rules, const RgbImage& tile) {
    if (rules.empty() || rules.back().cls != ClassId::Background)
        raise(ErrorCode::InvalidParam, "rules must end with a Background catch-all");

    constexpr float kWin = 0.99f;
    const float rest = (1.0f - kWin) / (kNumClasses - 1);

    std::vector<float> values(static_cast<std::size_t>(tile.width()) * tile.height() * kNumClasses,
                              rest);
    const auto& px = tile.pixels();
    const std::size_t n = tile.pixel_count();
    for (std::size_t p = 0; p < n; ++p) {
        const Rgb c{px[p * 3], px[p * 3 + 1], px[p * 3 + 2]};
        int cls = static_cast<int>(ClassId::Background);
        for (const auto& rule : rules) {
            if (rule.matches(c)) {
                cls = static_cast<int>(rule.cls);
                break;
            }
        }
        values[p * kNumClasses + cls] = kWin;
    }
    return ProbMap(tile.width(), tile.height(), kNumClasses, std::move(values));
}

/// Deterministic stand-in backend for synthetic imagery.
class ReferenceSegmenter : public Segmenter {
public:
    ReferenceSegmenter() : rules_(default_chroma_rules()) {}
    explicit ReferenceSegmenter(std::vector<ChromaRule> rules) : rules_(std::move(rules)) {}

    ProbMap segment_tile(const RgbImage& tile, int /*tile_index*/) const override {
        return reference_segment(rules_, tile);
    }

    const std::vector<ChromaRule>& rules() const { return rules_; }

private:
    std::vector<ChromaRule> rules_;
};

// .pmap: magic "PMAP", then u32 width, u32 height, u32 classes, then
// width*height*classes float32, pixel-major class-minor. All little-endian.

namespace detail {

inline void write_u32_le(std::ostream& out, std::uint32_t v) {
    const std::uint8_t b[4] = {std::uint8_t(v), std::uint8_t(v >> 8), std::uint8_t(v >> 16),
                               std::uint8_t(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32_le(std::istream& in) {
    std::uint8_t b[4] = {};
    in.read(reinterpret_cast<char*>(b), 4);
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

}  // namespace detail

inline void write_pmap(const ProbMap& pm, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot open for writing: " + path.string());
    out.write("PMAP", 4);
    detail::write_u32_le(out, static_cast<std::uint32_t>(pm.width()));
    detail::write_u32_le(out, static_cast<std::uint32_t>(pm.height()));
    detail::write_u32_le(out, static_cast<std::uint32_t>(pm.classes()));
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(pm.values().data()),
              static_cast<std::streamsize>(pm.values().size() * sizeof(float)));
    if (!out) raise(ErrorCode::IoError, "pmap write failed: " + path.string());
}

inline ProbMap read_pmap(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::BackendFailure, "missing pmap file: " + path.string());

    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "PMAP", 4) != 0)
        raise(ErrorCode::BackendFailure, "bad pmap magic: " + path.string());

    const std::uint32_t w = detail::read_u32_le(in);
    const std::uint32_t h = detail::read_u32_le(in);
    const std::uint32_t c = detail::read_u32_le(in);
    if (!in || w == 0 || h == 0 || c == 0 || w > 100000 || h > 100000 || c > 64)
        raise(ErrorCode::BackendFailure, "bad pmap header: " + path.string());

    std::vector<float> values(std::size_t(w) * h * c);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(float)))
        raise(ErrorCode::BackendFailure, "truncated pmap data: " + path.string());

    try {
        ProbMap pm(int(w), int(h), int(c), std::move(values));
        pm.validate_normalized(1e-4);
        return pm;
    } catch (const Error& e) {
        raise(ErrorCode::BackendFailure, "invalid pmap contents: " + std::string(e.what()));
    }
}

/// Replays externally produced probability maps stored as
/// <dir>/tile_<index>.pmap. Fails with BackendFailure on a missing file, a
/// dimension mismatch, or rows not normalized within 1e-4.
class PmapDirectorySegmenter : public Segmenter {
public:
    explicit PmapDirectorySegmenter(std::filesystem::path dir, SegmenterContract contract = {})
        : dir_(std::move(dir)), contract_(contract) {}

    SegmenterContract contract() const override { return contract_; }

    ProbMap segment_tile(const RgbImage& tile, int tile_index) const override {
        const auto path = dir_ / ("tile_" + std::to_string(tile_index) + ".pmap");
        ProbMap pm = read_pmap(path);
        if (pm.width() != tile.width() || pm.height() != tile.height())
            raise(ErrorCode::BackendFailure,
                  "pmap dimensions " + std::to_string(pm.width()) + "x" +
                      std::to_string(pm.height()) + " do not match tile " +
                      std::to_string(tile.width()) + "x" + std::to_string(tile.height()));
        return pm;
    }

private:
    std::filesystem::path dir_;
    SegmenterContract contract_;
};

}  // namespace calyx

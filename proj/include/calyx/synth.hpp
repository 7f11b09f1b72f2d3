#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "calyx/core.hpp"
#include "calyx/lighting.hpp"
#include "calyx/preprocess.hpp"
#include "calyx/segmentation.hpp"

namespace calyx {

/// splitmix64: state advances by 0x9E3779B97F4A7C15 per draw and the output
/// is the standard three-stage mix of the new state. The algorithm is fixed
/// so seeded fixtures are reproducible everywhere; doubles come from the top
/// 53 bits, bounded ints from a 128-bit multiply-shift. Integer-only, so
/// outputs are portable across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, bound); bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    /// Uniform in [0, 1).
    double next_double() { return double(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

struct SceneSpec {
    int width = 1936;
    int height = 1216;
    int n_calyces = 60;
    std::pair<int, int> radius_range{10, 16};  // bounds must stay within [8, 60]
    double occluded_fraction = 0.0;
    // Weights over {Leaf, Branch, Wire, Fruit, Post, Beam}; defaults roughly
    // follow the observed occluder distribution (leaves dominate).
    std::array<double, 6> occluder_mix{0.45, 0.15, 0.15, 0.12, 0.07, 0.06};
    LightingClass lighting = LightingClass::Typical;
    std::uint64_t seed = 0;

    int n_branches = 3;
    int n_wires = 3;
    double overexposure_target = 0.30;  // tri-saturated fraction for overexposed scenes
    double glare_target = 0.85;         // blue-saturated fraction for glare scenes

    void validate() const {
        if (width < 64 || height < 64)
            raise(ErrorCode::InvalidSpec, "scene must be at least 64x64");
        if (n_calyces < 0 || n_branches < 0 || n_wires < 0)
            raise(ErrorCode::InvalidSpec, "object counts must be >= 0");
        if (radius_range.first < 8 || radius_range.second > 60 ||
            radius_range.first > radius_range.second)
            raise(ErrorCode::InvalidSpec, "radius range must lie within [8, 60]");
        if (occluded_fraction < 0.0 || occluded_fraction > 1.0)
            raise(ErrorCode::InvalidSpec, "occluded fraction must be in [0, 1]");
        double mix_sum = 0.0;
        for (const double w : occluder_mix) {
            if (w < 0.0) raise(ErrorCode::InvalidSpec, "occluder weights must be >= 0");
            mix_sum += w;
        }
        if (occluded_fraction > 0.0 && n_calyces > 0 && mix_sum <= 0.0)
            raise(ErrorCode::InvalidSpec, "occluder weights must not all be zero");
    }
};

struct SynthOutput {
    RgbImage image;
    std::vector<GroundTruthBox> truth;
    LightingClass lighting_label = LightingClass::Typical;
};

namespace detail {

inline std::uint8_t clamp_u8(int v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

// Smooth radial field in (0, 1]: 1 / (1 + d^2 / (2 sigma^2)). Rational, so it
// evaluates identically on any IEEE platform (no libm).
struct RadialField {
    double cx, cy, inv_two_sigma_sq;

    double operator()(int x, int y) const {
        const double dx = x - cx, dy = y - cy;
        return 1.0 / (1.0 + (dx * dx + dy * dy) * inv_two_sigma_sq);
    }
};

inline RadialField make_field(SplitMix64& rng, int w, int h, double sigma_scale) {
    const double cx = double(rng.next_below(static_cast<std::uint64_t>(w)));
    const double cy = double(rng.next_below(static_cast<std::uint64_t>(h)));
    const double sigma = sigma_scale * double(std::max(w, h));
    return {cx, cy, 1.0 / (2.0 * sigma * sigma)};
}

// Stamps a filled disk of the given color, clipped to the image.
inline void stamp_disk(RgbImage& img, double cx, double cy, double radius, Rgb color) {
    const int x0 = std::max(0, int(std::floor(cx - radius)));
    const int x1 = std::min(img.width() - 1, int(std::ceil(cx + radius)));
    const int y0 = std::max(0, int(std::floor(cy - radius)));
    const int y1 = std::min(img.height() - 1, int(std::ceil(cy + radius)));
    const double r2 = radius * radius;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r2) img.set(x, y, color);
}

// Thick line via disk stamping along the segment.
inline void stamp_stroke(RgbImage& img, double x0, double y0, double x1, double y1,
                         double thickness, Rgb color) {
    const double len = std::max(1.0, std::hypot(x1 - x0, y1 - y0));
    const int steps = static_cast<int>(len * 2.0) + 1;
    for (int s = 0; s <= steps; ++s) {
        const double t = double(s) / double(steps);
        stamp_disk(img, x0 + t * (x1 - x0), y0 + t * (y1 - y0), thickness * 0.5, color);
    }
}

struct PlacedCalyx {
    int cx = 0, cy = 0, r = 0;
    std::int64_t disk_pixels = 0;
    Occluder painted_occluder = Occluder::None;
};

// Integer rasterization of the disk pixel set relative to its center.
inline std::vector<std::pair<int, int>> disk_offsets(int r) {
    std::vector<std::pair<int, int>> px;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dx * dx + dy * dy <= r * r) px.emplace_back(dx, dy);
    return px;
}

// Smallest axis cutoff so that the half-plane (coord <= cutoff, after the
// side's sign flip) covers at least `want` of the disk's pixels. Pure integer
// geometry: the same rasterization the recount sees.
inline int half_plane_cutoff(const std::vector<std::pair<int, int>>& offsets, int r, int axis,
                             int sign, std::int64_t want) {
    std::vector<std::int64_t> per_coord(2 * r + 1, 0);
    for (const auto& [dx, dy] : offsets) {
        const int c = sign * (axis == 0 ? dx : dy);
        ++per_coord[c + r];
    }
    std::int64_t cum = 0;
    for (int c = -r; c <= r; ++c) {
        cum += per_coord[c + r];
        if (cum >= want) return c;
    }
    return r;
}

inline Occluder pick_occluder(SplitMix64& rng, const std::array<double, 6>& mix) {
    double total = 0.0;
    for (const double w : mix) total += w;
    const double x = rng.next_double() * total;
    double cum = 0.0;
    for (int i = 0; i < 6; ++i) {
        cum += mix[i];
        if (x < cum) return static_cast<Occluder>(i + 1);
    }
    return Occluder::Beam;
}

inline Rgb occluder_color(Occluder o, const ScenePalette& pal) {
    switch (o) {
        case Occluder::Leaf:   return pal.leaf;
        case Occluder::Branch: return pal.branch;
        case Occluder::Wire:   return pal.wire;
        case Occluder::Fruit:  return pal.fruit;
        case Occluder::Post:   return pal.post;
        case Occluder::Beam:   return pal.beam;
        case Occluder::None:   break;
    }
    return pal.background;
}

}  // namespace detail

/// Adds a smooth brightness field so that at least target_tri_sat_frac of the
/// pixels clip in all three channels while blue stays under the glare bound.
/// Targets at or above 0.5 are unreachable: the tri-saturated set is a subset
/// of the blue-saturated set, so such an image would always classify as glare.
inline RgbImage apply_overexposure(const RgbImage& img, double target_tri_sat_frac,
                                   std::uint64_t seed) {
    if (target_tri_sat_frac < 0.25 || target_tri_sat_frac > 0.9)
        raise(ErrorCode::InvalidParam, "overexposure target must be in [0.25, 0.9]");
    if (target_tri_sat_frac >= 0.5)
        raise(ErrorCode::Unreachable,
              "tri-saturation >= 0.5 forces blue saturation >= 0.5 (glare)");

    SplitMix64 rng(seed);
    const auto field = detail::make_field(rng, img.width(), img.height(), 0.55);

    const std::size_t n = img.pixel_count();
    const auto& px = img.pixels();
    std::vector<double> gain(n);
    std::vector<double> needed(n);  // per-pixel gain required for tri-saturation
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const std::size_t p = std::size_t(y) * img.width() + x;
            const double g = field(x, y);
            gain[p] = g;
            const int m = std::min({px[p * 3], px[p * 3 + 1], px[p * 3 + 2]});
            needed[p] = double(255 - m) / g;
        }
    }

    const std::size_t k = std::min(n - 1, std::size_t(std::ceil(target_tri_sat_frac * double(n))));
    std::vector<double> order = needed;
    std::nth_element(order.begin(), order.begin() + k, order.end());
    const double amplitude = order[k];

    RgbImage out = img;
    auto& opx = out.pixels();
    for (std::size_t p = 0; p < n; ++p) {
        const int lift = int(std::floor(amplitude * gain[p] + 0.5));
        opx[p * 3] = detail::clamp_u8(int(opx[p * 3]) + lift);
        opx[p * 3 + 1] = detail::clamp_u8(int(opx[p * 3 + 1]) + lift);
        opx[p * 3 + 2] = detail::clamp_u8(int(opx[p * 3 + 2]) + lift);
    }

    const SaturationStats stats = saturation_stats(out);
    if (stats.tri_ratio() < target_tri_sat_frac - 1e-9 || stats.b_ratio() >= 0.5 ||
        classify_lighting(stats) != LightingClass::Overexposed)
        raise(ErrorCode::Unreachable, "overexposure target not reachable on this image");
    return out;
}

/// Casts purple glare: the brightest 30% of the field goes fully white
/// (tri-saturated) and the field's top target_blue_sat_frac gets blue clipped,
/// red nudged up and green suppressed. Green keeps the scene structure, so a
/// blue/green swap restores a segmentable image.
inline RgbImage apply_glare(const RgbImage& img, double target_blue_sat_frac,
                            std::uint64_t seed) {
    if (target_blue_sat_frac < 0.5 || target_blue_sat_frac > 0.95)
        raise(ErrorCode::InvalidParam, "glare target must be in [0.5, 0.95]");

    SplitMix64 rng(seed);
    const auto field = detail::make_field(rng, img.width(), img.height(), 0.65);

    const std::size_t n = img.pixel_count();
    std::vector<double> g(n);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            g[std::size_t(y) * img.width() + x] = field(x, y);

    constexpr double kCoreFrac = 0.30;
    const auto kth_largest = [&](double frac) {
        const std::size_t k =
            std::min(n - 1, std::size_t(std::ceil(frac * double(n))) - 1);
        std::vector<double> order = g;
        std::nth_element(order.begin(), order.begin() + k, order.end(), std::greater<>());
        return order[k];
    };
    const double core_level = kth_largest(kCoreFrac);
    const double region_level = kth_largest(target_blue_sat_frac);

    RgbImage out = img;
    auto& opx = out.pixels();
    for (std::size_t p = 0; p < n; ++p) {
        if (g[p] >= core_level) {
            opx[p * 3] = opx[p * 3 + 1] = opx[p * 3 + 2] = 255;
        } else if (g[p] >= region_level) {
            opx[p * 3] = detail::clamp_u8(int(opx[p * 3]) + 15);
            opx[p * 3 + 1] = detail::clamp_u8(int(opx[p * 3 + 1]) - 60);
            opx[p * 3 + 2] = 255;
        }
    }

    const SaturationStats stats = saturation_stats(out);
    if (classify_lighting(stats) != LightingClass::Glare)
        raise(ErrorCode::Unreachable, "glare construction failed to classify as glare");
    return out;
}

/// Deterministic synthetic canopy scene: key-colored calyx disks over jittered
/// background with branch/wire strokes; occluders over-paint (clipped to their
/// disk) so covered pixels lose the calyx key color; the occlusion flag comes
/// from recounting actual painted coverage against the 50% rule.
inline SynthOutput generate_scene(const SceneSpec& spec) {
    spec.validate();
    const ScenePalette pal = default_palette();
    SplitMix64 rng(spec.seed);

    RgbImage img(spec.width, spec.height);
    auto& px = img.pixels();
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        const std::uint64_t bits = rng.next();
        px[p * 3] = detail::clamp_u8(int(pal.background.r) + int(bits & 0xff) % 13 - 6);
        px[p * 3 + 1] = detail::clamp_u8(int(pal.background.g) + int((bits >> 8) & 0xff) % 13 - 6);
        px[p * 3 + 2] = detail::clamp_u8(int(pal.background.b) + int((bits >> 16) & 0xff) % 13 - 6);
    }

    const auto rand_coord = [&](int extent) { return double(rng.next_below(std::uint64_t(extent))); };

    for (int i = 0; i < spec.n_branches; ++i) {
        const bool vertical = rng.next_below(2) == 1;
        const double thickness = 10.0 + double(rng.next_below(9));
        if (vertical)
            detail::stamp_stroke(img, rand_coord(spec.width), 0, rand_coord(spec.width),
                                 spec.height - 1, thickness, pal.branch);
        else
            detail::stamp_stroke(img, 0, rand_coord(spec.height), spec.width - 1,
                                 rand_coord(spec.height), thickness, pal.branch);
    }
    for (int i = 0; i < spec.n_wires; ++i) {
        const double y0 = rand_coord(spec.height);
        const double y1 = std::clamp(y0 + double(rng.next_below(201)) - 100.0, 0.0,
                                     double(spec.height - 1));
        detail::stamp_stroke(img, 0, y0, spec.width - 1, y1, 2.0 + double(rng.next_below(2)),
                             pal.wire);
    }

    // Calyx placement: uniform positions with a border margin, rejected until
    // disks keep a 6 px gap (touching disks would fuse into one blob).
    std::vector<detail::PlacedCalyx> calyces;
    for (int i = 0; i < spec.n_calyces; ++i) {
        const int r = spec.radius_range.first +
                      int(rng.next_below(std::uint64_t(spec.radius_range.second -
                                                       spec.radius_range.first + 1)));
        const int margin = r + 8;
        if (spec.width - 2 * margin <= 0 || spec.height - 2 * margin <= 0)
            raise(ErrorCode::InvalidSpec, "scene too small for the requested calyx radius");

        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            const int cx = margin + int(rng.next_below(std::uint64_t(spec.width - 2 * margin)));
            const int cy = margin + int(rng.next_below(std::uint64_t(spec.height - 2 * margin)));
            bool ok = true;
            for (const auto& other : calyces) {
                const std::int64_t dx = cx - other.cx, dy = cy - other.cy;
                const std::int64_t min_dist = r + other.r + 6;
                if (dx * dx + dy * dy < min_dist * min_dist) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                calyces.push_back({cx, cy, r, 0, Occluder::None});
                placed = true;
            }
        }
        if (!placed)
            raise(ErrorCode::InvalidSpec,
                  "could not place calyx " + std::to_string(i) + " after 1000 attempts");
    }

    for (auto& c : calyces) {
        const auto offsets = detail::disk_offsets(c.r);
        c.disk_pixels = static_cast<std::int64_t>(offsets.size());
        for (const auto& [dx, dy] : offsets) img.set(c.cx + dx, c.cy + dy, pal.calyx);
    }

    // Pick exactly round(fraction * n) calyces to occlude.
    const int n = static_cast<int>(calyces.size());
    const int n_occluded = static_cast<int>(std::lround(spec.occluded_fraction * n));
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = 0; i < n_occluded; ++i) {
        const int j = i + int(rng.next_below(std::uint64_t(n - i)));
        std::swap(order[i], order[j]);
    }

    for (int oi = 0; oi < n_occluded; ++oi) {
        auto& c = calyces[order[oi]];
        const Occluder kind = detail::pick_occluder(rng, spec.occluder_mix);
        // Cover 58-95% of the disk; the margin over the 50% rule keeps
        // rasterization from flipping the planned flag.
        const double cover = 0.58 + 0.37 * rng.next_double();
        const int side = int(rng.next_below(4));  // 0:left 1:right 2:top 3:bottom
        const int axis = side / 2;
        const int sign = (side % 2 == 0) ? 1 : -1;

        const auto offsets = detail::disk_offsets(c.r);
        const auto want = static_cast<std::int64_t>(
            std::ceil(cover * double(offsets.size())));
        const int cutoff = detail::half_plane_cutoff(offsets, c.r, axis, sign, want);
        const Rgb color = detail::occluder_color(kind, pal);
        for (const auto& [dx, dy] : offsets) {
            const int coord = sign * (axis == 0 ? dx : dy);
            if (coord <= cutoff) img.set(c.cx + dx, c.cy + dy, color);
        }
        c.painted_occluder = kind;
    }

    // Honest recount: a calyx is occluded iff at least half its disk pixels no
    // longer carry the key color.
    std::vector<GroundTruthBox> truth;
    truth.reserve(calyces.size());
    for (const auto& c : calyces) {
        std::int64_t covered = 0;
        for (const auto& [dx, dy] : detail::disk_offsets(c.r))
            if (!(img.at(c.cx + dx, c.cy + dy) == pal.calyx)) ++covered;
        const bool occluded = 2 * covered >= c.disk_pixels;
        truth.emplace_back(double(c.cx - c.r), double(c.cy - c.r), double(c.cx + c.r),
                           double(c.cy + c.r), occluded,
                           occluded ? c.painted_occluder : Occluder::None);
    }

    switch (spec.lighting) {
        case LightingClass::Typical:
            break;
        case LightingClass::Overexposed:
            img = apply_overexposure(img, spec.overexposure_target, rng.next());
            break;
        case LightingClass::Glare:
            img = apply_glare(img, spec.glare_target, rng.next());
            break;
    }

    return {std::move(img), std::move(truth), spec.lighting};
}

}  // namespace calyx

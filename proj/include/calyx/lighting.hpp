#pragma once

#include <cstdint>

#include "calyx/core.hpp"

namespace calyx {

/// Counts of clipped pixels per channel plus the tri-channel intersection.
struct SaturationStats {
    std::uint64_t r_sat = 0;
    std::uint64_t g_sat = 0;
    std::uint64_t b_sat = 0;
    std::uint64_t tri_sat = 0;  // saturated in R and G and B simultaneously
    std::uint64_t total = 0;

    double r_ratio() const { return total ? double(r_sat) / double(total) : 0.0; }
    double g_ratio() const { return total ? double(g_sat) / double(total) : 0.0; }
    double b_ratio() const { return total ? double(b_sat) / double(total) : 0.0; }
    double tri_ratio() const { return total ? double(tri_sat) / double(total) : 0.0; }
};

enum class LightingClass {
    Typical,
    Overexposed,
    Glare,
};

inline const char* lighting_name(LightingClass c) {
    switch (c) {
        case LightingClass::Typical:     return "typical";
        case LightingClass::Overexposed: return "overexposed";
        case LightingClass::Glare:       return "glare";
    }
    return "typical";
}

inline std::optional<LightingClass> lighting_from_name(const std::string& s) {
    if (s == "typical") return LightingClass::Typical;
    if (s == "overexposed") return LightingClass::Overexposed;
    if (s == "glare") return LightingClass::Glare;
    return std::nullopt;
}

/// How the overexposure numerator is read: the per-pixel intersection count
/// (default), or each channel's own ratio clearing the threshold.
enum class OverexposureRule {
    TriIntersection,
    PerChannelRatios,
};

/// A channel is saturated when its value is >= sat_threshold (default 255,
/// i.e. exact clipping).
inline SaturationStats saturation_stats(const RgbImage& img, int sat_threshold = 255) {
    if (sat_threshold < 1 || sat_threshold > 255)
        raise(ErrorCode::InvalidParam, "saturation threshold must be in [1,255]");

    SaturationStats s;
    s.total = img.pixel_count();
    const auto t = static_cast<std::uint8_t>(sat_threshold);
    const auto& px = img.pixels();
    for (std::size_t i = 0; i < px.size(); i += 3) {
        const bool r = px[i] >= t;
        const bool g = px[i + 1] >= t;
        const bool b = px[i + 2] >= t;
        s.r_sat += r;
        s.g_sat += g;
        s.b_sat += b;
        s.tri_sat += (r && g && b);
    }
    return s;
}

/// Glare if the image is overexposed and at least half of all pixels clip in
/// blue; overexposed if at least a quarter clip in all three channels.
/// Both thresholds are inclusive.
inline LightingClass classify_lighting(const SaturationStats& s,
                                       OverexposureRule rule = OverexposureRule::TriIntersection) {
    const double total = s.total ? double(s.total) : 1.0;
    bool overexposed = false;
    if (rule == OverexposureRule::TriIntersection) {
        overexposed = double(s.tri_sat) / total >= 0.25;
    } else {
        overexposed = double(s.r_sat) / total >= 0.25 &&
                      double(s.g_sat) / total >= 0.25 &&
                      double(s.b_sat) / total >= 0.25;
    }
    if (!overexposed) return LightingClass::Typical;
    if (double(s.b_sat) / total >= 0.5) return LightingClass::Glare;
    return LightingClass::Overexposed;
}

inline LightingClass classify_lighting(const RgbImage& img, int sat_threshold = 255,
                                       OverexposureRule rule = OverexposureRule::TriIntersection) {
    return classify_lighting(saturation_stats(img, sat_threshold), rule);
}

}  // namespace calyx

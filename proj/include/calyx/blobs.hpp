#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <unordered_map>
#include <vector>

#include "calyx/core.hpp"

namespace calyx {

enum class Connectivity {
    Four = 4,
    Eight = 8,
};

struct BlobConfig {
    std::int64_t min_area = 150;        // px^2
    double min_circularity = 0.5;
    Connectivity connectivity = Connectivity::Eight;

    void validate() const {
        if (min_area < 1) raise(ErrorCode::InvalidParam, "min_area must be >= 1");
        if (!(min_circularity > 0.0) || min_circularity > 1.0)
            raise(ErrorCode::InvalidParam, "min_circularity must be in (0,1]");
    }
};

/// One connected component of a target class. perimeter is the outer-boundary
/// chain length (1 per axial step, sqrt(2) per diagonal); circularity floors
/// it at the ideal-disk bound 2*sqrt(pi*area) so tiny blobs stay in (0,1].
struct Blob {
    std::int64_t pixel_count = 0;
    double perimeter = 0.0;
    double centroid_x = 0.0;
    double centroid_y = 0.0;
    double equivalent_radius = 0.0;  // sqrt(area / pi)
    double mean_confidence = 0.0;

    double circularity() const {
        const double area = static_cast<double>(pixel_count);
        const double p = std::max(perimeter, 2.0 * std::sqrt(std::numbers::pi * area));
        return 4.0 * std::numbers::pi * area / (p * p);
    }
};

namespace detail {

// Clockwise Moore neighborhood (x right, y down), starting west.
inline constexpr int kMooreDx[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
inline constexpr int kMooreDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

inline int moore_dir(int from_x, int from_y, int to_x, int to_y) {
    const int dx = to_x - from_x, dy = to_y - from_y;
    for (int d = 0; d < 8; ++d)
        if (kMooreDx[d] == dx && kMooreDy[d] == dy) return d;
    return -1;
}

/// Outer-boundary chain length via Moore-neighbor tracing. The trace state
/// (pixel, backtrack direction) evolves deterministically, so the first
/// repeated state closes the boundary cycle exactly; the cycle's accumulated
/// step cost is the perimeter. Isolated pixels trace to length 0.
inline double trace_perimeter(const std::vector<std::int32_t>& labels, int width, int height,
                              std::int32_t component, int start_x, int start_y) {
    const auto inside = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < width && y < height &&
               labels[static_cast<std::size_t>(y) * width + x] == component;
    };

    constexpr double kDiag = std::numbers::sqrt2;
    // state key: (pixel index) * 8 + direction from pixel to backtrack
    std::unordered_map<std::uint64_t, double> seen;

    int px = start_x, py = start_y;
    int back_dir = 0;  // start pixel is topmost-leftmost: west neighbor is outside
    double cum = 0.0;

    while (true) {
        const std::uint64_t key =
            (static_cast<std::uint64_t>(py) * width + px) * 8 + static_cast<std::uint64_t>(back_dir);
        const auto [it, fresh] = seen.emplace(key, cum);
        if (!fresh) return cum - it->second;

        int next_x = 0, next_y = 0, prev_dir = back_dir, found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (back_dir + k) % 8;
            const int nx = px + kMooreDx[d], ny = py + kMooreDy[d];
            if (inside(nx, ny)) {
                next_x = nx;
                next_y = ny;
                found = d;
                break;
            }
            prev_dir = d;
        }
        if (found < 0) return 0.0;  // single isolated pixel

        cum += (kMooreDx[found] == 0 || kMooreDy[found] == 0) ? 1.0 : kDiag;
        // New backtrack: the background neighbor checked just before the hit,
        // expressed as a direction from the new pixel.
        const int bx = px + kMooreDx[prev_dir], by = py + kMooreDy[prev_dir];
        back_dir = moore_dir(next_x, next_y, bx, by);
        px = next_x;
        py = next_y;
    }
}

}  // namespace detail

/// Maximal connected sets of pixels labeled cls. Centroid is the mean pixel
/// coordinate; mean_confidence averages the map's per-pixel confidence over
/// the component. Components are emitted in row-major discovery order.
inline std::vector<Blob> connected_components(const ClassMap& cm, ClassId cls,
                                              Connectivity connectivity = Connectivity::Eight) {
    const int w = cm.width, h = cm.height;
    const auto target = static_cast<std::uint8_t>(cls);
    std::vector<std::int32_t> labels(static_cast<std::size_t>(w) * h, -1);

    const int n_dirs = connectivity == Connectivity::Eight ? 8 : 4;
    static constexpr int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};

    std::vector<Blob> blobs;
    std::vector<std::pair<int, int>> stack;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (cm.labels[idx] != target || labels[idx] >= 0) continue;

            const auto comp = static_cast<std::int32_t>(blobs.size());
            labels[idx] = comp;
            stack.clear();
            stack.emplace_back(x, y);

            std::int64_t area = 0;
            double sum_x = 0.0, sum_y = 0.0, sum_conf = 0.0;
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                ++area;
                sum_x += cx;
                sum_y += cy;
                sum_conf += cm.confidence[static_cast<std::size_t>(cy) * w + cx];
                for (int d = 0; d < n_dirs; ++d) {
                    const int nx = cx + dx8[d], ny = cy + dy8[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                    if (cm.labels[nidx] != target || labels[nidx] >= 0) continue;
                    labels[nidx] = comp;
                    stack.emplace_back(nx, ny);
                }
            }

            Blob b;
            b.pixel_count = area;
            b.centroid_x = sum_x / double(area);
            b.centroid_y = sum_y / double(area);
            b.equivalent_radius = std::sqrt(double(area) / std::numbers::pi);
            b.mean_confidence = sum_conf / double(area);
            b.perimeter = detail::trace_perimeter(labels, w, h, comp, x, y);
            blobs.push_back(b);
        }
    }
    return blobs;
}

/// Keeps blobs meeting both the area and circularity minima.
inline std::vector<Blob> filter_blobs(const std::vector<Blob>& blobs, const BlobConfig& cfg) {
    cfg.validate();
    std::vector<Blob> kept;
    for (const auto& b : blobs)
        if (b.pixel_count >= cfg.min_area && b.circularity() >= cfg.min_circularity)
            kept.push_back(b);
    return kept;
}

/// One detection per blob, sorted by descending confidence (stable).
inline std::vector<Detection> blobs_to_detections(const std::vector<Blob>& blobs) {
    std::vector<Detection> dets;
    dets.reserve(blobs.size());
    for (const auto& b : blobs)
        dets.emplace_back(b.centroid_x, b.centroid_y, b.equivalent_radius, b.mean_confidence);
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
    return dets;
}

/// connected_components + filter_blobs + blobs_to_detections in one call.
inline std::vector<Detection> extract_detections(const ClassMap& cm, ClassId cls,
                                                 const BlobConfig& cfg) {
    return blobs_to_detections(filter_blobs(connected_components(cm, cls, cfg.connectivity), cfg));
}

}  // namespace calyx

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "calyx/annotations.hpp"
#include "calyx/core.hpp"

namespace calyx {

/// How a detection's distance to a ground-truth box is measured.
enum class BoxDistance {
    Center,        // to the box center (default)
    ClosestPoint,  // to the nearest point on the box
};

struct EvalConfig {
    double match_threshold = 20.0;  // px
    double big_cost = 1e6;          // sentinel, larger than any admissible distance
    BoxDistance distance = BoxDistance::Center;

    void validate() const {
        if (!(match_threshold > 0.0))
            raise(ErrorCode::InvalidParam, "match threshold must be > 0");
        if (!(big_cost > match_threshold))
            raise(ErrorCode::InvalidParam, "big_cost must exceed the match threshold");
    }
};

struct CostMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> values;  // row-major

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

inline double detection_box_distance(const Detection& det, const GroundTruthBox& gt,
                                     BoxDistance mode = BoxDistance::Center) {
    if (mode == BoxDistance::Center) {
        const double dx = det.cx - gt.center_x();
        const double dy = det.cy - gt.center_y();
        return std::hypot(dx, dy);
    }
    const double nx = std::clamp(det.cx, gt.x_min, gt.x_max);
    const double ny = std::clamp(det.cy, gt.y_min, gt.y_max);
    return std::hypot(det.cx - nx, det.cy - ny);
}

/// Pairwise Euclidean distances; entries beyond the gate are replaced by the
/// big-cost sentinel so the assignment avoids them whenever possible.
inline CostMatrix cost_matrix(const std::vector<Detection>& dets,
                              const std::vector<GroundTruthBox>& gts, const EvalConfig& cfg = {}) {
    cfg.validate();
    CostMatrix m;
    m.rows = dets.size();
    m.cols = gts.size();
    m.values.resize(m.rows * m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double d = detection_box_distance(dets[i], gts[j], cfg.distance);
            m.at(i, j) = d > cfg.match_threshold ? cfg.big_cost : d;
        }
    }
    return m;
}

/// Minimum-cost assignment (Jonker-Volgenant style shortest augmenting path,
/// O(n^3)). Rectangular inputs are padded internally with zero-cost dummy
/// rows/columns, which shifts every perfect matching's total by the same
/// constant and so preserves the optimum. Returns, per row, the assigned
/// column or -1 (only possible when rows > cols).
inline std::vector<int> hungarian_assign(const CostMatrix& costs) {
    const std::size_t n_rows = costs.rows, n_cols = costs.cols;
    if (n_rows == 0 || n_cols == 0) return std::vector<int>(n_rows, -1);
    const std::size_t n = std::max(n_rows, n_cols);

    const auto cost = [&](std::size_t r, std::size_t c) -> double {
        return (r < n_rows && c < n_cols) ? costs.at(r, c) : 0.0;
    };

    constexpr double kInf = std::numeric_limits<double>::infinity();
    // 1-based potentials/assignment; col_row[j] = row matched to column j.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> col_row(n + 1, 0), way(n + 1, 0);

    for (std::size_t i = 1; i <= n; ++i) {
        col_row[0] = i;
        std::size_t j0 = 0;
        std::vector<double> min_slack(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = col_row[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < min_slack[j]) {
                    min_slack[j] = cur;
                    way[j] = j0;
                }
                if (min_slack[j] < delta) {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
        } while (col_row[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_col(n_rows, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = col_row[j];
        if (i >= 1 && i <= n_rows && j <= n_cols) row_col[i - 1] = static_cast<int>(j - 1);
    }
    return row_col;
}

struct MatchPair {
    int detection = 0;
    int ground_truth = 0;
    double distance = 0.0;
};

struct MatchReport {
    std::int64_t tp = 0, fp = 0, fn = 0;
    std::vector<MatchPair> pairs;
};

/// One-to-one gated matching: Hungarian assignment on the gated cost matrix,
/// then pairs whose true distance exceeds the threshold are discarded (they
/// were only assigned to keep the matrix square).
inline MatchReport match(const std::vector<Detection>& dets,
                         const std::vector<GroundTruthBox>& gts, const EvalConfig& cfg = {}) {
    cfg.validate();
    MatchReport report;
    if (!dets.empty() && !gts.empty()) {
        const CostMatrix costs = cost_matrix(dets, gts, cfg);
        const std::vector<int> assign = hungarian_assign(costs);
        for (std::size_t i = 0; i < assign.size(); ++i) {
            const int j = assign[i];
            if (j < 0) continue;
            const double d = detection_box_distance(dets[i], gts[j], cfg.distance);
            if (d <= cfg.match_threshold)
                report.pairs.push_back({static_cast<int>(i), j, d});
        }
    }
    report.tp = static_cast<std::int64_t>(report.pairs.size());
    report.fp = static_cast<std::int64_t>(dets.size()) - report.tp;
    report.fn = static_cast<std::int64_t>(gts.size()) - report.tp;
    return report;
}

struct Metrics {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    bool degenerate = false;  // some denominator was zero and defaulted to 0
};

inline double f1_score(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

inline Metrics metrics(const MatchReport& report) {
    Metrics m;
    const double tp = static_cast<double>(report.tp);
    if (report.tp + report.fn > 0)
        m.recall = tp / double(report.tp + report.fn);
    else
        m.degenerate = true;
    if (report.tp + report.fp > 0)
        m.precision = tp / double(report.tp + report.fp);
    else
        m.degenerate = true;
    m.f1 = f1_score(m.precision, m.recall);
    return m;
}

struct OcclusionBreakdown {
    double recall_non_occluded = 0.0;
    double recall_occluded = 0.0;
    bool non_occluded_defined = false;
    bool occluded_defined = false;
    std::array<std::int64_t, kNumOccluders> occluder_histogram{};  // indexed by Occluder
    double percent_non_occluded = 0.0;
    std::int64_t matched_non_occluded = 0, matched_occluded = 0;
    std::int64_t total_non_occluded = 0, total_occluded = 0;
};

/// Recall split by occlusion status plus the occluder-kind histogram over the
/// occluded ground truths.
inline OcclusionBreakdown occlusion_breakdown(const MatchReport& report,
                                              const std::vector<GroundTruthBox>& gts) {
    OcclusionBreakdown b;
    std::vector<char> matched(gts.size(), 0);
    for (const auto& p : report.pairs) {
        if (p.ground_truth < 0 || static_cast<std::size_t>(p.ground_truth) >= gts.size())
            raise(ErrorCode::InvalidParam, "match pair references a missing ground truth");
        matched[p.ground_truth] = 1;
    }

    for (std::size_t i = 0; i < gts.size(); ++i) {
        const auto& gt = gts[i];
        if (gt.occluded) {
            ++b.total_occluded;
            b.matched_occluded += matched[i];
            ++b.occluder_histogram[static_cast<int>(gt.occluder)];
        } else {
            ++b.total_non_occluded;
            b.matched_non_occluded += matched[i];
        }
    }

    if (b.total_non_occluded > 0) {
        b.non_occluded_defined = true;
        b.recall_non_occluded = double(b.matched_non_occluded) / double(b.total_non_occluded);
    }
    if (b.total_occluded > 0) {
        b.occluded_defined = true;
        b.recall_occluded = double(b.matched_occluded) / double(b.total_occluded);
    }
    const std::int64_t total = b.total_non_occluded + b.total_occluded;
    if (total > 0) b.percent_non_occluded = double(b.total_non_occluded) / double(total);
    return b;
}

/// Mean ground-truth boxes per image over a manifest.
inline double density(const DatasetManifest& manifest) {
    std::int64_t boxes = 0;
    for (const auto& entry : manifest.entries)
        boxes += static_cast<std::int64_t>(load_annotations(entry.annotation_path).size());
    return double(boxes) / double(manifest.entries.size());
}

}  // namespace calyx

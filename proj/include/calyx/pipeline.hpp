#pragma once

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "calyx/blobs.hpp"
#include "calyx/core.hpp"
#include "calyx/eval.hpp"
#include "calyx/lighting.hpp"
#include "calyx/preprocess.hpp"
#include "calyx/segmentation.hpp"
#include "calyx/tiling.hpp"

namespace calyx {

/// Defaults reproduce the published pipeline settings: 500x500 tiles, 20%
/// overlap, 150 px^2 / 0.5 blob thresholds, 20 px match gate, saturation at
/// exact clipping.
struct PipelineConfig {
    int tile_w = 500;
    int tile_h = 500;
    double tile_overlap = 0.20;
    int sat_threshold = 255;
    OverexposureRule overexposure_rule = OverexposureRule::TriIntersection;
    bool preprocess_enabled = true;
    std::optional<LightingClass> forced_lighting;
    GlareHeBlocks glare_he_blocks = GlareHeBlocks::Disjoint;
    BlobConfig blobs{};
    EvalConfig eval{};
    int workers = 0;  // 0 = hardware concurrency
};

struct StageTimings {
    double classify_ms = 0.0;
    double preprocess_ms = 0.0;
    double tile_ms = 0.0;
    double segment_ms = 0.0;
    double merge_ms = 0.0;
    double blobs_ms = 0.0;
    double total_ms = 0.0;
};

struct PipelineResult {
    LightingClass lighting = LightingClass::Typical;
    PreprocessPlan plan;
    TilePlan tile_plan;
    std::vector<Detection> detections;
    StageTimings timings;
};

namespace detail {

class StageClock {
public:
    StageClock() : start_(std::chrono::steady_clock::now()) {}

    double lap_ms() {
        const auto now = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
        last_ = now;
        return ms;
    }

    double total_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
    std::chrono::steady_clock::time_point last_ = start_;
};

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Results land by
/// index, so the output never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    if (workers <= 0) workers = int(std::max(1u, std::thread::hardware_concurrency()));
    const auto n_threads = std::size_t(std::min<std::size_t>(workers, count));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr error;
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// classify -> preprocess -> tile -> segment -> merge -> blobs, with per-stage
/// wall-clock timings. Deterministic for fixed inputs regardless of worker
/// scheduling.
inline PipelineResult run_pipeline(const RgbImage& img, const Segmenter& backend,
                                   const PipelineConfig& cfg = {}) {
    PipelineResult result;
    detail::StageClock clock;

    result.lighting = cfg.forced_lighting
                          ? *cfg.forced_lighting
                          : classify_lighting(img, cfg.sat_threshold, cfg.overexposure_rule);
    result.timings.classify_ms = clock.lap_ms();

    result.plan = cfg.preprocess_enabled ? make_preprocess_plan(result.lighting)
                                         : PreprocessPlan{result.lighting, false, false, false};
    const RgbImage preprocessed =
        apply_plan_whole_image(img, result.plan, cfg.glare_he_blocks, cfg.tile_w);
    result.timings.preprocess_ms = clock.lap_ms();

    result.tile_plan =
        plan_tiles(preprocessed.width(), preprocessed.height(), cfg.tile_w, cfg.tile_h,
                   cfg.tile_overlap);
    std::vector<RgbImage> tiles(result.tile_plan.rects.size());
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        tiles[i] = extract_tile(preprocessed, result.tile_plan.rects[i]);
        tiles[i] = apply_plan_tile(tiles[i], result.plan, cfg.glare_he_blocks);
    }
    result.timings.tile_ms = clock.lap_ms();

    std::vector<ProbMap> maps(tiles.size());
    detail::parallel_for(tiles.size(), cfg.workers,
                         [&](std::size_t i) { maps[i] = segment(backend, tiles[i], int(i)); });
    result.timings.segment_ms = clock.lap_ms();

    const MergedMap merged = merge_maps(result.tile_plan, maps);
    result.timings.merge_ms = clock.lap_ms();

    result.detections = extract_detections(merged, ClassId::Calyx, cfg.blobs);
    result.timings.blobs_ms = clock.lap_ms();
    result.timings.total_ms = clock.total_ms();
    return result;
}

/// Stage timing probe (the pipeline already times itself; this names the
/// operation for benchmarking call sites).
inline StageTimings time_pipeline(const RgbImage& img, const Segmenter& backend,
                                  const PipelineConfig& cfg = {}) {
    return run_pipeline(img, backend, cfg).timings;
}

}  // namespace calyx

// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code 0 only when all pass.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "calyx/calyx.hpp"

using namespace calyx;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", number, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

template <typename Fn>
void criterion(int number, const std::string& name, Fn&& fn) {
    try {
        const auto [pass, detail] = fn();
        report(number, name, pass, detail);
    } catch (const std::exception& e) {
        report(number, name, false, std::string("exception: ") + e.what());
    }
}

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() / ("calyx_acceptance_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

// --- criterion 1: published-table metric arithmetic ------------------------

std::pair<bool, std::string> metric_rows() {
    const struct Row {
        double recall, precision, f1;
    } rows[] = {
        {0.74, 0.92, 0.82}, {0.41, 0.70, 0.52}, {0.45, 0.70, 0.55},
        {0.07, 0.64, 0.13}, {0.30, 0.71, 0.42},
    };
    std::string detail;
    bool pass = true;
    for (const auto& row : rows) {
        const double f1 = f1_score(row.precision, row.recall);
        const bool ok = std::abs(f1 - row.f1) <= 0.005;
        pass = pass && ok;
        if (!detail.empty()) detail += ", ";
        detail += fmt(f1, 4) + (ok ? "~" : "!") + "=" + fmt(row.f1, 2);
    }
    return {pass, detail};
}

// --- criterion 2: Hungarian vs exhaustive oracle ----------------------------

double brute_force_min(const CostMatrix& m) {
    const std::size_t n = std::max(m.rows, m.cols);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (i < m.rows && std::size_t(perm[i]) < m.cols) total += m.at(i, perm[i]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::pair<bool, std::string> hungarian_oracle() {
    const auto start = std::chrono::steady_clock::now();
    SplitMix64 rng(2025);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        CostMatrix m;
        m.rows = 1 + rng.next_below(6);
        m.cols = 1 + rng.next_below(6);
        m.values.resize(m.rows * m.cols);
        for (auto& v : m.values) v = double(rng.next_below(1000));

        const auto assign = hungarian_assign(m);
        double total = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i)
            if (assign[i] >= 0) total += m.at(i, assign[i]);
        if (total != brute_force_min(m)) ++mismatches;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {mismatches == 0 && secs < 5.0,
            "200 matrices, " + std::to_string(mismatches) + " mismatches, " + fmt(secs, 2) + "s"};
}

// --- criterion 3: tiling anchors and coverage -------------------------------

std::pair<bool, std::string> tiling_contract() {
    const TilePlan plan = plan_tiles(1936, 1216, 500, 500, 0.20);
    std::vector<int> xs, ys;
    for (const auto& r : plan.rects) {
        xs.push_back(r.x0);
        ys.push_back(r.y0);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());

    bool pass = plan.rects.size() == 15 && xs == std::vector<int>{0, 400, 800, 1200, 1436} &&
                ys == std::vector<int>{0, 400, 716};
    std::string detail = std::to_string(plan.rects.size()) + " tiles";

    // coverage for 500 random sizes in [1, 3000]^2, checked per axis
    SplitMix64 rng(31415);
    int covered = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int w = 1 + int(rng.next_below(3000));
        const int h = 1 + int(rng.next_below(3000));
        const TilePlan p = plan_tiles(w, h);

        const auto axis_ok = [](std::vector<int> anchors, int tile, int extent) {
            std::sort(anchors.begin(), anchors.end());
            anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
            if (anchors.front() != 0) return false;
            if (anchors.back() + tile < extent) return false;
            for (std::size_t i = 1; i < anchors.size(); ++i)
                if (anchors[i] - anchors[i - 1] > tile) return false;
            return true;
        };
        std::vector<int> px, py;
        for (const auto& r : p.rects) {
            px.push_back(r.x0);
            py.push_back(r.y0);
        }
        const int tw = p.rects[0].w, th = p.rects[0].h;
        if (axis_ok(px, tw, w) && axis_ok(py, th, h)) ++covered;
    }
    pass = pass && covered == 500;
    detail += ", coverage " + std::to_string(covered) + "/500";
    return {pass, detail};
}

// --- criterion 4: lighting boundary cases -----------------------------------

std::pair<bool, std::string> lighting_boundaries() {
    SaturationStats s;
    s.total = 10000;

    s.tri_sat = 2500;  // exactly 0.25
    s.b_sat = 4999;
    const bool over = classify_lighting(s) == LightingClass::Overexposed;

    s.b_sat = 5000;  // exactly 0.5
    const bool glare = classify_lighting(s) == LightingClass::Glare;

    s.tri_sat = 2499;
    s.b_sat = 9999;  // blue alone does not make glare
    const bool typical = classify_lighting(s) == LightingClass::Typical;

    return {over && glare && typical,
            std::string(over ? "0.25->overexposed" : "0.25 FAILED") + ", " +
                (glare ? "0.25+0.5->glare" : "glare FAILED") + ", " +
                (typical ? "below->typical" : "typical FAILED")};
}

// --- criterion 5: preprocessing properties ----------------------------------

std::pair<bool, std::string> preprocessing_properties() {
    SplitMix64 rng(271828);

    // LUT monotone on 1000 random planes
    int monotone = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Plane plane(64 + rng.next_below(1000));
        const int spread = 1 + int(rng.next_below(255));
        for (auto& v : plane) v = std::uint8_t(rng.next_below(spread + 1));
        const EqualizationLut lut = build_equalization_lut(plane);
        bool ok = true;
        for (int v = 1; v < 256; ++v) ok = ok && lut.mapping[v] >= lut.mapping[v - 1];
        monotone += ok;

        // double equalization within +-1 of single
        const auto [once, lut1] = equalize_histogram(plane);
        const auto [twice, lut2] = equalize_histogram(once);
        for (std::size_t i = 0; i < plane.size() && ok; ++i)
            ok = std::abs(int(twice[i]) - int(once[i])) <= 1;
        if (!ok) return {false, "double-equalization drift at trial " + std::to_string(trial)};
    }

    // blue-green swap involution, exact
    RgbImage noise(128, 96);
    for (auto& v : noise.pixels()) v = std::uint8_t(rng.next() & 0xff);
    const bool involution = swap_blue_green(swap_blue_green(noise)) == noise;

    // YCbCr round trip within +-1 per channel over 1e5 random pixels
    int worst = 0;
    const int n_pixels = 100000;
    RgbImage batch(n_pixels, 1);
    for (auto& v : batch.pixels()) v = std::uint8_t(rng.next() & 0xff);
    const RgbImage back = ycbcr_to_rgb(rgb_to_ycbcr(batch));
    for (std::size_t i = 0; i < batch.pixels().size(); ++i)
        worst = std::max(worst, std::abs(int(batch.pixels()[i]) - int(back.pixels()[i])));

    const bool pass = monotone == 1000 && involution && worst <= 1;
    return {pass, "monotone " + std::to_string(monotone) + "/1000, involution " +
                      (involution ? "exact" : "BROKEN") + ", round-trip max delta " +
                      std::to_string(worst)};
}

// --- criteria 6 and 8: end-to-end synthetic + occlusion bookkeeping ---------

struct SceneEval {
    std::int64_t tp = 0, fp = 0, fn = 0;
    OcclusionBreakdown occ;
};

SceneEval evaluate_scene(const SynthOutput& scene, const PipelineConfig& cfg,
                         const Segmenter& backend) {
    const PipelineResult result = run_pipeline(scene.image, backend, cfg);
    const MatchReport report = match(result.detections, scene.truth, cfg.eval);
    SceneEval ev;
    ev.tp = report.tp;
    ev.fp = report.fp;
    ev.fn = report.fn;
    ev.occ = occlusion_breakdown(report, scene.truth);
    return ev;
}

std::pair<bool, std::string> end_to_end_typical() {
    const ReferenceSegmenter backend;
    const PipelineConfig cfg;

    std::int64_t tp = 0, fp = 0, fn = 0;
    for (int seed = 1; seed <= 20; ++seed) {
        SceneSpec spec;
        spec.n_calyces = 60;
        spec.seed = std::uint64_t(seed);
        const SynthOutput scene = generate_scene(spec);
        const SceneEval ev = evaluate_scene(scene, cfg, backend);
        tp += ev.tp;
        fp += ev.fp;
        fn += ev.fn;
    }
    const double recall = double(tp) / double(tp + fn);
    const double precision = double(tp) / double(tp + fp);

    // occluded variant: 22% occluded at >= 50% cover
    std::int64_t m_non = 0, t_non = 0, m_occ = 0, t_occ = 0;
    for (int seed = 101; seed <= 120; ++seed) {
        SceneSpec spec;
        spec.n_calyces = 60;
        spec.occluded_fraction = 0.22;
        spec.seed = std::uint64_t(seed);
        const SynthOutput scene = generate_scene(spec);
        const SceneEval ev = evaluate_scene(scene, cfg, backend);
        m_non += ev.occ.matched_non_occluded;
        t_non += ev.occ.total_non_occluded;
        m_occ += ev.occ.matched_occluded;
        t_occ += ev.occ.total_occluded;
    }
    const double recall_non = double(m_non) / double(t_non);
    const double recall_occ = double(m_occ) / double(t_occ);

    const bool pass =
        recall >= 0.95 && precision >= 0.95 && recall_non >= 0.9 && recall_occ < recall_non;
    return {pass, "clean R=" + fmt(recall) + " P=" + fmt(precision) +
                      "; occluded split " + fmt(recall_non) + " vs " + fmt(recall_occ)};
}

std::pair<bool, std::string> occlusion_bookkeeping() {
    Scratch scratch;
    std::vector<ManifestEntry> entries;
    for (int seed = 101; seed <= 120; ++seed) {
        SceneSpec spec;
        spec.n_calyces = 60;
        spec.occluded_fraction = 0.22;
        spec.seed = std::uint64_t(seed);
        const SynthOutput scene = generate_scene(spec);
        const std::string truth = "truth_" + std::to_string(seed) + ".json";
        save_annotations(scene.truth, scratch.dir / truth);
        entries.push_back({"image_" + std::to_string(seed) + ".png",
                           (scratch.dir / truth).string(), "typical"});
    }
    const DatasetManifest manifest("occlusion-fixture", entries);

    std::int64_t non = 0, total = 0;
    for (const auto& e : manifest.entries) {
        for (const auto& gt : load_annotations(e.annotation_path)) {
            ++total;
            non += !gt.occluded;
        }
    }
    const double percent = double(non) / double(total);
    return {std::abs(percent - 0.78) <= 0.02,
            "percent_non_occluded=" + fmt(percent) + " target 0.78 +- 0.02"};
}

// --- criterion 7: glare recovery --------------------------------------------

std::pair<bool, std::string> glare_recovery() {
    const ReferenceSegmenter backend;
    PipelineConfig with;
    PipelineConfig without;
    without.preprocess_enabled = false;

    std::int64_t tp_w = 0, fp_w = 0, fn_w = 0;
    std::int64_t tp_r = 0, fp_r = 0, fn_r = 0;
    for (int seed = 201; seed <= 208; ++seed) {
        SceneSpec spec;
        spec.n_calyces = 60;
        spec.lighting = LightingClass::Glare;
        spec.seed = std::uint64_t(seed);
        const SynthOutput scene = generate_scene(spec);

        const SceneEval pre = evaluate_scene(scene, with, backend);
        tp_w += pre.tp;
        fp_w += pre.fp;
        fn_w += pre.fn;
        const SceneEval raw = evaluate_scene(scene, without, backend);
        tp_r += raw.tp;
        fp_r += raw.fp;
        fn_r += raw.fn;
    }

    MatchReport with_report;
    with_report.tp = tp_w;
    with_report.fp = fp_w;
    with_report.fn = fn_w;
    MatchReport raw_report;
    raw_report.tp = tp_r;
    raw_report.fp = fp_r;
    raw_report.fn = fn_r;
    const Metrics m_with = metrics(with_report);
    const Metrics m_raw = metrics(raw_report);

    const bool pass =
        m_raw.f1 < m_with.f1 && (m_with.recall - m_raw.recall) >= 0.15;
    return {pass, "raw F1=" + fmt(m_raw.f1) + " R=" + fmt(m_raw.recall) + "; preprocessed F1=" +
                      fmt(m_with.f1) + " R=" + fmt(m_with.recall)};
}

// --- criterion 9: throughput budget ------------------------------------------

std::pair<bool, std::string> throughput_budget() {
    const ReferenceSegmenter backend;
    const PipelineConfig cfg;

    const auto best_of = [&](LightingClass lighting) {
        SceneSpec spec;
        spec.n_calyces = 60;
        spec.lighting = lighting;
        spec.seed = 7;
        const SynthOutput scene = generate_scene(spec);
        StageTimings best;
        best.total_ms = 1e18;
        for (int run = 0; run < 3; ++run) {
            const StageTimings t = run_pipeline(scene.image, backend, cfg).timings;
            if (t.total_ms < best.total_ms) best = t;
        }
        return best;
    };

    const StageTimings typical = best_of(LightingClass::Typical);
    const StageTimings overexposed = best_of(LightingClass::Overexposed);
    const StageTimings glare = best_of(LightingClass::Glare);

    const double worst_total =
        std::max({typical.total_ms, overexposed.total_ms, glare.total_ms});
    const bool pass = worst_total <= 2000.0 && glare.preprocess_ms <= 100.0 &&
                      overexposed.preprocess_ms <= 30.0;
    return {pass, "total " + fmt(worst_total, 0) + "ms (<=2000), glare preprocess " +
                      fmt(glare.preprocess_ms, 1) + "ms (<=100), overexposed preprocess " +
                      fmt(overexposed.preprocess_ms, 1) + "ms (<=30)"};
}

// --- criterion 10: density fixture -------------------------------------------

std::pair<bool, std::string> density_fixture() {
    Scratch scratch;
    std::vector<ManifestEntry> entries;
    int total = 0;
    for (int i = 0; i < 50; ++i) {
        const int count = i < 35 ? 63 : 62;  // 35*63 + 15*62 = 3135
        total += count;
        std::vector<GroundTruthBox> boxes;
        for (int b = 0; b < count; ++b)
            boxes.push_back(GroundTruthBox(b * 25.0, 0.0, b * 25.0 + 20.0, 20.0));
        const std::string name = "ann_" + std::to_string(i) + ".json";
        save_annotations(boxes, scratch.dir / name);
        entries.push_back({"img_" + std::to_string(i) + ".png", (scratch.dir / name).string(),
                           std::nullopt});
    }
    const DatasetManifest manifest("density-fixture", entries);
    const double d = density(manifest);
    return {total == 3135 && d == 62.7, "density=" + fmt(d, 6) + " (3135 boxes / 50 images)"};
}

}  // namespace

int main() {
    criterion(1, "lighting-table F1 arithmetic", metric_rows);
    criterion(2, "Hungarian solver vs brute-force oracle", hungarian_oracle);
    criterion(3, "tile plan anchors and coverage", tiling_contract);
    criterion(4, "lighting classifier boundary cases", lighting_boundaries);
    criterion(5, "preprocessing properties", preprocessing_properties);
    criterion(6, "end-to-end synthetic detection and occlusion split", end_to_end_typical);
    criterion(7, "glare recovery via preprocessing", glare_recovery);
    criterion(8, "occlusion bookkeeping percentage", occlusion_bookkeeping);
    criterion(9, "throughput budget", throughput_budget);
    criterion(10, "density formula fixture", density_fixture);

    if (g_failures == 0) {
        std::printf("acceptance: all criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return 1;
}

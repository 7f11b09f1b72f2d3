// Command-line surface for the calyx detection pipeline: lighting
// classification, preprocessing, tiled detection, Hungarian-matched
// evaluation, synthetic dataset generation, benchmarking, and overlays.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "calyx/calyx.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace calyx;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// ---------------------------------------------------------------------------
// shared option plumbing

struct PipelineFlags {
    PipelineConfig cfg;
    std::string eq1_mode = "intersection";
    std::string glare_he_tiles = "disjoint";
    std::string force_class;
    int connectivity = 8;
    bool no_preprocess = false;

    void resolve() {
        if (eq1_mode == "intersection") {
            cfg.overexposure_rule = OverexposureRule::TriIntersection;
        } else if (eq1_mode == "per-channel") {
            cfg.overexposure_rule = OverexposureRule::PerChannelRatios;
        } else {
            raise(ErrorCode::InvalidParam, "unknown --eq1-mode: " + eq1_mode);
        }
        if (glare_he_tiles == "disjoint") {
            cfg.glare_he_blocks = GlareHeBlocks::Disjoint;
        } else if (glare_he_tiles == "overlap") {
            cfg.glare_he_blocks = GlareHeBlocks::OverlapTiles;
        } else {
            raise(ErrorCode::InvalidParam, "unknown --glare-he-tiles: " + glare_he_tiles);
        }
        if (!force_class.empty()) {
            const auto cls = lighting_from_name(force_class);
            if (!cls) raise(ErrorCode::InvalidParam, "unknown --force-class: " + force_class);
            cfg.forced_lighting = *cls;
        }
        if (connectivity == 4) {
            cfg.blobs.connectivity = Connectivity::Four;
        } else if (connectivity == 8) {
            cfg.blobs.connectivity = Connectivity::Eight;
        } else {
            raise(ErrorCode::InvalidParam, "--connectivity must be 4 or 8");
        }
        cfg.preprocess_enabled = !no_preprocess;
        cfg.blobs.validate();
        cfg.eval.validate();
    }
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f) {
    cmd->add_option("--tile-w", f.cfg.tile_w, "Tile width (default 500)");
    cmd->add_option("--tile-h", f.cfg.tile_h, "Tile height (default 500)");
    cmd->add_option("--overlap", f.cfg.tile_overlap, "Tile overlap fraction (default 0.20)");
    cmd->add_option("--sat-threshold", f.cfg.sat_threshold,
                    "Channel value counted as saturated (default 255)");
    cmd->add_option("--eq1-mode", f.eq1_mode,
                    "Overexposure numerator: intersection|per-channel");
    cmd->add_option("--min-area", f.cfg.blobs.min_area, "Minimum blob area in px^2 (default 150)");
    cmd->add_option("--min-circularity", f.cfg.blobs.min_circularity,
                    "Minimum blob circularity (default 0.5)");
    cmd->add_option("--connectivity", f.connectivity, "Blob connectivity: 4|8 (default 8)");
    cmd->add_option("--glare-he-tiles", f.glare_he_tiles,
                    "Glare equalization blocks: disjoint|overlap");
    cmd->add_flag("--no-preprocess", f.no_preprocess,
                  "Skip condition-specific preprocessing");
    cmd->add_option("--force-class", f.force_class,
                    "Force the lighting class: typical|overexposed|glare");
}

// Strict config file: unknown keys are usage errors.
void apply_config_file(const fs::path& path, PipelineConfig& cfg) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::FileNotFound, "cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError, "config " + path.string() + ": " + e.what());
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "tile_w") cfg.tile_w = value.get<int>();
        else if (key == "tile_h") cfg.tile_h = value.get<int>();
        else if (key == "tile_overlap") cfg.tile_overlap = value.get<double>();
        else if (key == "sat_threshold") cfg.sat_threshold = value.get<int>();
        else if (key == "min_area") cfg.blobs.min_area = value.get<std::int64_t>();
        else if (key == "min_circularity") cfg.blobs.min_circularity = value.get<double>();
        else if (key == "connectivity")
            cfg.blobs.connectivity = value.get<int>() == 4 ? Connectivity::Four : Connectivity::Eight;
        else if (key == "match_threshold") cfg.eval.match_threshold = value.get<double>();
        else if (key == "workers") cfg.workers = value.get<int>();
        else raise(ErrorCode::InvalidParam, "config: unknown key '" + key + "'");
    }
}

json timings_json(const StageTimings& t) {
    return {{"classify_ms", t.classify_ms}, {"preprocess_ms", t.preprocess_ms},
            {"tile_ms", t.tile_ms},         {"segment_ms", t.segment_ms},
            {"merge_ms", t.merge_ms},       {"blobs_ms", t.blobs_ms},
            {"total_ms", t.total_ms}};
}

void emit_report(const json& report, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) raise(ErrorCode::IoError, "cannot write " + out_path);
        out << report.dump(2) << "\n";
    }
}

std::string detections_filename(const std::string& image_path) {
    return fs::path(image_path).stem().string() + ".detections.json";
}

std::unique_ptr<Segmenter> make_backend(const std::string& spec) {
    if (spec == "reference") return std::make_unique<ReferenceSegmenter>();
    if (spec.rfind("pmap:", 0) == 0)
        return std::make_unique<PmapDirectorySegmenter>(spec.substr(5));
    raise(ErrorCode::InvalidParam, "unknown backend '" + spec + "' (use reference or pmap:<dir>)");
}

// ---------------------------------------------------------------------------
// subcommand implementations

int run_classify(const std::string& image, const PipelineFlags& flags) {
    const RgbImage img = load_image(image);
    const SaturationStats stats = saturation_stats(img, flags.cfg.sat_threshold);
    const LightingClass cls = classify_lighting(stats, flags.cfg.overexposure_rule);
    std::cout << lighting_name(cls) << " " << std::fixed << std::setprecision(4)
              << stats.r_ratio() << " " << stats.g_ratio() << " " << stats.b_ratio() << "\n";
    return kExitOk;
}

int run_preprocess(const std::string& image, const std::string& out, PipelineFlags& flags) {
    const RgbImage img = load_image(image);
    const LightingClass cls =
        flags.cfg.forced_lighting
            ? *flags.cfg.forced_lighting
            : classify_lighting(img, flags.cfg.sat_threshold, flags.cfg.overexposure_rule);
    const PreprocessPlan plan = make_preprocess_plan(cls);

    RgbImage result = apply_plan_whole_image(img, plan, flags.cfg.glare_he_blocks, flags.cfg.tile_w);
    if (plan.block_equalize && flags.cfg.glare_he_blocks == GlareHeBlocks::OverlapTiles) {
        // per-tile equalization written back in plan order; later tiles win in
        // the overlap regions
        const TilePlan tiles = plan_tiles(result.width(), result.height(), flags.cfg.tile_w,
                                          flags.cfg.tile_h, flags.cfg.tile_overlap);
        for (const auto& r : tiles.rects) {
            const RgbImage eq = preprocess_glare_tile(extract_tile(result, r));
            for (int y = 0; y < r.h; ++y)
                for (int x = 0; x < r.w; ++x) result.set(r.x0 + x, r.y0 + y, eq.at(x, y));
        }
    }
    save_image(result, out);
    std::cerr << "preprocess: " << lighting_name(cls) << " -> " << out << "\n";
    return kExitOk;
}

int run_detect(std::vector<std::string> images, const std::string& manifest_path,
               const std::string& backend_spec, const std::string& out_dir, bool dump_tiles,
               const std::string& out_path, PipelineFlags& flags) {
    if (!manifest_path.empty()) {
        const DatasetManifest manifest = load_manifest(manifest_path);
        for (const auto& e : manifest.entries) images.push_back(e.image_path);
    }
    if (images.empty()) raise(ErrorCode::InvalidParam, "no input images given");

    if (dump_tiles) {
        json out = json::array();
        for (const auto& path : images) {
            const RgbImage img = load_image(path);
            const TilePlan plan = plan_tiles(img.width(), img.height(), flags.cfg.tile_w,
                                             flags.cfg.tile_h, flags.cfg.tile_overlap);
            json rects = json::array();
            for (const auto& r : plan.rects)
                rects.push_back({{"x", r.x0}, {"y", r.y0}, {"w", r.w}, {"h", r.h}});
            out.push_back({{"image", path},
                           {"width", img.width()},
                           {"height", img.height()},
                           {"rects", rects}});
        }
        emit_report(out, out_path);
        return kExitOk;
    }

    const auto backend = make_backend(backend_spec);
    fs::create_directories(out_dir);

    struct ImageOutcome {
        json entry;
        bool failed = false;
    };
    std::vector<ImageOutcome> outcomes(images.size());

    PipelineConfig per_image_cfg = flags.cfg;
    const bool parallel_images = images.size() > 1;
    if (parallel_images) per_image_cfg.workers = 1;  // parallelism lives at the image level

    detail::parallel_for(images.size(), parallel_images ? flags.cfg.workers : 1,
                         [&](std::size_t i) {
        const std::string& path = images[i];
        json entry{{"image", path}};
        try {
            const RgbImage img = load_image(path);
            const PipelineResult result = run_pipeline(img, *backend, per_image_cfg);
            const fs::path det_path = fs::path(out_dir) / detections_filename(path);
            save_detections(result.detections, det_path);
            entry["lighting"] = lighting_name(result.lighting);
            entry["n_detections"] = result.detections.size();
            entry["detections_file"] = det_path.string();
            entry["timings"] = timings_json(result.timings);
            entry["error"] = nullptr;
        } catch (const std::exception& e) {
            entry["error"] = e.what();
            outcomes[i].failed = true;
        }
        outcomes[i].entry = std::move(entry);
    });

    json report{{"schema_version", 1}, {"command", "detect"}, {"backend", backend_spec}};
    json entries = json::array();
    int failures = 0;
    for (const auto& o : outcomes) {
        entries.push_back(o.entry);
        failures += o.failed;
    }
    report["images"] = std::move(entries);
    report["failures"] = failures;
    emit_report(report, out_path);
    return failures == 0 ? kExitOk : kExitRuntime;
}

struct EvalAccumulator {
    std::int64_t tp = 0, fp = 0, fn = 0;
    double macro_recall = 0.0, macro_precision = 0.0, macro_f1 = 0.0;
    int images = 0;

    void add(const MatchReport& r) {
        tp += r.tp;
        fp += r.fp;
        fn += r.fn;
        const Metrics m = metrics(r);
        macro_recall += m.recall;
        macro_precision += m.precision;
        macro_f1 += m.f1;
        ++images;
    }

    json to_json(const std::string& average) const {
        MatchReport total;
        total.tp = tp;
        total.fp = fp;
        total.fn = fn;
        const Metrics micro = metrics(total);
        json j{{"tp", tp}, {"fp", fp}, {"fn", fn}};
        if (average == "macro" && images > 0) {
            j["recall"] = macro_recall / images;
            j["precision"] = macro_precision / images;
            j["f1"] = macro_f1 / images;
        } else {
            j["recall"] = micro.recall;
            j["precision"] = micro.precision;
            j["f1"] = micro.f1;
        }
        return j;
    }
};

int run_evaluate(const std::string& manifest_path, const std::string& detections_dir,
                 const std::string& average, const std::string& distance_mode,
                 const std::string& out_path, PipelineFlags& flags) {
    if (average != "micro" && average != "macro")
        raise(ErrorCode::InvalidParam, "--average must be micro or macro");
    EvalConfig ecfg = flags.cfg.eval;
    if (distance_mode == "center") ecfg.distance = BoxDistance::Center;
    else if (distance_mode == "closest-point") ecfg.distance = BoxDistance::ClosestPoint;
    else raise(ErrorCode::InvalidParam, "--distance-mode must be center or closest-point");

    const DatasetManifest manifest = load_manifest(manifest_path);

    EvalAccumulator overall;
    std::map<std::string, EvalAccumulator> per_lighting;
    OcclusionBreakdown occ_sum;
    std::int64_t total_boxes = 0;
    json per_image = json::array();

    for (const auto& entry : manifest.entries) {
        const auto gts = load_annotations(entry.annotation_path);
        total_boxes += std::int64_t(gts.size());
        const fs::path det_path =
            fs::path(detections_dir) / detections_filename(entry.image_path);
        const auto dets = load_detections(det_path);

        const MatchReport report = match(dets, gts, ecfg);
        overall.add(report);
        per_lighting[entry.lighting.value_or("unlabeled")].add(report);

        const OcclusionBreakdown b = occlusion_breakdown(report, gts);
        occ_sum.matched_non_occluded += b.matched_non_occluded;
        occ_sum.matched_occluded += b.matched_occluded;
        occ_sum.total_non_occluded += b.total_non_occluded;
        occ_sum.total_occluded += b.total_occluded;
        for (int k = 0; k < kNumOccluders; ++k)
            occ_sum.occluder_histogram[k] += b.occluder_histogram[k];

        per_image.push_back({{"image", entry.image_path},
                             {"lighting", entry.lighting ? json(*entry.lighting) : json(nullptr)},
                             {"tp", report.tp},
                             {"fp", report.fp},
                             {"fn", report.fn}});
    }

    occ_sum.non_occluded_defined = occ_sum.total_non_occluded > 0;
    occ_sum.occluded_defined = occ_sum.total_occluded > 0;
    if (occ_sum.non_occluded_defined)
        occ_sum.recall_non_occluded =
            double(occ_sum.matched_non_occluded) / double(occ_sum.total_non_occluded);
    if (occ_sum.occluded_defined)
        occ_sum.recall_occluded = double(occ_sum.matched_occluded) / double(occ_sum.total_occluded);
    const std::int64_t gt_total = occ_sum.total_non_occluded + occ_sum.total_occluded;
    occ_sum.percent_non_occluded =
        gt_total > 0 ? double(occ_sum.total_non_occluded) / double(gt_total) : 0.0;

    json occluders;
    for (int k = 1; k < kNumOccluders; ++k)
        occluders[occluder_name(Occluder(k))] = occ_sum.occluder_histogram[k];

    json report{{"schema_version", 1},
                {"command", "evaluate"},
                {"manifest", manifest.name},
                {"images", manifest.entries.size()},
                {"threshold", ecfg.match_threshold},
                {"average", average},
                {"density", double(total_boxes) / double(manifest.entries.size())},
                {"overall", overall.to_json(average)},
                {"occlusion",
                 {{"recall_non_occluded", occ_sum.recall_non_occluded},
                  {"recall_occluded", occ_sum.recall_occluded},
                  {"non_occluded_defined", occ_sum.non_occluded_defined},
                  {"occluded_defined", occ_sum.occluded_defined},
                  {"percent_non_occluded", occ_sum.percent_non_occluded},
                  {"occluder_histogram", occluders}}},
                {"per_image", per_image}};
    json lighting_json;
    for (const auto& [label, acc] : per_lighting) lighting_json[label] = acc.to_json(average);
    report["per_lighting"] = lighting_json;

    emit_report(report, out_path);
    return kExitOk;
}

int run_synth(const std::string& out_dir, int count, const std::string& lighting, int density,
              double occluded_frac, std::uint64_t seed, int width, int height, int radius_min,
              int radius_max) {
    const auto cls = lighting_from_name(lighting);
    if (!cls) raise(ErrorCode::InvalidParam, "unknown --lighting: " + lighting);
    if (count < 1) raise(ErrorCode::InvalidParam, "--count must be >= 1");

    fs::create_directories(out_dir);
    std::vector<ManifestEntry> entries;
    for (int i = 0; i < count; ++i) {
        SceneSpec spec;
        spec.width = width;
        spec.height = height;
        spec.n_calyces = density;
        spec.occluded_fraction = occluded_frac;
        spec.lighting = *cls;
        spec.radius_range = {radius_min, radius_max};
        spec.seed = seed + std::uint64_t(i);

        const SynthOutput out = generate_scene(spec);
        char name[32];
        std::snprintf(name, sizeof name, "scene_%04d", i);
        const std::string image_name = std::string(name) + ".png";
        const std::string truth_name = std::string(name) + ".truth.json";
        save_image(out.image, fs::path(out_dir) / image_name);
        save_annotations(out.truth, fs::path(out_dir) / truth_name);
        entries.push_back({image_name, truth_name, lighting_name(out.lighting_label)});
    }

    const DatasetManifest manifest("synth-" + lighting, entries);
    save_manifest(manifest, fs::path(out_dir) / "manifest.json");
    std::cerr << "synth: wrote " << count << " scenes to " << out_dir << "\n";
    return kExitOk;
}

int run_bench(const std::string& manifest_path, const std::string& backend_spec,
              const std::string& out_path, PipelineFlags& flags) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    const auto backend = make_backend(backend_spec);

    struct Row {
        StageTimings sum;
        int count = 0;
    };
    std::map<std::string, Row> rows;

    for (const auto& entry : manifest.entries) {
        const RgbImage img = load_image(entry.image_path);
        const PipelineResult result = run_pipeline(img, *backend, flags.cfg);
        Row& row = rows[lighting_name(result.lighting)];
        row.sum.classify_ms += result.timings.classify_ms;
        row.sum.preprocess_ms += result.timings.preprocess_ms;
        row.sum.tile_ms += result.timings.tile_ms;
        row.sum.segment_ms += result.timings.segment_ms;
        row.sum.merge_ms += result.timings.merge_ms;
        row.sum.blobs_ms += result.timings.blobs_ms;
        row.sum.total_ms += result.timings.total_ms;
        ++row.count;
    }

    std::cout << std::left << std::setw(13) << "lighting" << std::right << std::setw(7) << "n"
              << std::setw(12) << "classify" << std::setw(12) << "preproc" << std::setw(12)
              << "tile" << std::setw(12) << "segment" << std::setw(12) << "merge" << std::setw(12)
              << "blobs" << std::setw(12) << "total_ms" << "\n";
    json rows_json;
    for (const auto& [label, row] : rows) {
        const double n = row.count;
        std::cout << std::left << std::setw(13) << label << std::right << std::setw(7) << row.count
                  << std::fixed << std::setprecision(1) << std::setw(12) << row.sum.classify_ms / n
                  << std::setw(12) << row.sum.preprocess_ms / n << std::setw(12)
                  << row.sum.tile_ms / n << std::setw(12) << row.sum.segment_ms / n
                  << std::setw(12) << row.sum.merge_ms / n << std::setw(12) << row.sum.blobs_ms / n
                  << std::setw(12) << row.sum.total_ms / n << "\n";
        rows_json[label] = {{"images", row.count},
                            {"classify_ms", row.sum.classify_ms / n},
                            {"preprocess_ms", row.sum.preprocess_ms / n},
                            {"tile_ms", row.sum.tile_ms / n},
                            {"segment_ms", row.sum.segment_ms / n},
                            {"merge_ms", row.sum.merge_ms / n},
                            {"blobs_ms", row.sum.blobs_ms / n},
                            {"total_ms", row.sum.total_ms / n}};
    }
    if (!out_path.empty())
        emit_report({{"schema_version", 1}, {"command", "bench"}, {"rows", rows_json}}, out_path);
    return kExitOk;
}

void draw_ring(RgbImage& img, double cx, double cy, double radius, Rgb color) {
    const double lo = std::max(0.0, radius - 1.5), hi = radius + 0.5;
    const int x0 = std::max(0, int(cx - hi - 1)), x1 = std::min(img.width() - 1, int(cx + hi + 1));
    const int y0 = std::max(0, int(cy - hi - 1)), y1 = std::min(img.height() - 1, int(cy + hi + 1));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d = std::hypot(x - cx, y - cy);
            if (d >= lo && d <= hi) img.set(x, y, color);
        }
}

void draw_box(RgbImage& img, const GroundTruthBox& box, Rgb color) {
    const int x0 = std::max(0, int(box.x_min)), x1 = std::min(img.width() - 1, int(box.x_max));
    const int y0 = std::max(0, int(box.y_min)), y1 = std::min(img.height() - 1, int(box.y_max));
    for (int x = x0; x <= x1; ++x)
        for (int t = 0; t < 2; ++t) {
            if (y0 + t <= y1) img.set(x, y0 + t, color);
            if (y1 - t >= y0) img.set(x, y1 - t, color);
        }
    for (int y = y0; y <= y1; ++y)
        for (int t = 0; t < 2; ++t) {
            if (x0 + t <= x1) img.set(x0 + t, y, color);
            if (x1 - t >= x0) img.set(x1 - t, y, color);
        }
}

int run_overlay(const std::string& image, const std::string& detections_path,
                const std::string& truth_path, const std::string& out,
                PipelineFlags& flags) {
    RgbImage img = load_image(image);
    const auto dets = load_detections(detections_path);

    const Rgb matched_color{40, 230, 40};
    const Rgb fp_color{235, 40, 40};
    const Rgb fn_color{255, 165, 0};
    const Rgb plain_color{250, 220, 40};

    if (truth_path.empty()) {
        for (const auto& d : dets) draw_ring(img, d.cx, d.cy, d.radius, plain_color);
    } else {
        const auto gts = load_annotations(truth_path);
        const MatchReport report = match(dets, gts, flags.cfg.eval);
        std::vector<char> det_matched(dets.size(), 0), gt_matched(gts.size(), 0);
        for (const auto& p : report.pairs) {
            det_matched[p.detection] = 1;
            gt_matched[p.ground_truth] = 1;
        }
        for (std::size_t j = 0; j < gts.size(); ++j)
            draw_box(img, gts[j], gt_matched[j] ? matched_color : fn_color);
        for (std::size_t i = 0; i < dets.size(); ++i)
            draw_ring(img, dets[i].cx, dets[i].cy, dets[i].radius,
                      det_matched[i] ? matched_color : fp_color);
    }
    save_image(img, out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kiwifruit calyx detection pipeline"};
    app.require_subcommand(1);

    // --config is applied before the subcommand flags so explicit flags win.
    std::string config_path;
    for (int i = 1; i < argc - 1; ++i)
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];

    PipelineFlags flags;
    std::uint64_t seed = 1;
    try {
        if (!config_path.empty()) apply_config_file(config_path, flags.cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    app.add_option("--config", config_path, "JSON file overriding pipeline defaults");
    app.add_option("--seed", seed, "Seed for generators (default 1)");
    app.add_option("--workers", flags.cfg.workers,
                   "Worker threads (default: logical cores)");

    // classify-lighting
    auto* classify_cmd = app.add_subcommand("classify-lighting", "Classify image lighting");
    std::string cl_image;
    classify_cmd->add_option("--image", cl_image, "Input image")->required();
    classify_cmd->add_option("--sat-threshold", flags.cfg.sat_threshold,
                             "Channel value counted as saturated (default 255)");
    classify_cmd->add_option("--eq1-mode", flags.eq1_mode,
                             "Overexposure numerator: intersection|per-channel");

    // preprocess
    auto* pre_cmd = app.add_subcommand("preprocess", "Apply condition-specific preprocessing");
    std::string pre_image, pre_out;
    pre_cmd->add_option("--image", pre_image, "Input image")->required();
    pre_cmd->add_option("--out", pre_out, "Output image path")->required();
    add_pipeline_flags(pre_cmd, flags);

    // detect
    auto* detect_cmd = app.add_subcommand("detect", "Run the detection pipeline");
    std::vector<std::string> det_images;
    std::string det_manifest, det_backend = "reference", det_out_dir = ".", det_out;
    bool det_dump_tiles = false;
    detect_cmd->add_option("--image", det_images, "Input image (repeatable)");
    detect_cmd->add_option("--manifest", det_manifest, "Manifest whose images to process");
    detect_cmd->add_option("--backend", det_backend, "Segmentation backend: reference|pmap:<dir>");
    detect_cmd->add_option("--out-dir", det_out_dir, "Directory for detection files");
    detect_cmd->add_option("--out", det_out, "Write the run report here (default stdout)");
    detect_cmd->add_flag("--dump-tiles", det_dump_tiles, "Emit the tile plan as JSON and exit");
    add_pipeline_flags(detect_cmd, flags);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Match detections against ground truth");
    std::string ev_manifest, ev_dets_dir, ev_average = "micro", ev_distance = "center", ev_out;
    eval_cmd->add_option("--manifest", ev_manifest, "Dataset manifest")->required();
    eval_cmd->add_option("--detections-dir", ev_dets_dir, "Directory of detection files")
        ->required();
    eval_cmd->add_option("--threshold", flags.cfg.eval.match_threshold,
                         "Match gate in pixels (default 20)");
    eval_cmd->add_option("--average", ev_average, "Aggregation: micro|macro (default micro)");
    eval_cmd->add_option("--distance-mode", ev_distance,
                         "Detection-to-box distance: center|closest-point");
    eval_cmd->add_option("--out", ev_out, "Write the report here (default stdout)");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic scenes with ground truth");
    std::string sy_out_dir, sy_lighting = "typical";
    int sy_count = 1, sy_density = 60, sy_width = 1936, sy_height = 1216;
    int sy_rmin = 10, sy_rmax = 16;
    double sy_occluded = 0.0;
    synth_cmd->add_option("--out-dir", sy_out_dir, "Output directory")->required();
    synth_cmd->add_option("--count", sy_count, "Number of scenes (default 1)");
    synth_cmd->add_option("--lighting", sy_lighting, "typical|overexposed|glare");
    synth_cmd->add_option("--density", sy_density, "Calyces per scene (default 60)");
    synth_cmd->add_option("--occluded-frac", sy_occluded, "Fraction of occluded calyces");
    synth_cmd->add_option("--width", sy_width, "Scene width (default 1936)");
    synth_cmd->add_option("--height", sy_height, "Scene height (default 1216)");
    synth_cmd->add_option("--radius-min", sy_rmin, "Smallest calyx radius (default 10)");
    synth_cmd->add_option("--radius-max", sy_rmax, "Largest calyx radius (default 16)");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Time the pipeline over a manifest");
    std::string be_manifest, be_backend = "reference", be_out;
    bench_cmd->add_option("--manifest", be_manifest, "Dataset manifest")->required();
    bench_cmd->add_option("--backend", be_backend, "Segmentation backend");
    bench_cmd->add_option("--out", be_out, "Write the JSON rows here");
    add_pipeline_flags(bench_cmd, flags);

    // overlay
    auto* overlay_cmd = app.add_subcommand("overlay", "Render detections and truth on an image");
    std::string ov_image, ov_dets, ov_truth, ov_out;
    overlay_cmd->add_option("--image", ov_image, "Input image")->required();
    overlay_cmd->add_option("--detections", ov_dets, "Detections file")->required();
    overlay_cmd->add_option("--truth", ov_truth, "Ground truth annotation file");
    overlay_cmd->add_option("--out", ov_out, "Output image path")->required();
    overlay_cmd->add_option("--threshold", flags.cfg.eval.match_threshold,
                            "Match gate in pixels (default 20)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        flags.resolve();
        if (classify_cmd->parsed()) return run_classify(cl_image, flags);
        if (pre_cmd->parsed()) return run_preprocess(pre_image, pre_out, flags);
        if (detect_cmd->parsed())
            return run_detect(det_images, det_manifest, det_backend, det_out_dir, det_dump_tiles,
                              det_out, flags);
        if (eval_cmd->parsed())
            return run_evaluate(ev_manifest, ev_dets_dir, ev_average, ev_distance, ev_out, flags);
        if (synth_cmd->parsed())
            return run_synth(sy_out_dir, sy_count, sy_lighting, sy_density, sy_occluded, seed,
                             sy_width, sy_height, sy_rmin, sy_rmax);
        if (bench_cmd->parsed()) return run_bench(be_manifest, be_backend, be_out, flags);
        if (overlay_cmd->parsed()) return run_overlay(ov_image, ov_dets, ov_truth, ov_out, flags);
    } catch (const Error& e) {
        std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
        return e.code() == ErrorCode::InvalidParam ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

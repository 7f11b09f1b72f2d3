#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "calyx/core.hpp"

namespace calyx {

namespace detail {

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::FileNotFound, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::ParseError, "malformed JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) raise(ErrorCode::IoError, "write failed: " + path.string());
}

template <typename T>
T json_field(const nlohmann::json& j, const char* key, const std::string& context) {
    if (!j.contains(key))
        raise(ErrorCode::SchemaError, context + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        raise(ErrorCode::SchemaError, context + ": field '" + key + "' has the wrong type");
    }
}

}  // namespace detail

/// Annotation file schema:
/// {"boxes":[{"x_min":N,"y_min":N,"x_max":N,"y_max":N,
///            "occluded":bool,"occluder":"none|leaf|branch|wire|fruit|post|beam"}]}
inline std::vector<GroundTruthBox> load_annotations(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json_file(path);
    const std::string ctx = path.string();
    if (!j.contains("boxes") || !j.at("boxes").is_array())
        raise(ErrorCode::SchemaError, ctx + ": missing 'boxes' array");

    std::vector<GroundTruthBox> boxes;
    boxes.reserve(j.at("boxes").size());
    for (const auto& item : j.at("boxes")) {
        const double x0 = detail::json_field<double>(item, "x_min", ctx);
        const double y0 = detail::json_field<double>(item, "y_min", ctx);
        const double x1 = detail::json_field<double>(item, "x_max", ctx);
        const double y1 = detail::json_field<double>(item, "y_max", ctx);
        const bool occluded = detail::json_field<bool>(item, "occluded", ctx);
        const std::string kind = detail::json_field<std::string>(item, "occluder", ctx);
        const auto occ = occluder_from_name(kind);
        if (!occ) raise(ErrorCode::SchemaError, ctx + ": unknown occluder '" + kind + "'");
        boxes.emplace_back(x0, y0, x1, y1, occluded, *occ);
    }
    return boxes;
}

inline void save_annotations(const std::vector<GroundTruthBox>& boxes,
                             const std::filesystem::path& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : boxes) {
        arr.push_back({{"x_min", b.x_min},
                       {"y_min", b.y_min},
                       {"x_max", b.x_max},
                       {"y_max", b.y_max},
                       {"occluded", b.occluded},
                       {"occluder", occluder_name(b.occluder)}});
    }
    detail::write_json_file({{"boxes", arr}}, path);
}

/// Detection file schema:
/// {"detections":[{"cx":F,"cy":F,"radius":F,"confidence":F}]}
inline std::vector<Detection> load_detections(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json_file(path);
    const std::string ctx = path.string();
    if (!j.contains("detections") || !j.at("detections").is_array())
        raise(ErrorCode::SchemaError, ctx + ": missing 'detections' array");

    std::vector<Detection> dets;
    dets.reserve(j.at("detections").size());
    for (const auto& item : j.at("detections")) {
        try {
            dets.emplace_back(detail::json_field<double>(item, "cx", ctx),
                              detail::json_field<double>(item, "cy", ctx),
                              detail::json_field<double>(item, "radius", ctx),
                              detail::json_field<double>(item, "confidence", ctx));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InvalidParam)
                raise(ErrorCode::SchemaError, ctx + ": " + e.what());
            throw;
        }
    }
    return dets;
}

inline void save_detections(const std::vector<Detection>& dets,
                            const std::filesystem::path& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : dets) {
        arr.push_back({{"cx", d.cx},
                       {"cy", d.cy},
                       {"radius", d.radius},
                       {"confidence", d.confidence}});
    }
    detail::write_json_file({{"detections", arr}}, path);
}

/// Manifest file schema:
/// {"name":S,"entries":[{"image":P,"annotation":P,"lighting":"typical|overexposed|glare"|null}]}
/// Relative entry paths are resolved against the manifest's directory.
inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json_file(path);
    const std::string ctx = path.string();
    const std::filesystem::path base = path.parent_path();

    const auto resolve = [&base](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    const std::string name = detail::json_field<std::string>(j, "name", ctx);
    if (!j.contains("entries") || !j.at("entries").is_array())
        raise(ErrorCode::SchemaError, ctx + ": missing 'entries' array");

    std::vector<ManifestEntry> entries;
    for (const auto& item : j.at("entries")) {
        ManifestEntry e;
        e.image_path = resolve(detail::json_field<std::string>(item, "image", ctx));
        e.annotation_path = resolve(detail::json_field<std::string>(item, "annotation", ctx));
        if (item.contains("lighting") && !item.at("lighting").is_null()) {
            const auto lighting = detail::json_field<std::string>(item, "lighting", ctx);
            if (lighting != "typical" && lighting != "overexposed" && lighting != "glare")
                raise(ErrorCode::SchemaError, ctx + ": unknown lighting label '" + lighting + "'");
            e.lighting = lighting;
        }
        entries.push_back(std::move(e));
    }
    try {
        return DatasetManifest(name, std::move(entries));
    } catch (const Error& e) {
        raise(ErrorCode::SchemaError, ctx + ": " + e.what());
    }
}

inline void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : manifest.entries) {
        nlohmann::json item = {{"image", e.image_path}, {"annotation", e.annotation_path}};
        item["lighting"] = e.lighting ? nlohmann::json(*e.lighting) : nlohmann::json(nullptr);
        arr.push_back(std::move(item));
    }
    detail::write_json_file({{"name", manifest.name}, {"entries", arr}}, path);
}

}  // namespace calyx

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace calyx {

enum class ErrorCode {
    FileNotFound,
    UnsupportedFormat,
    CorruptData,
    ParseError,
    SchemaError,
    IoError,
    InvalidParam,
    OutOfBounds,
    ShapeMismatch,
    TileTooLarge,
    BackendFailure,
    MissingAnnotation,
    InvalidSpec,
    Unreachable,
};

/// All library errors are thrown as Error; the code distinguishes the
/// failure class so callers (and the CLI) can react without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::FileNotFound:      return "FileNotFound";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::CorruptData:       return "CorruptData";
        case ErrorCode::ParseError:        return "ParseError";
        case ErrorCode::SchemaError:       return "SchemaError";
        case ErrorCode::IoError:           return "IoError";
        case ErrorCode::InvalidParam:      return "InvalidParam";
        case ErrorCode::OutOfBounds:       return "OutOfBounds";
        case ErrorCode::ShapeMismatch:     return "ShapeMismatch";
        case ErrorCode::TileTooLarge:      return "TileTooLarge";
        case ErrorCode::BackendFailure:    return "BackendFailure";
        case ErrorCode::MissingAnnotation: return "MissingAnnotation";
        case ErrorCode::InvalidSpec:       return "InvalidSpec";
        case ErrorCode::Unreachable:       return "Unreachable";
    }
    return "Unknown";
}

/// Pixel classes. Background is an explicit class so probability maps are
/// total over the class axis.
enum class ClassId : std::uint8_t {
    Background = 0,
    Calyx = 1,
    Branch = 2,
    Wire = 3,
};

inline constexpr int kNumClasses = 4;

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit RGB raster, row-major, tightly packed triples.
class RgbImage {
public:
    RgbImage() = default;

    RgbImage(int width, int height, Rgb fill = {})
        : width_(width), height_(height) {
        check_dims(width, height);
        pixels_.resize(static_cast<std::size_t>(width) * height * 3);
        for (std::size_t i = 0; i < pixels_.size(); i += 3) {
            pixels_[i] = fill.r;
            pixels_[i + 1] = fill.g;
            pixels_[i + 2] = fill.b;
        }
    }

    RgbImage(int width, int height, std::vector<std::uint8_t> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        check_dims(width, height);
        if (pixels_.size() != static_cast<std::size_t>(width) * height * 3)
            raise(ErrorCode::InvalidParam, "pixel buffer size does not match dimensions");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * height_;
    }

    const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }
    std::vector<std::uint8_t>& pixels() noexcept { return pixels_; }

    Rgb at(int x, int y) const {
        const std::size_t i = index(x, y);
        return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
    }

    void set(int x, int y, Rgb px) {
        const std::size_t i = index(x, y);
        pixels_[i] = px.r;
        pixels_[i + 1] = px.g;
        pixels_[i + 2] = px.b;
    }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    static void check_dims(int w, int h) {
        if (w < 1 || h < 1)
            raise(ErrorCode::InvalidParam, "image dimensions must be >= 1");
    }

    std::size_t index(int x, int y) const {
        if (!contains(x, y))
            raise(ErrorCode::OutOfBounds, "pixel access outside image");
        return (static_cast<std::size_t>(y) * width_ + x) * 3;
    }

    int width_ = 0, height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Per-pixel class probabilities, pixel-major, class-minor. Each pixel's
/// probabilities must sum to 1 within 1e-6.
class ProbMap {
public:
    ProbMap() = default;

    ProbMap(int width, int height, int classes, std::vector<float> values)
        : width_(width), height_(height), classes_(classes), values_(std::move(values)) {
        if (width < 1 || height < 1 || classes < 1)
            raise(ErrorCode::InvalidParam, "probability map dimensions must be >= 1");
        if (values_.size() != static_cast<std::size_t>(width) * height * classes)
            raise(ErrorCode::InvalidParam, "probability buffer size does not match dimensions");
        validate_normalized(1e-6);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int classes() const noexcept { return classes_; }
    const std::vector<float>& values() const noexcept { return values_; }

    float at(int x, int y, int cls) const {
        return values_[(static_cast<std::size_t>(y) * width_ + x) * classes_ + cls];
    }

    void validate_normalized(double tolerance) const {
        const std::size_t n = static_cast<std::size_t>(width_) * height_;
        for (std::size_t p = 0; p < n; ++p) {
            double sum = 0.0;
            for (int c = 0; c < classes_; ++c) {
                const float v = values_[p * classes_ + c];
                if (v < 0.0f || v > 1.0f)
                    raise(ErrorCode::InvalidParam, "probability outside [0,1]");
                sum += v;
            }
            if (sum < 1.0 - tolerance || sum > 1.0 + tolerance)
                raise(ErrorCode::InvalidParam,
                      "pixel probabilities do not sum to 1 (got " + std::to_string(sum) + ")");
        }
    }

    friend bool operator==(const ProbMap&, const ProbMap&) = default;

private:
    int width_ = 0, height_ = 0, classes_ = 0;
    std::vector<float> values_;
};

/// Argmax view of a ProbMap: winning class and its probability per pixel.
struct ClassMap {
    int width = 0, height = 0;
    std::vector<std::uint8_t> labels;   // ClassId values
    std::vector<float> confidence;      // probability of the chosen class

    ClassMap() = default;

    ClassMap(int w, int h)
        : width(w), height(h),
          labels(static_cast<std::size_t>(w) * h, 0),
          confidence(static_cast<std::size_t>(w) * h, 0.0f) {
        if (w < 1 || h < 1)
            raise(ErrorCode::InvalidParam, "class map dimensions must be >= 1");
    }

    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * width + x;
    }

    ClassId label_at(int x, int y) const {
        return static_cast<ClassId>(labels[index(x, y)]);
    }

    friend bool operator==(const ClassMap&, const ClassMap&) = default;
};

/// A calyx hypothesis: subpixel center, equivalent radius, confidence.
struct Detection {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    double confidence = 0.0;

    Detection() = default;

    Detection(double cx_, double cy_, double radius_, double confidence_)
        : cx(cx_), cy(cy_), radius(radius_), confidence(confidence_) {
        if (!(radius > 0.0))
            raise(ErrorCode::InvalidParam, "detection radius must be > 0");
        if (confidence < 0.0 || confidence > 1.0)
            raise(ErrorCode::InvalidParam, "detection confidence must be in [0,1]");
    }

    friend bool operator==(const Detection&, const Detection&) = default;
};

enum class Occluder : std::uint8_t {
    None = 0,
    Leaf,
    Branch,
    Wire,
    Fruit,
    Post,
    Beam,
};

inline constexpr int kNumOccluders = 7;

inline const char* occluder_name(Occluder o) {
    switch (o) {
        case Occluder::None:   return "none";
        case Occluder::Leaf:   return "leaf";
        case Occluder::Branch: return "branch";
        case Occluder::Wire:   return "wire";
        case Occluder::Fruit:  return "fruit";
        case Occluder::Post:   return "post";
        case Occluder::Beam:   return "beam";
    }
    return "none";
}

inline std::optional<Occluder> occluder_from_name(const std::string& s) {
    for (int i = 0; i < kNumOccluders; ++i) {
        const auto o = static_cast<Occluder>(i);
        if (s == occluder_name(o)) return o;
    }
    return std::nullopt;
}

/// Annotated calyx: axis-aligned box plus occlusion status.
struct GroundTruthBox {
    double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;
    bool occluded = false;
    Occluder occluder = Occluder::None;

    GroundTruthBox() = default;

    GroundTruthBox(double x0, double y0, double x1, double y1,
                   bool occluded_ = false, Occluder occluder_ = Occluder::None)
        : x_min(x0), y_min(y0), x_max(x1), y_max(y1),
          occluded(occluded_), occluder(occluder_) {
        if (!(x_min < x_max) || !(y_min < y_max))
            raise(ErrorCode::SchemaError, "ground truth box must have positive extent");
        if (occluded == (occluder == Occluder::None))
            raise(ErrorCode::SchemaError, "occluded flag must match occluder kind");
    }

    double center_x() const noexcept { return 0.5 * (x_min + x_max); }
    double center_y() const noexcept { return 0.5 * (y_min + y_max); }

    friend bool operator==(const GroundTruthBox&, const GroundTruthBox&) = default;
};

struct ManifestEntry {
    std::string image_path;
    std::string annotation_path;
    std::optional<std::string> lighting;  // "typical" | "overexposed" | "glare"

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
    std::string name;
    std::vector<ManifestEntry> entries;

    DatasetManifest() = default;

    DatasetManifest(std::string name_, std::vector<ManifestEntry> entries_)
        : name(std::move(name_)), entries(std::move(entries_)) {
        if (entries.empty())
            raise(ErrorCode::SchemaError, "manifest must have at least one entry");
        for (std::size_t i = 0; i < entries.size(); ++i)
            for (std::size_t j = i + 1; j < entries.size(); ++j)
                if (entries[i].image_path == entries[j].image_path)
                    raise(ErrorCode::SchemaError,
                          "duplicate image path in manifest: " + entries[i].image_path);
    }

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

}  // namespace calyx

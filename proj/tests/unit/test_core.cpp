#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <functional>

#include "calyx/annotations.hpp"
#include "calyx/core.hpp"
#include "calyx/image_io.hpp"
#include "calyx/synth.hpp"

#include "test_util.hpp"

using namespace calyx;

namespace {

bool fails_with(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

}  // namespace

TEST_CASE("RgbImage rejects invalid construction") {
    CHECK(fails_with(ErrorCode::InvalidParam, [] { RgbImage(0, 5); }));
    CHECK(fails_with(ErrorCode::InvalidParam, [] { RgbImage(5, 0); }));
    CHECK(fails_with(ErrorCode::InvalidParam,
                     [] { RgbImage(2, 2, std::vector<std::uint8_t>(11, 0)); }));
    const RgbImage img(3, 2, Rgb{1, 2, 3});
    CHECK(img.pixels().size() == 18);
    CHECK(img.at(2, 1) == Rgb{1, 2, 3});
    CHECK(fails_with(ErrorCode::OutOfBounds, [&] { (void)img.at(3, 0); }));
}

TEST_CASE("ProbMap enforces normalization and range") {
    std::vector<float> good{0.25f, 0.25f, 0.25f, 0.25f};
    CHECK_NOTHROW(ProbMap(1, 1, 4, good));
    std::vector<float> bad_sum{0.5f, 0.1f, 0.1f, 0.1f};
    CHECK(fails_with(ErrorCode::InvalidParam, [&] { ProbMap(1, 1, 4, bad_sum); }));
    std::vector<float> bad_range{1.5f, -0.5f, 0.0f, 0.0f};
    CHECK(fails_with(ErrorCode::InvalidParam, [&] { ProbMap(1, 1, 4, bad_range); }));
    std::vector<float> bad_size{1.0f};
    CHECK(fails_with(ErrorCode::InvalidParam, [&] { ProbMap(1, 2, 4, bad_size); }));
}

TEST_CASE("Detection and GroundTruthBox invariants") {
    CHECK_NOTHROW(Detection(10.5, 20.0, 3.0, 0.5));
    CHECK(fails_with(ErrorCode::InvalidParam, [] { Detection(0, 0, 0.0, 0.5); }));
    CHECK(fails_with(ErrorCode::InvalidParam, [] { Detection(0, 0, -1.0, 0.5); }));
    CHECK(fails_with(ErrorCode::InvalidParam, [] { Detection(0, 0, 1.0, 1.5); }));

    CHECK_NOTHROW(GroundTruthBox(0, 0, 5, 5));
    CHECK(fails_with(ErrorCode::SchemaError, [] { GroundTruthBox(5, 0, 5, 5); }));
    CHECK(fails_with(ErrorCode::SchemaError, [] { GroundTruthBox(0, 9, 5, 5); }));
    // occluded flag must agree with the occluder kind
    CHECK(fails_with(ErrorCode::SchemaError, [] { GroundTruthBox(0, 0, 5, 5, true, Occluder::None); }));
    CHECK(fails_with(ErrorCode::SchemaError, [] { GroundTruthBox(0, 0, 5, 5, false, Occluder::Leaf); }));
    CHECK_NOTHROW(GroundTruthBox(0, 0, 5, 5, true, Occluder::Leaf));
}

TEST_CASE("random invalid inputs are refused") {
    SplitMix64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const double a = rng.next_double() * 100.0;
        const double b = a - 1.0 - rng.next_double() * 50.0;  // strictly below a
        CHECK(fails_with(ErrorCode::SchemaError, [&] { GroundTruthBox(a, 0, b, 10); }));
        CHECK(fails_with(ErrorCode::InvalidParam,
                         [&] { Detection(0, 0, -rng.next_double(), 0.5); }));
        CHECK(fails_with(ErrorCode::InvalidParam,
                         [&] { Detection(0, 0, 1.0, 1.0 + rng.next_double()); }));
    }
}

TEST_CASE("PPM: 2x2 all-black round trip") {
    testutil::TempDir dir;
    const auto path = dir.file("black.ppm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "P6\n2 2\n255\n";
        const char zeros[12] = {};
        out.write(zeros, 12);
    }
    const RgbImage img = load_image(path);
    CHECK(img.width() == 2);
    CHECK(img.height() == 2);
    for (const auto v : img.pixels()) CHECK(v == 0);

    const auto out_path = dir.file("copy.ppm");
    save_image(img, out_path);
    CHECK(load_image(out_path) == img);
}

TEST_CASE("PPM: comments, P3, and error paths") {
    testutil::TempDir dir;
    const auto path = dir.file("ascii.ppm");
    {
        std::ofstream out(path);
        out << "P3\n# a comment\n2 1\n255\n255 0 0   0 0 255\n";
    }
    const RgbImage img = load_image(path);
    CHECK(img.at(0, 0) == Rgb{255, 0, 0});
    CHECK(img.at(1, 0) == Rgb{0, 0, 255});

    const auto bad16 = dir.file("deep.ppm");
    {
        std::ofstream out(bad16, std::ios::binary);
        out << "P6\n1 1\n65535\n";
        out.write("\0\0\0\0\0\0", 6);
    }
    CHECK(fails_with(ErrorCode::UnsupportedFormat, [&] { load_image(bad16); }));

    const auto trunc = dir.file("short.ppm");
    {
        std::ofstream out(trunc, std::ios::binary);
        out << "P6\n4 4\n255\n";
        out.write("\0\0\0", 3);
    }
    CHECK(fails_with(ErrorCode::CorruptData, [&] { load_image(trunc); }));
}

TEST_CASE("PNG round trip is pixel-identical") {
    testutil::TempDir dir;
    SplitMix64 rng(3);
    RgbImage img(37, 23);
    for (auto& v : img.pixels()) v = std::uint8_t(rng.next() & 0xff);

    const auto path = dir.file("noise.png");
    save_image(img, path);
    CHECK(load_image(path) == img);

    // and through PPM as well
    const auto ppm = dir.file("noise.ppm");
    save_image(img, ppm);
    CHECK(load_image(ppm) == img);
}

TEST_CASE("PNG at dataset resolution") {
    testutil::TempDir dir;
    RgbImage img(1936, 1216, Rgb{12, 34, 56});
    const auto path = dir.file("full.png");
    save_image(img, path);
    const RgbImage back = load_image(path);
    CHECK(back.width() == 1936);
    CHECK(back.height() == 1216);
    CHECK(back == img);
}

TEST_CASE("image load error paths") {
    testutil::TempDir dir;
    CHECK(fails_with(ErrorCode::FileNotFound, [&] { load_image(dir.file("missing.png")); }));

    const auto garbage = dir.file("garbage.bin");
    {
        std::ofstream out(garbage, std::ios::binary);
        out << "this is not an image at all";
    }
    CHECK(fails_with(ErrorCode::UnsupportedFormat, [&] { load_image(garbage); }));

    // valid PNG, then truncated
    const auto whole = dir.file("whole.png");
    save_image(RgbImage(64, 64, Rgb{9, 9, 9}), whole);
    std::ifstream in(whole, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();
    const auto trunc = dir.file("trunc.png");
    {
        std::ofstream out(trunc, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK(fails_with(ErrorCode::CorruptData, [&] { load_image(trunc); }));
}

TEST_CASE("annotation files round trip") {
    testutil::TempDir dir;
    const auto path = dir.file("boxes.json");

    const std::vector<GroundTruthBox> boxes{
        GroundTruthBox(10, 10, 40, 40),
        GroundTruthBox(100.5, 7.25, 130.5, 37.25, true, Occluder::Wire),
    };
    save_annotations(boxes, path);
    const auto back = load_annotations(path);
    REQUIRE(back.size() == 2);
    CHECK(back == boxes);
}

TEST_CASE("annotation schema errors") {
    testutil::TempDir dir;
    const auto degenerate = dir.file("degenerate.json");
    {
        std::ofstream out(degenerate);
        out << R"({"boxes":[{"x_min":5,"y_min":0,"x_max":5,"y_max":9,)"
            << R"("occluded":false,"occluder":"none"}]})";
    }
    CHECK(fails_with(ErrorCode::SchemaError, [&] { load_annotations(degenerate); }));

    const auto missing_field = dir.file("missing.json");
    {
        std::ofstream out(missing_field);
        out << R"({"boxes":[{"x_min":5,"y_min":0,"x_max":9}]})";
    }
    CHECK(fails_with(ErrorCode::SchemaError, [&] { load_annotations(missing_field); }));

    const auto malformed = dir.file("malformed.json");
    {
        std::ofstream out(malformed);
        out << "{not json";
    }
    CHECK(fails_with(ErrorCode::ParseError, [&] { load_annotations(malformed); }));

    CHECK(fails_with(ErrorCode::FileNotFound, [&] { load_annotations(dir.file("nope.json")); }));
}

TEST_CASE("annotation file with 62 boxes") {
    testutil::TempDir dir;
    std::vector<GroundTruthBox> boxes;
    for (int i = 0; i < 62; ++i)
        boxes.emplace_back(i * 30.0, 0.0, i * 30.0 + 20.0, 20.0);
    const auto path = dir.file("dense.json");
    save_annotations(boxes, path);
    CHECK(load_annotations(path).size() == 62);
}

TEST_CASE("detection files round trip and preserve order") {
    testutil::TempDir dir;

    const auto empty = dir.file("empty.json");
    save_detections({}, empty);
    CHECK(load_detections(empty).empty());

    const auto one = dir.file("one.json");
    const std::vector<Detection> single{Detection(100.5, 200.0, 12.0, 0.9)};
    save_detections(single, one);
    CHECK(load_detections(one) == single);

    // 83 entries in input order
    std::vector<Detection> many;
    SplitMix64 rng(11);
    for (int i = 0; i < 83; ++i)
        many.emplace_back(rng.next_double() * 1900.0, rng.next_double() * 1200.0,
                          5.0 + rng.next_double() * 20.0, rng.next_double());
    const auto path = dir.file("many.json");
    save_detections(many, path);
    const auto back = load_detections(path);
    REQUIRE(back.size() == 83);
    CHECK(back == many);
}

TEST_CASE("manifest round trip and validation") {
    testutil::TempDir dir;
    DatasetManifest m("demo", {{"a.png", "a.json", "typical"},
                               {"b.png", "b.json", std::nullopt},
                               {"c.png", "c.json", "glare"}});
    const auto path = dir.file("manifest.json");
    save_manifest(m, path);
    const DatasetManifest back = load_manifest(path);
    CHECK(back.name == "demo");
    REQUIRE(back.entries.size() == 3);
    // relative paths are resolved against the manifest directory
    CHECK(back.entries[0].image_path == (dir.path() / "a.png").string());
    CHECK(back.entries[1].lighting == std::nullopt);
    CHECK(back.entries[2].lighting == "glare");

    CHECK(fails_with(ErrorCode::SchemaError, [] { DatasetManifest("x", {}); }));
    CHECK(fails_with(ErrorCode::SchemaError, [] {
        DatasetManifest("x", {{"same.png", "a.json", std::nullopt},
                              {"same.png", "b.json", std::nullopt}});
    }));

    const auto bad_lighting = dir.file("bad.json");
    {
        std::ofstream out(bad_lighting);
        out << R"({"name":"x","entries":[{"image":"i.png","annotation":"a.json",)"
            << R"("lighting":"dusk"}]})";
    }
    CHECK(fails_with(ErrorCode::SchemaError, [&] { load_manifest(bad_lighting); }));
}

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "afm/eval.hpp"
#include "afm/field.hpp"
#include "afm/io.hpp"
#include "afm/squeeze.hpp"
#include "afm/synth.hpp"

using namespace afm;

namespace {

// Fixed map behind the golden files.
LineSegmentMap golden_map() {
    LineSegmentMap map;
    map.dims = {7, 5};
    map.segments.push_back({{0.5, 0.5}, {6.25, 1.75}});
    map.segments.push_back({{2.0, 4.0}, {5.0, 0.125}});
    return map;
}

} // namespace

TEST_CASE("annotation parsing") {
    SECTION("valid document") {
        const LineSegmentMap map =
            read_annotation(R"({"width":4,"height":4,"segments":[[0,0,0,3]]})");
        CHECK(map.dims.width == 4);
        CHECK(map.dims.height == 4);
        REQUIRE(map.segments.size() == 1);
        CHECK(map.segments[0].start == Point2{0, 0});
        CHECK(map.segments[0].end == Point2{0, 3});
    }
    SECTION("rejects zero-length segments by index") {
        CHECK_THROWS_WITH(
            read_annotation(R"({"width":4,"height":4,"segments":[[0,0,0,3],[1,1,1,1]]})"),
            Catch::Matchers::ContainsSubstring("zero-length segment at index 1"));
    }
    SECTION("rejects out-of-range coordinates") {
        CHECK_THROWS_WITH(
            read_annotation(R"({"width":4,"height":4,"segments":[[0,0,9,9]]})"),
            Catch::Matchers::ContainsSubstring("out of range"));
    }
    SECTION("rejects malformed JSON and wrong shapes") {
        CHECK_THROWS_AS(read_annotation("{"), ValidationError);
        CHECK_THROWS_AS(read_annotation("[1,2,3]"), ValidationError);
        CHECK_THROWS_AS(read_annotation(R"({"width":4,"height":4})"), ValidationError);
        CHECK_THROWS_AS(
            read_annotation(R"({"width":4.5,"height":4,"segments":[]})"), ValidationError);
        CHECK_THROWS_AS(
            read_annotation(R"({"width":4,"height":4,"segments":[[1,2,3]]})"),
            ValidationError);
    }
    SECTION("extra keys ride along") {
        const LineSegmentMap map = read_annotation(
            R"({"width":4,"height":4,"segments":[[0,0,0,3]],"scores":[0.1]})");
        CHECK(map.segments.size() == 1);
    }
}

TEST_CASE("annotation round trip is exact") {
    for (const char* doc :
         {R"({"width":4,"height":4,"segments":[[0,0,0,3]]})",
          R"({"width":17,"height":9,"segments":[[0.125,0.25,16.5,8.5],[3,7,9,1]]})"}) {
        const LineSegmentMap map = read_annotation(doc);
        const LineSegmentMap again = read_annotation(write_annotation(map));
        REQUIRE(again.segments.size() == map.segments.size());
        CHECK(again.dims == map.dims);
        for (std::size_t i = 0; i < map.segments.size(); ++i) {
            CHECK(again.segments[i].start == map.segments[i].start);
            CHECK(again.segments[i].end == map.segments[i].end);
        }
    }

    // Awkward doubles survive the decimal round trip bit-for-bit.
    LineSegmentMap map;
    map.dims = {100, 100};
    map.segments.push_back({{0.1, 1.0 / 3.0}, {99.000000001, 2.0 / 7.0}});
    const LineSegmentMap again = read_annotation(write_annotation(map));
    CHECK(again.segments[0].start == map.segments[0].start);
    CHECK(again.segments[0].end == map.segments[0].end);
}

TEST_CASE("field file format") {
    SECTION("1x1 raw field is 21 bytes") {
        AttractionFieldMap field;
        field.dims = {1, 1};
        field.state = AfmState::Raw;
        field.vectors = {{0, 0}};
        CHECK(write_afm(field).size() == 21);
    }
    SECTION("header validation") {
        AttractionFieldMap field;
        field.dims = {2, 2};
        field.state = AfmState::Raw;
        field.vectors.assign(4, {1, 1});
        std::string bytes = write_afm(field);

        std::string bad_magic = bytes;
        bad_magic[0] = 'X';
        CHECK_THROWS_WITH(read_afm(bad_magic),
                          Catch::Matchers::ContainsSubstring("magic"));

        std::string bad_flags = bytes;
        bad_flags[12] = 0b10; // stretched without size-normalized
        CHECK_THROWS_WITH(read_afm(bad_flags),
                          Catch::Matchers::ContainsSubstring("flags"));

        std::string truncated = bytes.substr(0, bytes.size() - 3);
        CHECK_THROWS_WITH(read_afm(truncated),
                          Catch::Matchers::ContainsSubstring("length"));
        CHECK_THROWS_AS(read_afm("AFM"), ValidationError);
    }
    SECTION("write-read round trip preserves the grid exactly") {
        LineSegmentMap scene;
        scene.dims = {5, 5};
        scene.segments.push_back({{0.5, 1.5}, {4.0, 3.25}});
        const AttractionFieldMap field = encode_afm(scene);
        const AttractionFieldMap back = read_afm(write_afm(field));
        CHECK(back.dims == field.dims);
        CHECK(back.state == field.state);
        for (std::size_t i = 0; i < field.vectors.size(); ++i) {
            // Disk payload is float32; compare at float precision.
            CHECK(static_cast<float>(field.vectors[i].x) ==
                  static_cast<float>(back.vectors[i].x));
            CHECK(back.vectors[i].x == static_cast<double>(static_cast<float>(back.vectors[i].x)));
        }
        CHECK(write_afm(back) == write_afm(field));
    }
    SECTION("state flags survive the trip") {
        LineSegmentMap scene;
        scene.dims = {4, 4};
        scene.segments.push_back({{0, 0}, {3, 3}});
        for (const AfmState state :
             {AfmState::Raw, AfmState::SizeNormalized, AfmState::Stretched}) {
            AttractionFieldMap field = encode_afm(scene);
            if (state != AfmState::Raw) field = size_normalize(std::move(field));
            if (state == AfmState::Stretched) field = stretch(std::move(field));
            const AttractionFieldMap back = read_afm(write_afm(field));
            CHECK(back.state == state);
        }
    }
    SECTION("quantization to float32 keeps the round trip within a pixel") {
        LineSegmentMap scene;
        scene.dims = {48, 48};
        scene.segments.push_back({{4.2, 7.9}, {41.5, 36.25}});
        const AttractionFieldMap restored = read_afm(write_afm(encode_afm(scene)));
        SqueezeConfig cfg;
        cfg.remove_outliers = false;
        const SqueezeResult rec = squeeze(restored, cfg);
        REQUIRE(rec.segments.size() == 1);
        const LineSegment& got = rec.segments[0].segment;
        const LineSegment& want = scene.segments[0];
        const double direct =
            std::max((got.start - want.start).norm(), (got.end - want.end).norm());
        const double flipped =
            std::max((got.start - want.end).norm(), (got.end - want.start).norm());
        CHECK(std::min(direct, flipped) <= 1.0);
    }
}

TEST_CASE("golden files are byte-stable") {
    namespace fs = std::filesystem;
    const fs::path dir{AFM_GOLDEN_DIR};
    const LineSegmentMap map = golden_map();
    const std::string annotation = write_annotation(map);
    const std::string field = write_afm(size_normalize(encode_afm(map)));

    if (std::getenv("AFM_UPDATE_GOLDEN")) {
        write_file(dir / "reference.json", annotation);
        write_file(dir / "reference.afm", field);
        SUCCEED("golden files regenerated");
        return;
    }
    CHECK(annotation == read_file(dir / "reference.json"));
    CHECK(field == read_file(dir / "reference.afm"));
}

TEST_CASE("scene generation") {
    SynthConfig cfg;
    cfg.seed = 99;
    cfg.scene_count = 6;
    cfg.dims = {64, 48};
    cfg.segments_min = 2;
    cfg.segments_max = 9;
    cfg.min_length_fraction = 0.1;
    cfg.min_separation = 3.0;

    SECTION("deterministic in the seed") {
        const auto a = generate_scenes(cfg);
        const auto b = generate_scenes(cfg);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(write_annotation(a[i]) == write_annotation(b[i]));
    }
    SECTION("different seeds differ") {
        SynthConfig other = cfg;
        other.seed = 100;
        CHECK(write_annotation(generate_scenes(cfg)[0]) !=
              write_annotation(generate_scenes(other)[0]));
    }
    SECTION("constraints hold on every scene") {
        const double min_len = cfg.min_length_fraction * cfg.dims.diagonal();
        for (const LineSegmentMap& scene : generate_scenes(cfg)) {
            CHECK_NOTHROW(validate_segment_map(scene));
            REQUIRE(scene.segments.size() >= 2);
            REQUIRE(scene.segments.size() <= 9);
            for (const LineSegment& s : scene.segments)
                CHECK(s.length() >= min_len);
            for (std::size_t i = 0; i < scene.segments.size(); ++i)
                for (std::size_t j = i + 1; j < scene.segments.size(); ++j)
                    CHECK((scene.segments[i].midpoint() - scene.segments[j].midpoint())
                              .norm() >= cfg.min_separation);
        }
    }
    SECTION("unsatisfiable configs fail loudly") {
        SynthConfig impossible = cfg;
        impossible.dims = {4, 4};
        impossible.segments_min = impossible.segments_max = 40;
        impossible.min_separation = 10.0;
        CHECK_THROWS_AS(generate_scenes(impossible), ConfigError);
    }
}

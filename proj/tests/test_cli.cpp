#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "afm/io.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(AFM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("afm_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("command line pipeline") {
    TempDir tmp;
    const fs::path ann = tmp.path / "scene.json";
    afm::write_file(ann, R"({"width":4,"height":4,"segments":[[0,0,0,3]]})");

    SECTION("encode writes the documented byte layout") {
        const fs::path out = tmp.path / "scene.afm";
        REQUIRE(run("encode --input " + ann.string() + " --output " + out.string()) == 0);
        CHECK(fs::file_size(out) == 141); // 13-byte header + 4*4 pixels * 8 bytes
    }
    SECTION("stretch requires normalize") {
        const fs::path out = tmp.path / "scene.afm";
        CHECK(run("encode --stretch --input " + ann.string() + " --output " +
                  out.string()) == 1);
    }
    SECTION("scale rescales the lattice") {
        const fs::path big = tmp.path / "big.json";
        afm::write_file(big, R"({"width":320,"height":320,"segments":[[10,10,300,200]]})");
        const fs::path out = tmp.path / "half.afm";
        REQUIRE(run("encode --scale 0.5 --input " + big.string() + " --output " +
                    out.string()) == 0);
        const afm::AttractionFieldMap field = afm::read_afm(afm::read_file(out));
        CHECK(field.dims.width == 160);
        CHECK(field.dims.height == 160);
    }
    SECTION("unknown flags are rejected") {
        CHECK(run("encode --input " + ann.string() + " --output x.afm --bogus") == 1);
        CHECK(run("--help") == 0);
    }
    SECTION("missing input exits with the io code") {
        CHECK(run("encode --input " + (tmp.path / "nope.json").string() +
                  " --output " + (tmp.path / "x.afm").string()) == 2);
    }
    SECTION("squeeze inverts encode, whatever the stored state") {
        const fs::path scene = tmp.path / "diag.json";
        afm::write_file(scene,
                        R"({"width":24,"height":24,"segments":[[2,3,20,17.5]]})");
        const fs::path raw = tmp.path / "raw.afm";
        const fs::path stretched = tmp.path / "stretched.afm";
        REQUIRE(run("encode --input " + scene.string() + " --output " + raw.string()) == 0);
        REQUIRE(run("encode --normalize --stretch --input " + scene.string() +
                    " --output " + stretched.string()) == 0);

        const fs::path out_raw = tmp.path / "raw_segments.json";
        const fs::path out_str = tmp.path / "str_segments.json";
        REQUIRE(run("squeeze --no-outlier-removal --input " + raw.string() +
                    " --output " + out_raw.string()) == 0);
        REQUIRE(run("squeeze --no-outlier-removal --input " + stretched.string() +
                    " --output " + out_str.string()) == 0);

        const afm::LineSegmentMap a = afm::read_annotation(afm::read_file(out_raw));
        const afm::LineSegmentMap b = afm::read_annotation(afm::read_file(out_str));
        REQUIRE(a.segments.size() == 1);
        REQUIRE(b.segments.size() == 1);
        // The stretch pair perturbs each component by at most ~1e-6 * W.
        CHECK((a.segments[0].start - b.segments[0].start).norm() < 1e-3);
        CHECK((a.segments[0].end - b.segments[0].end).norm() < 1e-3);

        const fs::path pr = tmp.path / "pr.csv";
        REQUIRE(run("eval --pred " + out_raw.string() + " --gt " + scene.string() +
                    " --out " + pr.string()) == 0);
        CHECK(line_count(pr) == 2);
        std::ifstream in(pr);
        std::string header, row;
        std::getline(in, header);
        std::getline(in, row);
        CHECK(header == "precision,recall,f");
        CHECK(row == "1,1,1");
    }
    SECTION("synth is deterministic and feeds roundtrip and stats") {
        const fs::path dir_a = tmp.path / "corpus_a";
        const fs::path dir_b = tmp.path / "corpus_b";
        REQUIRE(run("synth --seed 7 --count 3 --width 48 --height 40 --min-segments 2 "
                    "--max-segments 5 --out " + dir_a.string()) == 0);
        REQUIRE(run("synth --seed 7 --count 3 --width 48 --height 40 --min-segments 2 "
                    "--max-segments 5 --out " + dir_b.string()) == 0);
        for (int i = 0; i < 3; ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "scene_%04d.json", i);
            CHECK(afm::read_file(dir_a / name) == afm::read_file(dir_b / name));
        }

        const fs::path report = tmp.path / "duality.csv";
        REQUIRE(run("roundtrip --input " + dir_a.string() +
                    " --scales 0.5:2.0:0.1 --report " + report.string()) == 0);
        CHECK(line_count(report) == 17); // header + 16 scales

        const fs::path afm_dir = tmp.path / "fields";
        fs::create_directories(afm_dir);
        for (int i = 0; i < 3; ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "scene_%04d.json", i);
            REQUIRE(run("encode --input " + (dir_a / name).string() + " --output " +
                        (afm_dir / (std::to_string(i) + ".afm")).string()) == 0);
        }
        const fs::path hist = tmp.path / "hist.csv";
        REQUIRE(run("stats --input " + afm_dir.string() + " --bins 8 --out " +
                    hist.string()) == 0);
        CHECK(line_count(hist) == 9);
    }
    SECTION("stats on all-zero fields piles into the first bin") {
        afm::AttractionFieldMap zero;
        zero.dims = {6, 6};
        zero.state = afm::AfmState::Raw;
        zero.vectors.assign(36, {0, 0});
        const fs::path dir = tmp.path / "zeros";
        fs::create_directories(dir);
        afm::write_file(dir / "z.afm", afm::write_afm(zero));
        const fs::path hist = tmp.path / "zero_hist.csv";
        REQUIRE(run("stats --input " + dir.string() + " --bins 4 --out " +
                    hist.string()) == 0);
        std::ifstream in(hist);
        std::string line;
        std::getline(in, line); // header
        std::getline(in, line);
        CHECK(line.substr(line.rfind(',') + 1) == "36");
    }
    SECTION("sweep emits 50 rows") {
        const fs::path scene = tmp.path / "sw.json";
        afm::write_file(scene,
                        R"({"width":32,"height":32,"segments":[[3,4,28,25]]})");
        const fs::path field = tmp.path / "sw.afm";
        REQUIRE(run("encode --input " + scene.string() + " --output " + field.string()) ==
                0);
        const fs::path curve = tmp.path / "curve.csv";
        REQUIRE(run("eval --gt " + scene.string() + " --sweep " + field.string() +
                    " --no-outlier-removal --out " + curve.string()) == 0);
        CHECK(line_count(curve) == 51);
    }
}

// afm: encode line segment annotations into attraction fields, squeeze fields
// back into segments, and measure how faithful the round trip is.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afm/afm.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct SqueezeFlags {
    double aspect_ratio = 0.2;
    double tau_deg = 10.0;
    int window = 3;
    bool no_outlier_removal = false;
    double gamma_fraction = 0.02;

    void attach(CLI::App* cmd, bool outliers_default_on) {
        cmd->add_option("--aspect-ratio", aspect_ratio,
                        "accept segments with aspect ratio below this")
            ->capture_default_str();
        cmd->add_option("--tau-deg", tau_deg, "angular tolerance in degrees")
            ->capture_default_str();
        cmd->add_option("--window", window, "odd side length of the growth window")
            ->capture_default_str();
        cmd->add_option("--gamma-fraction", gamma_fraction,
                        "inlier radius as a fraction of min(H,W)")
            ->capture_default_str();
        if (outliers_default_on) {
            cmd->add_flag("--no-outlier-removal", no_outlier_removal,
                          "squeeze all vectors, skipping the inlier filter");
        } else {
            no_outlier_removal = true;
            cmd->add_flag_callback(
                "--outlier-removal", [this] { no_outlier_removal = false; },
                "apply the inlier filter before squeezing (off by default here)");
        }
    }

    afm::SqueezeConfig config() const {
        afm::SqueezeConfig cfg;
        cfg.aspect_ratio_max = aspect_ratio;
        cfg.tau = tau_deg * std::numbers::pi / 180.0;
        cfg.window = window;
        cfg.remove_outliers = !no_outlier_removal;
        cfg.outlier_gamma_fraction = gamma_fraction;
        return cfg;
    }
};

std::vector<fs::path> list_files(const fs::path& dir, const std::string& ext) {
    if (!fs::is_directory(dir))
        throw afm::IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ext)
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<double> parse_scale_spec(const std::string& spec) {
    double lo = 0, hi = 0, step = 0;
    char sep1 = 0, sep2 = 0;
    std::istringstream in(spec);
    if (!(in >> lo >> sep1 >> hi >> sep2 >> step) || sep1 != ':' || sep2 != ':' ||
        !(in >> std::ws).eof())
        throw afm::ValidationError("scale spec must be lo:hi:step, e.g. 0.5:2.0:0.1");
    if (!(lo > 0.0) || !(step > 0.0) || hi < lo)
        throw afm::ValidationError("scale spec requires 0 < lo <= hi and step > 0");
    std::vector<double> scales;
    for (int k = 0;; ++k) {
        const double s = lo + k * step;
        if (s > hi + 1e-9) break;
        scales.push_back(s);
    }
    return scales;
}

int cmd_encode(const std::string& input, const std::string& output, bool normalize,
               bool stretch_values, double scale) {
    if (stretch_values && !normalize)
        throw afm::StateError("--stretch requires --normalize");
    afm::LineSegmentMap map = afm::read_annotation(afm::read_file(input));
    if (scale != 1.0)
        map = afm::scaled(map, scale);
    afm::AttractionFieldMap field = afm::encode_afm(map);
    if (normalize)
        field = afm::size_normalize(std::move(field));
    if (stretch_values)
        field = afm::stretch(std::move(field));
    afm::write_file(output, afm::write_afm(field));
    return kExitOk;
}

int cmd_squeeze(const std::string& input, const std::string& output,
                const SqueezeFlags& flags) {
    afm::AttractionFieldMap field = afm::to_raw(afm::read_afm(afm::read_file(input)));
    const afm::SqueezeResult result = afm::squeeze(field, flags.config());
    std::vector<double> scores;
    scores.reserve(result.segments.size());
    for (const afm::ScoredSegment& s : result.segments) scores.push_back(s.score);
    const afm::LineSegmentMap map = result.to_segment_map();
    afm::write_file(output, afm::write_annotation(map, &scores));
    std::cout << "segments: " << map.segments.size() << "\n";
    return kExitOk;
}

int cmd_roundtrip(const std::string& input_dir, const std::string& scale_spec,
                  const std::string& report_path, const SqueezeFlags& flags) {
    const std::vector<double> scales = parse_scale_spec(scale_spec);
    std::vector<afm::LineSegmentMap> corpus;
    for (const fs::path& file : list_files(input_dir, ".json"))
        corpus.push_back(afm::read_annotation(afm::read_file(file)));
    if (corpus.empty())
        throw afm::ValidationError("no .json annotations found in " + input_dir);

    const afm::DualityReport report = afm::verify_duality(corpus, scales, flags.config());
    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw afm::IoError("cannot open for writing: " + report_path);
    afm::write_csv(out, report);

    double p_min = 1.0, r_min = 1.0, p_sum = 0.0, r_sum = 0.0;
    for (const auto& row : report.scales) {
        p_min = std::min(p_min, row.precision);
        r_min = std::min(r_min, row.recall);
        p_sum += row.precision;
        r_sum += row.recall;
    }
    const double n = static_cast<double>(report.scales.size());
    std::printf("scales: %zu  precision min %.6f mean %.6f  recall min %.6f mean %.6f\n",
                report.scales.size(), p_min, p_sum / n, r_min, r_sum / n);
    return kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& sweep_afm, const std::string& out_path, bool any_match,
             const SqueezeFlags& flags) {
    if (pred_path.empty() && sweep_afm.empty())
        throw afm::ValidationError("eval needs --pred or --sweep");
    const afm::LineSegmentMap gt = afm::read_annotation(afm::read_file(gt_path));
    const afm::MatchMode mode =
        any_match ? afm::MatchMode::AnyWithinRadius : afm::MatchMode::OneToOne;

    if (!sweep_afm.empty()) {
        afm::AttractionFieldMap field =
            afm::to_raw(afm::read_afm(afm::read_file(sweep_afm)));
        const afm::PRCurve curve = afm::pr_sweep(field, gt, flags.config());
        if (!out_path.empty()) {
            std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
            if (!out)
                throw afm::IoError("cannot open for writing: " + out_path);
            afm::write_csv(out, curve);
        }
        double best_f = 0.0;
        for (const afm::PRPoint& p : curve.points) best_f = std::max(best_f, p.f_measure);
        std::printf("sweep: %zu thresholds, best F %.6f\n", curve.points.size(), best_f);
        return kExitOk;
    }

    const afm::LineSegmentMap pred = afm::read_annotation(afm::read_file(pred_path));
    const afm::PRPoint point = afm::precision_recall(pred, gt, mode);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw afm::IoError("cannot open for writing: " + out_path);
        afm::write_csv(out, point);
    }
    std::printf("precision %.6f recall %.6f f %.6f\n", point.precision, point.recall,
                point.f_measure);
    return kExitOk;
}

int cmd_synth(std::uint64_t seed, int count, int width, int height, int seg_min,
              int seg_max, double min_length_fraction, double min_separation,
              const std::string& out_dir) {
    afm::SynthConfig cfg;
    cfg.seed = seed;
    cfg.scene_count = count;
    cfg.dims = {width, height};
    cfg.segments_min = seg_min;
    cfg.segments_max = seg_max;
    cfg.min_length_fraction = min_length_fraction;
    cfg.min_separation = min_separation;
    const std::vector<afm::LineSegmentMap> scenes = afm::generate_scenes(cfg);

    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%04zu.json", i);
        afm::write_file(fs::path(out_dir) / name, afm::write_annotation(scenes[i]));
    }
    std::cout << "wrote " << scenes.size() << " scenes to " << out_dir << "\n";
    return kExitOk;
}

int cmd_stats(const std::string& input_dir, int bins, const std::string& out_path) {
    afm::MagnitudeAccumulator acc;
    for (const fs::path& file : list_files(input_dir, ".afm"))
        acc.add(afm::to_raw(afm::read_afm(afm::read_file(file))));
    if (acc.sample_count() == 0)
        throw afm::ValidationError("no .afm files found in " + input_dir);
    const afm::MagnitudeHistogram hist = acc.histogram(bins);
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw afm::IoError("cannot open for writing: " + out_path);
    afm::write_csv(out, hist);
    std::cout << "binned " << acc.sample_count() << " vectors into " << bins << " bins\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"attraction field maps for line segments: encode, squeeze, verify"};
    app.require_subcommand(1);

    // encode
    std::string enc_input, enc_output;
    bool enc_normalize = false, enc_stretch = false;
    double enc_scale = 1.0;
    CLI::App* encode = app.add_subcommand("encode", "annotation JSON -> field file");
    encode->add_option("--input", enc_input, "annotation JSON path")->required();
    encode->add_option("--output", enc_output, "output .afm path")->required();
    encode->add_flag("--normalize", enc_normalize, "divide components by W resp. H");
    encode->add_flag("--stretch", enc_stretch,
                     "log-stretch the normalized components (requires --normalize)");
    encode->add_option("--scale", enc_scale, "rescale the annotation before encoding")
        ->capture_default_str();

    // squeeze
    std::string sq_input, sq_output;
    SqueezeFlags sq_flags;
    CLI::App* squeeze = app.add_subcommand("squeeze", "field file -> detected segments");
    squeeze->add_option("--input", sq_input, "input .afm path (any state)")->required();
    squeeze->add_option("--output", sq_output, "output segments JSON path")->required();
    sq_flags.attach(squeeze, /*outliers_default_on=*/true);

    // roundtrip
    std::string rt_input, rt_scales = "0.5:2.0:0.1", rt_report;
    SqueezeFlags rt_flags;
    CLI::App* roundtrip = app.add_subcommand(
        "roundtrip", "encode+squeeze a directory of annotations across scales");
    roundtrip->add_option("--input", rt_input, "directory of annotation JSON files")
        ->required();
    roundtrip->add_option("--scales", rt_scales, "scale sweep as lo:hi:step, inclusive")
        ->capture_default_str();
    roundtrip->add_option("--report", rt_report, "output CSV path")->required();
    rt_flags.attach(roundtrip, /*outliers_default_on=*/false);

    // eval
    std::string ev_pred, ev_gt, ev_sweep, ev_out;
    bool ev_any_match = false;
    SqueezeFlags ev_flags;
    CLI::App* eval = app.add_subcommand("eval", "score detections against ground truth");
    eval->add_option("--pred", ev_pred, "detected segments JSON");
    eval->add_option("--gt", ev_gt, "ground truth annotation JSON")->required();
    eval->add_option("--sweep", ev_sweep,
                     "field file: sweep the thinness threshold instead of --pred");
    eval->add_option("--out", ev_out, "output CSV path");
    eval->add_flag("--any-match", ev_any_match,
                   "count any pixel with a counterpart in radius (not one-to-one)");
    ev_flags.attach(eval, /*outliers_default_on=*/true);

    // synth
    std::uint64_t sy_seed = 0;
    int sy_count = 1, sy_width = 320, sy_height = 320, sy_min = 2, sy_max = 30;
    double sy_minlen = 0.05, sy_minsep = 3.0;
    std::string sy_out;
    CLI::App* synth = app.add_subcommand("synth", "generate a seeded synthetic corpus");
    synth->add_option("--seed", sy_seed, "generator seed")->capture_default_str();
    synth->add_option("--count", sy_count, "number of scenes")->capture_default_str();
    synth->add_option("--width", sy_width, "lattice width")->capture_default_str();
    synth->add_option("--height", sy_height, "lattice height")->capture_default_str();
    synth->add_option("--min-segments", sy_min, "minimum segments per scene")
        ->capture_default_str();
    synth->add_option("--max-segments", sy_max, "maximum segments per scene")
        ->capture_default_str();
    synth->add_option("--min-length-fraction", sy_minlen,
                      "minimum segment length as a fraction of the diagonal")
        ->capture_default_str();
    synth->add_option("--min-separation", sy_minsep,
                      "minimum distance between segment midpoints, pixels")
        ->capture_default_str();
    synth->add_option("--out", sy_out, "output directory")->required();

    // stats
    std::string st_input, st_out;
    int st_bins = 50;
    CLI::App* stats = app.add_subcommand(
        "stats", "histogram of normalized vector magnitudes over .afm files");
    stats->add_option("--input", st_input, "directory of .afm files")->required();
    stats->add_option("--bins", st_bins, "number of histogram bins")->capture_default_str();
    stats->add_option("--out", st_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (encode->parsed())
            return cmd_encode(enc_input, enc_output, enc_normalize, enc_stretch, enc_scale);
        if (squeeze->parsed())
            return cmd_squeeze(sq_input, sq_output, sq_flags);
        if (roundtrip->parsed())
            return cmd_roundtrip(rt_input, rt_scales, rt_report, rt_flags);
        if (eval->parsed())
            return cmd_eval(ev_pred, ev_gt, ev_sweep, ev_out, ev_any_match, ev_flags);
        if (synth->parsed())
            return cmd_synth(sy_seed, sy_count, sy_width, sy_height, sy_min, sy_max,
                             sy_minlen, sy_minsep, sy_out);
        if (stats->parsed())
            return cmd_stats(st_input, st_bins, st_out);
    } catch (const afm::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const afm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}

// shrinkdet: compress, inspect, and run outlier detection on time series,
// either on the raw values or directly on the compact semantic layer of a
// compressed archive.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "shrinkdet/shrinkdet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shrinkdet;

namespace {

constexpr int kSchemaVersion = 1;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

SeriesFormat parse_format(const std::string& name) {
    if (name == "plain") return SeriesFormat::plain;
    if (name == "ucr") return SeriesFormat::ucr_row;
    if (name == "kdd") return SeriesFormat::kdd_labeled;
    throw DataError("unknown format: " + name);
}

std::vector<uint8_t> read_binary(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot open " + path);
    return {std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
}

void write_binary(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot write " + path);
    file.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
}

bool is_archive_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    char magic[4] = {};
    file.read(magic, 4);
    return file.gcount() == 4 && magic[0] == 'S' && magic[1] == 'H' && magic[2] == 'R' &&
           magic[3] == 'K';
}

void write_detection_csv(const std::string& path, const DetectionResult& res) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "schema,index,score,label\n";
    out.precision(17);
    for (size_t i = 0; i < res.scores.size(); ++i)
        out << kSchemaVersion << ',' << i << ',' << res.scores[i] << ','
            << (res.labels[i] == Label::outlier ? 1 : 0) << '\n';
}

std::vector<Label> load_truth(const std::string& path, size_t n) {
    TimeSeries labeled = load_series(path, SeriesFormat::kdd_labeled);
    if (labeled.size() != n)
        throw DataError("label file length " + std::to_string(labeled.size()) +
                        " does not match series length " + std::to_string(n));
    return labeled.labels();
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    return xs[xs.size() / 2];
}

struct DetectorParams {
    std::string detector = "iforest";
    size_t trees = 100;
    size_t subsample = 256;
    double contamination = 0.01;
    uint64_t seed = 1;
    double eps = 0.3;
    size_t min_pts = 5;
    bool grid = false;
    std::vector<double> grid_eps = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<size_t> grid_minpts = {3, 5, 10, 15, 30, 50};
};

// Runs the configured detector over one input; grid search needs truth over
// the original index range.
DetectionResult run_detector(const DetectorInput& input, const DetectorParams& p,
                             const std::vector<Label>* truth, size_t n) {
    if (p.detector == "iforest")
        return iforest(input, p.trees, p.subsample, p.contamination, p.seed);
    if (!p.grid) return dbscan(input, p.eps, p.min_pts);
    if (truth == nullptr) throw DataError("--grid requires --labels for scoring");
    return grid_search_dbscan(input, p.grid_eps, p.grid_minpts, *truth, n).result;
}

void add_detector_options(CLI::App* cmd, DetectorParams& p) {
    cmd->add_option("--detector", p.detector, "iforest or dbscan")
        ->check(CLI::IsMember({"iforest", "dbscan"}))
        ->capture_default_str();
    cmd->add_option("--trees", p.trees, "isolation forest tree count")->capture_default_str();
    cmd->add_option("--subsample", p.subsample, "isolation forest subsample size")
        ->capture_default_str();
    cmd->add_option("--contamination", p.contamination, "expected outlier fraction")
        ->capture_default_str();
    cmd->add_option("--seed", p.seed, "random seed")->capture_default_str();
    cmd->add_option("--eps", p.eps, "dbscan radius in normalized feature space")
        ->capture_default_str();
    cmd->add_option("--min-pts", p.min_pts, "dbscan density threshold")->capture_default_str();
    cmd->add_flag("--grid", p.grid, "dbscan parameter grid search (needs labels)");
    cmd->add_option("--grid-eps", p.grid_eps, "dbscan grid: eps values");
    cmd->add_option("--grid-min-pts", p.grid_minpts, "dbscan grid: min_pts values");
}

// ---------------------------------------------------------------- compress

struct CompressArgs {
    std::string input, out, format = "plain";
    double snr = 25.0, epsilon = 0.0;
    bool has_snr = false, has_epsilon = false;
    uint32_t interval = 64;
};

int cmd_compress(const CompressArgs& a) {
    TimeSeries s = load_series(a.input, parse_format(a.format));
    const QuantConfig cfg =
        a.has_epsilon ? quant_from_epsilon(a.epsilon) : quant_from_snr(s, a.snr);
    Archive ar = compress(s, cfg, a.interval);
    write_binary(a.out, serialize(ar));

    const auto rep = compression_report(s, ar);
    size_t sub_bases = 0;
    for (const auto& seg : ar.segments) sub_bases = std::max<size_t>(sub_bases, seg.sub_base_id + 1);
    json stats{{"schema", kSchemaVersion},
               {"n", ar.n},
               {"tau", ar.tau},
               {"segments", ar.segments.size()},
               {"sub_bases", sub_bases},
               {"base_bytes", rep.base_bytes},
               {"residual_bytes", rep.residual_bytes},
               {"ratio", rep.compression_ratio}};
    std::cout << stats.dump() << '\n';
    return 0;
}

// -------------------------------------------------------------- decompress

struct DecompressArgs {
    std::string input, out;
    double epsilon = 0.0;
    bool has_epsilon = false, lossless = false, base_only = false;
};

int cmd_decompress(const DecompressArgs& a) {
    Archive ar = deserialize(read_binary(a.input));
    double eps = kLossless;
    if (a.base_only) eps = std::numeric_limits<double>::infinity();
    else if (a.has_epsilon) eps = a.epsilon;
    save_plain(decompress(ar, eps), a.out);
    return 0;
}

// --------------------------------------------------------------- transform

struct TransformArgs {
    std::string input, out;
    size_t seg_threshold = 3, base_threshold = 5;
};

int cmd_transform(const TransformArgs& a) {
    Archive ar = deserialize(read_binary(a.input));
    Base base = base_from_archive(ar);
    auto selection = base_filter(base, segment_filter(base, a.seg_threshold), a.base_threshold);
    auto points = materialize(base, selection);

    std::ofstream out(a.out);
    if (!out) throw DataError("cannot write " + a.out);
    out << "schema,index,value,segment_id\n";
    out.precision(17);
    for (const auto& p : points.points)
        out << kSchemaVersion << ',' << p.index << ',' << p.value << ',' << p.segment_id << '\n';

    json stats{{"schema", kSchemaVersion},
               {"n", ar.n},
               {"segments_total", base.segments.size()},
               {"segments_retained", selection.retained.size()},
               {"points", points.points.size()}};
    std::cout << stats.dump() << '\n';
    return 0;
}

// ------------------------------------------------------------------ detect

struct DetectArgs {
    std::string input, out, format = "plain", labels, features = "value";
    size_t seg_threshold = 3, base_threshold = 5;
    DetectorParams params;
};

int cmd_detect(const DetectArgs& a) {
    const FeatureMode mode =
        a.features == "value" ? FeatureMode::value_only : FeatureMode::value_plus_delta;

    size_t n = 0;
    DetectorInput input;
    std::string input_kind;
    if (is_archive_file(a.input)) {
        Archive ar = deserialize(read_binary(a.input));
        n = ar.n;
        input = DetectorInput::from_points(
            transform(base_from_archive(ar), a.seg_threshold, a.base_threshold), mode);
        input_kind = "archive";
    } else {
        TimeSeries s = load_series(a.input, parse_format(a.format));
        n = s.size();
        input = DetectorInput::from_series(s, mode);
        input_kind = "raw";
    }

    std::vector<Label> truth;
    if (!a.labels.empty()) truth = load_truth(a.labels, n);

    DetectionResult full;
    double elapsed = 0.0;
    if (input.size() == 0) {  // nothing retained: report gracefully
        full.scores.assign(n, 0.0);
        full.labels.assign(n, Label::normal);
        full.detector = a.params.detector;
        full.params = "empty-input";
    } else {
        DetectionResult res =
            run_detector(input, a.params, truth.empty() ? nullptr : &truth, n);
        elapsed = res.elapsed_seconds;
        full = map_to_original(res, input, n);
    }
    if (!a.out.empty()) write_detection_csv(a.out, full);

    size_t flagged = 0;
    for (Label l : full.labels) flagged += l == Label::outlier;
    json stats{{"schema", kSchemaVersion}, {"input_kind", input_kind},
               {"detector", full.detector}, {"params", full.params},
               {"n", n},                    {"points_evaluated", input.size()},
               {"flagged", flagged},        {"elapsed_seconds", elapsed}};
    if (!truth.empty()) {
        stats["roc_auc"] = roc_auc(full.scores, truth);
        stats["pr_auc"] = pr_auc(full.scores, truth);
    }
    std::cout << stats.dump() << '\n';
    return 0;
}

// ------------------------------------------------------------------ inject

struct InjectArgs {
    std::string input, out, format = "plain", kind = "point";
    size_t count = 100;
    double magnitude = 6.0;
    uint64_t seed = 1;
};

int cmd_inject(const InjectArgs& a) {
    TimeSeries s = load_series(a.input, parse_format(a.format));
    InjectionSpec spec;
    spec.count = a.count;
    spec.magnitude = a.magnitude;
    spec.seed = a.seed;
    if (a.kind == "point") spec.kind = OutlierKind::point_spike;
    else if (a.kind == "contextual") spec.kind = OutlierKind::contextual_shift;
    else if (a.kind == "sequence") spec.kind = OutlierKind::sequence_pattern;
    else throw DataError("unknown outlier kind: " + a.kind);
    save_kdd_labeled(inject_outliers(s, spec), a.out);
    return 0;
}

// ------------------------------------------------------------------- synth

struct SynthArgs {
    std::string out, kind = "sine";
    size_t n = 10000;
    SynthParams params;
    uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a) {
    SynthKind kind;
    if (a.kind == "sine") kind = SynthKind::sine;
    else if (a.kind == "walk") kind = SynthKind::random_walk;
    else if (a.kind == "piecewise") kind = SynthKind::piecewise_linear;
    else throw DataError("unknown synth kind: " + a.kind);
    save_plain(synth(kind, a.n, a.params, a.seed), a.out);
    return 0;
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
    std::vector<std::string> datasets;
    std::string out_dir = ".";
    double snr = 25.0;
    uint32_t interval = 64;
    size_t seg_threshold = 3, base_threshold = 5;
    std::vector<std::string> detectors = {"iforest", "dbscan"};
    size_t reps = 5;
    DetectorParams params;
};

struct BenchRow {
    std::string dataset, detector, mode, status = "ok", note;
    double roc = 0.0, pr = 0.0, dr_roc = 0.0, dr_pr = 0.0;
    double base_fraction = 0.0, compression_ratio = 0.0;
    double runtime_s = 0.0, speedup = 0.0;
};

void append_row(std::ofstream& out, const BenchRow& r) {
    out << kSchemaVersion << ',' << r.dataset << ',' << r.detector << ',' << r.mode << ','
        << r.status << ',' << r.roc << ',' << r.pr << ',' << r.dr_roc << ',' << r.dr_pr << ','
        << r.base_fraction << ',' << r.compression_ratio << ',' << r.runtime_s << ','
        << r.speedup << ',' << '"' << r.note << '"' << '\n';
}

// One detector, one input: median runtime over reps, detection from the
// first run (all detectors are deterministic given the seed).
std::pair<DetectionResult, double> timed_detection(const DetectorInput& input,
                                                   const DetectorParams& p,
                                                   const std::vector<Label>& truth, size_t n,
                                                   size_t reps) {
    DetectorParams fixed = p;
    if (p.detector == "dbscan" && p.grid) {
        auto best = grid_search_dbscan(input, p.grid_eps, p.grid_minpts, truth, n);
        fixed.eps = best.eps;
        fixed.min_pts = best.min_pts;
        fixed.grid = false;
    }
    std::vector<double> times;
    DetectionResult res;
    for (size_t r = 0; r < std::max<size_t>(reps, 1); ++r) {
        DetectionResult cur = run_detector(input, fixed, &truth, n);
        times.push_back(cur.elapsed_seconds);
        if (r == 0) res = std::move(cur);
    }
    return {std::move(res), median(std::move(times))};
}

int cmd_bench(const BenchArgs& a) {
    fs::create_directories(a.out_dir);
    const std::string csv_path = (fs::path(a.out_dir) / "bench.csv").string();
    std::ofstream out(csv_path);
    if (!out) throw DataError("cannot write " + csv_path);
    out << "schema,dataset,detector,mode,status,roc_auc,pr_auc,dr_roc,dr_pr,"
           "base_fraction,compression_ratio,runtime_s,speedup,note\n";
    out.precision(12);

    for (const std::string& path : a.datasets) {
        const std::string name = fs::path(path).stem().string();
        try {
            TimeSeries s = load_series(path, SeriesFormat::kdd_labeled, name);
            if (!s.has_labels()) throw DataError("bench needs labeled input");
            const auto& truth = s.labels();

            Archive ar = compress(s, quant_from_snr(s, a.snr), a.interval);
            const auto rep = compression_report(s, ar);
            auto points = transform(base_from_archive(ar), a.seg_threshold, a.base_threshold);

            for (const std::string& det : a.detectors) {
                BenchRow raw_row{name, det, "raw"};
                BenchRow cmp_row{name, det, "compressed"};
                raw_row.base_fraction = cmp_row.base_fraction = rep.base_fraction;
                raw_row.compression_ratio = cmp_row.compression_ratio = rep.compression_ratio;
                try {
                    DetectorParams p = a.params;
                    p.detector = det;
                    if (det == "dbscan") p.grid = true;  // tune against the labels

                    auto raw_in = DetectorInput::from_series(s);
                    auto [raw_res, raw_time] =
                        timed_detection(raw_in, p, truth, s.size(), a.reps);
                    auto raw_full = map_to_original(raw_res, raw_in, s.size());
                    raw_row.roc = roc_auc(raw_full.scores, truth);
                    raw_row.pr = pr_auc(raw_full.scores, truth);
                    raw_row.runtime_s = raw_time;

                    auto cmp_in = DetectorInput::from_points(points);
                    DetectionResult cmp_full;
                    double cmp_time = 0.0;
                    if (cmp_in.size() == 0) {
                        cmp_full.scores.assign(s.size(), 0.0);
                        cmp_full.labels.assign(s.size(), Label::normal);
                        cmp_row.note = "empty retained set";
                    } else {
                        auto [cmp_res, t] = timed_detection(cmp_in, p, truth, s.size(), a.reps);
                        cmp_full = map_to_original(cmp_res, cmp_in, s.size());
                        cmp_time = t;
                    }
                    cmp_row.roc = roc_auc(cmp_full.scores, truth);
                    cmp_row.pr = pr_auc(cmp_full.scores, truth);
                    cmp_row.runtime_s = cmp_time;

                    cmp_row.dr_roc = raw_row.dr_roc = detection_ratio(cmp_row.roc, raw_row.roc);
                    cmp_row.dr_pr = raw_row.dr_pr = detection_ratio(cmp_row.pr, raw_row.pr);
                    cmp_row.speedup = raw_row.speedup =
                        cmp_time > 0.0 ? raw_time / cmp_time : 0.0;
                } catch (const std::exception& e) {
                    raw_row.status = cmp_row.status = "error";
                    raw_row.note = cmp_row.note = e.what();
                }
                append_row(out, raw_row);
                append_row(out, cmp_row);
            }
        } catch (const std::exception& e) {
            BenchRow row{name, "", "", "error", e.what()};
            append_row(out, row);
        }
    }
    json stats{{"schema", kSchemaVersion}, {"report", csv_path}};
    std::cout << stats.dump() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semantic time-series compression with compressed-domain outlier detection"};
    app.require_subcommand(1);

    CompressArgs ca;
    auto* compress_cmd = app.add_subcommand("compress", "encode a series into an archive");
    compress_cmd->add_option("input", ca.input, "input series file")->required();
    compress_cmd->add_option("--format", ca.format, "plain, ucr, or kdd")->capture_default_str();
    auto* snr_opt = compress_cmd->add_option("--snr", ca.snr, "target SNR in dB (default 25)");
    auto* eps_opt = compress_cmd->add_option("--epsilon", ca.epsilon, "explicit base threshold");
    snr_opt->excludes(eps_opt);
    compress_cmd->add_option("--interval", ca.interval, "interval length for local ranges")
        ->capture_default_str();
    compress_cmd->add_option("--out", ca.out, "archive output path")->required();

    DecompressArgs da;
    auto* decompress_cmd = app.add_subcommand("decompress", "decode an archive to a series");
    decompress_cmd->add_option("input", da.input, "archive path")->required();
    auto* deps = decompress_cmd->add_option("--epsilon", da.epsilon, "target max error");
    auto* dlossless = decompress_cmd->add_flag("--lossless", da.lossless, "exact reconstruction");
    auto* dbase = decompress_cmd->add_flag("--base-only", da.base_only, "semantic layer only");
    deps->excludes(dlossless)->excludes(dbase);
    dlossless->excludes(dbase);
    decompress_cmd->add_option("--out", da.out, "series output path")->required();

    TransformArgs ta;
    auto* transform_cmd =
        app.add_subcommand("transform", "extract outlier-relevant points from an archive");
    transform_cmd->add_option("input", ta.input, "archive path")->required();
    transform_cmd->add_option("--seg-threshold", ta.seg_threshold, "short-segment length bound")
        ->capture_default_str();
    transform_cmd->add_option("--base-threshold", ta.base_threshold, "sub-base size bound")
        ->capture_default_str();
    transform_cmd->add_option("--out", ta.out, "points CSV output path")->required();

    DetectArgs dta;
    auto* detect_cmd = app.add_subcommand("detect", "run a detector on a series or archive");
    detect_cmd->add_option("input", dta.input, "series file or archive")->required();
    detect_cmd->add_option("--format", dta.format, "raw input format")->capture_default_str();
    detect_cmd->add_option("--labels", dta.labels, "kdd-format file with ground-truth labels");
    detect_cmd->add_option("--features", dta.features, "value or value-delta")
        ->check(CLI::IsMember({"value", "value-delta"}))
        ->capture_default_str();
    detect_cmd->add_option("--seg-threshold", dta.seg_threshold)->capture_default_str();
    detect_cmd->add_option("--base-threshold", dta.base_threshold)->capture_default_str();
    detect_cmd->add_option("--out", dta.out, "per-point CSV output path");
    add_detector_options(detect_cmd, dta.params);

    InjectArgs ia;
    auto* inject_cmd = app.add_subcommand("inject", "plant labeled outliers into a series");
    inject_cmd->add_option("input", ia.input, "input series file")->required();
    inject_cmd->add_option("--format", ia.format, "plain, ucr, or kdd")->capture_default_str();
    inject_cmd->add_option("--kind", ia.kind, "point, contextual, or sequence")
        ->check(CLI::IsMember({"point", "contextual", "sequence"}))
        ->capture_default_str();
    inject_cmd->add_option("--count", ia.count)->capture_default_str();
    inject_cmd->add_option("--magnitude", ia.magnitude, "in series standard deviations")
        ->capture_default_str();
    inject_cmd->add_option("--seed", ia.seed)->capture_default_str();
    inject_cmd->add_option("--out", ia.out, "labeled output path (kdd format)")->required();

    SynthArgs sa;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic series");
    synth_cmd->add_option("--kind", sa.kind, "sine, walk, or piecewise")
        ->check(CLI::IsMember({"sine", "walk", "piecewise"}))
        ->capture_default_str();
    synth_cmd->add_option("--n", sa.n)->capture_default_str();
    synth_cmd->add_option("--amplitude", sa.params.amplitude)->capture_default_str();
    synth_cmd->add_option("--period", sa.params.period)->capture_default_str();
    synth_cmd->add_option("--noise", sa.params.noise_sigma)->capture_default_str();
    synth_cmd->add_option("--step", sa.params.step_sigma)->capture_default_str();
    synth_cmd->add_option("--piece-length", sa.params.piece_length)->capture_default_str();
    synth_cmd->add_option("--slopes", sa.params.slopes, "piecewise slopes");
    synth_cmd->add_option("--seed", sa.seed)->capture_default_str();
    synth_cmd->add_option("--out", sa.out, "series output path")->required();

    BenchArgs ba;
    auto* bench_cmd =
        app.add_subcommand("bench", "raw-vs-compressed detection benchmark over datasets");
    bench_cmd->add_option("datasets", ba.datasets, "labeled series files (kdd format)")
        ->required();
    bench_cmd->add_option("--out", ba.out_dir, "report directory")->capture_default_str();
    bench_cmd->add_option("--snr", ba.snr)->capture_default_str();
    bench_cmd->add_option("--interval", ba.interval)->capture_default_str();
    bench_cmd->add_option("--seg-threshold", ba.seg_threshold)->capture_default_str();
    bench_cmd->add_option("--base-threshold", ba.base_threshold)->capture_default_str();
    bench_cmd->add_option("--detectors", ba.detectors, "subset of {iforest, dbscan}");
    bench_cmd->add_option("--reps", ba.reps, "timing repetitions (median)")
        ->capture_default_str();
    bench_cmd->add_option("--seed", ba.params.seed)->capture_default_str();
    bench_cmd->add_option("--trees", ba.params.trees)->capture_default_str();
    bench_cmd->add_option("--subsample", ba.params.subsample)->capture_default_str();
    bench_cmd->add_option("--contamination", ba.params.contamination)->capture_default_str();
    bench_cmd->add_option("--grid-eps", ba.params.grid_eps)->capture_default_str();
    bench_cmd->add_option("--grid-min-pts", ba.params.grid_minpts)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    ca.has_snr = snr_opt->count() > 0;
    ca.has_epsilon = eps_opt->count() > 0;
    da.has_epsilon = deps->count() > 0;

    try {
        if (compress_cmd->parsed()) return cmd_compress(ca);
        if (decompress_cmd->parsed()) return cmd_decompress(da);
        if (transform_cmd->parsed()) return cmd_transform(ta);
        if (detect_cmd->parsed()) return cmd_detect(dta);
        if (inject_cmd->parsed()) return cmd_inject(ia);
        if (synth_cmd->parsed()) return cmd_synth(sa);
        if (bench_cmd->parsed()) return cmd_bench(ba);
        std::cerr << "error: no command\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

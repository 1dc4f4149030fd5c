// End-to-end tests of the command-line tool, spawned as a subprocess.
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "shrinkdet/datasets.hpp"

using namespace shrinkdet;
namespace fs = std::filesystem;

namespace {

const std::string kCli = SHRINKDET_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("shrinkdet_cli_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
    const int status = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
    CHECK(run("") == 1);
    CHECK(run("compress") == 1);                       // missing required args
    CHECK(run("frobnicate --out x") == 1);             // unknown verb
    CHECK(run("compress in.txt --out o --snr 25 --epsilon 0.5") == 1);  // conflict
}

TEST_CASE("missing input file exits with code 2") {
    TempDir dir;
    CHECK(run("compress /definitely/not/here.txt --out " + dir.file("a.shrk")) == 2);
    CHECK(run("decompress /definitely/not/here.shrk --out " + dir.file("x.txt")) == 2);
}

TEST_CASE("corrupt archive exits with code 2") {
    TempDir dir;
    std::ofstream(dir.file("bad.shrk")) << "this is not an archive";
    CHECK(run("decompress " + dir.file("bad.shrk") + " --out " + dir.file("x.txt")) == 2);
}

TEST_CASE("synth / compress / decompress lossless roundtrip") {
    TempDir dir;
    const auto series = dir.file("sine.txt");
    const auto archive = dir.file("sine.shrk");
    const auto back = dir.file("back.txt");

    REQUIRE(run("synth --kind sine --n 10000 --amplitude 2 --period 300 --noise 0.05 "
                "--seed 3 --out " + series) == 0);
    REQUIRE(run("compress " + series + " --snr 25 --out " + archive) == 0);
    REQUIRE(run("decompress " + archive + " --lossless --out " + back) == 0);
    CHECK(slurp(back) == slurp(series));
}

TEST_CASE("decompress respects an explicit error budget") {
    TempDir dir;
    const auto series = dir.file("walk.txt");
    const auto archive = dir.file("walk.shrk");
    const auto lossy = dir.file("lossy.txt");

    REQUIRE(run("synth --kind walk --n 5000 --step 0.5 --seed 7 --out " + series) == 0);
    REQUIRE(run("compress " + series + " --snr 25 --out " + archive) == 0);
    REQUIRE(run("decompress " + archive + " --epsilon 0.01 --out " + lossy) == 0);

    TimeSeries a = load_series(series, SeriesFormat::plain);
    TimeSeries b = load_series(lossy, SeriesFormat::plain);
    REQUIRE(a.size() == b.size());
    // the archive may already be tighter than 0.01 at the base layer; the
    // contract is max(requested, base accuracy)
    double base_bound = 0.0;
    {
        const auto base_out = dir.file("base.txt");
        REQUIRE(run("decompress " + archive + " --base-only --out " + base_out) == 0);
        TimeSeries c = load_series(base_out, SeriesFormat::plain);
        for (size_t i = 0; i < a.size(); ++i)
            base_bound = std::max(base_bound, std::fabs(a.values()[i] - c.values()[i]));
    }
    for (size_t i = 0; i < a.size(); ++i)
        CHECK(std::fabs(a.values()[i] - b.values()[i]) <= std::max(0.01, base_bound));
}

TEST_CASE("constant input compresses to a single segment in the stats") {
    TempDir dir;
    const auto series = dir.file("flat.txt");
    {
        std::ofstream out(series);
        for (int i = 0; i < 100; ++i) out << "4.25\n";
    }
    const auto stats = dir.file("stats.json");
    const int status = std::system((kCli + " compress " + series + " --epsilon 0.5 --out " +
                                    dir.file("flat.shrk") + " > " + stats + " 2>/dev/null")
                                       .c_str());
    REQUIRE(WEXITSTATUS(status) == 0);
    const std::string json = slurp(stats);
    CHECK(json.find("\"segments\":1") != std::string::npos);
    CHECK(json.find("\"n\":100") != std::string::npos);
}

TEST_CASE("inject + detect on an archive flags the planted spike region") {
    TempDir dir;
    const auto clean = dir.file("clean.txt");
    const auto labeled = dir.file("labeled.csv");
    const auto archive = dir.file("data.shrk");
    const auto scores = dir.file("scores.csv");
    const auto summary = dir.file("summary.json");

    REQUIRE(run("synth --kind sine --n 8000 --amplitude 2 --period 400 --noise 0.02 "
                "--seed 11 --out " + clean) == 0);
    REQUIRE(run("inject " + clean + " --kind contextual --count 40 --magnitude 20 "
                "--seed 4 --out " + labeled) == 0);
    REQUIRE(run("compress " + labeled + " --format kdd --snr 25 --out " + archive) == 0);

    const int status = std::system((kCli + " detect " + archive + " --detector dbscan --grid" +
                                    " --labels " + labeled + " --out " + scores + " > " +
                                    summary + " 2>/dev/null")
                                       .c_str());
    REQUIRE(WEXITSTATUS(status) == 0);

    // the summary reports a near-perfect ROC on this easy planted dataset
    const std::string json = slurp(summary);
    const auto pos = json.find("\"roc_auc\":");
    REQUIRE(pos != std::string::npos);
    const double roc = std::stod(json.substr(pos + 10));
    CHECK(roc > 0.95);

    // CSV has one row per original index plus a header
    std::ifstream csv(scores);
    std::string line;
    size_t rows = 0;
    std::getline(csv, line);
    CHECK(line == "schema,index,score,label");
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 8000);
}

TEST_CASE("raw detect equals archive detect under forced full retention") {
    // step-shaped integer data reconstructs exactly from the base, so with a
    // huge segment threshold the transform re-emits the raw values verbatim
    TempDir dir;
    const auto raw = dir.file("steps.txt");
    {
        std::ofstream out(raw);
        for (int block = 0; block < 8; ++block)
            for (int i = 0; i < 100; ++i) out << (block % 2 ? 10 : 0) << '\n';
        out << "500\n";  // isolated spike at the end, also exactly on the grid
        for (int i = 0; i < 99; ++i) out << "0\n";
    }
    const auto archive = dir.file("steps.shrk");
    REQUIRE(run("compress " + raw + " --epsilon 0.5 --out " + archive) == 0);

    const auto raw_csv = dir.file("raw.csv");
    const auto cmp_csv = dir.file("cmp.csv");
    REQUIRE(run("detect " + raw + " --detector iforest --seed 12 --out " + raw_csv) == 0);
    REQUIRE(run("detect " + archive + " --detector iforest --seed 12 --seg-threshold 100000 "
                "--out " + cmp_csv) == 0);
    CHECK(slurp(raw_csv) == slurp(cmp_csv));
}

TEST_CASE("transform emits an empty point list gracefully") {
    TempDir dir;
    const auto series = dir.file("ramp.txt");
    {
        std::ofstream out(series);
        for (int i = 0; i < 2000; ++i) out << i << '\n';
    }
    const auto archive = dir.file("ramp.shrk");
    REQUIRE(run("compress " + series + " --epsilon 0.5 --out " + archive) == 0);
    const auto pts = dir.file("pts.csv");
    REQUIRE(run("transform " + archive + " --out " + pts) == 0);
    std::ifstream csv(pts);
    std::string header;
    std::getline(csv, header);
    CHECK(header == "schema,index,value,segment_id");

    // detect on the same archive reports zero flagged points without failing
    REQUIRE(run("detect " + archive + " --detector iforest --out " + dir.file("d.csv")) == 0);
}

TEST_CASE("bench produces four rows for one dataset and both detectors") {
    TempDir dir;
    const auto clean = dir.file("clean.txt");
    const auto labeled = dir.file("labeled.csv");
    REQUIRE(run("synth --kind sine --n 6000 --amplitude 3 --period 300 --noise 0.02 "
                "--seed 13 --out " + clean) == 0);
    REQUIRE(run("inject " + clean + " --kind contextual --count 30 --magnitude 20 "
                "--seed 6 --out " + labeled) == 0);
    REQUIRE(run("bench " + labeled + " --reps 1 --out " + dir.path.string()) == 0);

    std::ifstream csv(dir.file("bench.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line.rfind("schema,dataset,detector,mode,status", 0) == 0);
    size_t rows = 0, ok_rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        ok_rows += line.find(",ok,") != std::string::npos;
    }
    CHECK(rows == 4);
    CHECK(ok_rows == 4);
}

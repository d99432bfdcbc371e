// Exercises the installed binary end to end through a shell, checking the
// documented exit codes and file outputs.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flowsentry/flow_csv.hpp"
#include "flowsentry/netflow_v5.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = FLOWSENTRY_BIN;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / "flowsentry_cli_test";
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

int run(const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

const char* kBaselineScenario = R"({
  "seed": 21,
  "duration_s": 1800,
  "baseline": {"flows_per_window": [2000, 2500]}
})";

const char* kScanScenario = R"({
  "seed": 22,
  "duration_s": 1800,
  "baseline": {"flows_per_window": [2000, 2500]},
  "attacks": [{"kind": "portscan", "start_s": 600, "scanner": "198.51.100.7",
               "target_subnet": "10.32.0.0/16", "flows_per_five_min": 15000,
               "duration_s": 300}]
})";

}  // namespace

TEST_CASE("simulate writes a flow csv") {
    TempDir dir;
    write_file(dir.file("baseline.json"), kBaselineScenario);
    CHECK(run(kBin + " simulate --spec " + dir.file("baseline.json") + " --out " +
              dir.file("flows.csv")) == 0);
    std::ifstream in(dir.file("flows.csv"));
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == flowsentry::kFlowCsvHeader);
    const auto result = flowsentry::read_flow_csv(in);
    CHECK(result.errors.empty());
    CHECK(result.records.size() >= 6 * 2000);
}

TEST_CASE("analyze is quiet on baseline and loud on a scan") {
    TempDir dir;
    write_file(dir.file("baseline.json"), kBaselineScenario);
    write_file(dir.file("scan.json"), kScanScenario);
    REQUIRE(run(kBin + " simulate --spec " + dir.file("baseline.json") + " --out " +
                dir.file("baseline.csv")) == 0);
    REQUIRE(run(kBin + " simulate --spec " + dir.file("scan.json") + " --out " +
                dir.file("scan.csv")) == 0);

    CHECK(run(kBin + " analyze --in " + dir.file("baseline.csv") + " --reports " +
              dir.file("baseline_reports.jsonl")) == 0);
    CHECK(slurp(dir.file("baseline_reports.jsonl")).empty());

    CHECK(run(kBin + " analyze --in " + dir.file("scan.csv") + " --reports " +
              dir.file("scan_reports.jsonl")) == 1);
    const auto reports = slurp(dir.file("scan_reports.jsonl"));
    CHECK(reports.find("198.51.100.7") != std::string::npos);
    CHECK(reports.find("PortScan") != std::string::npos);
}

TEST_CASE("config file plus --set overrides steer the thresholds") {
    TempDir dir;
    write_file(dir.file("scan.json"), kScanScenario);
    REQUIRE(run(kBin + " simulate --spec " + dir.file("scan.json") + " --out " +
                dir.file("scan.csv")) == 0);

    // An absurd flow-count threshold silences the detector.
    CHECK(run(kBin + " --set thresholds.high_flow_count=10000000 analyze --in " +
              dir.file("scan.csv") + " --reports " + dir.file("none.jsonl")) == 0);

    // The same via a config file found through the environment.
    write_file(dir.file("quiet.conf"), "thresholds.high_flow_count = 10000000\n");
    CHECK(run("FLOWSENTRY_CONFIG=" + dir.file("quiet.conf") + " " + kBin + " analyze --in " +
              dir.file("scan.csv") + " --reports " + dir.file("none2.jsonl")) == 0);

    // Broken config is a usage error.
    write_file(dir.file("broken.conf"), "no_such_key = 1\n");
    CHECK(run(kBin + " --config " + dir.file("broken.conf") + " analyze --in " +
              dir.file("scan.csv")) == 2);
}

TEST_CASE("usage and io errors map to exit codes 2 and 3") {
    TempDir dir;
    CHECK(run(kBin + " --frobnicate") == 2);
    CHECK(run(kBin + " analyze") == 2);  // missing required --in
    CHECK(run(kBin + " analyze --in " + dir.file("missing.csv")) == 3);
    CHECK(run(kBin + " blacklist --journal " + dir.file("missing.jsonl")) == 3);
    CHECK(run(kBin + " blacklist --journal x --dialect netfilter") == 2);
    CHECK(run(kBin + " --set classify_window=600 analyze --in x.csv") == 2);  // > fit_window
    write_file(dir.file("bad.json"), "{");
    CHECK(run(kBin + " simulate --spec " + dir.file("bad.json") + " --out " +
              dir.file("x.csv")) == 2);
}

TEST_CASE("fit produces a model that analyze can reuse") {
    TempDir dir;
    write_file(dir.file("baseline.json"), kBaselineScenario);
    REQUIRE(run(kBin + " simulate --spec " + dir.file("baseline.json") + " --out " +
                dir.file("baseline.csv")) == 0);

    // Six windows is below the default fit floor; lower it for the fixture.
    CHECK(run(kBin + " --set min_fit_samples=4 fit --in " + dir.file("baseline.csv") +
              " --out " + dir.file("model.txt")) == 0);
    const auto model_text = slurp(dir.file("model.txt"));
    CHECK(model_text.find("b ") != std::string::npos);
    CHECK(model_text.find("epsilon ") != std::string::npos);

    CHECK(run(kBin + " analyze --in " + dir.file("baseline.csv") + " --model " +
              dir.file("model.txt") + " --reports " + dir.file("r.jsonl")) == 0);
}

TEST_CASE("plot-data emits one row per fit window") {
    TempDir dir;
    write_file(dir.file("baseline.json"), kBaselineScenario);
    REQUIRE(run(kBin + " simulate --spec " + dir.file("baseline.json") + " --out " +
                dir.file("baseline.csv")) == 0);
    CHECK(run(kBin + " --set min_fit_samples=4 plot-data --in " + dir.file("baseline.csv") +
              " --out " + dir.file("plot.csv")) == 0);

    std::ifstream in(dir.file("plot.csv"));
    std::string header;
    REQUIRE(std::getline(in, header));
    CHECK(header == "window_start,n,load_bps,band_lower,band_upper,anomaly_flag");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows >= 6);
}

TEST_CASE("identical inputs produce byte-identical outputs") {
    TempDir dir;
    write_file(dir.file("scan.json"), kScanScenario);
    REQUIRE(run(kBin + " simulate --spec " + dir.file("scan.json") + " --out " +
                dir.file("a.csv")) == 0);
    REQUIRE(run(kBin + " simulate --spec " + dir.file("scan.json") + " --out " +
                dir.file("b.csv")) == 0);
    CHECK(slurp(dir.file("a.csv")) == slurp(dir.file("b.csv")));

    REQUIRE(run(kBin + " analyze --in " + dir.file("a.csv") + " --reports " +
                dir.file("ra.jsonl")) == 1);
    REQUIRE(run(kBin + " analyze --in " + dir.file("a.csv") + " --reports " +
                dir.file("rb.jsonl")) == 1);
    const auto reports = slurp(dir.file("ra.jsonl"));
    CHECK(reports == slurp(dir.file("rb.jsonl")));
    CHECK(!reports.empty());
}

TEST_CASE("watch ingests a live replay and shuts down cleanly on SIGTERM") {
    TempDir dir;
    const int port = 20000 + static_cast<int>(getpid() % 10000);
    write_file(dir.file("tiny.json"), R"({
  "seed": 33, "duration_s": 120,
  "baseline": {"flows_per_window": [60, 90], "window_s": 60}
})");
    REQUIRE(run(kBin + " simulate --spec " + dir.file("tiny.json") + " --out " +
                dir.file("flows.v5") + " --format netflow-pcapless-udp-replay") == 0);

    write_file(dir.file("watch.conf"),
               "listen = 127.0.0.1:" + std::to_string(port) +
                   "\n"
                   "classify_window = 1\nfit_window = 5\ngrace = 1\n"
                   "thresholds.high_flow_count = 1\n"
                   "journal = " +
                   dir.file("journal.jsonl") + "\nreports = " + dir.file("reports.jsonl") +
                   "\nrules = " + dir.file("rules.txt") + "\n");

    // Launch watch, replay the recording at 60x, then terminate the watcher.
    const std::string script =
        kBin + " --config " + dir.file("watch.conf") + " watch >" + dir.file("watch.out") +
        " 2>" + dir.file("watch.err") + " &\n"
        "pid=$!\n"
        "sleep 0.5\n" +
        kBin + " replay --in " + dir.file("flows.v5") + " --target 127.0.0.1:" +
        std::to_string(port) + " --speed 60\n"
        "sleep 2.5\n"
        "kill -TERM $pid\n"
        "wait $pid\n"
        "echo $? > " + dir.file("exit_code") + "\n";
    write_file(dir.file("run.sh"), script);
    REQUIRE(std::system(("sh " + dir.file("run.sh") + " >/dev/null 2>&1").c_str()) != -1);

    CHECK(slurp(dir.file("exit_code")) == "0\n");
    CHECK(slurp(dir.file("watch.err")).find("listening for NetFlow v5") != std::string::npos);
    CHECK(slurp(dir.file("watch.out")).find("window=") != std::string::npos);
    // With the flow-count threshold floored at 1, the replayed baseline
    // sources must surface as reports, journal entries and drop rules.
    CHECK(slurp(dir.file("reports.jsonl")).find("\"kind\"") != std::string::npos);
    CHECK(slurp(dir.file("journal.jsonl")).find("\"add\"") != std::string::npos);
    CHECK(slurp(dir.file("rules.txt")).find("-j DROP") != std::string::npos);
}

TEST_CASE("the replay format frames valid v5 datagrams") {
    TempDir dir;
    write_file(dir.file("baseline.json"), kBaselineScenario);
    REQUIRE(run(kBin + " simulate --spec " + dir.file("baseline.json") + " --out " +
                dir.file("flows.v5") + " --format netflow-pcapless-udp-replay") == 0);

    std::ifstream in(dir.file("flows.v5"), std::ios::binary);
    REQUIRE(in.good());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    std::size_t records = 0;
    std::size_t datagrams = 0;
    while (pos + 4 <= bytes.size()) {
        const std::uint32_t len = (std::uint32_t{bytes[pos]} << 24) |
                                  (std::uint32_t{bytes[pos + 1]} << 16) |
                                  (std::uint32_t{bytes[pos + 2]} << 8) | bytes[pos + 3];
        pos += 4;
        REQUIRE(pos + len <= bytes.size());
        const auto datagram = flowsentry::decode_netflow_v5({bytes.data() + pos, len});
        records += datagram.records.size();
        ++datagrams;
        pos += len;
    }
    CHECK(pos == bytes.size());
    CHECK(datagrams >= records / 30);
    CHECK(records >= 6 * 2000);
}

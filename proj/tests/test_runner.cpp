#include <catch2/catch_amalgamated.hpp>

#include "camsim/runner.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace camsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "camsim_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& name,
                      const std::string& body) {
    const fs::path p = dir / name;
    std::ofstream out(p);
    out << body;
    return p;
}

}  // namespace

TEST_CASE("config parser handles sections, types and comments", "[config]") {
    Config c = Config::parse(
        "experiment = \"sweep\"  # trailing comment\n"
        "seed = 42\n"
        "[cell]\n"
        "kind = \"PcbResistor\"\n"
        "with_enable = false\n"
        "[supply]\n"
        "supplies = [1.2, 1.4, 1.6]\n");
    CHECK(c.text("experiment", "") == "sweep");
    CHECK(c.number("seed", 0) == 42);
    CHECK(c.flag("cell.with_enable", true) == false);
    CHECK(c.list("supply.supplies", {}).size() == 3);
}

TEST_CASE("config parser reports bad lines", "[config]") {
    try {
        Config::parse("experiment = \"sweep\"\nbogus line without equals\n");
        FAIL("expected ConfigError");
    } catch (const SimError& e) {
        CHECK(e.code() == Errc::ConfigError);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), SimError);
    CHECK_THROWS_AS(Config::parse("[broken\na = 1\n"), SimError);
}

TEST_CASE("unknown keys are fatal and named", "[config][runner]") {
    Config c = Config::parse(
        "experiment = \"sweep\"\n"
        "[cell]\n"
        "widht = 3\n");
    try {
        resolve_run_config(c);
        FAIL("expected ConfigError");
    } catch (const SimError& e) {
        CHECK(e.code() == Errc::ConfigError);
        const std::string msg = e.what();
        CHECK(msg.find("cell.widht") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
    }
}

TEST_CASE("run exits 1 on config errors, with the offending key named",
          "[runner][cli]") {
    const fs::path dir = scratch_dir("badkey");
    const fs::path cfg = write_config(dir, "bad.toml",
                                      "experiment = \"sweep\"\n[cell]\nwidht = 3\n");
    RunRequest req;
    req.config_path = cfg.string();
    req.output_dir = (dir / "out").string();
    req.quiet = true;
    CHECK(run(req) == 1);
    CHECK_FALSE(fs::exists(dir / "out" / "trace.csv"));
}

TEST_CASE("sweep experiment writes trace, manifest and summary", "[runner]") {
    const fs::path dir = scratch_dir("sweep");
    const fs::path cfg = write_config(dir, "sweep.toml",
                                      "experiment = \"sweep\"\n"
                                      "[cell]\nkind = \"IntegratedWide\"\n"
                                      "[sweep]\nsamples = 301\n");
    RunRequest req;
    req.config_path = cfg.string();
    req.output_dir = (dir / "out").string();
    req.quiet = true;
    REQUIRE(run(req) == 0);
    CHECK(fs::exists(dir / "out" / "trace.csv"));
    CHECK(fs::exists(dir / "out" / "manifest.toml"));
    CHECK(fs::exists(dir / "out" / "summary.txt"));
    const std::string trace = slurp(dir / "out" / "trace.csv");
    CHECK(trace.find("# experiment=sweep") != std::string::npos);
    CHECK(trace.find("input_v,output_a") != std::string::npos);
}

TEST_CASE("--set overrides are applied and validated", "[runner][cli]") {
    const fs::path dir = scratch_dir("override");
    const fs::path cfg = write_config(dir, "t.toml",
                                      "experiment = \"sweep\"\n"
                                      "[cell]\nkind = \"IntegratedMinimum\"\n"
                                      "[sweep]\nsamples = 301\n");
    RunRequest req;
    req.config_path = cfg.string();
    req.output_dir = (dir / "out").string();
    req.overrides = {"cell.kind=IntegratedWide"};
    req.quiet = true;
    REQUIRE(run(req) == 0);
    CHECK(slurp(dir / "out" / "trace.csv").find("# cell=IntegratedWide") !=
          std::string::npos);

    req.overrides = {"cell.widht=IntegratedWide"};
    CHECK(run(req) == 1);
}

TEST_CASE("monte carlo reruns are byte identical", "[runner][determinism]") {
    const fs::path dir = scratch_dir("mc");
    const fs::path cfg = write_config(dir, "mc.toml",
                                      "experiment = \"montecarlo\"\n"
                                      "seed = 99\n"
                                      "jobs = 4\n"
                                      "[cell]\nkind = \"IntegratedMinimum\"\n"
                                      "[montecarlo]\nrun_count = 6\nsamples = 301\n");
    RunRequest req;
    req.config_path = cfg.string();
    req.quiet = true;
    req.output_dir = (dir / "a").string();
    REQUIRE(run(req) == 0);
    req.output_dir = (dir / "b").string();
    REQUIRE(run(req) == 0);
    CHECK(slurp(dir / "a" / "samples.csv") == slurp(dir / "b" / "samples.csv"));
    CHECK(slurp(dir / "a" / "histogram.csv") == slurp(dir / "b" / "histogram.csv"));
}

TEST_CASE("a manifest reruns to byte-identical artifacts", "[runner][determinism]") {
    const fs::path dir = scratch_dir("manifest");
    const fs::path cfg = write_config(dir, "thr.toml",
                                      "experiment = \"thresholds\"\n"
                                      "seed = 7\n"
                                      "[cell]\nkind = \"IntegratedMinimum\"\n"
                                      "[thresholds]\ncount = 4\nsamples = 301\n");
    RunRequest req;
    req.config_path = cfg.string();
    req.quiet = true;
    req.output_dir = (dir / "a").string();
    REQUIRE(run(req) == 0);

    RunRequest rerun;
    rerun.config_path = (dir / "a" / "manifest.toml").string();
    rerun.output_dir = (dir / "b").string();
    rerun.quiet = true;
    REQUIRE(run(rerun) == 0);
    CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
    CHECK(slurp(dir / "a" / "traces.csv") == slurp(dir / "b" / "traces.csv"));

    // the manifest pins the fully resolved state, not just the user's keys
    const std::string manifest = slurp(dir / "a" / "manifest.toml");
    CHECK(manifest.find("[fets.input_n]") != std::string::npos);
    CHECK(manifest.find("vth0") != std::string::npos);
    CHECK(manifest.find("states = [") != std::string::npos);
    CHECK(manifest.find("abs_tol_current") != std::string::npos);
}

TEST_CASE("manifest hash ignores the output directory", "[runner]") {
    Config a = Config::parse("experiment = \"sweep\"\noutput_dir = \"x\"\n");
    Config b = Config::parse("experiment = \"sweep\"\noutput_dir = \"y\"\n");
    std::uint64_t ha = 0, hb = 0;
    render_manifest(a, &ha);
    render_manifest(b, &hb);
    CHECK(ha == hb);
}

TEST_CASE("empty report emits nothing", "[runner]") {
    RunConfig rc;
    rc.output_dir = (scratch_dir("empty") / "out").string();
    RunOutput out;
    auto files = emit_report(rc, out);
    CHECK(files.empty());
    CHECK_FALSE(fs::exists(fs::path(rc.output_dir) / "manifest.toml"));
}

TEST_CASE("energy experiment writes a classified report", "[runner]") {
    const fs::path dir = scratch_dir("energy");
    const fs::path cfg = write_config(dir, "e.toml",
                                      "experiment = \"energy\"\n"
                                      "[cell]\nkind = \"IntegratedMinimum\"\n"
                                      "with_enable = true\n"
                                      "[energy]\nv_test = 0.9\ndc_samples = 301\n");
    RunRequest req;
    req.config_path = cfg.string();
    req.output_dir = (dir / "out").string();
    req.quiet = true;
    REQUIRE(run(req) == 0);
    const std::string report = slurp(dir / "out" / "report.csv");
    CHECK(report.find("Hit") != std::string::npos);
}

TEST_CASE("memristor experiment reruns are byte identical", "[runner][determinism]") {
    const fs::path dir = scratch_dir("memdet");
    const fs::path cfg = write_config(dir, "m.toml",
                                      "experiment = \"memristor\"\n"
                                      "seed = 31\n"
                                      "[cell]\nkind = \"PcbMemristor\"\n"
                                      "[memristor]\ncount = 3\nsamples = 301\n"
                                      "relax_rate = 0.02\nsettle_time = 1.0\n"
                                      "telegraph_prob = 0.2\n");
    RunRequest req;
    req.config_path = cfg.string();
    req.quiet = true;
    req.output_dir = (dir / "a").string();
    REQUIRE(run(req) == 0);
    req.output_dir = (dir / "b").string();
    REQUIRE(run(req) == 0);
    CHECK(slurp(dir / "a" / "thresholds.csv") == slurp(dir / "b" / "thresholds.csv"));
    CHECK(slurp(dir / "a" / "traces.csv") == slurp(dir / "b" / "traces.csv"));
}

TEST_CASE("solver non-convergence exits with code 2", "[runner][cli]") {
    const fs::path dir = scratch_dir("noconv");
    // one Newton iteration cannot settle the nonlinear cell
    const fs::path cfg = write_config(dir, "n.toml",
                                      "experiment = \"sweep\"\n"
                                      "[cell]\nkind = \"IntegratedMinimum\"\n"
                                      "[solver]\nmax_iters = 1\n"
                                      "[sweep]\nsamples = 11\n");
    RunRequest req;
    req.config_path = cfg.string();
    req.output_dir = (dir / "out").string();
    req.quiet = true;
    CHECK(run(req) == 2);
}

TEST_CASE("corners experiment mirrors the report layout", "[runner]") {
    const fs::path dir = scratch_dir("corners");
    const fs::path cfg = write_config(dir, "c.toml",
                                      "experiment = \"corners\"\n"
                                      "jobs = 4\n"
                                      "[cell]\nkind = \"IntegratedMinimum\"\n"
                                      "[corners]\nsamples = 601\n");
    RunRequest req;
    req.config_path = cfg.string();
    req.output_dir = (dir / "out").string();
    req.quiet = true;
    REQUIRE(run(req) == 0);
    const std::string csv = slurp(dir / "out" / "corners.csv");
    for (const char* corner : {"25C", "37C", "FastFast", "SlowSlow"})
        CHECK(csv.find(corner) != std::string::npos);
    const std::string summary = slurp(dir / "out" / "summary.txt");
    CHECK(summary.find("width_mV") != std::string::npos);
    CHECK(summary.find("hit_fJ") != std::string::npos);
}

TEST_CASE("csv quoting follows rfc-4180", "[csv]") {
    CHECK(csv_quote("plain") == "plain");
    CHECK(csv_quote("with,comma") == "\"with,comma\"");
    CHECK(csv_quote("with\"quote") == "\"with\"\"quote\"");
}

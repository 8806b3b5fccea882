#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "symindex/pipeline.hpp"
#include "symindex/presets.hpp"

using namespace symindex;
namespace fs = std::filesystem;

namespace {

struct Out {
    int code = -1;
    std::string text;
};

std::string bin() {
    const char* b = std::getenv("SYMINDEX_BIN");
    return b ? b : "symindex";
}

Out run(const std::string& args) {
    Out o;
    const std::string cmd = bin() + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return o;
    char buf[4096];
    std::size_t k;
    while ((k = std::fread(buf, 1, sizeof buf, p)) > 0) o.text.append(buf, k);
    const int st = pclose(p);
    o.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return o;
}

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / "symindex_cli_test";
    fs::create_directories(d);
    return d / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, JsonRoundTrip) {
    auto r = run("run --scenario kepler_circular --format json");
    ASSERT_EQ(r.code, 0);
    IndexReport rep = report_from_json(r.text);
    EXPECT_EQ(rep.scenario, "kepler_circular");
    EXPECT_EQ(rep.ispec_free, 1);
    EXPECT_EQ(rep.ispec_fixed, 0);
    EXPECT_EQ(rep.igeo, 2);
    EXPECT_EQ(report_to_json(rep).dump(2) + "\n", r.text);
}

TEST(Cli, CsvBatch) {
    auto r = run("run --scenario flat_torus --scenario circle_free_particle --scenario harmonic_loop --format csv");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(count_lines(r.text), 4);
    EXPECT_EQ(r.text.substr(0, csv_header().size()), csv_header());
}

TEST(Cli, JsonBatchIsArray) {
    auto r = run("run --scenario flat_torus --scenario circle_free_particle");
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.text);
    ASSERT_TRUE(j.is_array());
    EXPECT_EQ(j.size(), 2u);
}

TEST(Cli, TextHasLedger) {
    auto r = run("run --scenario flat_torus --format text");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.text.find("parity ledger"), std::string::npos);
    EXPECT_NE(r.text.find("n + ispec = 2 + 0 = 0 + 0 + 1 + 1  [ok]"), std::string::npos);
    EXPECT_NE(r.text.find("CertifiedUnstable"), std::string::npos);
}

TEST(Cli, Deterministic) {
    auto a = run("run --scenario harmonic_loop");
    auto b = run("run --scenario harmonic_loop");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.text, b.text);
}

TEST(Cli, OutFileAndPlots) {
    const fs::path out = scratch("kep.json");
    for (const char* suf : {"_kappa.csv", "_multipliers.csv", "_ssweep.csv"}) fs::remove(scratch(std::string("kep") + suf));
    auto r = run("run --scenario kepler_circular --out " + out.string());
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(r.text.empty());
    EXPECT_EQ(report_from_json(slurp(out)).igeo, 2);
    EXPECT_EQ(slurp(scratch("kep_kappa.csv")).rfind("t,kappa\n", 0), 0u);
    EXPECT_TRUE(fs::exists(scratch("kep_multipliers.csv")));
    EXPECT_GT(count_lines(slurp(scratch("kep_ssweep.csv"))), 30);
}

TEST(Cli, OrbitFiles) {
    OrbitData o = make_preset("kepler_circular");
    const fs::path good = scratch("kepler_file.json"), bare = scratch("kepler_no_tprime.json");
    write_orbit_file(o, good.string());
    o.tprime_h.reset();
    write_orbit_file(o, bare.string());
    auto r = run("run --scenario " + good.string());
    ASSERT_EQ(r.code, 0);
    IndexReport rep = report_from_json(r.text);
    EXPECT_EQ(rep.scenario, "kepler_file");
    EXPECT_EQ(rep.igeo, 2);
    EXPECT_EQ(rep.difference, 1);
    EXPECT_EQ(run("run --scenario " + bare.string()).code, 2);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("run --scenario no_such_orbit").code, 1);
    EXPECT_EQ(run("run --scenario flat_torus --format yaml").code, 1);
    EXPECT_EQ(run("run --scenario flat_torus --steps 3").code, 1);
    EXPECT_EQ(run("run").code, 1);
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("run --scenario negative_P_synthetic --variant bogus").code, 1);
    EXPECT_EQ(run("run --scenario kepler_circular --energy 0.5").code, 1);
    EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, ConfigPrecedence) {
    const fs::path cfg = scratch("cfg.json");
    {
        std::ofstream f(cfg);
        f << R"({"scenario": ["flat_torus", "circle_free_particle"], "format": "csv", "steps": 1000})";
    }
    auto r = run("run --config " + cfg.string());
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(count_lines(r.text), 3);
    auto t = run("run --config " + cfg.string() + " --format text --scenario harmonic_loop");
    ASSERT_EQ(t.code, 0);
    EXPECT_NE(t.text.find("scenario harmonic_loop"), std::string::npos);
    EXPECT_EQ(t.text.find("flat_torus"), std::string::npos);
    EXPECT_NE(t.text.find("steps 1000"), std::string::npos);
    {
        std::ofstream f(cfg);
        f << "{broken";
    }
    EXPECT_EQ(run("run --config " + cfg.string()).code, 1);
}

TEST(Cli, VerifyOnly) {
    auto r = run("verify --only 1");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(count_lines(r.text), 1);
    EXPECT_EQ(r.text.rfind("PASS  criterion 1:", 0), 0u);
}

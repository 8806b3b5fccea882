#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "symindex/pipeline.hpp"
#include "symindex/verify.hpp"

using namespace symindex;

namespace {

struct RunArgs {
    std::vector<std::string> scenarios;
    std::string config, format = "json", out = "-", variant;
    int steps = 2000, galerkin_n = 32;
    double split_tol = 1e-6, h = 0;
    bool h_given = false;
};

// file values apply only where no flag was given
void apply_config(RunArgs& a, const CLI::App& run) {
    std::ifstream f(a.config);
    if (!f) throw Io("cannot read config '" + a.config + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("config: ") + e.what());
    }
    auto unset = [&](const char* flag) { return run.get_option(flag)->count() == 0; };
    try {
        if (j.contains("scenario") && unset("--scenario")) {
            if (j["scenario"].is_array()) a.scenarios = j["scenario"].get<std::vector<std::string>>();
            else a.scenarios = {j["scenario"].get<std::string>()};
        }
        if (j.contains("steps") && unset("--steps")) a.steps = j["steps"];
        if (j.contains("galerkin_n") && unset("--galerkin-n")) a.galerkin_n = j["galerkin_n"];
        if (j.contains("format") && unset("--format")) a.format = j["format"];
        if (j.contains("out") && unset("--out")) a.out = j["out"];
        if (j.contains("split_tol") && unset("--split-tol")) a.split_tol = j["split_tol"];
        if (j.contains("variant") && unset("--variant")) a.variant = j["variant"];
        if (j.contains("h") && unset("--energy")) {
            a.h = j["h"];
            a.h_given = true;
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("config: ") + e.what());
    }
}

int do_run(RunArgs a, const CLI::App& run) {
    if (!a.config.empty()) apply_config(a, run);
    if (a.scenarios.empty()) throw InvalidInput("no scenario given (--scenario or config)");
    if (a.format != "json" && a.format != "csv" && a.format != "text") throw InvalidInput("format must be json, csv or text");
    const bool h_set = run.get_option("--energy")->count() > 0 || a.h_given;
    std::vector<IndexReport> reports;
    for (const auto& s : a.scenarios) {
        Scenario sc;
        sc.source = s;
        sc.name = is_preset(s) ? s : std::filesystem::path(s).stem().string();
        sc.steps = a.steps;
        sc.galerkin_n = a.galerkin_n;
        sc.split_tol = a.split_tol;
        sc.preset.variant = a.variant;
        if (h_set) sc.preset.h = a.h;
        if (!a.variant.empty()) sc.name += "_" + a.variant;
        reports.push_back(run_scenario(sc));
    }
    emit_report(reports, a.format, a.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"symindex: Maslov and spectral indices of periodic orbits"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "run the index pipeline on a preset or orbit file");
    run->add_option("--scenario", ra.scenarios, "preset name or orbit_v1 json file (repeatable)");
    run->add_option("--config", ra.config, "json config file; flags take precedence");
    run->add_option("--steps", ra.steps, "integrator steps")->check(CLI::Range(16, 10000000));
    run->add_option("--galerkin-n", ra.galerkin_n, "Galerkin modes per component")->check(CLI::Range(1, 4096));
    run->add_option("--format", ra.format, "json | csv | text");
    run->add_option("--out", ra.out, "output path, '-' for stdout");
    run->add_option("--split-tol", ra.split_tol, "splitting residual tolerance");
    run->add_option("--energy", ra.h, "energy level h for presets");
    run->add_option("--variant", ra.variant, "preset variant (negative_P_synthetic: free | kepler)");

    std::vector<int> only;
    auto* ver = app.add_subcommand("verify", "run the acceptance criteria");
    ver->add_option("--only", only, "criterion ids to run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (run->parsed()) {
        try {
            return do_run(ra, *run);
        } catch (const Error& e) {
            std::cerr << "symindex: " << e.what() << "\n";
            return exit_code_for(e.kind());
        } catch (const std::exception& e) {
            std::cerr << "symindex: " << e.what() << "\n";
            return 1;
        }
    }

    auto crit = verify::all_criteria();
    int fails = 0;
    for (int id = 1; id <= static_cast<int>(crit.size()); ++id) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        auto r = verify::run_timed(crit[id - 1], id);
        std::cout << verify::format_line(r) << std::endl;
        fails += !r.pass;
    }
    return fails == 0 ? 0 : 1;
}

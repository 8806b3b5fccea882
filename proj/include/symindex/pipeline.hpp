#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "symindex/index_form.hpp"
#include "symindex/presets.hpp"
#include "symindex/stability.hpp"

namespace symindex {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kReportSchema = "report_v1";

struct Scenario {
    std::string name;
    std::string source;  // preset id or orbit file path
    PresetParams preset;
    int steps = 2000;
    int galerkin_n = 32;
    double split_tol = 1e-6;
};

struct MultiplierRow {
    std::string block;  // "monodromy" or "px"
    double re = 0, im = 0;
    int algebraic = 1, geometric = 1;
};

struct SweepRow {
    std::string form;  // "free" or "fixed"
    double s = 0;
    std::vector<double> eigenvalues;  // those nearest zero, ascending
};

struct IndexReport {
    std::string scenario, source;
    int n = 0, orientation = 1;
    int ispec_free = 0, ispec_fixed = 0, igeo = 0, iclm_gamma1 = 0, iclm_gamma2 = 0, dim_ker_A_minus_I = 0;
    int leg_0 = 0, leg_s0 = 0, difference = 0, table_difference = 0, table_leg_0 = 0, table_leg_s0 = 0;
    bool difference_matches_table = false, relation_geo_spec = false;
    double kappa_min = 0, kappa_max = 0, tprime_h = 0, gamma1_slope = 0;
    std::optional<double> tprime_estimate;
    double symplecticity_residual = 0, integration_error = 0, split_residual = 0;
    std::string null_class, stability, criterion, clm_parity;
    std::optional<std::string> probe;  // stable_component_probe on LinearlyStable P_x(1)
    bool soundness_ok = true;
    ParityLedger ledger;
    // provenance
    int galerkin_n = 0, steps = 0, quad_panels = 0;
    double s0 = 0, s0_gap = 0, pencil_bound = 0, cluster_tol = 0, split_tol = 0;
    std::optional<double> analytic_s0_bound;
    std::string version = kVersion;
    // plot data
    std::vector<double> kappa_t, kappa;
    std::vector<MultiplierRow> multipliers;
    std::vector<SweepRow> sweep;
};

// ---- scenario resolution ----

inline bool is_preset(const std::string& s) {
    const auto& names = preset_names();
    return std::find(names.begin(), names.end(), s) != names.end();
}

inline OrbitData load_scenario_orbit(const Scenario& sc) {
    if (is_preset(sc.source)) return make_preset(sc.source, sc.preset);
    if (std::filesystem::exists(sc.source)) return read_orbit_file(sc.source);
    throw InvalidInput("scenario '" + sc.source + "' is neither a preset nor a readable file");
}

namespace detail {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

inline std::vector<double> near_zero_eigs(const Mat& S, int k) {
    Vec ev = sym_eigenvalues(S);
    std::vector<double> v(ev.data(), ev.data() + ev.size());
    std::sort(v.begin(), v.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    v.resize(std::min<std::size_t>(v.size(), k));
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace detail

inline IndexReport run_scenario(const Scenario& sc) {
    using detail::stage;
    IndexReport r;
    r.scenario = sc.name.empty() ? sc.source : sc.name;
    r.source = sc.source;
    r.steps = sc.steps;
    r.galerkin_n = sc.galerkin_n;
    r.split_tol = sc.split_tol;

    OrbitData o = stage("orbit", [&] {
        OrbitData od = load_scenario_orbit(sc);
        validate_orbit(od);
        if (!od.tprime_h && od.period_of_h) od.tprime_h = estimate_tprime(od.period_of_h, od.h);
        return od;
    });
    if (o.period_of_h) r.tprime_estimate = stage("orbit", [&] { return estimate_tprime(o.period_of_h, o.h); });
    r.n = o.n;
    r.orientation = o.orientation();
    r.dim_ker_A_minus_I = eigenspace_one_dim(o.A);

    KappaInfo ki = stage("kappa", [&] {
        KappaInfo k = kappa_classify(o);
        if (k.cls == NullClass::NotNonNull) throw NotNonNull("kappa changes sign or vanishes");
        return k;
    });
    r.kappa_min = ki.min;
    r.kappa_max = ki.max;
    r.null_class = to_string(ki.cls);
    r.kappa_t = ki.t;
    r.kappa = ki.kappa;
    if (!o.tprime_h) throw StageError("orbit", MissingTprime("orbit '" + o.name + "' has no T'(h) and no period family"));
    r.tprime_h = *o.tprime_h;

    FundamentalSolutionInfo fi;
    SymplecticPath psi = stage("integrate", [&] { return fundamental_solution(o, sc.steps, &fi); });
    r.symplecticity_residual = fi.symplecticity_residual;
    r.integration_error = fi.error_estimate;

    GeoIndex g = stage("geometric", [&] { return geometrical_index(o, psi); });
    r.igeo = g.igeo;
    for (const auto& c : cluster_multipliers(g.monodromy, cluster_tolerance(fi.error_estimate)))
        r.multipliers.push_back({"monodromy", c.value.real(), c.value.imag(), c.algebraic, c.geometric});

    GalerkinBasis gb = stage("galerkin", [&] { return build_basis(o, sc.galerkin_n); });
    FormPieces fp = stage("galerkin", [&] { return assemble_pieces(o, gb); });
    r.quad_panels = fp.panels;
    S0Choice ch = stage("threshold", [&] { return choose_s0(fp); });
    r.s0 = ch.s0;
    r.s0_gap = ch.gap;
    r.pencil_bound = ch.pencil_bound;
    r.analytic_s0_bound = analytic_s0_bound(o);
    SpectralIndices si = stage("spectral", [&] { return spectral_indices(fp, ch); });
    r.ispec_free = si.ispec_free;
    r.ispec_fixed = si.ispec_fixed;
    for (int k = 0; k <= 32; ++k) {
        const double s = ch.s0 * k / 32;
        r.sweep.push_back({"free", s, detail::near_zero_eigs(fp.free_form(s), 6)});
        r.sweep.push_back({"fixed", s, detail::near_zero_eigs(fp.fixed_form(s), 6)});
    }

    IndexDifferenceReport dd = stage("difference", [&] { return difference_decomposition(o, fp, si); });
    r.leg_0 = dd.leg_0;
    r.leg_s0 = dd.leg_s0;
    r.difference = dd.total();
    r.table_difference = dd.table_total;
    r.table_leg_0 = dd.table_leg_0;
    r.table_leg_s0 = dd.table_leg_s0;
    r.difference_matches_table = dd.matches_table();
    r.relation_geo_spec = r.igeo == r.ispec_fixed + r.dim_ker_A_minus_I;

    SplitMonodromy sm = stage("splitting", [&] {
        SplitMonodromy s = splitting_reduce(o, psi, {sc.split_tol});
        // conjugation must not change the index
        const Mat C = s.conjugator, Ci = C.inverse(), Ad = o.A_d();
        SymplecticPath q = thinned(psi);
        for (auto& M : q.M) M = Ci * Ad * M * C;
        auto f = psi.eval;
        q.eval = [f, C, Ci, Ad](double t) { return Mat(Ci * Ad * f(t) * C); };
        const int ic = clm_graph_index(q);
        if (ic != g.igeo)
            throw LedgerMismatch("conjugated path index " + std::to_string(ic) + " != " + std::to_string(g.igeo));
        return s;
    });
    r.gamma1_slope = sm.gamma1_slope;
    r.split_residual = sm.split_residual;
    r.iclm_gamma1 = sm.gamma1_slope > std::max(1e-9, 100 * fi.error_estimate) ? 1 : 0;

    ParityInstability pi = stage("splitting", [&] { return clm_parity_instability(sm.px_path); });
    r.iclm_gamma2 = pi.index;
    r.clm_parity = to_string(pi.verdict);

    r.cluster_tol = cluster_tolerance(fi.error_estimate);
    StabilityVerdict sv = stability_classify(sm.px1, r.cluster_tol);
    r.stability = to_string(sv.tag);
    for (const auto& c : sv.multipliers) r.multipliers.push_back({"px", c.value.real(), c.value.imag(), c.algebraic, c.geometric});
    if (sv.tag == StabilityTag::LinearlyStable && sm.px1.rows() > 0) {
        try {
            auto pr = stable_component_probe(sm.px1, 1e-3, r.cluster_tol);
            r.probe = to_string(pr.first) + "," + to_string(pr.second);
        } catch (const NotLinearlyStable&) {
            r.probe = "unavailable";
        }
    }

    Criterion cr = stage("criterion", [&] { return instability_criterion(ki.cls, r.orientation, r.ispec_free, r.n, true); });
    r.criterion = to_string(cr);
    r.soundness_ok = !(cr == Criterion::CertifiedUnstable && sv.tag == StabilityTag::LinearlyStable) &&
                     !(pi.verdict == Criterion::CertifiedUnstable && sv.tag == StabilityTag::LinearlyStable);

    r.ledger = stage("audit", [&] {
        AuditInputs in;
        in.n = r.n;
        in.orientation = r.orientation;
        in.dim_ker_A_minus_I = r.dim_ker_A_minus_I;
        in.ispec_free = r.ispec_free;
        in.ispec_fixed = r.ispec_fixed;
        in.igeo = r.igeo;
        in.iclm_gamma2 = r.iclm_gamma2;
        in.kappa_sign = ki.cls == NullClass::LPositive ? 1 : -1;
        return parity_audit(in);
    });
    return r;
}

// 0 ok, 2 data contract, 3 numerical, 1 anything else
inline int exit_code_for(const std::string& kind) {
    if (kind == "NotNonNull" || kind == "MissingTprime") return 2;
    static const char* numerical[] = {"IrregularCrossing", "SplitResidualTooLarge", "EpsExhausted", "S0Exhausted",
                                      "LedgerMismatch",    "NoCylinderBlock",       "NotSymplectic"};
    for (const char* k : numerical)
        if (kind == k) return 3;
    return 1;
}

// ---- emission ----

using ojson = nlohmann::ordered_json;

inline ojson report_to_json(const IndexReport& r) {
    ojson j;
    j["schema"] = kReportSchema;
    j["version"] = r.version;
    j["scenario"] = r.scenario;
    j["source"] = r.source;
    j["n"] = r.n;
    j["orientation"] = r.orientation;
    j["indices"] = {{"ispec_free", r.ispec_free},   {"ispec_fixed", r.ispec_fixed},
                    {"igeo", r.igeo},               {"iclm_gamma1", r.iclm_gamma1},
                    {"iclm_gamma2", r.iclm_gamma2}, {"dim_ker_A_minus_I", r.dim_ker_A_minus_I}};
    j["difference"] = {{"value", r.difference},           {"leg_0", r.leg_0},
                       {"leg_s0", r.leg_s0},              {"table_value", r.table_difference},
                       {"table_leg_0", r.table_leg_0},    {"table_leg_s0", r.table_leg_s0},
                       {"matches_table", r.difference_matches_table}};
    j["relation_geo_spec"] = r.relation_geo_spec;
    j["reals"] = {{"kappa_min", r.kappa_min},
                  {"kappa_max", r.kappa_max},
                  {"tprime_h", r.tprime_h},
                  {"tprime_estimate", r.tprime_estimate ? ojson(*r.tprime_estimate) : ojson(nullptr)},
                  {"gamma1_slope", r.gamma1_slope},
                  {"symplecticity_residual", r.symplecticity_residual},
                  {"integration_error", r.integration_error},
                  {"split_residual", r.split_residual}};
    j["verdicts"] = {{"null_class", r.null_class},
                     {"stability", r.stability},
                     {"criterion", r.criterion},
                     {"clm_parity", r.clm_parity},
                     {"stable_probe", r.probe ? ojson(*r.probe) : ojson(nullptr)},
                     {"soundness_ok", r.soundness_ok}};
    j["parity_ledger"] = {{"n_plus_ispec", r.ledger.n + r.ledger.ispec_free},
                          {"n_minus_dim_ker", r.ledger.term_A},
                          {"ispec_free_minus_fixed", r.ledger.term_spec},
                          {"igeo_minus_gamma2", r.ledger.term_geo},
                          {"gamma2", r.ledger.term_g2},
                          {"ok", r.ledger.ok()}};
    j["provenance"] = {{"galerkin_n", r.galerkin_n},
                       {"steps", r.steps},
                       {"quad_panels", r.quad_panels},
                       {"s0", r.s0},
                       {"s0_gap", r.s0_gap},
                       {"pencil_bound", r.pencil_bound},
                       {"analytic_s0_bound", r.analytic_s0_bound ? ojson(*r.analytic_s0_bound) : ojson(nullptr)},
                       {"cluster_tol", r.cluster_tol},
                       {"split_tol", r.split_tol}};
    ojson mult = ojson::array();
    for (const auto& m : r.multipliers)
        mult.push_back({{"block", m.block}, {"re", m.re}, {"im", m.im}, {"algebraic", m.algebraic}, {"geometric", m.geometric}});
    j["multipliers"] = mult;
    return j;
}

inline IndexReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("report parse: ") + e.what());
    }
    if (j.value("schema", "") != kReportSchema) throw InvalidInput("unknown report schema");
    IndexReport r;
    try {
        r.version = j.at("version");
        r.scenario = j.at("scenario");
        r.source = j.at("source");
        r.n = j.at("n");
        r.orientation = j.at("orientation");
        const auto& ix = j.at("indices");
        r.ispec_free = ix.at("ispec_free");
        r.ispec_fixed = ix.at("ispec_fixed");
        r.igeo = ix.at("igeo");
        r.iclm_gamma1 = ix.at("iclm_gamma1");
        r.iclm_gamma2 = ix.at("iclm_gamma2");
        r.dim_ker_A_minus_I = ix.at("dim_ker_A_minus_I");
        const auto& d = j.at("difference");
        r.difference = d.at("value");
        r.leg_0 = d.at("leg_0");
        r.leg_s0 = d.at("leg_s0");
        r.table_difference = d.at("table_value");
        r.table_leg_0 = d.at("table_leg_0");
        r.table_leg_s0 = d.at("table_leg_s0");
        r.difference_matches_table = d.at("matches_table");
        r.relation_geo_spec = j.at("relation_geo_spec");
        const auto& re = j.at("reals");
        r.kappa_min = re.at("kappa_min");
        r.kappa_max = re.at("kappa_max");
        r.tprime_h = re.at("tprime_h");
        if (!re.at("tprime_estimate").is_null()) r.tprime_estimate = re.at("tprime_estimate").get<double>();
        r.gamma1_slope = re.at("gamma1_slope");
        r.symplecticity_residual = re.at("symplecticity_residual");
        r.integration_error = re.at("integration_error");
        r.split_residual = re.at("split_residual");
        const auto& v = j.at("verdicts");
        r.null_class = v.at("null_class");
        r.stability = v.at("stability");
        r.criterion = v.at("criterion");
        r.clm_parity = v.at("clm_parity");
        if (!v.at("stable_probe").is_null()) r.probe = v.at("stable_probe").get<std::string>();
        r.soundness_ok = v.at("soundness_ok");
        const auto& L = j.at("parity_ledger");
        r.ledger.term_A = L.at("n_minus_dim_ker");
        r.ledger.term_spec = L.at("ispec_free_minus_fixed");
        r.ledger.term_geo = L.at("igeo_minus_gamma2");
        r.ledger.term_g2 = L.at("gamma2");
        r.ledger.n = r.n;
        r.ledger.ispec_free = r.ispec_free;
        r.ledger.sum_ok = r.ledger.term_A + r.ledger.term_spec + r.ledger.term_geo + r.ledger.term_g2 ==
                          L.at("n_plus_ispec").get<int>();
        const auto& p = j.at("provenance");
        r.galerkin_n = p.at("galerkin_n");
        r.steps = p.at("steps");
        r.quad_panels = p.at("quad_panels");
        r.s0 = p.at("s0");
        r.s0_gap = p.at("s0_gap");
        r.pencil_bound = p.at("pencil_bound");
        if (!p.at("analytic_s0_bound").is_null()) r.analytic_s0_bound = p.at("analytic_s0_bound").get<double>();
        r.cluster_tol = p.at("cluster_tol");
        r.split_tol = p.at("split_tol");
        for (const auto& m : j.at("multipliers"))
            r.multipliers.push_back({m.at("block"), m.at("re"), m.at("im"), m.at("algebraic"), m.at("geometric")});
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("report field: ") + e.what());
    }
    return r;
}

inline std::string csv_header() {
    return "scenario,n,orientation,ispec_free,ispec_fixed,igeo,iclm_gamma1,iclm_gamma2,dim_ker_A_minus_I,"
           "difference,leg_0,leg_s0,table_difference,relation_geo_spec,kappa_min,kappa_max,tprime_h,gamma1_slope,"
           "symplecticity_residual,split_residual,null_class,stability,criterion,clm_parity,ledger_ok,galerkin_n,steps,s0";
}

inline std::string csv_row(const IndexReport& r) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << r.scenario << ',' << r.n << ',' << r.orientation << ',' << r.ispec_free << ',' << r.ispec_fixed << ',' << r.igeo << ','
       << r.iclm_gamma1 << ',' << r.iclm_gamma2 << ',' << r.dim_ker_A_minus_I << ',' << r.difference << ',' << r.leg_0 << ','
       << r.leg_s0 << ',' << r.table_difference << ',' << (r.relation_geo_spec ? 1 : 0) << ',' << r.kappa_min << ','
       << r.kappa_max << ',' << r.tprime_h << ',' << r.gamma1_slope << ',' << r.symplecticity_residual << ','
       << r.split_residual << ',' << r.null_class << ',' << r.stability << ',' << r.criterion << ',' << r.clm_parity << ','
       << (r.ledger.ok() ? 1 : 0) << ',' << r.galerkin_n << ',' << r.steps << ',' << r.s0;
    return os.str();
}

inline std::string report_to_csv(const std::vector<IndexReport>& rs) {
    std::string out = csv_header() + "\n";
    for (const auto& r : rs) out += csv_row(r) + "\n";
    return out;
}

inline std::string ledger_line(const ParityLedger& L) {
    std::ostringstream os;
    os << "n + ispec = " << L.n << " + " << L.ispec_free << " = " << L.term_A << " + " << L.term_spec << " + " << L.term_geo
       << " + " << L.term_g2 << "  [" << (L.ok() ? "ok" : "MISMATCH") << "]";
    return os.str();
}

inline std::string report_to_text(const IndexReport& r) {
    std::ostringstream os;
    os << std::setprecision(8);
    os << "scenario " << r.scenario << " (n = " << r.n << ", " << (r.orientation > 0 ? "orientation preserving" : "orientation reversing")
       << ")\n";
    os << "  null class      " << r.null_class << "  kappa in [" << r.kappa_min << ", " << r.kappa_max << "]\n";
    os << "  T'(h)           " << r.tprime_h;
    if (r.tprime_estimate) os << "  (finite-difference " << *r.tprime_estimate << ")";
    os << "\n";
    os << "  ispec free/fix  " << r.ispec_free << " / " << r.ispec_fixed << "   s0 = " << r.s0 << "\n";
    os << "  difference      " << r.difference << " = " << r.leg_0 << " + " << r.leg_s0 << "   table " << r.table_difference
       << " = " << r.table_leg_0 << " + " << r.table_leg_s0 << (r.difference_matches_table ? "" : "   (differs from table)") << "\n";
    os << "  igeo            " << r.igeo << "   dim ker(A-I) = " << r.dim_ker_A_minus_I
       << (r.relation_geo_spec ? "   igeo = ispec_fixed + dim ker(A-I)" : "   relation to ispec_fixed fails") << "\n";
    os << "  splitting       gamma1 slope " << r.gamma1_slope << "  iclm(gamma1) = " << r.iclm_gamma1
       << "  iclm(gamma2) = " << r.iclm_gamma2 << "  residual " << r.split_residual << "\n";
    os << "  stability       " << r.stability;
    if (r.probe) os << "  probe " << *r.probe;
    os << "\n";
    os << "  criterion       " << r.criterion << "   clm parity " << r.clm_parity << "\n";
    os << "  parity ledger   " << ledger_line(r.ledger) << "\n";
    os << "  symplecticity   " << r.symplecticity_residual << "   steps " << r.steps << "   N " << r.galerkin_n << "\n";
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Io("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw Io("write failed for '" + path + "'");
}

inline std::string plot_kappa_csv(const IndexReport& r) {
    std::ostringstream os;
    os << std::setprecision(12) << "t,kappa\n";
    for (std::size_t i = 0; i < r.kappa.size(); ++i) os << r.kappa_t[i] << ',' << r.kappa[i] << '\n';
    return os.str();
}

inline std::string plot_multipliers_csv(const IndexReport& r) {
    std::ostringstream os;
    os << std::setprecision(12) << "block,re,im,abs,algebraic,geometric\n";
    for (const auto& m : r.multipliers)
        os << m.block << ',' << m.re << ',' << m.im << ',' << std::hypot(m.re, m.im) << ',' << m.algebraic << ',' << m.geometric << '\n';
    return os.str();
}

inline std::string plot_sweep_csv(const IndexReport& r) {
    std::ostringstream os;
    os << std::setprecision(12) << "form,s,k,eigenvalue\n";
    for (const auto& row : r.sweep)
        for (std::size_t k = 0; k < row.eigenvalues.size(); ++k) os << row.form << ',' << row.s << ',' << k << ',' << row.eigenvalues[k] << '\n';
    return os.str();
}

// writes the report plus <stem>_kappa.csv, <stem>_multipliers.csv, <stem>_ssweep.csv next to it
inline void emit_report(const std::vector<IndexReport>& rs, const std::string& format, const std::string& path) {
    std::string body;
    if (format == "json") {
        if (rs.size() == 1) body = report_to_json(rs.front()).dump(2) + "\n";
        else {
            ojson arr = ojson::array();
            for (const auto& r : rs) arr.push_back(report_to_json(r));
            body = arr.dump(2) + "\n";
        }
    } else if (format == "csv") {
        body = report_to_csv(rs);
    } else if (format == "text") {
        for (const auto& r : rs) body += report_to_text(r);
    } else {
        throw InvalidInput("unknown format '" + format + "'");
    }
    if (path.empty() || path == "-") {
        std::fwrite(body.data(), 1, body.size(), stdout);
        return;
    }
    write_text_file(path, body);
    std::filesystem::path p(path);
    const auto dir = p.parent_path();
    for (const auto& r : rs) {
        const std::string stem = (rs.size() == 1 ? p.stem().string() : p.stem().string() + "_" + r.scenario);
        write_text_file((dir / (stem + "_kappa.csv")).string(), plot_kappa_csv(r));
        write_text_file((dir / (stem + "_multipliers.csv")).string(), plot_multipliers_csv(r));
        write_text_file((dir / (stem + "_ssweep.csv")).string(), plot_sweep_csv(r));
    }
}

inline void emit_report(const IndexReport& r, const std::string& format, const std::string& path) {
    emit_report(std::vector<IndexReport>{r}, format, path);
}

}  // namespace symindex

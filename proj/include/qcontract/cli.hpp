// cli.hpp: command implementations behind the qcontract executable
//
// Each command turns a RunConfig into a report envelope (JSON) plus CSV and text
// renderings. Errors map to exit codes: 2 input/parse, 3 mathematical precondition,
// 4 numerical failure.

#pragma once

#include "qcontract/io.hpp"

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace qcontract {

inline constexpr const char* kToolName = "qcontract";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 20240611;

struct RunConfig {
    std::string command;
    std::string channel;  // path to a channel-spec JSON file
    std::string rho, sigma;
    std::vector<std::string> fs, gs, families;
    int n_max = 6;
    std::uint64_t seed = kDefaultSeed;
    int restarts = 32;
    double slack = 0.02;
    std::string format = "json";
    std::string out;
};

inline json to_json(const RunConfig& c) {
    return {{"command", c.command}, {"channel", c.channel}, {"rho", c.rho},
            {"sigma", c.sigma},     {"f", c.fs},            {"g", c.gs},
            {"family", c.families}, {"n_max", c.n_max},     {"seed", c.seed},
            {"restarts", c.restarts}, {"slack", c.slack},   {"format", c.format}};
}

struct CommandOutput {
    json payload;
    json diagnostics = json::object();
    std::string csv;
    std::string text;
};

inline int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::SingularReference:
    case ErrorCode::NotPrimitive:
    case ErrorCode::DegenerateFixedSpace:
    case ErrorCode::NotOperatorConvex:
    case ErrorCode::DomainError:
    case ErrorCode::TraceZeroEigenvector:
        return 3;
    case ErrorCode::ConvergenceFailure:
    case ErrorCode::QuadratureFailure:
    case ErrorCode::AllRestartsDegenerate:
        return 4;
    default:
        return 2;
    }
}

namespace detail {

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

inline json tolerance_block() {
    return {{"construction", tolerance::construction},
            {"spectral", tolerance::spectral},
            {"inequality", tolerance::inequality},
            {"hermiticity", tolerance::hermiticity}};
}

inline std::vector<FDivergenceSpec> selected_fs(const RunConfig& c,
                                                const std::vector<std::string>& fallback) {
    std::vector<FDivergenceSpec> out;
    for (const auto& name : c.fs.empty() ? fallback : c.fs) out.push_back(find_f(name));
    return out;
}

inline std::vector<StandardMonotoneFn> selected_gs(const RunConfig& c) {
    if (c.gs.empty()) return g_catalog();
    std::vector<StandardMonotoneFn> out;
    for (const auto& name : c.gs) out.push_back(find_g(name));
    return out;
}

inline std::vector<Family> selected_families(const RunConfig& c) {
    if (c.families.empty()) return all_families();
    std::vector<Family> out;
    for (const auto& name : c.families) out.push_back(parse_family(name));
    return out;
}

inline DensityMatrix load_state(const std::string& path, const char* what) {
    if (path.empty()) throw Error(ErrorCode::InvalidArgument, std::string("--") + what + " is required");
    return state_from_json(load_json_file(path));
}

inline QuantumChannel load_channel(const RunConfig& c) {
    if (c.channel.empty()) throw Error(ErrorCode::InvalidArgument, "--channel is required");
    return channel_from_json(load_json_file(c.channel));
}

/// σ from --sigma, otherwise the channel's fixed point (which must be unique).
inline DensityMatrix reference_state(const RunConfig& c, const QuantumChannel& e) {
    if (!c.sigma.empty()) return load_state(c.sigma, "sigma");
    try {
        return fixed_point(e);
    } catch (const Error& err) {
        if (err.code() == ErrorCode::DegenerateFixedSpace) {
            throw Error(ErrorCode::NotPrimitive, "no --sigma given and the fixed point is not unique");
        }
        throw;
    }
}

inline std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

inline std::string csv_num(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

}  // namespace detail

// ---- commands ----

inline CommandOutput cmd_divergence(const RunConfig& c) {
    const DensityMatrix rho = detail::load_state(c.rho, "rho");
    const DensityMatrix sigma = detail::load_state(c.sigma, "sigma");
    CommandOutput out;
    json records = json::array();
    std::ostringstream text, csv;
    text << std::left << std::setw(11) << "family" << std::setw(11) << "f" << std::setw(8) << "g"
         << "value\n";
    csv << "family,f_name,g_name,value\n";
    double max_quad = 0.0;
    auto add = [&](const std::string& fam, const std::string& f, const std::string& g,
                   const DivergenceValue& v) {
        records.push_back(divergence_record(fam, f, g, v));
        max_quad = std::max(max_quad, v.diagnostics.quadrature_error);
        text << std::setw(11) << fam << std::setw(11) << (f.empty() ? "-" : f) << std::setw(8)
             << (g.empty() ? "-" : g) << detail::fmt(v.value) << "\n";
        csv << fam << "," << f << "," << g << "," << detail::csv_num(v.value) << "\n";
    };
    const bool chi2_only = !c.gs.empty() && c.fs.empty() && c.families.empty();
    if (!chi2_only) {
        for (Family fam : detail::selected_families(c)) {
            for (const auto& spec : detail::selected_fs(c, {"kl"})) {
                add(std::string(to_string(fam)), spec.name, "", divergence(spec.with_family(fam), rho, sigma));
            }
        }
    }
    for (const auto& name : c.gs) {
        add("chi2", "", name, chi2_g(rho, sigma, find_g(name)));
    }
    out.payload = {{"records", records}};
    out.diagnostics = {{"max_quadrature_error", max_quad}};
    out.text = text.str();
    out.csv = csv.str();
    return out;
}

inline CommandOutput cmd_sdpi(const RunConfig& c) {
    const QuantumChannel e = detail::load_channel(c);
    const DensityMatrix sigma = detail::reference_state(c, e);
    CommandOutput out;
    json exact = json::array(), variational = json::array();
    std::ostringstream text, csv;
    text << "channel " << e.label() << "\n";
    csv << "method,family,name,value\n";
    for (const auto& g : detail::selected_gs(c)) {
        const SdpiEstimate est = sdpi_chi2(e, sigma, g);
        json rec = to_json(est);
        rec["g_name"] = g.name;
        exact.push_back(rec);
        text << "chi2_" << g.name << "  eta = " << detail::fmt(est.value) << "  (top singular value "
             << detail::fmt(est.top_eigenvalue_check) << ")\n";
        csv << "exact_lambda2,chi2," << g.name << "," << detail::csv_num(est.value) << "\n";
    }
    if (!c.families.empty()) {
        VariationalOptions opts;
        opts.seed = c.seed;
        opts.restarts = c.restarts;
        for (Family fam : detail::selected_families(c)) {
            for (const auto& spec : detail::selected_fs(c, {"kl"})) {
                const SdpiEstimate est =
                    sdpi_variational(make_evaluator(spec.with_family(fam)), e, sigma, opts);
                json rec = to_json(est);
                rec["family"] = std::string(to_string(fam));
                rec["f_name"] = spec.name;
                variational.push_back(rec);
                text << to_string(fam) << "_" << spec.name << "  eta >= " << detail::fmt(est.value)
                     << "  (" << est.valid_restarts << "/" << est.restarts_used << " restarts)\n";
                csv << "variational," << to_string(fam) << "," << spec.name << ","
                    << detail::csv_num(est.value) << "\n";
            }
        }
    }
    out.payload = {{"channel", e.label()},
                   {"sigma", matrix_to_json(sigma.matrix())},
                   {"exact", exact},
                   {"variational", variational}};
    out.diagnostics = {{"restarts", c.restarts}, {"seed", c.seed}};
    out.text = text.str();
    out.csv = csv.str();
    return out;
}

inline CommandOutput cmd_db_check(const RunConfig& c) {
    const QuantumChannel e = detail::load_channel(c);
    const DensityMatrix sigma = detail::reference_state(c, e);
    const CarlenMaasReport cm = carlen_maas_check(e, sigma);
    bool balanced = cm.gns_balanced;
    json residuals = {{"gns", cm.gns_residual}};
    std::ostringstream text, csv;
    text << "channel " << e.label() << "\n" << std::left << std::setw(8) << "gns"
         << detail::fmt(cm.gns_residual) << "\n";
    csv << "g_name,residual\ngns," << detail::csv_num(cm.gns_residual) << "\n";
    for (const auto& [name, res] : cm.residuals) {
        residuals[name] = res;
        balanced = balanced && res <= 1e-9;
        text << std::setw(8) << name << detail::fmt(res) << "\n";
        csv << name << "," << detail::csv_num(res) << "\n";
    }
    const char* verdict = balanced ? "PASS" : "FAIL";
    text << "detailed balance: " << verdict << "\nGNS => all g implication: "
         << (cm.implication_holds ? "holds" : "VIOLATED") << "\n";
    CommandOutput out;
    out.payload = {{"channel", e.label()},
                   {"sigma", matrix_to_json(sigma.matrix())},
                   {"residuals", residuals},
                   {"gns_balanced", cm.gns_balanced},
                   {"implication_holds", cm.implication_holds},
                   {"verdict", verdict}};
    out.diagnostics = {{"balance_tolerance", 1e-9}, {"implication_tolerance", 1e-7}};
    out.text = text.str();
    out.csv = csv.str();
    return out;
}

inline CommandOutput cmd_experiment(const RunConfig& c) {
    if (c.n_max < 1 || c.n_max > 32) {
        throw Error(ErrorCode::ParameterOutOfRange, "--n-max must lie in [1, 32]");
    }
    const QuantumChannel e = detail::load_channel(c);
    std::vector<FDivergenceSpec> specs;
    for (Family fam : detail::selected_families(c)) {
        for (const auto& spec : detail::selected_fs(c, {"kl"})) specs.push_back(spec.with_family(fam));
    }
    ExperimentOptions opts;
    opts.variational.seed = c.seed;
    opts.variational.restarts = c.restarts;
    opts.slack = c.slack;
    const ExperimentReport rep = contraction_experiment(e, specs, detail::selected_gs(c), c.n_max, opts);

    std::ostringstream text;
    text << "channel " << rep.channel_label << "  spectral gap " << detail::fmt(rep.spectral_gap)
         << "  n0 " << rep.n0 << "\n";
    for (const auto& row : rep.rows) {
        text << "n=" << row.n;
        for (const auto& fe : row.etas) {
            text << "  " << fe.family << "_" << fe.f_name << " " << detail::fmt(fe.eta) << " (root "
                 << detail::fmt(fe.root) << ")";
        }
        for (const auto& ch : row.chi2) {
            text << "  chi2_" << ch.g_name << " " << detail::fmt(ch.eta_power) << " bound "
                 << detail::fmt(ch.bound);
        }
        text << "\n";
    }
    text << "rate verdict: " << (rep.rate_verdict ? "PASS" : "FAIL") << "\n";
    for (const auto& t : rep.tightness) {
        text << "tightness " << t.family << "_" << t.f_name << " (kappa " << t.kappa_name << "): "
             << (!t.applicable ? "SKIPPED" : (t.power_equality && t.lower_bound) ? "PASS" : "FAIL")
             << "\n";
    }
    CommandOutput out;
    out.payload = to_json(rep, c.slack);
    out.diagnostics = {{"restarts", c.restarts}, {"seed", c.seed}, {"slack", c.slack}};
    out.text = text.str();
    out.csv = experiment_csv(rep);
    return out;
}

inline CommandOutput cmd_catalog(const RunConfig& c) {
    json fs = json::array(), gs = json::array();
    std::ostringstream text, csv;
    csv << "kind,name,operator_convex,pinsker_constant,note\n";
    auto keep = [](const std::vector<std::string>& filter, const std::string& name) {
        return filter.empty() || std::find(filter.begin(), filter.end(), name) != filter.end();
    };
    text << "f generators:\n";
    for (const auto& f : f_catalog()) {
        if (!keep(c.fs, f.name)) continue;
        json rec = {{"name", f.name}, {"operator_convex", f.operator_convex},
                    {"f2_at_1", f.f2(1.0)}};
        rec["pinsker_constant"] = f.pinsker_constant ? json(*f.pinsker_constant) : json(nullptr);
        fs.push_back(rec);
        text << "  " << f.name << "  operator convex: " << (f.operator_convex ? "yes" : "no")
             << "  Pinsker constant: "
             << (f.pinsker_constant ? detail::fmt(*f.pinsker_constant) : std::string("-")) << "\n";
        csv << "f," << f.name << "," << f.operator_convex << ","
            << (f.pinsker_constant ? detail::csv_num(*f.pinsker_constant) : "") << ",\n";
    }
    text << "g functions (convention g(1/x) = x g(x)):\n";
    std::vector<StandardMonotoneFn> all = g_catalog();
    all.push_back(gns_weight());
    for (const auto& g : all) {
        if (!keep(c.gs, g.name)) continue;
        gs.push_back({{"name", g.name}, {"standard_monotone", g.standard}, {"note", g.note}});
        text << "  " << g.name << "  " << g.note << "\n";
        csv << "g," << g.name << ",,," << g.note << "\n";
    }
    CommandOutput out;
    out.payload = {{"f", fs}, {"g", gs}, {"symmetry_convention", "g(1/x) = x*g(x)"}};
    out.text = text.str();
    out.csv = csv.str();
    return out;
}

inline CommandOutput dispatch(const RunConfig& c) {
    if (c.command == "divergence") return cmd_divergence(c);
    if (c.command == "sdpi") return cmd_sdpi(c);
    if (c.command == "db-check") return cmd_db_check(c);
    if (c.command == "experiment") return cmd_experiment(c);
    if (c.command == "catalog") return cmd_catalog(c);
    throw Error(ErrorCode::InvalidArgument, "unknown command '" + c.command + "'");
}

inline json make_envelope(const RunConfig& c, const CommandOutput& out) {
    json diag = out.diagnostics;
    diag["tolerances"] = detail::tolerance_block();
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"csv_schema_version", kCsvSchemaVersion},
            {"config", to_json(c)},
            {"generated_at", detail::utc_timestamp()},
            {"payload", out.payload},
            {"diagnostics", diag}};
}

/// Runs one command and writes the rendering to --out (or `out`). Returns the exit code.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
    try {
        if (c.format != "json" && c.format != "csv" && c.format != "text") {
            throw Error(ErrorCode::InvalidArgument, "--format must be json, csv or text");
        }
        const CommandOutput result = dispatch(c);
        std::string rendered;
        if (c.format == "json") {
            rendered = make_envelope(c, result).dump(2) + "\n";
        } else if (c.format == "csv") {
            rendered = result.csv;
        } else {
            rendered = result.text;
        }
        if (c.out.empty()) {
            out << rendered;
        } else {
            std::ofstream file(c.out);
            if (!file) throw Error(ErrorCode::InvalidArgument, "cannot write '" + c.out + "'");
            file << rendered;
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const json::exception& e) {
        err << "error: " << to_string(ErrorCode::ParseError) << ": " << e.what() << "\n";
        return 2;
    }
}

}  // namespace qcontract

// io.hpp: JSON / CSV formats for states, channels and reports
//
// Complex matrices are row-major nested arrays whose entries are [re, im] pairs
// (plain numbers are accepted as real entries). Channel specs are objects tagged by
// "kind". The CSV experiment table has a frozen column order, see kCsvSchemaVersion.

#pragma once

#include "qcontract/contraction.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace qcontract {

using json = nlohmann::json;

inline constexpr int kCsvSchemaVersion = 1;

// ---- matrices and states ----

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace detail {

inline double number(const json& j, const std::string& what) {
    if (!j.is_number()) throw Error(ErrorCode::ParseError, what + " must be a number");
    return j.get<double>();
}

inline Complex complex_entry(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        return {j[0].get<double>(), j[1].get<double>()};
    }
    throw Error(ErrorCode::ParseError, "matrix entry must be a number or an [re, im] pair");
}

inline const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

}  // namespace detail

inline Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw Error(ErrorCode::ParseError, "matrix must be a non-empty array of rows");
    }
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j[0].size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw Error(ErrorCode::ParseError, "matrix rows have unequal lengths");
        }
        for (Index k = 0; k < cols; ++k) m(i, k) = detail::complex_entry(row[static_cast<std::size_t>(k)]);
    }
    return m;
}

inline RealMatrix real_matrix_from_json(const json& j) {
    const Matrix m = matrix_from_json(j);
    if (m.imag().cwiseAbs().maxCoeff() > 0.0) {
        throw Error(ErrorCode::ParseError, "expected a real matrix");
    }
    return m.real();
}

/// A state file holds a matrix, or an object with an "entries" matrix.
inline DensityMatrix state_from_json(const json& j) {
    const json& entries = j.is_object() ? detail::field(j, "entries") : j;
    return validate_density(matrix_from_json(entries));
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, "invalid JSON in '" + path + "': " + e.what());
    }
}

// ---- channel specs ----

inline QuantumChannel channel_from_json(const json& j) {
    const std::string kind = detail::field(j, "kind").get<std::string>();
    auto int_field = [&](const char* key, int fallback) {
        return j.contains(key) ? static_cast<int>(detail::number(j.at(key), key)) : fallback;
    };
    if (kind == "kraus") {
        std::vector<Matrix> ops;
        for (const auto& k : detail::field(j, "operators")) ops.push_back(matrix_from_json(k));
        return channel_from_kraus(std::move(ops), j.value("label", std::string("kraus")));
    }
    if (kind == "depolarizing") {
        return depolarizing(detail::number(detail::field(j, "p"), "p"), int_field("dim", 2));
    }
    if (kind == "pauli") {
        const json& probs = detail::field(j, "probs");
        if (!probs.is_array() || probs.size() != 4) {
            throw Error(ErrorCode::ParseError, "pauli channel needs four probabilities");
        }
        std::array<double, 4> p{};
        for (std::size_t k = 0; k < 4; ++k) p[k] = detail::number(probs[k], "probs");
        return pauli_channel(p);
    }
    if (kind == "embedded_classical") {
        return embedded_classical(real_matrix_from_json(detail::field(j, "W")));
    }
    if (kind == "amplitude_damping") {
        return amplitude_damping(detail::number(detail::field(j, "gamma"), "gamma"),
                                 detail::number(detail::field(j, "lambda"), "lambda"));
    }
    if (kind == "random") {
        const json& seed = detail::field(j, "seed");
        if (!seed.is_number_unsigned()) {
            throw Error(ErrorCode::ParseError, "seed must be a non-negative integer");
        }
        return random_channel(int_field("dim", 2), int_field("env", 2), seed.get<std::uint64_t>());
    }
    if (kind == "unitary") {
        return unitary_channel(matrix_from_json(detail::field(j, "U")));
    }
    if (kind == "identity") return identity_channel(int_field("dim", 2));
    if (kind == "replacer") return replacer_channel(state_from_json(detail::field(j, "sigma")));
    throw Error(ErrorCode::ParseError, "unknown channel kind '" + kind + "'");
}

// ---- result records ----

inline json to_json(const DivergenceDiagnostics& d) {
    return {{"quadrature_error", d.quadrature_error},
            {"quadrature_segments", d.quadrature_segments},
            {"rho_full_rank", d.rho_full_rank},
            {"sigma_full_rank", d.sigma_full_rank}};
}

inline json divergence_record(const std::string& family, const std::string& f_name,
                              const std::string& g_name, const DivergenceValue& v) {
    json rec = {{"family", family}, {"f_name", f_name}, {"value", v.value},
                {"diagnostics", to_json(v.diagnostics)}};
    if (!g_name.empty()) rec["g_name"] = g_name;
    return rec;
}

inline json to_json(const SdpiEstimate& e) {
    json j = {{"value", e.value},
              {"method", std::string(to_string(e.method))},
              {"restarts_used", e.restarts_used}};
    if (e.method == SdpiMethod::ExactLambda2) {
        j["top_eigenvalue_check"] = e.top_eigenvalue_check;
        j["top_vector_overlap"] = e.top_vector_overlap;
        j["reference_fixed"] = e.reference_fixed;
    } else {
        j["valid_restarts"] = e.valid_restarts;
    }
    if (e.argmax_state) j["argmax_state"] = matrix_to_json(e.argmax_state->matrix());
    return j;
}

inline json to_json(const Violation& v) {
    return {{"n", v.n}, {"family", v.family}, {"f_name", v.f_name}, {"g_name", v.g_name},
            {"lhs", v.lhs}, {"rhs", v.rhs}};
}

inline json to_json(const ExperimentReport& r, double slack) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        json etas = json::array(), chi2 = json::array();
        for (const auto& e : row.etas) {
            etas.push_back({{"family", e.family}, {"f_name", e.f_name}, {"eta", e.eta},
                            {"eta_root", e.root}});
        }
        for (const auto& c : row.chi2) {
            chi2.push_back({{"g_name", c.g_name}, {"eta_power", c.eta_power}, {"bound", c.bound},
                            {"db_residual", c.db_residual}});
        }
        rows.push_back({{"n", row.n}, {"eta_f", etas}, {"chi2", chi2}});
    }
    json rate_viol = json::array();
    for (const auto& v : r.rate_violations) rate_viol.push_back(to_json(v));
    json tight = json::array();
    for (const auto& t : r.tightness) {
        json viol = json::array();
        for (const auto& v : t.violations) viol.push_back(to_json(v));
        tight.push_back({{"family", t.family},
                         {"f_name", t.f_name},
                         {"kappa", t.kappa_name},
                         {"kappa_residual", t.kappa_residual},
                         {"applicable", t.applicable},
                         {"power_equality", t.power_equality},
                         {"lower_bound", t.lower_bound},
                         {"verdict", !t.applicable ? "SKIPPED"
                                     : (t.power_equality && t.lower_bound) ? "PASS"
                                                                           : "FAIL"},
                         {"violations", viol}});
    }
    return {{"channel", r.channel_label},
            {"fixed_point", matrix_to_json(r.pi.matrix())},
            {"spectral_gap", r.spectral_gap},
            {"n0", r.n0},
            {"rows", rows},
            {"verdicts",
             {{"rate", {{"verdict", r.rate_verdict ? "PASS" : "FAIL"},
                        {"slack", slack},
                        {"n0", r.n0},
                        {"violations", rate_viol}}},
              {"tightness", tight}}}};
}

// ---- CSV ----

namespace detail {
inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}
}  // namespace detail

/// Per-n table. Columns, in order: n; eta_<family>_<f> for each family/f;
/// eta_root_<family>_<f> for each family/f; then chi2_<g>_n, bound_<g>, db_<g> per g.
inline std::string experiment_csv(const ExperimentReport& r) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "# csv_schema_version=" << kCsvSchemaVersion << "\n";
    out << "n";
    if (!r.rows.empty()) {
        const auto& first = r.rows.front();
        for (const auto& e : first.etas) out << ",eta_" << detail::lower(e.family) << "_" << e.f_name;
        for (const auto& e : first.etas) {
            out << ",eta_root_" << detail::lower(e.family) << "_" << e.f_name;
        }
        for (const auto& c : first.chi2) {
            out << ",chi2_" << c.g_name << "_n,bound_" << c.g_name << ",db_" << c.g_name;
        }
    }
    out << "\n";
    for (const auto& row : r.rows) {
        out << row.n;
        for (const auto& e : row.etas) out << "," << e.eta;
        for (const auto& e : row.etas) out << "," << e.root;
        for (const auto& c : row.chi2) out << "," << c.eta_power << "," << c.bound << "," << c.db_residual;
        out << "\n";
    }
    return out.str();
}

}  // namespace qcontract

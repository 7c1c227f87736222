#pragma once

// JSON encodings: DoS signal files, derived-constant records, metrics.

#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "dosnet/bounds.hpp"
#include "dosnet/closed_loop_sim.hpp"
#include "dosnet/dos_model.hpp"
#include "dosnet/errors.hpp"
#include "dosnet/matrix_kernels.hpp"

namespace dosnet::io {

using json = nlohmann::json;

inline constexpr int format_version = 1;

/// Malformed input; `where` is a JSON path like "plant.A[1]".
class ConfigError : public Error {
public:
    ConfigError(const std::string& where, const std::string& what)
        : Error(where.empty() ? what : where + ": " + what), where_(where) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

// JSON has no infinity; it is spelled "inf".
inline json number(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    if (std::isnan(v)) return json(nullptr);
    return json(v);
}

inline double to_number(const json& j, const std::string& where) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    }
    throw ConfigError(where, "expected a number");
}

inline json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline json to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline Matrix matrix_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where, "expected a non-empty array of rows");
    const std::size_t rows = j.size();
    if (!j[0].is_array() || j[0].empty()) throw ConfigError(where + "[0]", "expected a non-empty row");
    const std::size_t cols = j[0].size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        const std::string rw = where + "[" + std::to_string(i) + "]";
        if (!j[i].is_array() || j[i].size() != cols) {
            throw ConfigError(rw, "expected a row of " + std::to_string(cols) + " numbers");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = to_number(j[i][c], rw + "[" + std::to_string(c) + "]");
            if (!std::isfinite(v)) throw ConfigError(rw, "entries must be finite");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return m;
}

inline Vector vector_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where, "expected a non-empty array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = to_number(j[i], where + "[" + std::to_string(i) + "]");
    }
    if (!v.allFinite()) throw ConfigError(where, "entries must be finite");
    return v;
}

// --- DoS signal file: {"format": 1, "horizon": s, "intervals": [[h, tau], ...]}

inline json signal_to_json(const DoSSignal& s) {
    json iv = json::array();
    for (const auto& x : s.intervals()) iv.push_back(json::array({x.start, x.duration}));
    return json{{"format", format_version}, {"horizon", s.horizon()}, {"intervals", iv}};
}

inline DoSSignal signal_from_json(const json& j, const std::string& where = "") {
    const auto at = [&](const std::string& k) { return where.empty() ? k : where + "." + k; };
    if (!j.is_object()) throw ConfigError(where, "DoS signal must be an object");
    if (j.contains("format") && j["format"] != format_version) {
        throw ConfigError(at("format"), "unsupported format version");
    }
    if (!j.contains("horizon")) throw ConfigError(at("horizon"), "missing");
    if (!j.contains("intervals") || !j["intervals"].is_array()) {
        throw ConfigError(at("intervals"), "expected an array of [h, tau] pairs");
    }
    const double horizon = to_number(j["horizon"], at("horizon"));
    std::vector<DoSInterval> iv;
    for (std::size_t i = 0; i < j["intervals"].size(); ++i) {
        const auto& p = j["intervals"][i];
        const std::string w = at("intervals") + "[" + std::to_string(i) + "]";
        if (!p.is_array() || p.size() != 2) throw ConfigError(w, "expected [h, tau]");
        iv.push_back({to_number(p[0], w + "[0]"), to_number(p[1], w + "[1]")});
    }
    try {
        return DoSSignal(std::move(iv), horizon);
    } catch (const DomainError& e) {
        throw ConfigError(where, e.what());
    }
}

inline json class_to_json(const DoSClassParams& p) {
    return json{{"eta", number(p.eta)},
                {"kappa", number(p.kappa)},
                {"tau_D", number(p.tau_D)},
                {"T", number(p.T)}};
}

inline json gap_verdict_to_json(const GapVerdict& v) {
    return json{{"z0", number(v.z0)},           {"max_gap", number(v.max_gap)},
                {"Q", v.Q},                     {"Q_plus_delta", v.Q_plus_delta},
                {"z0_ok", v.z0_ok},             {"gap_ok", v.gap_ok},
                {"successes", v.successes}};
}

inline json constants_to_json(const DerivedConstants& c) {
    return json{{"alpha1", c.alpha1}, {"alpha2", c.alpha2}, {"gamma1", c.gamma1},
                {"gamma2", c.gamma2}, {"gamma3", c.gamma3}, {"gamma4", c.gamma4},
                {"gamma5", c.gamma5}, {"gamma6", c.gamma6}, {"gamma7", c.gamma7},
                {"sigma", c.sigma},   {"mu_A", c.mu_A},     {"norm_Phi", c.norm_Phi},
                {"kappa1", c.kappa1}, {"rho", c.rho},       {"rho1", c.rho1},
                {"rho2", c.rho2},     {"omega1", c.omega1}, {"omega2", c.omega2},
                {"zeta1", c.zeta1},   {"zeta2", c.zeta2},   {"P", to_json(c.P)}};
}

/// Defining formula of each reported constant.
inline json constant_formulas() {
    return json{
        {"P", "solves Phi'P + P Phi + M = 0, Phi = A + BK"},
        {"alpha1", "min eig P"},
        {"alpha2", "max eig P"},
        {"gamma1", "min eig M"},
        {"gamma2", "||2PBK||"},
        {"gamma3", "||2P||"},
        {"sigma", "sigma_fraction * gamma1 / gamma2"},
        {"gamma4", "gamma1 - sigma*gamma2"},
        {"gamma5", "gamma2*rho + gamma3"},
        {"gamma6", "gamma5^2 / (2 gamma4)"},
        {"gamma7", "(gamma3 + rho*gamma2)^2 / (2 (gamma1 - sigma*gamma2))"},
        {"mu_A", "max eig (A + A')/2"},
        {"kappa1", "max(||Phi||, 1)"},
        {"rho1", "(1 + 1/mu_A) e^{mu_A (h-1) delta} if mu_A > 0, else 1 + (h-1) delta"},
        {"rho2", "max(e^{mu_A delta}, 1)"},
        {"rho", "sigma + rho1 rho2 (1 + sigma)"},
        {"omega1", "gamma4 / (2 alpha2)"},
        {"omega2", "gamma2 (2 + sigma) / alpha1"},
        {"zeta1", "gamma6 / omega1"},
        {"zeta2", "gamma7 / omega2"},
        {"Q", "(kappa + eta Delta) / (1 - 1/T - Delta/tau_D)"},
        {"delta_max", "mu_A > 0: log(sigma/(1+sigma) mu_A/kappa1 + 1)/mu_A; else sigma/(1+sigma)/kappa1"},
        {"h_min", "smallest h with h delta > omega2/(omega1+omega2) (Q + Delta)"},
        {"gap_rhs", "1 - omega2 (kappa + eta Delta) / ((omega1+omega2) h delta - omega2 Delta)"},
        {"beta", "min(omega1, (omega1 h delta - omega2 (Q + Delta - h delta)) / (Q + Delta))"},
        {"lambda", "e^{(omega1 + omega2) Q}"},
        {"L", "e^{-beta Delta}"}};
}

inline json envelope_to_json(const EnvelopeConstants& e) {
    return json{{"beta", e.beta}, {"lambda", number(e.lambda)}, {"L", e.L}, {"envelope_h", e.h}};
}

inline json metrics_to_json(const SimMetrics& m, const SimTrace& tr) {
    json j{{"format", format_version},
           {"mode", to_string(tr.mode)},
           {"h", tr.h},
           {"delta", tr.delta},
           {"Delta", tr.delta_big},
           {"attempts", tr.attempts},
           {"successes", tr.z.size()},
           {"failure_fraction", m.failure_fraction},
           {"max_state_norm", number(m.max_state_norm)},
           {"final_state_norm", number(m.final_state_norm)},
           {"max_gap", m.max_gap},
           {"divergence_threshold", m.divergence_threshold},
           {"stable_verdict", m.stable_verdict}};
    j["envelope_ok"] = m.envelope_ok ? json(*m.envelope_ok) : json(nullptr);
    return j;
}

}  // namespace dosnet::io

#pragma once

// Experiment configuration: one JSON document describing plant, controller,
// network, buffer, DoS source, noise and simulation settings.
//
// {
//   "format": 1,
//   "plant":      {"A": [[..]], "B": [[..]]},
//   "controller": {"K": [[..]], "M": [[..]], "sigma_fraction": 0.999999999,
//                  "sim_sigma_fraction": 0.5},
//   "network":    {"Delta": 0.1, "b": 1},
//   "buffer":     {"h": 5, "T_c": 0},
//   "dos":        {"signal": {...}} | {"generator": {"off": [lo, hi], "on": [lo, hi], "seed": s}}
//                 | {"file": "signal.json"},  optional "class": {"eta", "kappa", "tau_D", "T"}
//   "noise":      {"d_bound": 0.01, "n_bound": 0.01, "seed": 7, "decay_at": 40},
//   "sim":        {"horizon": 50, "substeps": 10, "x0": [1, -1], "mode": "remote"}
// }

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dosnet/bounds.hpp"
#include "dosnet/closed_loop_sim.hpp"
#include "dosnet/dos_model.hpp"
#include "dosnet/io.hpp"

namespace dosnet {

struct DoSSource {
    enum class Kind { signal, generator, file };
    Kind kind = Kind::signal;
    std::optional<DoSSignal> signal;
    GeneratorSpec generator;
    std::uint64_t seed = 0;
    std::filesystem::path file;
};

struct ExperimentConfig {
    Matrix A, B, K, M;
    double sigma_fraction = reporting_sigma_fraction;
    double sim_sigma_fraction = simulation_sigma_fraction;
    double delta_big = 0.1;
    int b = 1;
    int h = 1;
    double T_c = 0.0;
    DoSSource dos;
    std::optional<DoSClassParams> dos_class;
    NoiseSpec noise;
    double horizon = 10.0;
    int substeps = 10;
    Vector x0;
    SimMode mode = SimMode::remote;

    double delta() const noexcept { return delta_big / b; }

    DesignInputs design(double fraction) const { return {A, B, K, M, fraction}; }

    SimConfig sim_config() const {
        SimConfig c;
        c.delta_big = delta_big;
        c.b = b;
        c.h = h;
        c.horizon = horizon;
        c.substeps = substeps;
        c.mode = mode;
        c.T_c = T_c;
        c.M = M;
        return c;
    }
};

namespace config {

using io::ConfigError;
using io::json;

inline SimMode parse_mode(const std::string& s, const std::string& where = "sim.mode") {
    if (s == "colocated") return SimMode::colocated;
    if (s == "remote") return SimMode::remote;
    if (s == "remote_no_buffer") return SimMode::remote_no_buffer;
    throw ConfigError(where, "unknown mode '" + s + "' (colocated | remote | remote_no_buffer)");
}

inline json parse_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into line:column.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream os;
        os << origin << ":" << line << ":" << col;
        throw ConfigError(os.str(), "malformed JSON");
    }
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path.string());
}

namespace detail {

inline const json& need(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError(where.empty() ? key : where + "." + key, "missing");
    }
    return j[key];
}

inline double num(const json& j, const char* key, const std::string& where, double fallback,
                  bool required = false) {
    const std::string w = where + "." + key;
    if (!j.contains(key)) {
        if (required) throw ConfigError(w, "missing");
        return fallback;
    }
    return io::to_number(j[key], w);
}

inline int integer(const json& j, const char* key, const std::string& where, int fallback) {
    const std::string w = where + "." + key;
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) throw ConfigError(w, "expected an integer");
    return j[key].get<int>();
}

inline std::uint64_t seed(const json& j, const char* key, const std::string& where) {
    const std::string w = where + "." + key;
    if (!j.contains(key)) return 0;
    if (!j[key].is_number_unsigned() && !(j[key].is_number_integer() && j[key].get<long long>() >= 0)) {
        throw ConfigError(w, "expected a nonnegative integer");
    }
    return j[key].get<std::uint64_t>();
}

inline std::pair<double, double> range(const json& j, const char* key, const std::string& where) {
    const std::string w = where + "." + key;
    const json& r = need(j, key, where);
    if (!r.is_array() || r.size() != 2) throw ConfigError(w, "expected [lo, hi]");
    return {io::to_number(r[0], w + "[0]"), io::to_number(r[1], w + "[1]")};
}

}  // namespace detail

/// Parses and cross-validates a config; relative DoS file paths resolve against `base_dir`.
inline ExperimentConfig from_json(const json& j, const std::filesystem::path& base_dir = {}) {
    using namespace detail;
    if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
    if (j.contains("format") && j["format"] != io::format_version) {
        throw ConfigError("format", "unsupported format version");
    }
    ExperimentConfig c;

    const json& plant = need(j, "plant", "");
    c.A = io::matrix_from_json(need(plant, "A", "plant"), "plant.A");
    c.B = io::matrix_from_json(need(plant, "B", "plant"), "plant.B");
    const Eigen::Index n = c.A.rows();
    if (c.A.cols() != n) throw ConfigError("plant.A", "must be square");
    if (c.B.rows() != n) throw ConfigError("plant.B", "must have " + std::to_string(n) + " rows");
    const Eigen::Index m = c.B.cols();

    const json& ctl = need(j, "controller", "");
    c.K = io::matrix_from_json(need(ctl, "K", "controller"), "controller.K");
    if (c.K.rows() != m || c.K.cols() != n) {
        throw ConfigError("controller.K", "must be " + std::to_string(m) + "x" + std::to_string(n));
    }
    if (ctl.contains("M")) {
        c.M = io::matrix_from_json(ctl["M"], "controller.M");
        if (c.M.rows() != n || c.M.cols() != n) {
            throw ConfigError("controller.M", "must be " + std::to_string(n) + "x" + std::to_string(n));
        }
    }
    c.sigma_fraction = num(ctl, "sigma_fraction", "controller", reporting_sigma_fraction);
    c.sim_sigma_fraction = num(ctl, "sim_sigma_fraction", "controller", simulation_sigma_fraction);
    for (auto [v, name] : {std::pair{c.sigma_fraction, "controller.sigma_fraction"},
                           std::pair{c.sim_sigma_fraction, "controller.sim_sigma_fraction"}}) {
        if (!(v > 0.0 && v <= 1.0)) throw ConfigError(name, "must lie in (0, 1]");
    }

    const json& net = need(j, "network", "");
    c.delta_big = num(net, "Delta", "network", 0.0, true);
    if (!(c.delta_big > 0.0) || !std::isfinite(c.delta_big)) {
        throw ConfigError("network.Delta", "must be positive");
    }
    c.b = integer(net, "b", "network", 1);
    if (c.b < 1) throw ConfigError("network.b", "must be >= 1");

    if (j.contains("buffer")) {
        const json& buf = j["buffer"];
        c.h = integer(buf, "h", "buffer", 1);
        c.T_c = num(buf, "T_c", "buffer", 0.0);
        if (c.h < 1) throw ConfigError("buffer.h", "must be >= 1");
        if (!(c.T_c >= 0.0)) throw ConfigError("buffer.T_c", "must be >= 0");
    }

    const json& sim = need(j, "sim", "");
    c.horizon = num(sim, "horizon", "sim", 0.0, true);
    if (!(c.horizon >= c.delta_big) || !std::isfinite(c.horizon)) {
        throw ConfigError("sim.horizon", "must be finite and >= Delta");
    }
    c.substeps = integer(sim, "substeps", "sim", 10);
    if (c.substeps < 1) throw ConfigError("sim.substeps", "must be >= 1");
    if (sim.contains("x0")) {
        c.x0 = io::vector_from_json(sim["x0"], "sim.x0");
        if (c.x0.size() != n) throw ConfigError("sim.x0", "must have " + std::to_string(n) + " entries");
    } else {
        c.x0 = Vector(n);
        for (Eigen::Index i = 0; i < n; ++i) c.x0[i] = (i % 2 == 0) ? 1.0 : -1.0;
        c.x0.normalize();
    }
    if (sim.contains("mode")) {
        if (!sim["mode"].is_string()) throw ConfigError("sim.mode", "expected a string");
        c.mode = parse_mode(sim["mode"].get<std::string>());
    }

    const json& dos = need(j, "dos", "");
    const int sources = int(dos.contains("signal")) + int(dos.contains("generator")) +
                        int(dos.contains("file"));
    if (sources != 1) throw ConfigError("dos", "exactly one of signal | generator | file is required");
    if (dos.contains("signal")) {
        c.dos.kind = DoSSource::Kind::signal;
        c.dos.signal = io::signal_from_json(dos["signal"], "dos.signal");
    } else if (dos.contains("generator")) {
        const json& g = dos["generator"];
        c.dos.kind = DoSSource::Kind::generator;
        const auto off = range(g, "off", "dos.generator");
        const auto on = range(g, "on", "dos.generator");
        c.dos.generator = {off.first, off.second, on.first, on.second};
        c.dos.seed = seed(g, "seed", "dos.generator");
        try {
            c.dos.generator.validate();
        } catch (const DomainError& e) {
            throw ConfigError("dos.generator", e.what());
        }
    } else {
        if (!dos["file"].is_string()) throw ConfigError("dos.file", "expected a path");
        c.dos.kind = DoSSource::Kind::file;
        std::filesystem::path p = dos["file"].get<std::string>();
        c.dos.file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (dos.contains("class")) {
        const json& k = dos["class"];
        DoSClassParams p;
        p.eta = num(k, "eta", "dos.class", 0.0, true);
        p.kappa = num(k, "kappa", "dos.class", 0.0, true);
        p.tau_D = num(k, "tau_D", "dos.class", 0.0, true);
        p.T = num(k, "T", "dos.class", 0.0, true);
        try {
            p.validate();
        } catch (const DomainError& e) {
            throw ConfigError("dos.class", e.what());
        }
        c.dos_class = p;
    }

    if (j.contains("noise")) {
        const json& nz = j["noise"];
        c.noise.d_bound = num(nz, "d_bound", "noise", 0.0);
        c.noise.n_bound = num(nz, "n_bound", "noise", 0.0);
        c.noise.seed = seed(nz, "seed", "noise");
        if (nz.contains("decay_at") && !nz["decay_at"].is_null()) {
            c.noise.decay_at = io::to_number(nz["decay_at"], "noise.decay_at");
        }
        if (!(c.noise.d_bound >= 0.0) || !(c.noise.n_bound >= 0.0)) {
            throw ConfigError("noise", "bounds must be >= 0");
        }
    }
    return c;
}

inline ExperimentConfig load(const std::filesystem::path& path) {
    return from_json(read_json_file(path), path.parent_path());
}

/// Materializes the configured DoS signal over the simulation horizon.
inline DoSSignal resolve_signal(const ExperimentConfig& c) {
    switch (c.dos.kind) {
        case DoSSource::Kind::signal: return *c.dos.signal;
        case DoSSource::Kind::generator: return generate(c.dos.seed, c.dos.generator, c.horizon);
        case DoSSource::Kind::file: return io::signal_from_json(read_json_file(c.dos.file), c.dos.file.string());
    }
    throw ConfigError("dos", "unknown source");
}

/// Class constants: configured explicitly, else fitted at the signal's observed rates.
inline DoSClassParams resolve_class(const ExperimentConfig& c, const DoSSignal& s) {
    if (c.dos_class) return *c.dos_class;
    const ObservedRates r = observed_rates(s);
    const double tau_D = r.tau_D;
    const double T = r.T > 1.0 ? r.T : std::nextafter(1.0, 2.0);
    const ClassFit f = fit_class_params(s, tau_D, T);
    return {f.eta_min, tau_D, f.kappa_min, T};
}

}  // namespace config

}  // namespace dosnet

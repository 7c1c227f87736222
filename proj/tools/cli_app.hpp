#pragma once

// `dosnet` command-line front end. Kept as a header with a stream-based entry
// point so the test suite can drive it in-process.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dosnet/benchmark_example.hpp"
#include "dosnet/bounds.hpp"
#include "dosnet/closed_loop_sim.hpp"
#include "dosnet/dos_model.hpp"
#include "dosnet/errors.hpp"
#include "dosnet/experiment.hpp"
#include "dosnet/io.hpp"
#include "dosnet/repro.hpp"

namespace dosnet::cli {

enum ExitCode : int { ok = 0, usage = 1, infeasible = 2, unstable = 3 };

using io::json;
using io::number;

namespace detail {

inline double parse_number(const std::string& s, const std::string& flag) {
    if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw io::ConfigError(flag, "expected a number, got '" + s + "'");
    return v;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io::ConfigError(path.string(), "cannot open for writing");
    f << text;
    if (!f) throw io::ConfigError(path.string(), "write failed");
}

inline void report(std::ostream& err, const char* kind, const std::exception& e, json extra = {}) {
    json j{{"error", kind}, {"message", e.what()}};
    if (extra.is_object()) j.update(extra);
    err << j.dump() << "\n";
}

/// Maps library exceptions onto the exit-code contract.
template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const io::ConfigError& e) {
        report(err, "config", e, json{{"where", e.where()}});
        return usage;
    } catch (const CertificationError& e) {
        report(err, "infeasible", e,
               json{{"eigenvalue", {{"re", e.eigenvalue_real()}, {"im", e.eigenvalue_imag()}}}});
        return infeasible;
    } catch (const InfeasibleError& e) {
        report(err, "infeasible", e, json{{"value", number(e.value())}});
        return infeasible;
    } catch (const HorizonTooShortError& e) {
        report(err, "infeasible", e);
        return infeasible;
    } catch (const DelayExceedsHorizonError& e) {
        report(err, "infeasible", e);
        return infeasible;
    } catch (const Error& e) {
        report(err, "invalid", e);
        return usage;
    } catch (const std::exception& e) {
        report(err, "io", e);
        return usage;
    }
}

inline DoSClassParams observed_class(const DoSSignal& s) {
    const ObservedRates r = observed_rates(s);
    const double T = r.T > 1.0 ? r.T : std::nextafter(1.0, 2.0);
    const ClassFit f = fit_class_params(s, r.tau_D, T);
    return {f.eta_min, r.tau_D, f.kappa_min, T};
}

}  // namespace detail

// ---------------------------------------------------------------- bounds

struct BoundsOptions {
    std::string config;
    std::optional<int> h;
};

inline json bounds_record(const ExperimentConfig& cfg, int h) {
    const double delta = cfg.delta();
    const DerivedConstants c = derive_constants(cfg.design(cfg.sigma_fraction), h, delta);
    const DoSSignal signal = config::resolve_signal(cfg);
    const DoSClassParams cls = config::resolve_class(cfg, signal);
    const double Q = compute_Q(cls, cfg.delta_big);
    const int h_min = min_prediction_horizon(c, Q, cfg.delta_big, delta);
    const int h_env = std::max(h, h_min);
    const EnvelopeConstants env = decay_envelope(c, Q, cfg.delta_big, h_env, delta);

    json j = io::constants_to_json(c);
    j["format"] = io::format_version;
    j["h"] = h;
    j["delta"] = delta;
    j["Delta"] = cfg.delta_big;
    j["delta_max"] = bounds::delta_max(c.mu_A, c.sigma, c.norm_Phi);
    j["delta_ok"] = delta <= j["delta_max"].get<double>();
    j["class"] = io::class_to_json(cls);
    j["rate_sum"] = cls.rate_sum(cfg.delta_big);
    j["Q"] = Q;
    j["h_min"] = h_min;
    try {
        j["gap_rhs"] = tolerable_dos_bound(c, h, delta, cfg.delta_big, cls.kappa, cls.eta);
    } catch (const HorizonTooShortError&) {
        j["gap_rhs"] = nullptr;
    }
    j.update(io::envelope_to_json(env));
    j["formulas"] = io::constant_formulas();
    return j;
}

inline int cmd_bounds(const BoundsOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const ExperimentConfig cfg = config::load(o.config);
        out << bounds_record(cfg, o.h.value_or(cfg.h)).dump(2) << "\n";
        return int(ok);
    });
}

// ---------------------------------------------------------------- dos

struct DosGenOptions {
    std::uint64_t seed = benchmark::dos_seed;
    double horizon = benchmark::horizon;
    std::vector<double> off{benchmark::generator.off_lo, benchmark::generator.off_hi};
    std::vector<double> on{benchmark::generator.on_lo, benchmark::generator.on_hi};
    std::string out_path;
};

inline int cmd_dos_gen(const DosGenOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const GeneratorSpec spec{o.off[0], o.off[1], o.on[0], o.on[1]};
        const std::string text = io::signal_to_json(generate(o.seed, spec, o.horizon)).dump(2) + "\n";
        if (o.out_path.empty()) {
            out << text;
        } else {
            detail::write_text(o.out_path, text);
        }
        return int(ok);
    });
}

struct DosVerifyOptions {
    std::string signal;
    double delta_big = 0.0;
    std::optional<std::string> tau_D;
    std::optional<std::string> T;
};

inline int cmd_dos_verify(const DosVerifyOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        if (!(o.delta_big > 0.0)) throw io::ConfigError("--delta", "must be > 0");
        const DoSSignal s = io::signal_from_json(config::read_json_file(o.signal), o.signal);
        const double h = s.horizon();
        const ObservedRates r = observed_rates(s);
        const double tau_D = o.tau_D ? detail::parse_number(*o.tau_D, "--tau-d") : r.tau_D;
        const double T = o.T ? detail::parse_number(*o.T, "--T") : r.T;
        if (!(tau_D > 0.0)) throw io::ConfigError("--tau-d", "must be > 0");
        if (!(T > 1.0)) throw io::ConfigError("--T", "must be > 1");
        const ClassFit fit = fit_class_params(s, tau_D, T);
        const DoSClassParams cls{fit.eta_min, tau_D, fit.kappa_min, T};
        const TransmissionSchedule sched = successful_transmissions(s, o.delta_big, h);

        json j{{"format", io::format_version},
               {"horizon", h},
               {"Delta", o.delta_big},
               {"transitions", dos::transitions_count(s, 0.0, h)},
               {"dos_measure", dos_measure(s, 0.0, h)},
               {"class", io::class_to_json(cls)},
               {"eta_min", fit.eta_min},
               {"kappa_min", fit.kappa_min},
               {"rate_sum", cls.rate_sum(o.delta_big)},
               {"attempts", sched.attempts},
               {"successes", sched.successes},
               {"failure_fraction", sched.failure_fraction()}};
        int code = ok;
        try {
            j["gap_check"] = io::gap_verdict_to_json(check_gap_bound(s, o.delta_big, cls, h));
            j["feasible"] = true;
        } catch (const InfeasibleError& e) {
            j["gap_check"] = nullptr;
            j["feasible"] = false;
            j["reason"] = e.what();
            code = infeasible;
        }
        out << j.dump(2) << "\n";
        return code;
    });
}

struct DosScanOptions {
    std::uint64_t first = 0;
    std::uint64_t count = 500;
    std::size_t top = 10;
    std::uint64_t noise_seed = benchmark::noise_seed;
    bool verdicts = false;
};

/// Seed selection for the benchmark fixture: signals with the reported transition count,
/// ranked by distance of the DoS measure to the reported value.
inline int cmd_dos_scan(const DosScanOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto& ref = benchmark::reference;
        struct Hit {
            std::uint64_t seed;
            double xi, ff, rs;
        };
        std::vector<Hit> hits;
        for (std::uint64_t seed = o.first; seed < o.first + o.count; ++seed) {
            const DoSSignal s = generate(seed, benchmark::generator, benchmark::horizon);
            if (dos::transitions_count(s, 0.0, s.horizon()) != ref.transitions) continue;
            const DoSClassParams cls = detail::observed_class(s);
            const auto sched = successful_transmissions(s, benchmark::delta_big, s.horizon());
            hits.push_back({seed, dos_measure(s, 0.0, s.horizon()), sched.failure_fraction(),
                            cls.rate_sum(benchmark::delta_big)});
        }
        std::sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
            return std::abs(a.xi - ref.dos_measure) < std::abs(b.xi - ref.dos_measure);
        });
        if (hits.size() > o.top) hits.resize(o.top);
        out << std::fixed << std::setprecision(4);
        out << "seed  dos_measure  failure_fraction  rate_sum" << (o.verdicts ? "  verdicts" : "")
            << "\n";
        for (const auto& h : hits) {
            out << std::setw(4) << h.seed << "  " << std::setw(11) << h.xi << "  " << std::setw(16)
                << h.ff << "  " << std::setw(8) << h.rs;
            if (o.verdicts) {
                out << "  ";
                const DoSSignal s = generate(h.seed, benchmark::generator, benchmark::horizon);
                for (const auto& r : repro::run_all(s, o.noise_seed)) {
                    out << (r.metrics.stable_verdict ? 'S' : 'U');
                }
            }
            out << "\n";
        }
        return int(ok);
    });
}

// ---------------------------------------------------------------- sim

struct SimOptions {
    std::string config;
    std::string trace_path;
    std::string metrics_path;
    std::optional<int> h;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> noise_seed;
    std::optional<std::string> mode;
    int sweep = 0;
};

struct SimRun {
    SimTrace trace;
    SimMetrics metrics;
};

/// Envelope verdict when the run satisfies the hypotheses of the decay bound, else nullopt.
inline std::optional<bool> envelope_verdict(const ExperimentConfig& cfg, const DoSSignal& dos,
                                            const SimTrace& tr) {
    if (cfg.mode != SimMode::remote || cfg.T_c > 0.0 || tr.z.empty()) return std::nullopt;
    const double delta = cfg.delta();
    try {
        const DerivedConstants c = derive_constants(cfg.design(cfg.sim_sigma_fraction), cfg.h, delta);
        if (delta > bounds::delta_max(c.mu_A, c.sigma, c.norm_Phi)) return std::nullopt;
        const DoSClassParams cls = config::resolve_class(cfg, dos);
        const double Q = compute_Q(cls, cfg.delta_big);
        if (cfg.h < min_prediction_horizon(c, Q, cfg.delta_big, delta)) return std::nullopt;
        const EnvelopeConstants env = decay_envelope(c, Q, cfg.delta_big, cfg.h, delta);
        return check_envelope(tr, env, c, tr.w_sup());
    } catch (const Error&) {
        return std::nullopt;
    }
}

inline SimRun run_once(const ExperimentConfig& cfg) {
    const LtiPlant plant(cfg.A, cfg.B);
    const DoSSignal dos = config::resolve_signal(cfg);
    SimTrace tr = simulate(plant, cfg.K, cfg.sim_config(), dos, cfg.noise, cfg.x0);
    const SimMetrics m =
        metrics(tr, sim::default_divergence_threshold(cfg.x0), envelope_verdict(cfg, dos, tr));
    return {std::move(tr), m};
}

inline ExperimentConfig apply_overrides(ExperimentConfig cfg, const SimOptions& o) {
    if (o.h) {
        if (*o.h < 1) throw io::ConfigError("--h", "must be >= 1");
        cfg.h = *o.h;
    }
    if (o.seed) {
        if (cfg.dos.kind != DoSSource::Kind::generator) {
            throw io::ConfigError("--seed", "config DoS source is not a generator");
        }
        cfg.dos.seed = *o.seed;
    }
    if (o.noise_seed) cfg.noise.seed = *o.noise_seed;
    if (o.mode) cfg.mode = config::parse_mode(*o.mode, "--mode");
    return cfg;
}

inline int cmd_sim(const SimOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const ExperimentConfig cfg = apply_overrides(config::load(o.config), o);
        if (o.sweep <= 0) {
            const SimRun run = run_once(cfg);
            const json mj = io::metrics_to_json(run.metrics, run.trace);
            if (!o.trace_path.empty()) {
                std::ofstream f(o.trace_path);
                if (!f) throw io::ConfigError(o.trace_path, "cannot open for writing");
                sim::write_trace_csv(f, run.trace);
            }
            if (!o.metrics_path.empty()) detail::write_text(o.metrics_path, mj.dump(2) + "\n");
            out << mj.dump(2) << "\n";
            return run.metrics.stable_verdict ? int(ok) : int(unstable);
        }

        // Independent runs with shifted seeds; each task owns its config copy.
        std::vector<std::future<SimRun>> jobs;
        for (int i = 0; i < o.sweep; ++i) {
            ExperimentConfig c = cfg;
            c.noise.seed += static_cast<std::uint64_t>(i);
            if (c.dos.kind == DoSSource::Kind::generator) c.dos.seed += static_cast<std::uint64_t>(i);
            jobs.push_back(std::async(std::launch::async, [c] { return run_once(c); }));
        }
        json runs = json::array();
        bool all_stable = true;
        for (int i = 0; i < o.sweep; ++i) {
            const SimRun r = jobs[static_cast<std::size_t>(i)].get();
            json mj = io::metrics_to_json(r.metrics, r.trace);
            mj["noise_seed"] = cfg.noise.seed + static_cast<std::uint64_t>(i);
            if (cfg.dos.kind == DoSSource::Kind::generator) {
                mj["dos_seed"] = cfg.dos.seed + static_cast<std::uint64_t>(i);
            }
            all_stable = all_stable && r.metrics.stable_verdict;
            runs.push_back(std::move(mj));
        }
        const json summary{{"format", io::format_version}, {"runs", runs}, {"all_stable", all_stable}};
        if (!o.metrics_path.empty()) detail::write_text(o.metrics_path, summary.dump(2) + "\n");
        out << summary.dump(2) << "\n";
        return all_stable ? int(ok) : int(unstable);
    });
}

// ---------------------------------------------------------------- repro

struct ReproOptions {
    std::string trace_dir;
};

inline int cmd_repro(const ReproOptions& o, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const DoSSignal dos = benchmark::recorded_signal();
        bool failed = false;

        out << "Constants (computed vs reported)\n";
        out << std::left << std::setw(18) << "name" << std::right << std::setw(14) << "computed"
            << std::setw(12) << "reported" << std::setw(10) << "tol" << "  flag\n";
        for (const auto& r : repro::constants_table(dos)) {
            out << std::left << std::setw(18) << r.name << std::right << std::setprecision(6)
                << std::setw(14) << r.computed << std::setw(12) << r.reported << std::setw(10);
            if (r.tolerance < 0.0) {
                out << "-";
            } else {
                out << r.tolerance;
            }
            out << "  " << repro::to_string(r.flag);
            if (!r.note.empty()) out << "  (" << r.note << ")";
            out << "\n";
            failed = failed || r.flag == repro::Flag::fail;
        }

        out << "\nScenarios (DoS seed " << benchmark::dos_seed << ", noise seed "
            << benchmark::noise_seed << ")\n";
        for (const auto& r : repro::run_all(dos)) {
            const bool match = r.matches();
            failed = failed || !match;
            out << std::left << std::setw(12) << r.scenario.name << std::right << "  "
                << (r.metrics.stable_verdict ? "stable  " : "unstable") << "  expected "
                << (r.scenario.expect_stable ? "stable  " : "unstable") << "  max|x| "
                << std::setprecision(4) << r.metrics.max_state_norm << "  failure_fraction "
                << r.metrics.failure_fraction << "  " << (match ? "PASS" : "FAIL") << "\n";
            if (!o.trace_dir.empty()) {
                std::filesystem::create_directories(o.trace_dir);
                std::string stem = r.scenario.name;
                std::replace(stem.begin(), stem.end(), ' ', '_');
                stem.erase(std::remove(stem.begin(), stem.end(), '='), stem.end());
                const auto base = std::filesystem::path(o.trace_dir) / stem;
                std::ofstream f(base.string() + ".csv");
                if (!f) throw io::ConfigError(base.string() + ".csv", "cannot open for writing");
                sim::write_trace_csv(f, r.trace);
                detail::write_text(base.string() + ".json",
                                   io::metrics_to_json(r.metrics, r.trace).dump(2) + "\n");
            }
        }
        return failed ? int(usage) : int(ok);
    });
}

// ---------------------------------------------------------------- entry point

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Networked control under denial-of-service: bounds, DoS signals, simulation"};
    app.name("dosnet");
    // "--h" is the prediction horizon, so help is long-form only.
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);

    BoundsOptions bo;
    auto* bounds_cmd = app.add_subcommand("bounds", "Derived stability constants for a config");
    bounds_cmd->add_option("config", bo.config, "Experiment config (JSON)")->required();
    bounds_cmd->add_option("--h", bo.h, "Prediction horizon override");

    auto* dos_cmd = app.add_subcommand("dos", "Generate, verify or scan DoS signals");
    dos_cmd->require_subcommand(1);
    DosGenOptions go;
    auto* gen = dos_cmd->add_subcommand("gen", "Generate a random off/on DoS signal");
    gen->add_option("--seed", go.seed, "Generator seed");
    gen->add_option("--horizon", go.horizon, "Signal horizon [s]");
    gen->add_option("--off", go.off, "Off-time range LO HI [s]")->expected(2);
    gen->add_option("--on", go.on, "On-time range LO HI [s]")->expected(2);
    gen->add_option("--out", go.out_path, "Output file (default stdout)");
    DosVerifyOptions vo;
    auto* verify = dos_cmd->add_subcommand("verify", "Fit class constants and check the gap bound");
    verify->add_option("signal", vo.signal, "DoS signal file")->required();
    verify->add_option("--delta", vo.delta_big, "Transmission period Delta [s]")->required();
    verify->add_option("--tau-d", vo.tau_D, "Average dwell time (number or inf)");
    verify->add_option("--T", vo.T, "Duration ratio (number or inf)");
    DosScanOptions so;
    auto* scan = dos_cmd->add_subcommand("scan", "Rank generator seeds against the benchmark statistics");
    scan->add_option("--first", so.first, "First seed");
    scan->add_option("--count", so.count, "Number of seeds");
    scan->add_option("--top", so.top, "Rows to print");
    scan->add_option("--noise-seed", so.noise_seed, "Noise seed for --verdicts");
    scan->add_flag("--verdicts", so.verdicts, "Also run the three benchmark scenarios");

    SimOptions mo;
    auto* sim_cmd = app.add_subcommand("sim", "Simulate the closed loop");
    sim_cmd->add_option("config", mo.config, "Experiment config (JSON)")->required();
    sim_cmd->add_option("--trace", mo.trace_path, "Trace CSV output");
    sim_cmd->add_option("--metrics", mo.metrics_path, "Metrics JSON output");
    sim_cmd->add_option("--h", mo.h, "Prediction horizon override");
    sim_cmd->add_option("--seed", mo.seed, "DoS generator seed override");
    sim_cmd->add_option("--noise-seed", mo.noise_seed, "Noise seed override");
    sim_cmd->add_option("--mode", mo.mode, "colocated | remote | remote_no_buffer");
    sim_cmd->add_option("--sweep", mo.sweep, "Run N seed-shifted simulations concurrently")
        ->check(CLI::NonNegativeNumber);

    ReproOptions ro;
    auto* repro_cmd = app.add_subcommand("repro", "Reproduce the benchmark example");
    repro_cmd->add_option("--trace-dir", ro.trace_dir, "Write scenario traces here");

    std::vector<std::string> argv_store{"dosnet"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? int(ok) : int(usage);
    }

    if (bounds_cmd->parsed()) return cmd_bounds(bo, out, err);
    if (gen->parsed()) return cmd_dos_gen(go, out, err);
    if (verify->parsed()) return cmd_dos_verify(vo, out, err);
    if (scan->parsed()) return cmd_dos_scan(so, out, err);
    if (sim_cmd->parsed()) return cmd_sim(mo, out, err);
    if (repro_cmd->parsed()) return cmd_repro(ro, out, err);
    return usage;
}

}  // namespace dosnet::cli

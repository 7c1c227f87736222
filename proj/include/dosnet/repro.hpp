#pragma once

// The three benchmark runs (co-located; remote h = 1; remote h = 5) on the
// recorded DoS and noise seeds, plus the constants comparison table.

#include <cmath>
#include <string>
#include <vector>

#include "dosnet/benchmark_example.hpp"
#include "dosnet/bounds.hpp"
#include "dosnet/closed_loop_sim.hpp"
#include "dosnet/dos_model.hpp"

namespace dosnet::repro {

struct Scenario {
    std::string name;
    SimMode mode;
    int h;
    bool expect_stable;
};

inline std::vector<Scenario> scenarios() {
    return {{"colocated", SimMode::colocated, 1, true},
            {"remote h=1", SimMode::remote, 1, false},
            {"remote h=5", SimMode::remote, 5, true}};
}

inline Vector initial_state() {
    Vector x0(2);
    x0 << 1.0, -1.0;
    return x0;
}

inline NoiseSpec noise(std::uint64_t seed = benchmark::noise_seed) {
    return {benchmark::noise_bound, benchmark::noise_bound, seed, benchmark::noise_decay_at};
}

inline SimConfig sim_config(const Scenario& s) {
    SimConfig c;
    c.delta_big = benchmark::delta_big;
    c.b = 1;
    c.h = s.h;
    c.horizon = benchmark::horizon;
    c.substeps = 10;
    c.mode = s.mode;
    return c;
}

struct ScenarioResult {
    Scenario scenario;
    SimTrace trace;
    SimMetrics metrics;
    bool matches() const noexcept { return metrics.stable_verdict == scenario.expect_stable; }
};

inline ScenarioResult run(const Scenario& s, const DoSSignal& dos, std::uint64_t noise_seed) {
    const LtiPlant plant(benchmark::plant_A(), benchmark::plant_B());
    const Vector x0 = initial_state();
    SimTrace tr = simulate(plant, benchmark::gain_K(), sim_config(s), dos, noise(noise_seed), x0);
    SimMetrics m = metrics(tr, sim::default_divergence_threshold(x0));
    return {s, std::move(tr), m};
}

inline std::vector<ScenarioResult> run_all(const DoSSignal& dos,
                                           std::uint64_t noise_seed = benchmark::noise_seed) {
    std::vector<ScenarioResult> out;
    for (const auto& s : scenarios()) out.push_back(run(s, dos, noise_seed));
    return out;
}

enum class Flag { pass, fail, info };

inline const char* to_string(Flag f) {
    switch (f) {
        case Flag::pass: return "PASS";
        case Flag::fail: return "FAIL";
        case Flag::info: return "INFO";
    }
    return "?";
}

struct Row {
    std::string name;
    double computed;
    double reported;
    double tolerance;  // negative: informational only
    Flag flag;
    std::string note;
};

inline Row compare(std::string name, double computed, double reported, double tol,
                   std::string note = {}) {
    Flag f = tol < 0.0 ? Flag::info
                       : (std::abs(computed - reported) <= tol ? Flag::pass : Flag::fail);
    return {std::move(name), computed, reported, tol, f, std::move(note)};
}

/// Computed-versus-reported table for the benchmark plant and the recorded DoS signal.
inline std::vector<Row> constants_table(const DoSSignal& dos) {
    const auto& ref = benchmark::reference;
    const DesignInputs in{benchmark::plant_A(), benchmark::plant_B(), benchmark::gain_K(), {},
                          reporting_sigma_fraction};
    const DerivedConstants c = derive_constants(in, 1, benchmark::delta);
    const double dmax = bounds::delta_max(c.mu_A, c.gamma1 / c.gamma2, c.norm_Phi);

    std::vector<Row> rows;
    rows.push_back(compare("gamma1", c.gamma1, ref.gamma1, 2e-3));
    rows.push_back(compare("gamma2", c.gamma2, ref.gamma2, 2e-3));
    rows.push_back(compare("alpha1", c.alpha1, ref.alpha1, 2e-3));
    rows.push_back(compare("alpha2", c.alpha2, ref.alpha2, 2e-3));
    rows.push_back(compare("norm_Phi", c.norm_Phi, ref.norm_Phi, 2e-3));
    rows.push_back(compare("mu_A", c.mu_A, ref.mu_A, 1e-12));
    rows.push_back(compare("delta_max", dmax, ref.delta_max, 2e-4));
    rows.push_back(compare("omega1", c.omega1, ref.omega1, -1.0,
                           "formula value at sigma -> gamma1/gamma2; reported value not reproducible"));
    rows.push_back(compare("omega2", c.omega2, ref.omega2, -1.0,
                           "formula value at sigma -> gamma1/gamma2; reported value not reproducible"));

    const double h = dos.horizon();
    const auto n = static_cast<double>(dos::transitions_count(dos, 0.0, h));
    const double xi = dos_measure(dos, 0.0, h);
    const ObservedRates r = observed_rates(dos);
    const ClassFit fit = fit_class_params(dos, ref.tau_D, ref.T);
    const DoSClassParams observed{fit.eta_min, r.tau_D, fit.kappa_min, r.T};
    const TransmissionSchedule sched = successful_transmissions(dos, benchmark::delta_big, h);
    rows.push_back(compare("transitions", n, static_cast<double>(ref.transitions), 0.0));
    rows.push_back(compare("dos_measure", xi, ref.dos_measure, 0.5));
    rows.push_back(compare("tau_D", r.tau_D, ref.tau_D, 0.02));
    rows.push_back(compare("T", r.T, ref.T, 0.02));
    rows.push_back(compare("rate_sum", observed.rate_sum(benchmark::delta_big), ref.rate_sum, 0.01));
    rows.push_back(compare("failure_fraction", sched.failure_fraction(), ref.failure_fraction, 0.02));
    rows.push_back(compare("eta_fit", fit.eta_min, ref.eta, -1.0, "tightest eta at the reported tau_D, T"));
    rows.push_back(compare("kappa_fit", fit.kappa_min, ref.kappa, -1.0,
                           "tightest kappa at the reported tau_D, T"));

    // Horizon pipeline on the reported rate and class constants.
    const RateConstants reported{ref.omega1, ref.omega2};
    const DoSClassParams cls{ref.eta, ref.tau_D, ref.kappa, ref.T};
    const double Q = compute_Q(cls, benchmark::delta_big);
    rows.push_back(compare("horizon_threshold",
                           bounds::horizon_threshold(reported, Q, benchmark::delta_big),
                           ref.horizon_threshold, -1.0, "reported omegas, eta = 3.1"));
    rows.push_back(compare("h_min",
                           min_prediction_horizon(reported, Q, benchmark::delta_big, benchmark::delta),
                           ref.h_min, 0.0, "reported omegas, eta = 3.1"));
    return rows;
}

}  // namespace dosnet::repro

#include <cmath>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "dosnet/benchmark_example.hpp"
#include "dosnet/closed_loop_sim.hpp"
#include "dosnet/repro.hpp"
#include "support/random_models.hpp"

using namespace dosnet;
using namespace testsupport;

namespace {

LtiPlant benchmark_plant() { return {benchmark::plant_A(), benchmark::plant_B()}; }

SimConfig base_config(SimMode mode, int h = 1, double horizon = 10.0) {
    SimConfig c;
    c.delta_big = 0.1;
    c.b = 1;
    c.h = h;
    c.horizon = horizon;
    c.substeps = 10;
    c.mode = mode;
    return c;
}

Vector x0() { return repro::initial_state(); }

DoSSignal pulse_train(double delta_big, double horizon) {
    std::vector<DoSInterval> iv;
    for (int n = 0; n * delta_big <= horizon + 1e-12; ++n) iv.push_back({std::min(n * delta_big, horizon), 0.0});
    return DoSSignal(iv, horizon);
}

}  // namespace

TEST(LtiPlant, RejectsUnstabilizablePairs) {
    Matrix a(2, 2), b(2, 1);
    a << 1.0, 0.0, 0.0, 2.0;
    b << 1.0, 0.0;
    EXPECT_THROW(LtiPlant(a, b), DomainError);
    b << 1.0, 1.0;
    EXPECT_NO_THROW(LtiPlant(a, b));
    a << 1.0, 0.0, 0.0, -2.0;
    b << 1.0, 0.0;
    EXPECT_NO_THROW(LtiPlant(a, b));  // the uncontrollable mode is stable
    EXPECT_THROW(LtiPlant(Matrix::Zero(2, 2), Matrix::Zero(3, 1)), DimensionError);
}

TEST(Simulate, EquilibriumStaysAtZero) {
    for (SimMode mode : {SimMode::colocated, SimMode::remote, SimMode::remote_no_buffer}) {
        const SimTrace tr = simulate(benchmark_plant(), benchmark::gain_K(), base_config(mode, 3),
                                     DoSSignal::empty(10.0), NoiseSpec::none(), Vector::Zero(2));
        for (std::size_t i = 0; i < tr.size(); ++i) {
            EXPECT_TRUE(tr.x[i].isZero(0.0));
            EXPECT_TRUE(tr.u[i].isZero(0.0));
        }
    }
}

TEST(Simulate, NoAttackClosedLoopDecays) {
    const SimTrace tr = simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::colocated, 1, 5.0),
                                 DoSSignal::empty(5.0), NoiseSpec::none(), x0());
    EXPECT_LE(tr.x.back().norm(), 1e-2 * x0().norm());
    for (const auto& x : tr.x) EXPECT_LE(x.norm(), x0().norm() * (1.0 + 1e-12));
}

TEST(Simulate, GridAndBookkeeping) {
    const DoSSignal dos({{0.25, 0.3}}, 2.0);
    const SimTrace tr =
        simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote, 4, 2.0), dos, NoiseSpec::none(), x0());
    EXPECT_EQ(tr.size(), 201u);
    EXPECT_NEAR(tr.times.back(), 2.0, 1e-12);
    EXPECT_EQ(tr.attempts, 21u);
    // Attempts at 0.3, 0.4 and 0.5 fall in [0.25, 0.55[.
    EXPECT_EQ(tr.z.size(), 18u);
    EXPECT_EQ(tr.attempt[0], 1);
    EXPECT_EQ(tr.success[0], 1);
    EXPECT_EQ(tr.buffer_depth[0], 4);
    EXPECT_EQ(tr.packet_index[0], 0);
    EXPECT_EQ(tr.dos_active[30], 1);
    EXPECT_EQ(tr.success[30], 0);
    EXPECT_EQ(tr.attempt[31], 0);
}

TEST(Simulate, BufferRunsOutDuringLongOutage) {
    const DoSSignal dos({{0.05, 1.0}}, 3.0);
    const SimTrace tr =
        simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote, 3, 3.0), dos, NoiseSpec::none(), x0());
    // Packet from t = 0 covers [0, 0.3[; from 0.3 the last control is held until 1.1.
    EXPECT_EQ(tr.buffer_depth[25], 1);
    EXPECT_EQ(tr.buffer_depth[30], 0);
    EXPECT_EQ(tr.packet_index[30], 2);
    EXPECT_EQ(tr.u[30], tr.u[29]);
    EXPECT_EQ(tr.u[100], tr.u[29]);
    EXPECT_EQ(tr.success[110], 1);
    EXPECT_EQ(tr.buffer_depth[110], 3);
}

TEST(Simulate, RemoteWithoutDeliveryAppliesZero) {
    const SimTrace tr = simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote, 5, 1.0),
                                 pulse_train(0.1, 1.0), NoiseSpec::none(), x0());
    EXPECT_TRUE(tr.z.empty());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        EXPECT_TRUE(tr.u[i].isZero(0.0));
        EXPECT_EQ(tr.packet_index[i], -1);
    }
    EXPECT_GT(tr.x.back().norm(), x0().norm());
}

TEST(Simulate, ComputationDelaySkipsEntries) {
    SimConfig cfg = base_config(SimMode::remote, 5, 1.0);
    cfg.T_c = 0.15;  // ceil(0.15 / 0.1) = 2 entries
    EXPECT_EQ(cfg.skip(), 2u);
    const SimTrace tr = simulate(benchmark_plant(), benchmark::gain_K(), cfg, DoSSignal::empty(1.0),
                                 NoiseSpec::none(), x0());
    EXPECT_EQ(tr.packet_index[0], -1);
    EXPECT_TRUE(tr.u[0].isZero(0.0));
    EXPECT_EQ(tr.packet_index[20], 2);  // packet from z = 0 delivered at 0.2
    EXPECT_EQ(tr.packet_index[30], 2);  // packet from z = 0.1 delivered at 0.3
    cfg.T_c = 0.5;
    EXPECT_THROW(simulate(benchmark_plant(), benchmark::gain_K(), cfg, DoSSignal::empty(1.0), NoiseSpec::none(), x0()),
                 DelayExceedsHorizonError);
}

TEST(Simulate, DeterministicForFixedSeeds) {
    const DoSSignal dos = benchmark::recorded_signal();
    const NoiseSpec noise{0.05, 0.05, 99, std::nullopt};
    const SimConfig cfg = base_config(SimMode::remote, 5, 20.0);
    const SimTrace a = simulate(benchmark_plant(), benchmark::gain_K(), cfg, dos, noise, x0());
    const SimTrace b = simulate(benchmark_plant(), benchmark::gain_K(), cfg, dos, noise, x0());
    std::ostringstream sa, sb;
    sim::write_trace_csv(sa, a);
    sim::write_trace_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a.x, b.x);
    const SimTrace c = simulate(benchmark_plant(), benchmark::gain_K(), cfg, dos, {0.05, 0.05, 100, std::nullopt}, x0());
    EXPECT_NE(a.x, c.x);
    EXPECT_LE(a.d_sup, 0.05 * std::sqrt(2.0));
    EXPECT_LE(a.n_sup, 0.05 * std::sqrt(2.0));
    EXPECT_GT(a.d_sup, 0.0);
}

TEST(Simulate, ConcurrentRunsAreIsolated) {
    const DoSSignal dos = benchmark::recorded_signal();
    const SimConfig cfg = base_config(SimMode::remote, 5, 20.0);
    const NoiseSpec noise{0.01, 0.01, 3, std::nullopt};
    const SimTrace ref = simulate(benchmark_plant(), benchmark::gain_K(), cfg, dos, noise, x0());
    std::vector<SimTrace> out(4);
    std::vector<std::thread> threads;
    for (auto& slot : out) {
        threads.emplace_back([&, p = &slot] { *p = simulate(benchmark_plant(), benchmark::gain_K(), cfg, dos, noise, x0()); });
    }
    for (auto& t : threads) t.join();
    for (const auto& tr : out) EXPECT_EQ(tr.x, ref.x);
}

TEST(Simulate, SubstepRefinementIsExactWithoutNoise) {
    const DoSSignal dos = benchmark::recorded_signal();
    SimConfig cfg = base_config(SimMode::remote, 5, 20.0);
    const SimTrace a = simulate(benchmark_plant(), benchmark::gain_K(), cfg, dos, NoiseSpec::none(), x0());
    cfg.substeps = 20;
    const SimTrace b = simulate(benchmark_plant(), benchmark::gain_K(), cfg, dos, NoiseSpec::none(), x0());
    EXPECT_LE(std::abs(a.x.back().norm() - b.x.back().norm()), 1e-6 * b.x.back().norm());
}

TEST(Simulate, RejectsInconsistentInputs) {
    const DoSSignal dos = DoSSignal::empty(10.0);
    EXPECT_THROW(simulate(benchmark_plant(), Matrix::Zero(1, 2), base_config(SimMode::remote), dos, NoiseSpec::none(), x0()),
                 DimensionError);
    EXPECT_THROW(simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote), dos, NoiseSpec::none(),
                          Vector::Zero(3)),
                 DimensionError);
    EXPECT_THROW(simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote, 1, 20.0), dos,
                          NoiseSpec::none(), x0()),
                 DomainError);
    EXPECT_THROW(simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote), dos,
                          NoiseSpec{-1.0, 0.0, 0, std::nullopt}, x0()),
                 DomainError);
}

TEST(Benchmark, RemoteWithoutBufferDiverges) {
    const SimTrace tr = simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote, 1, 50.0),
                                 benchmark::recorded_signal(), repro::noise(), x0());
    const SimMetrics m = metrics(tr, sim::default_divergence_threshold(x0()));
    EXPECT_GT(m.max_state_norm, 1e3 * x0().norm());
    EXPECT_FALSE(m.stable_verdict);
    EXPECT_NEAR(m.failure_fraction, 0.70, 0.02);
}

TEST(Benchmark, ScenarioVerdicts) {
    for (const auto& r : repro::run_all(benchmark::recorded_signal())) {
        EXPECT_TRUE(r.matches()) << r.scenario.name;
    }
}

TEST(LyapunovTrace, Examples) {
    const SimTrace zero = simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote),
                                   DoSSignal::empty(10.0), NoiseSpec::none(), Vector::Zero(2));
    for (const auto& [t, v] : lyapunov_trace(zero, zero.P)) EXPECT_EQ(v, 0.0);
    const SimTrace tr = simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote, 3),
                                 benchmark::recorded_signal(), repro::noise(), x0());
    const auto vi = lyapunov_trace(tr, Matrix::Identity(2, 2));
    const SymmetricSpectrum s = symmetric_extremes(tr.P);
    const auto vp = lyapunov_trace(tr, tr.P);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        EXPECT_NEAR(vi[i].second, tr.x[i].squaredNorm(), 1e-12 * (1.0 + tr.x[i].squaredNorm()));
        EXPECT_GE(vp[i].second, s.min_eig * tr.x[i].squaredNorm() * (1.0 - 1e-12));
        EXPECT_LE(vp[i].second, s.max_eig * tr.x[i].squaredNorm() * (1.0 + 1e-12));
        EXPECT_DOUBLE_EQ(vp[i].second, tr.V[i]);
    }
    EXPECT_THROW(lyapunov_trace(tr, Matrix::Identity(3, 3)), DimensionError);
}

namespace {

struct EnvelopeCase {
    SimTrace trace;
    DerivedConstants c;
    EnvelopeConstants env;
};

EnvelopeCase envelope_case(const Vector& x_init) {
    // delta inside the admissible bound at sigma fraction 0.5.
    const double delta = 0.05;
    const DerivedConstants probe = derive_constants(
        {benchmark::plant_A(), benchmark::plant_B(), benchmark::gain_K(), {}, simulation_sigma_fraction}, 1, delta);
    EXPECT_LE(delta, bounds::delta_max(probe.mu_A, probe.sigma, probe.norm_Phi));
    SimConfig cfg = base_config(SimMode::remote, 1, 20.0);
    cfg.b = 2;
    const DoSSignal dos({{0.5, 0.6}, {3.0, 0.35}, {7.2, 0.9}, {12.0, 0.2}}, 20.0);
    const ObservedRates r = observed_rates(dos);
    const ClassFit f = fit_class_params(dos, r.tau_D, r.T);
    const DoSClassParams cls{f.eta_min, r.tau_D, f.kappa_min, r.T};
    const double Q = compute_Q(cls, cfg.delta_big);
    cfg.h = min_prediction_horizon(probe, Q, cfg.delta_big, delta);
    const DerivedConstants c = derive_constants(
        {benchmark::plant_A(), benchmark::plant_B(), benchmark::gain_K(), {}, simulation_sigma_fraction}, cfg.h, delta);
    return {simulate(benchmark_plant(), benchmark::gain_K(), cfg, dos, NoiseSpec::none(), x_init), c,
            decay_envelope(c, Q, cfg.delta_big, cfg.h, delta)};
}

}  // namespace

TEST(CheckEnvelope, HoldsOnNoiseFreeRunAndDetectsInflation) {
    EnvelopeCase ec = envelope_case(x0());
    EXPECT_TRUE(check_envelope(ec.trace, ec.env, ec.c, 0.0));
    // Inflate the state at the second success far above the bound.
    std::size_t seen = 0;
    for (std::size_t i = 0; i < ec.trace.size(); ++i) {
        if (ec.trace.success[i] && ++seen == 2) {
            ec.trace.x[i] *= 1e6;
            break;
        }
    }
    EXPECT_FALSE(check_envelope(ec.trace, ec.env, ec.c, 0.0));
}

TEST(CheckEnvelope, ZeroStateZeroNoiseIsTrivial) {
    const EnvelopeCase ec = envelope_case(Vector::Zero(2));
    EXPECT_TRUE(check_envelope(ec.trace, ec.env, ec.c, 0.0));
}

TEST(CheckEnvelope, RequiresSuccesses) {
    const EnvelopeCase ec = envelope_case(x0());
    SimTrace tr = ec.trace;
    std::fill(tr.success.begin(), tr.success.end(), 0);
    EXPECT_THROW(check_envelope(tr, ec.env, ec.c, 0.0), DomainError);
    EXPECT_THROW(check_envelope(ec.trace, ec.env, ec.c, -1.0), DomainError);
}

TEST(Metrics, FailureFractionExtremes) {
    const SimTrace clean = simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote, 1, 5.0),
                                    DoSSignal::empty(5.0), NoiseSpec::none(), x0());
    EXPECT_EQ(metrics(clean, 1e3).failure_fraction, 0.0);
    const SimTrace jammed = simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote, 1, 1.0),
                                     pulse_train(0.1, 1.0), NoiseSpec::none(), x0());
    EXPECT_EQ(metrics(jammed, 1e3).failure_fraction, 1.0);
    EXPECT_THROW(metrics(clean, 0.0), DomainError);
}

TEST(Metrics, VerdictRequiresConvergenceAfterNoiseStops) {
    const SimConfig cfg = base_config(SimMode::remote, 5, 10.0);
    const DoSSignal dos = DoSSignal::empty(10.0);
    const SimTrace quiet = simulate(benchmark_plant(), benchmark::gain_K(), cfg, dos, {0.05, 0.05, 1, 5.0}, x0());
    EXPECT_TRUE(metrics(quiet, 1e3).stable_verdict);
    const SimTrace noisy = simulate(benchmark_plant(), benchmark::gain_K(), cfg, dos, {0.05, 0.05, 1, 9.99}, x0());
    EXPECT_FALSE(metrics(noisy, 1e3).stable_verdict);  // bounded but not yet converged
    EXPECT_TRUE(metrics(noisy, 1e3).max_state_norm < 1e3);
}

TEST(TraceCsv, HeaderAndRows) {
    const SimTrace tr = simulate(benchmark_plant(), benchmark::gain_K(), base_config(SimMode::remote, 2, 1.0),
                                 DoSSignal::empty(1.0), NoiseSpec::none(), x0());
    std::ostringstream os;
    sim::write_trace_csv(os, tr);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "t,x1,x2,u1,u2,V,dos_active,attempt,success,buffer_depth");
    std::getline(is, line);
    EXPECT_EQ(line.substr(0, 6), "0,1,-1");
    std::size_t rows = 1;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, tr.size());
}

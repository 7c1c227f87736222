#pragma once

// Sampled-data closed loop under DoS: the continuous plant dx = Ax + Bu + d is
// advanced exactly (zero-order hold of (A, [B I])) on a sub-grid of the
// controller period delta, with u and d held on each sub-step. Transmission
// attempts happen every Delta = b*delta and succeed iff the network is not in
// DoS at that instant.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dosnet/bounds.hpp"
#include "dosnet/control_laws.hpp"
#include "dosnet/dos_model.hpp"
#include "dosnet/errors.hpp"
#include "dosnet/matrix_kernels.hpp"
#include "dosnet/rng.hpp"

namespace dosnet {

/// Continuous-time plant (A, B); construction checks that (A, B) is stabilizable.
class LtiPlant {
public:
    LtiPlant(Matrix A, Matrix B) : A_(std::move(A)), B_(std::move(B)) {
        kernels::require_finite(A_, "plant A");
        kernels::require_finite(B_, "plant B");
        kernels::require_square(A_, "plant A");
        if (B_.rows() != A_.rows()) throw DimensionError("plant: B must have as many rows as A");
        check_stabilizable();
    }

    const Matrix& A() const noexcept { return A_; }
    const Matrix& B() const noexcept { return B_; }
    Eigen::Index n() const noexcept { return A_.rows(); }
    Eigen::Index m() const noexcept { return B_.cols(); }

private:
    // PBH test on the closed right half plane.
    void check_stabilizable() const {
        const Eigen::Index n = A_.rows();
        const Eigen::VectorXcd eig = kernels::eigenvalues(A_);
        const double scale = std::max({1.0, A_.cwiseAbs().maxCoeff(), B_.cwiseAbs().maxCoeff()});
        for (Eigen::Index i = 0; i < eig.size(); ++i) {
            if (eig[i].real() < 0.0) continue;
            Eigen::MatrixXcd pbh(n, n + B_.cols());
            pbh.leftCols(n) = A_.cast<std::complex<double>>() -
                              eig[i] * Eigen::MatrixXcd::Identity(n, n);
            pbh.rightCols(B_.cols()) = B_.cast<std::complex<double>>();
            Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(pbh.transpose());
            qr.setThreshold(1e-10 * scale);
            if (qr.rank() < n) {
                throw DomainError("plant: (A, B) is not stabilizable (uncontrollable eigenvalue " +
                                  std::to_string(eig[i].real()) + ")");
            }
        }
    }

    Matrix A_;
    Matrix B_;
};

struct NoiseSpec {
    double d_bound = 0.0;
    double n_bound = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> decay_at;  // both signals are zero from this time on

    void validate() const {
        if (!std::isfinite(d_bound) || !std::isfinite(n_bound) || d_bound < 0.0 || n_bound < 0.0) {
            throw DomainError("NoiseSpec: bounds must be finite and >= 0");
        }
    }
    static NoiseSpec none() { return {}; }
};

enum class SimMode { colocated, remote, remote_no_buffer };

inline const char* to_string(SimMode m) {
    switch (m) {
        case SimMode::colocated: return "colocated";
        case SimMode::remote: return "remote";
        case SimMode::remote_no_buffer: return "remote_no_buffer";
    }
    return "?";
}

struct SimConfig {
    double delta_big = 0.1;  // Delta
    int b = 1;               // delta = Delta / b
    int h = 1;
    double horizon = 10.0;
    int substeps = 10;
    SimMode mode = SimMode::remote;
    double T_c = 0.0;  // computation delay, remote modes only
    Matrix M;          // Lyapunov weight for V; identity when empty

    double delta() const noexcept { return delta_big / b; }

    void validate() const {
        if (!(delta_big > 0.0) || !std::isfinite(delta_big)) {
            throw DomainError("SimConfig: Delta must be positive");
        }
        if (b < 1) throw DomainError("SimConfig: b must be >= 1");
        if (h < 1) throw DomainError("SimConfig: h must be >= 1");
        if (substeps < 1) throw DomainError("SimConfig: substeps must be >= 1");
        if (!(horizon >= delta_big) || !std::isfinite(horizon)) {
            throw DomainError("SimConfig: horizon must be >= Delta");
        }
        if (!(T_c >= 0.0) || !std::isfinite(T_c)) throw DomainError("SimConfig: T_c must be >= 0");
    }

    /// Packet entries consumed by the computation delay: ceil(T_c / delta).
    std::size_t skip() const {
        return static_cast<std::size_t>(std::max(0.0, std::ceil(T_c / delta() - 1e-9)));
    }
};

struct SimTrace {
    // one entry per sample on the delta/substeps grid, final time included
    std::vector<double> times;
    std::vector<Vector> x;
    std::vector<Vector> u;
    std::vector<Vector> alpha;  // prediction the applied input was computed from (u = K alpha)
    std::vector<int> packet_index;  // remote: entry p in use, -1 before the first packet
    std::vector<double> V;
    std::vector<std::uint8_t> dos_active;
    std::vector<std::uint8_t> attempt;
    std::vector<std::uint8_t> success;
    std::vector<int> buffer_depth;

    std::vector<double> z;
    std::size_t attempts = 0;

    Matrix P;
    Vector x0;
    double delta = 0.0;
    double delta_big = 0.0;
    int h = 1;
    int substeps = 1;
    SimMode mode = SimMode::remote;
    std::optional<double> decay_at;
    double d_sup = 0.0;  // realized sup |d|, |n|
    double n_sup = 0.0;

    std::size_t size() const noexcept { return times.size(); }
    double w_sup() const noexcept { return std::hypot(d_sup, n_sup); }
};

struct SimMetrics {
    double failure_fraction = 0.0;
    double max_state_norm = 0.0;
    double final_state_norm = 0.0;
    double max_gap = 0.0;
    std::optional<bool> envelope_ok;
    bool stable_verdict = false;
    double divergence_threshold = 0.0;
};

namespace sim {

inline double default_divergence_threshold(const Vector& x0) {
    return 1e3 * std::max(x0.norm(), 1.0);
}

inline SimTrace simulate(const LtiPlant& plant, const Matrix& K, const SimConfig& cfg,
                         const DoSSignal& dos, const NoiseSpec& noise, const Vector& x0) {
    cfg.validate();
    noise.validate();
    const Eigen::Index n = plant.n();
    const Eigen::Index m = plant.m();
    if (K.rows() != m || K.cols() != n) throw DimensionError("simulate: K must be m x n");
    kernels::require_finite(K, "K");
    if (x0.size() != n || !x0.allFinite()) throw DimensionError("simulate: x0 must be a finite n-vector");
    if (dos.horizon() + 1e-12 < cfg.horizon) {
        throw DomainError("simulate: DoS signal horizon shorter than the simulation horizon");
    }

    const double delta = cfg.delta();
    const int sub = cfg.substeps;
    const double dt = delta / sub;
    const auto ticks = static_cast<std::size_t>(std::floor(cfg.horizon / delta + 1e-9));
    const std::size_t h_eff = cfg.mode == SimMode::remote_no_buffer ? 1 : static_cast<std::size_t>(cfg.h);
    const std::size_t skip = cfg.mode == SimMode::colocated ? 0 : cfg.skip();
    if (cfg.mode != SimMode::colocated && skip >= h_eff) {
        throw DelayExceedsHorizonError("simulate: computation delay spans the whole packet");
    }

    // Sub-step propagator for [u; d] held constant.
    Matrix inputs(n, m + n);
    inputs << plant.B(), Matrix::Identity(n, n);
    const ZohPair fine = zoh_discretize(plant.A(), inputs, dt);
    const Matrix Bu_fine = fine.B_delta.leftCols(m);
    const Matrix Bd_fine = fine.B_delta.rightCols(n);
    const ZohPair ctrl = zoh_discretize(plant.A(), plant.B(), delta);

    const Matrix M = cfg.M.size() == 0 ? Matrix::Identity(n, n) : cfg.M;
    SimTrace tr;
    tr.P = solve_lyapunov(plant.A() + plant.B() * K, M);
    tr.x0 = x0;
    tr.delta = delta;
    tr.delta_big = cfg.delta_big;
    tr.h = static_cast<int>(h_eff);
    tr.substeps = sub;
    tr.mode = cfg.mode;
    tr.decay_at = noise.decay_at;
    const std::size_t samples = ticks * sub + 1;
    tr.times.reserve(samples);
    tr.x.reserve(samples);
    tr.u.reserve(samples);
    tr.alpha.reserve(samples);

    SplitMix64 master(noise.seed);
    SplitMix64 d_rng = master.split();
    SplitMix64 n_rng = master.split();
    const auto quiet = [&](double t) { return noise.decay_at && t >= *noise.decay_at; };
    const auto draw = [](SplitMix64& rng, double bound, Eigen::Index size) {
        Vector v(size);
        for (Eigen::Index i = 0; i < size; ++i) v[i] = rng.uniform(-bound, bound);
        return v;
    };

    const double end_time = static_cast<double>(ticks) * delta;
    const auto attempt_at = [&](std::size_t q, bool& success) {
        const std::size_t k = q / static_cast<std::size_t>(cfg.b);
        const double tk = std::min(static_cast<double>(k) * cfg.delta_big, dos.horizon());
        success = !active_at(dos, tk);
        ++tr.attempts;
        if (success) tr.z.push_back(tk);
        return tk;
    };

    Vector x = x0;
    PredictorState pred = PredictorState::initial(n, m);
    ActuatorBuffer buffer = ActuatorBuffer::empty(delta, m);
    std::deque<std::pair<std::size_t, ControlPacket>> pending;
    Vector u = Vector::Zero(m);
    Vector alpha = Vector::Zero(n);
    int pidx = -1;
    int depth = 0;

    const auto record = [&](double t, bool att, bool ok) {
        tr.times.push_back(t);
        tr.x.push_back(x);
        tr.u.push_back(u);
        tr.alpha.push_back(alpha);
        tr.packet_index.push_back(pidx);
        tr.V.push_back(x.dot(tr.P * x));
        tr.dos_active.push_back(active_at(dos, std::min(t, dos.horizon())) ? 1 : 0);
        tr.attempt.push_back(att ? 1 : 0);
        tr.success.push_back(ok ? 1 : 0);
        tr.buffer_depth.push_back(depth);
    };

    for (std::size_t q = 0; q < ticks; ++q) {
        const double t = static_cast<double>(q) * delta;
        const bool is_attempt = q % static_cast<std::size_t>(cfg.b) == 0;
        bool ok = false;
        std::optional<Vector> y;
        if (is_attempt) {
            const double tk = attempt_at(q, ok);
            if (ok) {
                Vector nz = draw(n_rng, noise.n_bound, n);
                if (quiet(tk)) nz.setZero();
                tr.n_sup = std::max(tr.n_sup, nz.norm());
                y = x + nz;
            }
        }

        if (cfg.mode == SimMode::colocated) {
            alpha = y ? *y : pred.xi;
            auto [next, uc] = colocated_step(pred, K, ctrl.A_delta, ctrl.B_delta, y);
            pred = std::move(next);
            u = std::move(uc);
            pidx = -1;
            depth = 0;
        } else {
            if (y) {
                pending.emplace_back(q + skip,
                                     build_packet(*y, K, ctrl.A_delta, ctrl.B_delta, h_eff, skip,
                                                  static_cast<double>(q) * delta));
            }
            while (!pending.empty() && pending.front().first <= q) {
                buffer = deliver_packet(buffer, std::move(pending.front().second), t);
                pending.pop_front();
            }
            const auto p = control::active_index(buffer, t);
            if (p) {
                u = buffer.packet->controls[*p];
                alpha = buffer.packet->predictions[*p];
                pidx = static_cast<int>(*p);
            } else {
                u.setZero();
                alpha.setZero();
                pidx = -1;
            }
            depth = static_cast<int>(control::remaining_samples(buffer, t));
        }

        for (int j = 0; j < sub; ++j) {
            const double ts = static_cast<double>(q * sub + j) * dt;
            Vector d = draw(d_rng, noise.d_bound, n);
            if (quiet(ts)) d.setZero();
            tr.d_sup = std::max(tr.d_sup, d.norm());
            record(ts, j == 0 && is_attempt, j == 0 && ok);
            x = fine.A_delta * x + Bu_fine * u + Bd_fine * d;
        }
    }

    // Closing sample; an attempt falling exactly on it is logged but drives no control.
    bool ok = false;
    const bool last_attempt = ticks % static_cast<std::size_t>(cfg.b) == 0;
    if (last_attempt) attempt_at(ticks, ok);
    record(end_time, last_attempt, ok);
    return tr;
}

/// V(t_i) = x(t_i)' P x(t_i) on the stored grid.
inline std::vector<std::pair<double, double>> lyapunov_trace(const SimTrace& tr, const Matrix& P) {
    if (tr.x.empty()) return {};
    if (P.rows() != tr.x.front().size() || P.cols() != P.rows()) {
        throw DimensionError("lyapunov_trace: P does not match the state dimension");
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) out.emplace_back(tr.times[i], tr.x[i].dot(P * tr.x[i]));
    return out;
}

// Relative slack on the envelope comparison.
inline constexpr double envelope_tolerance = 1e-9;

/// Checks V(z_m) <= lambda e^{-beta (z_m - z_0)} V(z_0) + 2 zeta / (1 - L) at every
/// successful transmission, with
/// zeta = 2 max(zeta1, zeta2) e^{omega2 (Q + Delta - h delta)} w_inf^2.
inline bool check_envelope(const SimTrace& tr, const EnvelopeConstants& env,
                           const DerivedConstants& c, double w_inf) {
    if (!(w_inf >= 0.0)) throw DomainError("check_envelope: w_inf must be >= 0");
    std::vector<std::size_t> zi;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        if (tr.success[i]) zi.push_back(i);
    }
    if (zi.empty()) throw DomainError("check_envelope: trace has no successful transmissions");
    const auto V = lyapunov_trace(tr, c.P);
    const double t0 = tr.times[zi.front()];
    const double v0 = V[zi.front()].second;
    const double zeta = 2.0 * std::max(c.zeta1, c.zeta2) *
                        std::exp(c.omega2 * (env.Q + env.delta_big - env.h * env.delta)) * w_inf *
                        w_inf;
    const double floor_term = 2.0 * zeta / (1.0 - env.L);
    for (std::size_t i : zi) {
        const double bound =
            env.lambda * std::exp(-env.beta * (tr.times[i] - t0)) * v0 + floor_term;
        if (V[i].second > bound * (1.0 + envelope_tolerance)) return false;
    }
    return true;
}

inline SimMetrics metrics(const SimTrace& tr, double divergence_threshold,
                          std::optional<bool> envelope_ok = std::nullopt) {
    if (tr.size() == 0) throw DomainError("metrics: empty trace");
    if (!(divergence_threshold > 0.0)) throw DomainError("metrics: threshold must be > 0");
    SimMetrics mt;
    mt.divergence_threshold = divergence_threshold;
    mt.failure_fraction =
        tr.attempts == 0 ? 0.0
                         : 1.0 - static_cast<double>(tr.z.size()) / static_cast<double>(tr.attempts);
    for (const auto& xi : tr.x) {
        const double nx = xi.norm();
        mt.max_state_norm = std::isfinite(nx) ? std::max(mt.max_state_norm, nx)
                                              : std::numeric_limits<double>::infinity();
    }
    mt.final_state_norm = tr.x.back().norm();
    if (tr.z.size() >= 2) {
        for (std::size_t i = 1; i < tr.z.size(); ++i) mt.max_gap = std::max(mt.max_gap, tr.z[i] - tr.z[i - 1]);
    } else {
        mt.max_gap = tr.times.back();
    }
    mt.envelope_ok = envelope_ok;
    mt.stable_verdict = mt.max_state_norm < divergence_threshold;
    if (tr.decay_at) {
        mt.stable_verdict =
            mt.stable_verdict && mt.final_state_norm <= 1e-3 * std::max(tr.x0.norm(), 1.0);
    }
    return mt;
}

inline void write_trace_csv(std::ostream& os, const SimTrace& tr) {
    const Eigen::Index n = tr.x.empty() ? 0 : tr.x.front().size();
    const Eigen::Index m = tr.u.empty() ? 0 : tr.u.front().size();
    os << "t";
    for (Eigen::Index i = 1; i <= n; ++i) os << ",x" << i;
    for (Eigen::Index i = 1; i <= m; ++i) os << ",u" << i;
    os << ",V,dos_active,attempt,success,buffer_depth\n";
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::setprecision(12);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        os << tr.times[k];
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << tr.x[k][i];
        for (Eigen::Index i = 0; i < m; ++i) os << ',' << tr.u[k][i];
        os << ',' << tr.V[k] << ',' << int(tr.dos_active[k]) << ',' << int(tr.attempt[k]) << ','
           << int(tr.success[k]) << ',' << tr.buffer_depth[k] << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

}  // namespace sim

using sim::check_envelope;
using sim::lyapunov_trace;
using sim::metrics;
using sim::simulate;

}  // namespace dosnet

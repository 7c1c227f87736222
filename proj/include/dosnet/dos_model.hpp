#pragma once

// Denial-of-Service signals: interval sets H_n = {h_n} U [h_n, h_n + tau_n[,
// their frequency/duration class constants, periodic transmission outcomes
// and the worst-case gap between successful transmissions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include "dosnet/errors.hpp"
#include "dosnet/rng.hpp"

namespace dosnet {

struct DoSInterval {
    double start;     // h_n, seconds
    double duration;  // tau_n, seconds; 0 is a single pulse

    double end() const noexcept { return start + duration; }
    friend bool operator==(const DoSInterval&, const DoSInterval&) = default;
};

/// Canonical DoS signal over [0, horizon]: intervals sorted by start, disjoint,
/// overlapping inputs merged, everything clipped to the horizon.
class DoSSignal {
public:
    DoSSignal(std::vector<DoSInterval> intervals, double horizon) : horizon_(horizon) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw DomainError("DoSSignal: horizon must be positive and finite");
        }
        for (const auto& iv : intervals) {
            if (!std::isfinite(iv.start) || !std::isfinite(iv.duration) || iv.start < 0.0 ||
                iv.duration < 0.0) {
                throw DomainError("DoSSignal: interval start and duration must be finite and >= 0");
            }
            if (iv.start > horizon) {
                throw DomainError("DoSSignal: interval starts after the horizon");
            }
        }
        std::sort(intervals.begin(), intervals.end(),
                  [](const DoSInterval& a, const DoSInterval& b) { return a.start < b.start; });
        for (auto iv : intervals) {
            iv.duration = std::min(iv.duration, horizon - iv.start);
            if (!intervals_.empty()) {
                DoSInterval& last = intervals_.back();
                // Overlap (or a point inside [h, h+tau[) merges; touching intervals stay separate.
                if (iv.start < last.end() || iv.start == last.start) {
                    last.duration = std::max(last.end(), iv.end()) - last.start;
                    continue;
                }
            }
            intervals_.push_back(iv);
        }
    }

    static DoSSignal empty(double horizon) { return DoSSignal({}, horizon); }

    const std::vector<DoSInterval>& intervals() const noexcept { return intervals_; }
    double horizon() const noexcept { return horizon_; }
    std::size_t size() const noexcept { return intervals_.size(); }

    friend bool operator==(const DoSSignal&, const DoSSignal&) = default;

private:
    std::vector<DoSInterval> intervals_;
    double horizon_;
};

/// Frequency (eta, tau_D) and duration (kappa, T) class constants.
/// tau_D and T may be +infinity (no frequency / duration constraint).
struct DoSClassParams {
    double eta = 0.0;
    double tau_D = std::numeric_limits<double>::infinity();
    double kappa = 0.0;
    double T = std::numeric_limits<double>::infinity();

    void validate() const {
        if (!(eta >= 0.0) || !(kappa >= 0.0) || !std::isfinite(eta) || !std::isfinite(kappa)) {
            throw DomainError("DoSClassParams: eta and kappa must be finite and >= 0");
        }
        if (!(tau_D > 0.0)) throw DomainError("DoSClassParams: tau_D must be > 0");
        if (!(T > 1.0)) throw DomainError("DoSClassParams: T must be > 1");
    }

    /// 1/T + mu*Delta/tau_D, the quantity compared against 1.
    double rate_sum(double delta_big, int mu = 1) const noexcept {
        return 1.0 / T + mu * delta_big / tau_D;
    }
};

struct TransmissionSchedule {
    double delta_big = 0.0;
    std::size_t attempts = 0;     // attempts at k*Delta, k = 0..attempts-1
    std::vector<double> successes;  // z_m

    double failure_fraction() const noexcept {
        return attempts == 0 ? 0.0
                             : 1.0 - static_cast<double>(successes.size()) /
                                         static_cast<double>(attempts);
    }
};

/// Off/on alternating generator: off and on durations drawn uniformly.
struct GeneratorSpec {
    double off_lo = 0.0;
    double off_hi = 0.0;
    double on_lo = 0.0;
    double on_hi = 0.0;

    void validate() const {
        for (double v : {off_lo, off_hi, on_lo, on_hi}) {
            if (!std::isfinite(v) || v < 0.0) {
                throw DomainError("GeneratorSpec: ranges must be finite and >= 0");
            }
        }
        if (off_hi < off_lo || on_hi < on_lo) {
            throw DomainError("GeneratorSpec: range upper bound below lower bound");
        }
        if (off_lo + on_lo <= 0.0) {
            throw DomainError("GeneratorSpec: off_lo + on_lo must be > 0 so the signal advances");
        }
    }
};

struct ClassFit {
    double eta_min;
    double kappa_min;
};

/// Long-run averages tau_D = horizon / n(0, horizon) and T = horizon / |Xi(0, horizon)|.
struct ObservedRates {
    double tau_D;
    double T;
};

struct GapVerdict {
    double z0;
    double max_gap;
    double Q;
    double Q_plus_delta;
    bool z0_ok;
    bool gap_ok;
    std::size_t successes;
};

namespace dos {

// Slack on time comparisons in the gap check.
inline constexpr double time_tolerance = 1e-9;

inline void require_window(const DoSSignal& s, double tau, double t) {
    if (!(tau >= 0.0) || !(t >= tau) || t > s.horizon()) {
        std::ostringstream os;
        os << "window [" << tau << ", " << t << "] is reversed or outside [0, " << s.horizon()
           << "]";
        throw DomainError(os.str());
    }
}

inline bool active_at(const DoSSignal& s, double t) {
    if (!(t >= 0.0) || t > s.horizon()) {
        throw DomainError("active_at: time outside [0, horizon]");
    }
    const auto& iv = s.intervals();
    auto it = std::upper_bound(iv.begin(), iv.end(), t,
                               [](double v, const DoSInterval& x) { return v < x.start; });
    if (it == iv.begin()) return false;
    --it;
    return t == it->start || t < it->end();
}

/// n(tau, t): number of off/on transitions h_n in [tau, t[.
inline std::size_t transitions_count(const DoSSignal& s, double tau, double t) {
    require_window(s, tau, t);
    const auto& iv = s.intervals();
    auto lo = std::lower_bound(iv.begin(), iv.end(), tau,
                               [](const DoSInterval& x, double v) { return x.start < v; });
    auto hi = std::lower_bound(iv.begin(), iv.end(), t,
                               [](const DoSInterval& x, double v) { return x.start < v; });
    return static_cast<std::size_t>(hi - lo);
}

/// |Xi(tau, t)|: Lebesgue measure of the DoS set inside [tau, t].
inline double dos_measure(const DoSSignal& s, double tau, double t) {
    require_window(s, tau, t);
    double total = 0.0;
    for (const auto& iv : s.intervals()) {
        if (iv.start >= t) break;
        const double lo = std::max(iv.start, tau);
        const double hi = std::min(iv.end(), t);
        if (hi > lo) total += hi - lo;
    }
    return total;
}

inline ObservedRates observed_rates(const DoSSignal& s) {
    const double inf = std::numeric_limits<double>::infinity();
    const double h = s.horizon();
    const auto n = static_cast<double>(transitions_count(s, 0.0, h));
    const double xi = dos_measure(s, 0.0, h);
    return {n > 0.0 ? h / n : inf, xi > 0.0 ? h / xi : inf};
}

/// Smallest (eta, kappa) for which the frequency and duration inequalities
/// hold on every window inside [0, horizon], for the given tau_D and T.
///
/// Both sups are attained (as limits) on windows that open at some h_i.
/// For counts the window closes just past h_j, giving (j-i+1) - (h_j-h_i)/tau_D;
/// for measure it closes at h_j + tau_j, since the excess grows inside DoS and
/// shrinks outside it.
inline ClassFit fit_class_params(const DoSSignal& s, double tau_D, double T) {
    if (!(tau_D > 0.0)) throw DomainError("fit_class_params: tau_D must be > 0");
    if (!(T > 1.0)) throw DomainError("fit_class_params: T must be > 1");
    const auto& iv = s.intervals();
    double eta = 0.0;
    double kappa = 0.0;
    for (std::size_t i = 0; i < iv.size(); ++i) {
        double covered = 0.0;
        for (std::size_t j = i; j < iv.size(); ++j) {
            covered += iv[j].duration;
            const double count = static_cast<double>(j - i + 1);
            eta = std::max(eta, count - (iv[j].start - iv[i].start) / tau_D);
            kappa = std::max(kappa, covered - (iv[j].end() - iv[i].start) / T);
        }
    }
    return {eta, kappa};
}

/// Off/on alternating signal with SplitMix64 draws: off_0, on_0, off_1, on_1, ...
/// h_0 = off_0, h_{n+1} = h_n + on_n + off_{n+1}; truncated at the horizon.
inline DoSSignal generate(std::uint64_t seed, const GeneratorSpec& spec, double horizon) {
    spec.validate();
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw DomainError("generate: horizon must be positive and finite");
    }
    SplitMix64 rng(seed);
    std::vector<DoSInterval> out;
    double t = 0.0;
    while (true) {
        t += rng.uniform(spec.off_lo, spec.off_hi);
        if (t > horizon) break;
        const double on = rng.uniform(spec.on_lo, spec.on_hi);
        out.push_back({t, std::min(on, horizon - t)});
        t += on;
        if (t >= horizon) break;
    }
    return DoSSignal(std::move(out), horizon);
}

/// Number of attempts k*Delta <= horizon (k = 0 included).
inline std::size_t attempt_count(double delta_big, double horizon) {
    return static_cast<std::size_t>(std::floor(horizon / delta_big + 1e-9)) + 1;
}

inline double attempt_time(std::size_t k, double delta_big, double horizon) {
    return std::min(static_cast<double>(k) * delta_big, horizon);
}

inline TransmissionSchedule successful_transmissions(const DoSSignal& s, double delta_big,
                                                     double horizon) {
    if (!(delta_big > 0.0)) throw DomainError("successful_transmissions: Delta must be > 0");
    if (!(horizon > 0.0) || horizon > s.horizon()) {
        throw DomainError("successful_transmissions: horizon outside the signal horizon");
    }
    TransmissionSchedule out;
    out.delta_big = delta_big;
    out.attempts = attempt_count(delta_big, horizon);
    for (std::size_t k = 0; k < out.attempts; ++k) {
        const double tk = attempt_time(k, delta_big, horizon);
        if (!active_at(s, tk)) out.successes.push_back(tk);
    }
    return out;
}

/// Q_mu = (kappa + eta*mu*Delta) / (1 - 1/T - mu*Delta/tau_D); mu = 1 is the
/// plain worst-gap constant, mu > 1 guarantees a DoS-free stretch of mu*Delta.
inline double compute_Q(const DoSClassParams& p, double delta_big, int mu = 1) {
    p.validate();
    if (!(delta_big > 0.0)) throw DomainError("compute_Q: Delta must be > 0");
    if (mu < 1) throw DomainError("compute_Q: mu must be >= 1");
    const double rs = p.rate_sum(delta_big, mu);
    if (!(rs < 1.0)) {
        std::ostringstream os;
        os << "DoS class infeasible: 1/T + " << (mu == 1 ? "" : "mu*") << "Delta/tau_D = " << rs
           << " >= 1";
        throw InfeasibleError(os.str(), rs);
    }
    return (p.kappa + p.eta * mu * delta_big) / (1.0 - rs);
}

inline GapVerdict check_gap_bound(const DoSSignal& s, double delta_big, const DoSClassParams& p,
                                  double horizon) {
    const double q = compute_Q(p, delta_big);
    const TransmissionSchedule sched = successful_transmissions(s, delta_big, horizon);
    GapVerdict v{};
    v.Q = q;
    v.Q_plus_delta = q + delta_big;
    v.successes = sched.successes.size();
    if (sched.successes.empty()) {
        v.z0 = std::numeric_limits<double>::infinity();
        v.max_gap = std::numeric_limits<double>::infinity();
        v.z0_ok = false;
        v.gap_ok = false;
        return v;
    }
    v.z0 = sched.successes.front();
    v.max_gap = 0.0;
    for (std::size_t i = 1; i < sched.successes.size(); ++i) {
        v.max_gap = std::max(v.max_gap, sched.successes[i] - sched.successes[i - 1]);
    }
    v.z0_ok = v.z0 <= q + time_tolerance;
    v.gap_ok = v.max_gap <= v.Q_plus_delta + time_tolerance;
    return v;
}

}  // namespace dos

using dos::active_at;
using dos::check_gap_bound;
using dos::compute_Q;
using dos::dos_measure;
using dos::fit_class_params;
using dos::generate;
using dos::observed_rates;
using dos::successful_transmissions;
using dos::transitions_count;

}  // namespace dosnet

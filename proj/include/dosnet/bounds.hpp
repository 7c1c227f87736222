#pragma once

// Stability constants for the predictor-based controllers: the Lyapunov
// chain (P, alpha, gamma, omega, zeta), the admissible controller sampling
// period, the minimal prediction horizon and the decay envelope at the
// successful transmission times.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dosnet/errors.hpp"
#include "dosnet/matrix_kernels.hpp"

namespace dosnet {

/// Supremum fraction used when reporting the sampling bound: sigma just below gamma1/gamma2.
inline constexpr double reporting_sigma_fraction = 1.0 - 1e-9;
/// Fraction used for simulation-time constants, where omega1 must be clearly positive.
inline constexpr double simulation_sigma_fraction = 0.5;

struct DesignInputs {
    Matrix A;
    Matrix B;
    Matrix K;
    Matrix M;  // Lyapunov weight; identity when left empty
    double sigma_fraction = reporting_sigma_fraction;
};

/// Decay (omega1) and growth (omega2) rates of V(x) = x'Px inside and outside
/// the prediction horizon.
struct RateConstants {
    double omega1;
    double omega2;
};

struct DerivedConstants {
    Matrix P;
    double alpha1, alpha2;
    double gamma1, gamma2, gamma3, gamma4, gamma5, gamma6, gamma7;
    double sigma;
    double mu_A;
    double norm_Phi;
    double kappa1;
    double rho1, rho2, rho;
    double omega1, omega2;
    double zeta1, zeta2;
    int h;
    double delta;

    RateConstants rates() const noexcept { return {omega1, omega2}; }
};

struct EnvelopeConstants {
    double beta;
    double lambda;
    double L;
    double Q;
    double delta_big;
    int h;
    double delta;
};

namespace bounds {

/// f(s) = integral_0^s e^{mu r} dr; grows the inter-sample prediction error.
inline double error_growth(double mu_A, double s) {
    if (mu_A == 0.0) return s;
    return std::expm1(mu_A * s) / mu_A;
}

/// Largest controller sampling period keeping ||phi|| <= sigma ||x|| between samples.
inline double delta_max(double mu_A, double sigma, double norm_Phi) {
    if (!(sigma > 0.0)) throw DomainError("delta_max: sigma must be > 0");
    if (!(norm_Phi >= 0.0)) throw DomainError("delta_max: ||Phi|| must be >= 0");
    const double kappa1 = std::max(norm_Phi, 1.0);
    const double ratio = sigma / (1.0 + sigma);
    if (mu_A > 0.0) return std::log1p(ratio * mu_A / kappa1) / mu_A;
    return ratio / kappa1;
}

inline DerivedConstants derive_constants(const DesignInputs& in, int h, double delta) {
    using namespace kernels;
    require_finite(in.A, "A");
    require_finite(in.B, "B");
    require_finite(in.K, "K");
    require_square(in.A, "A");
    const Eigen::Index n = in.A.rows();
    if (in.B.rows() != n || in.K.rows() != in.B.cols() || in.K.cols() != n) {
        throw DimensionError("derive_constants: expected A n x n, B n x m, K m x n");
    }
    if (h < 1) throw DomainError("derive_constants: h must be >= 1");
    if (!(delta > 0.0)) throw DomainError("derive_constants: delta must be > 0");
    if (!(in.sigma_fraction > 0.0 && in.sigma_fraction <= 1.0)) {
        throw DomainError("derive_constants: sigma_fraction must lie in (0, 1]");
    }
    const Matrix M = in.M.size() == 0 ? Matrix::Identity(n, n) : in.M;

    const Matrix phi = in.A + in.B * in.K;
    DerivedConstants c{};
    c.h = h;
    c.delta = delta;
    c.P = solve_lyapunov(phi, M);
    const SymmetricSpectrum ps = symmetric_extremes(c.P);
    c.alpha1 = ps.min_eig;
    c.alpha2 = ps.max_eig;
    c.gamma1 = symmetric_extremes(M).min_eig;
    c.gamma2 = spectral_norm(2.0 * c.P * in.B * in.K);
    c.gamma3 = spectral_norm(2.0 * c.P);
    if (!(c.gamma2 > 0.0)) {
        throw InfeasibleError("derive_constants: gamma2 = ||2PBK|| is zero", c.gamma2);
    }
    c.sigma = in.sigma_fraction * (c.gamma1 / c.gamma2);
    c.gamma4 = c.gamma1 - c.sigma * c.gamma2;
    if (!(c.gamma4 > 1e-12 * c.gamma1)) {
        std::ostringstream os;
        os << "sigma infeasible: gamma1 - sigma*gamma2 = " << c.gamma4 << " is not > 0";
        throw InfeasibleError(os.str(), c.gamma4);
    }
    c.mu_A = log_norm(in.A);
    c.norm_Phi = spectral_norm(phi);
    c.kappa1 = std::max(c.norm_Phi, 1.0);
    c.rho2 = std::max(std::exp(c.mu_A * delta), 1.0);
    const double span = (h - 1) * delta;
    c.rho1 = c.mu_A > 0.0 ? (1.0 + 1.0 / c.mu_A) * std::exp(c.mu_A * span) : 1.0 + span;
    c.rho = c.sigma + c.rho1 * c.rho2 * (1.0 + c.sigma);
    c.gamma5 = c.gamma2 * c.rho + c.gamma3;
    c.gamma6 = c.gamma5 * c.gamma5 / (2.0 * c.gamma4);
    c.gamma7 = (c.gamma3 + c.rho * c.gamma2) * (c.gamma3 + c.rho * c.gamma2) /
               (2.0 * (c.gamma1 - c.sigma * c.gamma2));
    c.omega1 = c.gamma4 / (2.0 * c.alpha2);
    c.omega2 = c.gamma2 * (2.0 + c.sigma) / c.alpha1;
    c.zeta1 = c.gamma6 / c.omega1;
    c.zeta2 = c.gamma7 / c.omega2;
    return c;
}

/// (omega2 / (omega1 + omega2)) * (Q + Delta): h*delta must exceed this.
inline double horizon_threshold(const RateConstants& r, double Q, double delta_big) {
    return r.omega2 / (r.omega1 + r.omega2) * (Q + delta_big);
}

/// Smallest integer h with h*delta strictly above the horizon threshold.
inline int min_prediction_horizon(const RateConstants& r, double Q, double delta_big,
                                  double delta) {
    if (!(delta > 0.0)) throw DomainError("min_prediction_horizon: delta must be > 0");
    if (!(r.omega1 > 0.0) || !(r.omega2 >= 0.0)) {
        throw DomainError("min_prediction_horizon: need omega1 > 0 and omega2 >= 0");
    }
    const double thr = horizon_threshold(r, Q, delta_big);
    const double guess = std::floor(thr / delta) + 1.0;
    if (guess > static_cast<double>(std::numeric_limits<int>::max() - 2)) {
        throw HorizonTooShortError("min_prediction_horizon: required h overflows int");
    }
    int h = std::max(1, static_cast<int>(guess));
    while (h * delta <= thr) ++h;
    while (h > 1 && (h - 1) * delta > thr) --h;
    return h;
}

inline int min_prediction_horizon(const DerivedConstants& c, double Q, double delta_big,
                                  double delta) {
    return min_prediction_horizon(c.rates(), Q, delta_big, delta);
}

/// Right-hand side 1 - omega2 (kappa + eta Delta) / ((omega1 + omega2) h delta - omega2 Delta),
/// to be compared against 1/T + Delta/tau_D.
inline double tolerable_dos_bound(const RateConstants& r, int h, double delta, double delta_big,
                                  double kappa, double eta) {
    if (h < 1) throw DomainError("tolerable_dos_bound: h must be >= 1");
    const double denom = (r.omega1 + r.omega2) * h * delta - r.omega2 * delta_big;
    if (!(denom > 0.0)) {
        std::ostringstream os;
        os << "prediction horizon too short: (omega1+omega2) h delta - omega2 Delta = " << denom
           << " <= 0";
        throw HorizonTooShortError(os.str());
    }
    return 1.0 - r.omega2 * (kappa + eta * delta_big) / denom;
}

inline double tolerable_dos_bound(const DerivedConstants& c, int h, double delta,
                                  double delta_big, double kappa, double eta) {
    return tolerable_dos_bound(c.rates(), h, delta, delta_big, kappa, eta);
}

/// beta = (omega1 h delta - omega2 (Q + Delta - h delta)) / (Q + Delta), capped at omega1,
/// lambda = e^{(omega1 + omega2) Q}, L = e^{-beta Delta}.
inline EnvelopeConstants decay_envelope(const RateConstants& r, double Q, double delta_big, int h,
                                        double delta) {
    if (h < 1) throw DomainError("decay_envelope: h must be >= 1");
    if (!(Q >= 0.0) || !(delta_big > 0.0) || !(delta > 0.0)) {
        throw DomainError("decay_envelope: need Q >= 0, Delta > 0, delta > 0");
    }
    const double span = Q + delta_big;
    const double hd = h * delta;
    double beta = (r.omega1 * hd - r.omega2 * (span - hd)) / span;
    if (!(beta > 0.0)) {
        std::ostringstream os;
        os << "prediction horizon too short: beta = " << beta << " <= 0 for h = " << h;
        throw HorizonTooShortError(os.str());
    }
    // Past h*delta = Q + Delta every gap is covered by the buffer and the decay rate is omega1.
    beta = std::min(beta, r.omega1);
    EnvelopeConstants e{};
    e.beta = beta;
    e.lambda = std::exp((r.omega1 + r.omega2) * Q);
    e.L = std::exp(-beta * delta_big);
    e.Q = Q;
    e.delta_big = delta_big;
    e.h = h;
    e.delta = delta;
    return e;
}

inline EnvelopeConstants decay_envelope(const DerivedConstants& c, double Q, double delta_big,
                                        int h, double delta) {
    return decay_envelope(c.rates(), Q, delta_big, h, delta);
}

}  // namespace bounds

using bounds::decay_envelope;
using bounds::delta_max;
using bounds::derive_constants;
using bounds::min_prediction_horizon;
using bounds::tolerable_dos_bound;

}  // namespace dosnet

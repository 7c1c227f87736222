#pragma once

// Small dense linear-algebra kernels: matrix exponential, zero-order-hold
// discretization, continuous Lyapunov solve, logarithmic and spectral norms.
// Sized for n <= 10; everything is a pure function of its arguments.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "dosnet/errors.hpp"

namespace dosnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SymmetricSpectrum {
    double min_eig;
    double max_eig;
};

struct ZohPair {
    Matrix A_delta;
    Matrix B_delta;
};

namespace kernels {

// Eigenvalues of Phi must have real part below -hurwitz_margin.
inline constexpr double hurwitz_margin = 1e-9;
// Allowed asymmetry, relative to max(1, max|S_ij|).
inline constexpr double symmetry_tolerance = 1e-12;
// Lyapunov residual target: ||Phi'P + P Phi + M|| <= lyapunov_residual * ||M||.
inline constexpr double lyapunov_residual = 1e-10;
// Accuracy contracts checked by the test suite on random instances (n <= 5).
inline constexpr double semigroup_tolerance = 1e-8;
inline constexpr double log_norm_slack = 1e-8;
inline constexpr double zoh_quadrature_tolerance = 1e-8;

inline void require_finite(const Matrix& a, const char* what) {
    if (a.size() == 0) {
        throw DimensionError(std::string(what) + ": empty matrix");
    }
    if (!a.allFinite()) {
        throw DomainError(std::string(what) + ": non-finite entries");
    }
}

inline void require_square(const Matrix& a, const char* what) {
    if (a.rows() != a.cols()) {
        std::ostringstream os;
        os << what << ": expected square matrix, got " << a.rows() << "x" << a.cols();
        throw DimensionError(os.str());
    }
}

inline bool is_symmetric(const Matrix& s) {
    if (s.rows() != s.cols()) return false;
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    return (s - s.transpose()).cwiseAbs().maxCoeff() <= symmetry_tolerance * scale;
}

namespace detail {

inline double norm1(const Matrix& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

// Pade approximant r_m(A) = q_m(A)^{-1} p_m(A) for m in {3,5,7,9}.
inline Matrix pade_low(const Matrix& a, int m) {
    static constexpr std::array<double, 4> c3{120.0, 60.0, 12.0, 1.0};
    static constexpr std::array<double, 6> c5{30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
    static constexpr std::array<double, 8> c7{17297280.0, 8648640.0, 1995840.0, 277200.0,
                                              25200.0,    1512.0,    56.0,      1.0};
    static constexpr std::array<double, 10> c9{17643225600.0, 8821612800.0, 2075673600.0,
                                               302702400.0,   30270240.0,   2162160.0,
                                               110880.0,      3960.0,       90.0,
                                               1.0};
    const double* c = nullptr;
    switch (m) {
        case 3: c = c3.data(); break;
        case 5: c = c5.data(); break;
        case 7: c = c7.data(); break;
        default: c = c9.data(); break;
    }
    const Eigen::Index n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    Matrix even = c[0] * ident;
    Matrix odd = c[1] * ident;
    Matrix power = ident;
    for (int k = 2; k <= m; k += 2) {
        power = power * a2;
        even += c[k] * power;
        odd += c[k + 1] * power;
    }
    const Matrix u = a * odd;
    return (even - u).partialPivLu().solve(even + u);
}

inline Matrix pade13(const Matrix& a) {
    static constexpr std::array<double, 14> c{
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    const Eigen::Index n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix u = a * (a6 * (c[13] * a6 + c[11] * a4 + c[9] * a2) + c[7] * a6 + c[5] * a4 +
                          c[3] * a2 + c[1] * ident);
    const Matrix v = a6 * (c[12] * a6 + c[10] * a4 + c[8] * a2) + c[6] * a6 + c[4] * a4 +
                     c[2] * a2 + c[0] * ident;
    return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

// e^{A t} by scaling and squaring with a degree-adaptive Pade approximant
// (Higham 2005 thresholds).
inline Matrix expm(const Matrix& a, double t = 1.0) {
    require_finite(a, "expm");
    require_square(a, "expm");
    if (!std::isfinite(t) || t < 0.0) {
        throw DomainError("expm: time must be finite and nonnegative");
    }
    const Matrix at = a * t;
    const double nrm = detail::norm1(at);
    static constexpr std::array<std::pair<int, double>, 4> low{{{3, 1.495585217958292e-2},
                                                                 {5, 2.539398330063230e-1},
                                                                 {7, 9.504178996162932e-1},
                                                                 {9, 2.097847961257068e+0}}};
    for (const auto& [m, theta] : low) {
        if (nrm <= theta) return detail::pade_low(at, m);
    }
    constexpr double theta13 = 5.371920351148152;
    int squarings = 0;
    if (nrm > theta13) {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / theta13))));
    }
    Matrix result = detail::pade13(at / std::ldexp(1.0, squarings));
    for (int k = 0; k < squarings; ++k) result = result * result;
    return result;
}

// Exact zero-order-hold discretization from one exponential of the
// augmented block matrix [[A, B], [0, 0]] * delta.
inline ZohPair zoh_discretize(const Matrix& a, const Matrix& b, double delta) {
    require_finite(a, "zoh_discretize(A)");
    require_finite(b, "zoh_discretize(B)");
    require_square(a, "zoh_discretize(A)");
    if (b.rows() != a.rows()) {
        throw DimensionError("zoh_discretize: B must have as many rows as A");
    }
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw DomainError("zoh_discretize: delta must be positive");
    }
    const Eigen::Index n = a.rows();
    const Eigen::Index m = b.cols();
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = a;
    aug.topRightCorner(n, m) = b;
    const Matrix e = expm(aug, delta);
    return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

inline Eigen::VectorXcd eigenvalues(const Matrix& a) {
    require_finite(a, "eigenvalues");
    require_square(a, "eigenvalues");
    return Eigen::EigenSolver<Matrix>(a, false).eigenvalues();
}

// Throws CertificationError naming the least stable eigenvalue unless every
// eigenvalue has real part < -hurwitz_margin.
inline void require_hurwitz(const Matrix& phi, const char* what = "Phi") {
    const Eigen::VectorXcd eig = eigenvalues(phi);
    Eigen::Index worst = 0;
    for (Eigen::Index i = 1; i < eig.size(); ++i) {
        if (eig[i].real() > eig[worst].real()) worst = i;
    }
    if (!(eig[worst].real() < -hurwitz_margin)) {
        std::ostringstream os;
        os << what << " is not Hurwitz: eigenvalue " << eig[worst].real();
        if (eig[worst].imag() != 0.0) {
            os << (eig[worst].imag() > 0 ? "+" : "-") << std::abs(eig[worst].imag()) << "i";
        }
        os << " has real part >= " << -hurwitz_margin;
        throw CertificationError(os.str(), eig[worst].real(), eig[worst].imag());
    }
}

inline SymmetricSpectrum symmetric_extremes(const Matrix& s) {
    require_finite(s, "symmetric_extremes");
    require_square(s, "symmetric_extremes");
    if (!is_symmetric(s)) {
        throw DomainError("symmetric_extremes: matrix is not symmetric");
    }
    const Matrix sym = 0.5 * (s + s.transpose());
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues();
    return {ev.minCoeff(), ev.maxCoeff()};
}

// Solves Phi' P + P Phi + M = 0 through the n^2 x n^2 Kronecker system
// (I (x) Phi' + Phi' (x) I) vec(P) = -vec(M).
inline Matrix solve_lyapunov(const Matrix& phi, const Matrix& m) {
    require_finite(phi, "solve_lyapunov(Phi)");
    require_finite(m, "solve_lyapunov(M)");
    require_square(phi, "solve_lyapunov(Phi)");
    if (m.rows() != phi.rows() || m.cols() != phi.cols()) {
        throw DimensionError("solve_lyapunov: M must match Phi");
    }
    if (!is_symmetric(m)) {
        throw DomainError("solve_lyapunov: M is not symmetric");
    }
    if (!(symmetric_extremes(m).min_eig > 0.0)) {
        throw DomainError("solve_lyapunov: M is not positive definite");
    }
    require_hurwitz(phi);

    const Eigen::Index n = phi.rows();
    const Matrix phit = phi.transpose();
    Matrix op = Matrix::Zero(n * n, n * n);
    // Column-major vec: vec(Phi' P) = (I (x) Phi') vec(P), vec(P Phi) = (Phi' (x) I) vec(P).
    for (Eigen::Index blk = 0; blk < n; ++blk) {
        op.block(blk * n, blk * n, n, n) += phit;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            op.block(i * n, j * n, n, n).diagonal().array() += phit(i, j);
        }
    }
    const Eigen::FullPivLU<Matrix> lu(op);
    const Vector rhs = -Eigen::Map<const Vector>(m.data(), n * n);
    Vector sol = lu.solve(rhs);
    // One round of iterative refinement keeps the residual near machine precision.
    sol += lu.solve(rhs - op * sol);
    Matrix p = Eigen::Map<const Matrix>(sol.data(), n, n);
    p = 0.5 * (p + p.transpose()).eval();
    return p;
}

// 2-norm logarithmic norm: largest eigenvalue of (A + A')/2.
inline double log_norm(const Matrix& a) {
    require_finite(a, "log_norm");
    require_square(a, "log_norm");
    return symmetric_extremes(0.5 * (a + a.transpose())).max_eig;
}

// Largest singular value.
inline double spectral_norm(const Matrix& m) {
    require_finite(m, "spectral_norm");
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

}  // namespace kernels

using kernels::expm;
using kernels::log_norm;
using kernels::solve_lyapunov;
using kernels::spectral_norm;
using kernels::symmetric_extremes;
using kernels::zoh_discretize;

}  // namespace dosnet

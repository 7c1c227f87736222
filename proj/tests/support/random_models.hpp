#pragma once

// Reproducible random instances for property tests. Draws come from
// SplitMix64 so instances are identical on every platform.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "dosnet/dos_model.hpp"
#include "dosnet/matrix_kernels.hpp"
#include "dosnet/rng.hpp"

namespace testsupport {

using dosnet::Matrix;
using dosnet::SplitMix64;
using dosnet::Vector;

inline Matrix random_matrix(SplitMix64& rng, Eigen::Index rows, Eigen::Index cols,
                            double scale = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-scale, scale);
    }
    return m;
}

inline Vector random_unit_vector(SplitMix64& rng, Eigen::Index n) {
    Vector v(n);
    do {
        for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
    } while (v.norm() < 1e-3);
    return v.normalized();
}

inline int random_int(SplitMix64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng.next() % static_cast<std::uint64_t>(hi - lo + 1));
}

/// Hurwitz matrix: a random matrix shifted left until its spectral abscissa is -margin.
inline Matrix random_hurwitz(SplitMix64& rng, Eigen::Index n, double margin) {
    Matrix s = random_matrix(rng, n, n);
    const double abscissa = dosnet::kernels::eigenvalues(s).real().maxCoeff();
    return s - (abscissa + margin) * Matrix::Identity(n, n);
}

inline Matrix random_spd(SplitMix64& rng, Eigen::Index n) {
    const Matrix r = random_matrix(rng, n, n);
    return r * r.transpose() + 0.5 * Matrix::Identity(n, n);
}

struct System {
    Matrix A, B, K;
};

/// (A, B, K) with A + BK a prescribed random Hurwitz matrix; A itself is usually unstable.
inline System random_system(SplitMix64& rng, Eigen::Index n, Eigen::Index m) {
    const Matrix phi = random_hurwitz(rng, n, rng.uniform(0.3, 1.5));
    System s;
    s.B = random_matrix(rng, n, m);
    s.K = random_matrix(rng, m, n, 1.5);
    s.A = phi - s.B * s.K;
    return s;
}

/// Off/on DoS signal on a time scale set by `unit` (typically Delta).
inline dosnet::DoSSignal random_signal(SplitMix64& rng, double unit, double horizon) {
    const double off_lo = rng.uniform(0.5, 3.0) * unit;
    const double off_hi = off_lo + rng.uniform(0.0, 4.0) * unit;
    const double on_lo = rng.uniform(0.0, 2.0) * unit;
    const double on_hi = on_lo + rng.uniform(0.0, 6.0) * unit;
    return dosnet::generate(rng.next(), {off_lo, off_hi, on_lo, on_hi}, horizon);
}

}  // namespace testsupport

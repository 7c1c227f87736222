#pragma once

// The two controllers.
//
// Co-located: a predictor xi runs at the controller rate delta and is reset
// to the measurement whenever a transmission succeeds; u = K alpha.
//
// Remote: at each successful transmission z_m the controller rolls the same
// recursion forward h steps and ships the whole control sequence. The
// actuator buffer replays it on the delta grid, holds the last value once the
// sequence is exhausted, and drops everything when a newer packet arrives.

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "dosnet/errors.hpp"
#include "dosnet/matrix_kernels.hpp"

namespace dosnet {

struct PredictorState {
    Vector xi;      // xi(q delta)
    Vector last_u;  // input held on [q delta, (q+1) delta[
    std::size_t step = 0;

    static PredictorState initial(Eigen::Index n, Eigen::Index m) {
        return {Vector::Zero(n), Vector::Zero(m), 0};
    }
};

struct ControlPacket {
    double built_at = 0.0;
    std::vector<Vector> controls;     // u_0 .. u_{h-1}
    std::vector<Vector> predictions;  // alpha_0 .. alpha_{h-1}
    std::size_t skip = 0;

    std::size_t h() const noexcept { return controls.size(); }

    friend bool operator==(const ControlPacket& a, const ControlPacket& b) {
        if (a.built_at != b.built_at || a.skip != b.skip || a.h() != b.h()) return false;
        for (std::size_t p = 0; p < a.h(); ++p) {
            if (a.controls[p] != b.controls[p] || a.predictions[p] != b.predictions[p]) {
                return false;
            }
        }
        return true;
    }
};

struct ActuatorBuffer {
    std::optional<ControlPacket> packet;
    std::optional<double> armed_since;
    double sampling = 0.0;  // delta
    Eigen::Index inputs = 0;

    static ActuatorBuffer empty(double delta, Eigen::Index m) {
        if (!(delta > 0.0)) throw DomainError("ActuatorBuffer: delta must be > 0");
        return {std::nullopt, std::nullopt, delta, m};
    }

    friend bool operator==(const ActuatorBuffer&, const ActuatorBuffer&) = default;
};

namespace control {

namespace detail {

inline void check_model(const Matrix& K, const Matrix& Ad, const Matrix& Bd) {
    const Eigen::Index n = Ad.rows();
    if (Ad.cols() != n || Bd.rows() != n || K.rows() != Bd.cols() || K.cols() != n) {
        throw DimensionError("controller: expected A_delta n x n, B_delta n x m, K m x n");
    }
}

// Guards floor((t - t0) / delta) against representation error on the grid.
inline std::size_t grid_index(double elapsed, double delta) {
    if (elapsed <= 0.0) return 0;
    return static_cast<std::size_t>(std::floor(elapsed / delta + 1e-9));
}

}  // namespace detail

inline std::pair<PredictorState, Vector> colocated_step(const PredictorState& state,
                                                        const Matrix& K, const Matrix& Ad,
                                                        const Matrix& Bd,
                                                        const std::optional<Vector>& measurement) {
    detail::check_model(K, Ad, Bd);
    if (state.xi.size() != Ad.rows()) throw DimensionError("colocated_step: xi has wrong size");
    if (measurement && measurement->size() != Ad.rows()) {
        throw DimensionError("colocated_step: measurement has wrong size");
    }
    const Vector alpha = measurement ? *measurement : state.xi;
    Vector u = K * alpha;
    PredictorState next;
    next.xi = Ad * alpha + Bd * u;
    next.last_u = u;
    next.step = state.step + 1;
    return {std::move(next), std::move(u)};
}

inline ControlPacket build_packet(const Vector& y, const Matrix& K, const Matrix& Ad,
                                  const Matrix& Bd, std::size_t h, std::size_t skip = 0,
                                  double built_at = 0.0) {
    detail::check_model(K, Ad, Bd);
    if (y.size() != Ad.rows()) throw DimensionError("build_packet: measurement has wrong size");
    if (h < 1) throw DomainError("build_packet: h must be >= 1");
    if (skip >= h) {
        throw DelayExceedsHorizonError("build_packet: computation delay skips the whole packet");
    }
    ControlPacket pkt;
    pkt.built_at = built_at;
    pkt.skip = skip;
    pkt.controls.reserve(h);
    pkt.predictions.reserve(h);
    Vector alpha = y;
    for (std::size_t p = 0; p < h; ++p) {
        Vector u = K * alpha;
        pkt.predictions.push_back(alpha);
        pkt.controls.push_back(u);
        if (p + 1 < h) alpha = Ad * alpha + Bd * u;
    }
    return pkt;
}

/// Index of the packet entry applied at time t, clamped to h-1; nullopt if unarmed.
inline std::optional<std::size_t> active_index(const ActuatorBuffer& buf, double t) {
    if (!buf.packet || !buf.armed_since) return std::nullopt;
    const std::size_t p =
        buf.packet->skip + detail::grid_index(t - *buf.armed_since, buf.sampling);
    return std::min(p, buf.packet->h() - 1);
}

/// Samples not yet started at time t, counting the one in use; 0 once holding the last value
/// past the horizon.
inline std::size_t remaining_samples(const ActuatorBuffer& buf, double t) {
    if (!buf.packet || !buf.armed_since) return 0;
    const std::size_t p =
        buf.packet->skip + detail::grid_index(t - *buf.armed_since, buf.sampling);
    return p >= buf.packet->h() ? 0 : buf.packet->h() - p;
}

inline Vector buffer_output(const ActuatorBuffer& buf, double t) {
    const auto p = active_index(buf, t);
    if (!p) return Vector::Zero(buf.inputs);
    return buf.packet->controls[*p];
}

/// Discards the current contents and arms the buffer with `packet` at time z.
inline ActuatorBuffer deliver_packet(const ActuatorBuffer& buf, ControlPacket packet, double z) {
    if (buf.armed_since && z < *buf.armed_since) {
        throw OrderingError("deliver_packet: delivery time precedes the armed packet");
    }
    if (packet.h() == 0) throw DomainError("deliver_packet: empty packet");
    if (buf.inputs != 0 && packet.controls.front().size() != buf.inputs) {
        throw DimensionError("deliver_packet: control size does not match the actuator");
    }
    ActuatorBuffer next = buf;
    next.packet = std::move(packet);
    next.armed_since = z;
    return next;
}

}  // namespace control

using control::buffer_output;
using control::build_packet;
using control::colocated_step;
using control::deliver_packet;

}  // namespace dosnet

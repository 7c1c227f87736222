#include <gtest/gtest.h>

#include "dosnet/benchmark_example.hpp"
#include "dosnet/control_laws.hpp"
#include "dosnet/matrix_kernels.hpp"
#include "support/random_models.hpp"

using namespace dosnet;
using namespace testsupport;

namespace {

struct Model {
    Matrix K, Ad, Bd;
};

Model benchmark_model(double delta = 0.1) {
    const ZohPair z = zoh_discretize(benchmark::plant_A(), benchmark::plant_B(), delta);
    return {benchmark::gain_K(), z.A_delta, z.B_delta};
}

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

ControlPacket packet_with(int h, std::size_t skip = 0) {
    const Model m = benchmark_model();
    return build_packet(vec2(1.0, -0.5), m.K, m.Ad, m.Bd, static_cast<std::size_t>(h), skip);
}

}  // namespace

TEST(ColocatedStep, Equilibrium) {
    const Model m = benchmark_model();
    auto [next, u] = colocated_step(PredictorState::initial(2, 2), m.K, m.Ad, m.Bd, Vector::Zero(2));
    EXPECT_TRUE(u.isZero(0.0));
    EXPECT_TRUE(next.xi.isZero(0.0));
    EXPECT_EQ(next.step, 1u);
}

TEST(ColocatedStep, NoMeasurementKeepsZeroPrediction) {
    const Model m = benchmark_model();
    PredictorState s = PredictorState::initial(2, 2);
    for (int q = 0; q < 20; ++q) {
        auto [next, u] = colocated_step(s, m.K, m.Ad, m.Bd, std::nullopt);
        EXPECT_TRUE(u.isZero(0.0));
        s = next;
    }
}

TEST(ColocatedStep, SingleStepWithMeasurement) {
    const Model m = benchmark_model();
    const Vector y = vec2(0.3, -1.2);
    auto [next, u] = colocated_step(PredictorState::initial(2, 2), m.K, m.Ad, m.Bd, y);
    EXPECT_TRUE(u.isApprox(m.K * y, 1e-15));
    EXPECT_TRUE(next.xi.isApprox(m.Ad * y + m.Bd * (m.K * y), 1e-15));
    EXPECT_TRUE(next.last_u.isApprox(u, 0.0));
}

TEST(ColocatedStep, RejectsWrongSizes) {
    const Model m = benchmark_model();
    EXPECT_THROW(colocated_step(PredictorState::initial(3, 2), m.K, m.Ad, m.Bd, std::nullopt), DimensionError);
    EXPECT_THROW(colocated_step(PredictorState::initial(2, 2), m.K, m.Ad, m.Bd, Vector::Zero(3)),
                 DimensionError);
    EXPECT_THROW(colocated_step(PredictorState::initial(2, 2), Matrix::Zero(1, 3), m.Ad, m.Bd, std::nullopt),
                 DimensionError);
}

TEST(BuildPacket, ZeroMeasurement) {
    const Model m = benchmark_model();
    const ControlPacket p = build_packet(Vector::Zero(2), m.K, m.Ad, m.Bd, 6);
    ASSERT_EQ(p.h(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_TRUE(p.controls[i].isZero(0.0));
        EXPECT_TRUE(p.predictions[i].isZero(0.0));
    }
}

TEST(BuildPacket, SingleEntry) {
    const Model m = benchmark_model();
    const Vector y = vec2(1.0, 2.0);
    const ControlPacket p = build_packet(y, m.K, m.Ad, m.Bd, 1);
    ASSERT_EQ(p.h(), 1u);
    EXPECT_TRUE(p.controls[0].isApprox(m.K * y, 1e-15));
}

TEST(BuildPacket, PredictionsMatchExactPlantRollout) {
    // Noise- and disturbance-free plant driven by the packet must follow the predictions.
    const double delta = 0.1;
    const Model m = benchmark_model(delta);
    const Vector y = vec2(1.0, 0.0);
    const ControlPacket p = build_packet(y, m.K, m.Ad, m.Bd, 3);
    Vector x = y;
    for (std::size_t i = 0; i < p.h(); ++i) {
        EXPECT_LE((p.predictions[i] - x).norm(), 1e-13);
        EXPECT_TRUE(p.controls[i].isApprox(m.K * p.predictions[i], 1e-15));
        // Independent propagation: fine-grained exponential of the plant with held input.
        const int fine = 50;
        const ZohPair step = zoh_discretize(benchmark::plant_A(), benchmark::plant_B(), delta / fine);
        for (int j = 0; j < fine; ++j) x = step.A_delta * x + step.B_delta * p.controls[i];
    }
    EXPECT_TRUE(p.predictions[1].isApprox(m.Ad * y + m.Bd * m.K * y, 1e-14));
}

TEST(BuildPacket, SkipMustLeaveAnEntry) {
    EXPECT_NO_THROW(packet_with(3, 2));
    EXPECT_THROW(packet_with(3, 3), DelayExceedsHorizonError);
    const Model m = benchmark_model();
    EXPECT_THROW(build_packet(vec2(1, 1), m.K, m.Ad, m.Bd, 0), DomainError);
}

TEST(BufferOutput, EmptyBufferIsZero) {
    const ActuatorBuffer b = ActuatorBuffer::empty(0.1, 2);
    EXPECT_TRUE(buffer_output(b, 0.0).isZero(0.0));
    EXPECT_TRUE(buffer_output(b, 7.3).isZero(0.0));
}

TEST(BufferOutput, IndexArithmeticAndHold) {
    const ControlPacket p = packet_with(5);
    const ActuatorBuffer b = deliver_packet(ActuatorBuffer::empty(0.1, 2), p, 2.0);
    EXPECT_EQ(buffer_output(b, 2.0), p.controls[0]);
    EXPECT_EQ(buffer_output(b, 2.1), p.controls[1]);
    EXPECT_EQ(buffer_output(b, 2.0999), p.controls[0]);
    EXPECT_EQ(buffer_output(b, 2.45), p.controls[4]);
    EXPECT_EQ(buffer_output(b, 2.75), p.controls[4]);
    EXPECT_EQ(buffer_output(b, 100.0), p.controls[4]);
    EXPECT_EQ(control::remaining_samples(b, 2.0), 5u);
    EXPECT_EQ(control::remaining_samples(b, 2.45), 1u);
    EXPECT_EQ(control::remaining_samples(b, 2.5), 0u);
}

TEST(BufferOutput, PiecewiseConstantBetweenGridPoints) {
    const ControlPacket p = packet_with(4);
    const ActuatorBuffer b = deliver_packet(ActuatorBuffer::empty(0.1, 2), p, 1.0);
    for (int i = 0; i < 4; ++i) {
        for (double f : {0.0, 0.3, 0.7, 0.999}) {
            EXPECT_EQ(buffer_output(b, 1.0 + (i + f) * 0.1), p.controls[static_cast<std::size_t>(i)]);
        }
    }
}

TEST(DeliverPacket, ReplacesContentsAndIsIdempotent) {
    const Model m = benchmark_model();
    const ControlPacket first = packet_with(5);
    const ControlPacket second = build_packet(vec2(-2.0, 0.5), m.K, m.Ad, m.Bd, 5);
    const ActuatorBuffer a = deliver_packet(ActuatorBuffer::empty(0.1, 2), first, 1.0);
    const ActuatorBuffer b = deliver_packet(a, second, 1.2);
    EXPECT_EQ(buffer_output(b, 1.2), second.controls[0]);
    EXPECT_EQ(buffer_output(b, 1.35), second.controls[1]);
    EXPECT_EQ(deliver_packet(b, second, 1.2), b);
}

TEST(DeliverPacket, RejectsTimeRegression) {
    const ActuatorBuffer a = deliver_packet(ActuatorBuffer::empty(0.1, 2), packet_with(3), 1.0);
    EXPECT_THROW(deliver_packet(a, packet_with(3), 0.9), OrderingError);
}

TEST(DeliverPacket, SkipShiftsFirstApplied) {
    const ControlPacket p = packet_with(5, 2);
    const ActuatorBuffer b = deliver_packet(ActuatorBuffer::empty(0.1, 2), p, 3.0);
    EXPECT_EQ(buffer_output(b, 3.0), p.controls[2]);
    EXPECT_EQ(buffer_output(b, 3.1), p.controls[3]);
    EXPECT_EQ(buffer_output(b, 3.5), p.controls[4]);
}

TEST(Architectures, SameRecursionWhileGapsAreCovered) {
    SplitMix64 rng(41);
    for (int k = 0; k < 20; ++k) {
        const int n = random_int(rng, 1, 4), m = random_int(rng, 1, n);
        const System s = random_system(rng, n, m);
        const ZohPair z = zoh_discretize(s.A, s.B, 0.05);
        const std::size_t h = static_cast<std::size_t>(random_int(rng, 1, 10));
        const Vector y = random_unit_vector(rng, n);
        const ControlPacket p = build_packet(y, s.K, z.A_delta, z.B_delta, h);
        PredictorState st = PredictorState::initial(n, m);
        for (std::size_t q = 0; q < h; ++q) {
            auto [next, u] = colocated_step(st, s.K, z.A_delta, z.B_delta,
                                            q == 0 ? std::optional<Vector>(y) : std::nullopt);
            EXPECT_EQ(u, p.controls[q]);
            st = next;
        }
    }
}

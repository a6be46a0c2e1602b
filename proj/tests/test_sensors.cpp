#include "attfdir/error.hpp"
#include "attfdir/sensors.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace attfdir;

namespace {

MeasurementVector quat_measurement() {
    Vec st(4), mm(4), gy(3);
    st << 1, 0, 0, 0;
    mm << 0.9, 0.1, 0.1, 0.1;
    gy << 0.1, -0.2, 0.3;
    return stack_measurements(st, mm, gy);
}

FaultSpec gyro_fault(FaultKind kind, double t0, double dur, double mag) {
    FaultSpec f;
    f.target = kGyro;
    f.kind = kind;
    f.t_start = t0;
    f.duration = dur;
    f.magnitude = mag;
    return f;
}

} // namespace

TEST(Rng, SubStreamsAreIndependentOfEachOther) {
    EXPECT_NE(derive_seed(42, "sensor/gyro"), derive_seed(42, "sensor/star_tracker"));
    EXPECT_NE(derive_seed(42, "pf"), derive_seed(43, "pf"));
    RandomStream a(42, "x"), b(42, "x");
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(a.normal(), b.normal());
    }
}

TEST(Sensors, GyroStatistics) {
    GyroModel g;
    g.sigma = 0.005;
    g.bias = Vector3(0.02, -0.015, 0.01);
    RandomStream rng(1);
    const Vector3 w(0.1, 0.2, -0.3);
    const int n = 40000;
    Vector3 sum = Vector3::Zero(), sq = Vector3::Zero();
    for (int i = 0; i < n; ++i) {
        const Vector3 d = sample_gyro(w, g, rng) - w - g.bias;
        sum += d;
        sq += d.cwiseProduct(d);
    }
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(sum[k] / n, 0.0, 4 * g.sigma / std::sqrt(n));
        EXPECT_NEAR(std::sqrt(sq[k] / n), g.sigma, 0.02 * g.sigma);
    }
}

TEST(Sensors, NoiselessSensorsReturnTruth) {
    RandomStream rng(5);
    GyroModel g;
    EXPECT_EQ(sample_gyro(Vector3(1, 2, 3), g, rng), Vector3(1, 2, 3));
    const AttitudeSensorModel st{kStarTracker, Vec::Zero(4)};
    const Quaternion q = normalize(Quaternion(1, 2, 3, 4));
    EXPECT_EQ(sample_attitude(q, st, rng), q.vec());
}

TEST(Sensors, AttitudeSamplesAreNotRenormalized) {
    RandomStream rng(9);
    const AttitudeSensorModel st{kStarTracker, Vec::Constant(4, 0.001)};
    const Vec y = sample_attitude(Quaternion(), st, rng);
    EXPECT_GT(std::abs(y.norm() - 1.0), 1e-6);
}

TEST(Sensors, StackingLayouts) {
    const MeasurementVector y = quat_measurement();
    EXPECT_EQ(y.layout, MeasurementLayout::Quat11);
    EXPECT_EQ(y.values.size(), 11);
    EXPECT_EQ(y.extract(kGyro), Vec(Vector3(0.1, -0.2, 0.3)));
    const MeasurementVector e = stack_measurements(Vec::Zero(3), Vec::Zero(3), Vec::Zero(3));
    EXPECT_EQ(e.layout, MeasurementLayout::Euler9);
    EXPECT_THROW((void)stack_measurements(Vec::Zero(4), Vec::Zero(3), Vec::Zero(3)), ConfigError);
}

TEST(Sensors, SliceMap) {
    const SliceMap m = SliceMap::standard(MeasurementLayout::Quat11);
    EXPECT_EQ(m.dim(), 11);
    EXPECT_EQ(m.at(kMagnetometer).offset, 4);
    EXPECT_EQ(m.rows({kGyro, kStarTracker}), (std::vector<int>{0, 1, 2, 3, 8, 9, 10}));
    const SliceMap sub = m.subset({kStarTracker, kGyro});
    EXPECT_EQ(sub.dim(), 7);
    EXPECT_EQ(sub.at(kGyro).offset, 4);
    EXPECT_FALSE(sub.contains(kMagnetometer));
    EXPECT_THROW((void)m.at("sun_sensor"), ConfigError);
    EXPECT_EQ(SliceMap::standard(MeasurementLayout::Euler9).dim(), 9);
}

TEST(Faults, SpikeWindow) {
    const MeasurementVector y = quat_measurement();
    const std::vector<FaultSpec> f{gyro_fault(FaultKind::Spike, 125.0, 0.3, 1.0)};
    EXPECT_EQ(apply_faults(y, f, 124.9).values, y.values);
    EXPECT_NEAR(apply_faults(y, f, 125.0).values[8], 1.1, 1e-15);
    EXPECT_NEAR(apply_faults(y, f, 125.2).values[10], 1.3, 1e-15);
    EXPECT_EQ(apply_faults(y, f, 125.3).values, y.values);
    EXPECT_EQ(apply_faults(y, f, 125.0).values.head(8), y.values.head(8));
}

TEST(Faults, SingleAxis) {
    FaultSpec f = gyro_fault(FaultKind::Step, 0.0, 1.0, 0.5);
    f.axis = 1;
    const Vec out = apply_faults(quat_measurement(), {f}, 0.5).values;
    EXPECT_NEAR(out[8], 0.1, 1e-15);
    EXPECT_NEAR(out[9], 0.3, 1e-15);
    EXPECT_NEAR(out[10], 0.3, 1e-15);
}

TEST(Faults, DropoutBiasSaturation) {
    const MeasurementVector y = quat_measurement();
    EXPECT_TRUE(apply_faults(y, {gyro_fault(FaultKind::Dropout, 0, 10, 0)}, 5).values.tail(3).isZero());

    const FaultSpec bias = gyro_fault(FaultKind::ConstantBias, 10, 0, 0.01);
    EXPECT_TRUE(bias.active(1e6));
    EXPECT_FALSE(bias.active(9.99));
    EXPECT_NEAR(apply_faults(y, {bias}, 50).values[8], 0.11, 1e-15);

    FaultSpec sat = gyro_fault(FaultKind::Saturation, 0, 10, 0);
    sat.saturation_limit = 0.15;
    const Vec s = apply_faults(y, {sat}, 1).values.tail(3);
    EXPECT_EQ(s, Vec(Vector3(0.1, -0.15, 0.15)));
}

TEST(Faults, AppliedInListOrder) {
    const MeasurementVector y = quat_measurement();
    FaultSpec sat = gyro_fault(FaultKind::Saturation, 0, 10, 0);
    sat.saturation_limit = 0.2;
    const FaultSpec step = gyro_fault(FaultKind::Step, 0, 10, 1.0);
    EXPECT_NEAR(apply_faults(y, {step, sat}, 1).values[8], 0.2, 1e-15);
    EXPECT_NEAR(apply_faults(y, {sat, step}, 1).values[8], 1.1, 1e-15);
}

TEST(Faults, Validation) {
    const SliceMap m = SliceMap::standard(MeasurementLayout::Quat11);
    FaultSpec f = gyro_fault(FaultKind::Spike, 0, 1, 1);
    EXPECT_NO_THROW(validate(f, m));
    f.axis = 3;
    EXPECT_THROW(validate(f, m), ConfigError);
    f.axis.reset();
    f.target = "sun_sensor";
    EXPECT_THROW(validate(f, m), ConfigError);
    EXPECT_THROW((void)fault_kind_from_string("glitch"), ConfigError);
    EXPECT_EQ(fault_kind_from_string(to_string(FaultKind::ConstantBias)), FaultKind::ConstantBias);
}

TEST(Faults, HoldLastDropout) {
    FaultInjector inj({gyro_fault(FaultKind::Dropout, 1.0, 0.5, 0)}, DropoutMode::HoldLast);
    MeasurementVector y = quat_measurement();
    (void)inj.apply(y, 0.9);
    const Vec held = y.values.tail(3);
    y.values.tail(3) << 5, 6, 7;
    EXPECT_EQ(Vec(inj.apply(y, 1.0).values.tail(3)), held);
    EXPECT_EQ(Vec(inj.apply(y, 1.2).values.tail(3)), held);
    EXPECT_EQ(Vec(inj.apply(y, 1.6).values.tail(3)), Vec(Vector3(5, 6, 7)));
}

TEST(Sensors, SuiteStreamsAreIsolated) {
    // Changing the gyro model must not shift the star-tracker draws.
    SensorSuite a, b;
    b.gyro.sigma = 0.5;
    SensorStreams sa(42), sb(42);
    for (int k = 0; k < 5; ++k) {
        const auto ya = sample_suite(Quaternion(), Vector3::Zero(), a, sa);
        const auto yb = sample_suite(Quaternion(), Vector3::Zero(), b, sb);
        EXPECT_EQ(ya.extract(kStarTracker), yb.extract(kStarTracker));
        EXPECT_NE(ya.extract(kGyro), yb.extract(kGyro));
    }
}

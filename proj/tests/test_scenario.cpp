#include "attfdir/error.hpp"
#include "attfdir/scenario.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace attfdir;

namespace {

constexpr double kDeg = M_PI / 180.0;

const std::filesystem::path kScenarios = ATTFDIR_SCENARIO_DIR;

std::string error_of(const std::string& text) {
    try {
        (void)parse_scenario(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Scenario, BaselineValues) {
    const ScenarioConfig c = load_scenario(kScenarios / "paper_baseline.yaml");
    EXPECT_EQ(c.name, "paper_baseline");
    EXPECT_NEAR(c.initial.omega.x(), -7 * kDeg, 1e-15);
    EXPECT_NEAR(c.initial.omega.y(), 2 * kDeg, 1e-15);
    EXPECT_NEAR(c.initial.omega.z(), 5 * kDeg, 1e-15);
    EXPECT_EQ(c.initial.q.vec(), Vector4(1, 0, 0, 0));
    EXPECT_DOUBLE_EQ(c.truth.orbit.a, 7080.6);
    EXPECT_DOUBLE_EQ(c.truth.orbit.e, 0.0000979);
    EXPECT_NEAR(c.truth.orbit.i, 98.2 * kDeg, 1e-15);
    EXPECT_NEAR(c.truth.orbit.arg_perigee, 120.4799 * kDeg, 1e-15);
    EXPECT_NEAR(c.truth.orbit.raan, 95.2063 * kDeg, 1e-15);
    EXPECT_DOUBLE_EQ(c.truth.inertia.ixx(), 23745);
    EXPECT_DOUBLE_EQ(c.truth.inertia.full()(0, 2), -1267.1);
    EXPECT_DOUBLE_EQ(c.sensors.gyro.sigma, 0.005);
    EXPECT_EQ(c.sensors.gyro.bias, Vector3(0.02, -0.015, 0.01));
    EXPECT_EQ(c.sensors.magnetometer.variances, (Vec(4) << 0.01, 0.02, 0.05, 0.03).finished());
    EXPECT_TRUE(c.truth.torque.gravity_gradient);
    EXPECT_DOUBLE_EQ(c.dt, 0.1);
    EXPECT_DOUBLE_EQ(c.t_end, 300.0);
    EXPECT_EQ(c.steps(), 3000);
}

TEST(Scenario, EveryBundledScenarioLoads) {
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
        if (entry.path().extension() == ".yaml") {
            EXPECT_NO_THROW((void)load_scenario(entry.path())) << entry.path();
            ++count;
        }
    }
    EXPECT_GE(count, 10);
}

TEST(Scenario, ParseErrors) {
    EXPECT_NE(error_of("").find("parse error"), std::string::npos);
    EXPECT_NE(error_of("schema_version: [1").find("parse error"), std::string::npos);
    EXPECT_NE(error_of("name: x").find("schema_version"), std::string::npos);
    EXPECT_NE(error_of("schema_version: 2").find("schema_version"), std::string::npos);
}

TEST(Scenario, ErrorsNameTheKey) {
    EXPECT_NE(error_of("schema_version: 1\nelements:\n  e: 1.2\n").find("elements.e"),
              std::string::npos);
    EXPECT_NE(error_of("schema_version: 1\nfilter:\n  ukf:\n    alfa: 1\n").find("filter.ukf.alfa"),
              std::string::npos);
    EXPECT_NE(error_of("schema_version: 1\nbogus: 3\n").find("bogus"), std::string::npos);
    EXPECT_NE(error_of("schema_version: 1\ninitial_state:\n  omega_deg_s: [1, 2]\n")
                  .find("initial_state.omega_deg_s"),
              std::string::npos);
    EXPECT_NE(error_of("schema_version: 1\nfilter:\n  type: kalman\n").find("filter.type"),
              std::string::npos);
    EXPECT_NE(error_of("schema_version: 1\ndt: -0.1\n").find("dt"), std::string::npos);
    EXPECT_NE(error_of("schema_version: 1\nfaults:\n  - target: gyro\n    kind: spike\n    axis: 5\n")
                  .find("faults[0]"),
              std::string::npos);
    EXPECT_NE(error_of("schema_version: 1\nfaults:\n  - target: lidar\n    kind: spike\n")
                  .find("faults[0]"),
              std::string::npos);
    EXPECT_NE(error_of("schema_version: 1\nfdir:\n  alpha: 2\n").find("alpha"), std::string::npos);
    EXPECT_NE(error_of("schema_version: 1\ninertia: [1, 1, 5]\n").find("inertia"),
              std::string::npos);
}

TEST(Scenario, DefaultsAndOverrides) {
    const ScenarioConfig c = parse_scenario(R"(
schema_version: 1
seed: 7
initial_state:
  euler_deg: [10, 20, 30]
filter:
  type: pf
  augment_bias: true
  pf:
    particles: 500
fdir:
  policy: sequence
  window: 15
)");
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.filter.kind, FilterKind::Pf);
    EXPECT_TRUE(c.filter.model.augmented);
    EXPECT_EQ(c.filter.model.process_noise.rows(), 10);
    EXPECT_EQ(c.filter.initial_offset.size(), 10);
    EXPECT_EQ(c.filter.pf.particles, 500);
    EXPECT_EQ(c.policy, FdirPolicy::Sequence);
    EXPECT_EQ(c.detector.window, 15);
    const Matrix3 expected = euler313_to_dcm({10 * kDeg, 20 * kDeg, 30 * kDeg});
    EXPECT_LT((quat_to_dcm(c.initial.q) - expected).norm(), 1e-14);
    // Filter R follows the sensor models unless overridden.
    EXPECT_NEAR(c.filter.model.r_gyro(0, 0), 0.005 * 0.005, 1e-18);
}

TEST(Scenario, ResolvePath) {
    EXPECT_EQ(resolve_scenario_path("dropout", kScenarios), kScenarios / "dropout.yaml");
    const auto direct = kScenarios / "dropout.yaml";
    EXPECT_EQ(resolve_scenario_path(direct.string(), kScenarios), direct);
    EXPECT_THROW((void)load_scenario(resolve_scenario_path("missing", kScenarios)), ConfigError);
}

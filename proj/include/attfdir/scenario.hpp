#pragma once

#include "attfdir/dynamics.hpp"
#include "attfdir/fdir.hpp"
#include "attfdir/filters.hpp"
#include "attfdir/models.hpp"
#include "attfdir/sensors.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace attfdir {

inline constexpr int kSchemaVersion = 1;

enum class Parameterization { Quaternion, Euler };
enum class FilterKind { Ekf, Ukf, Pf };
enum class FdirPolicy { None, Innovation, Sequence, Isolation };

[[nodiscard]] const char* to_string(FilterKind kind);
[[nodiscard]] const char* to_string(FdirPolicy policy);
[[nodiscard]] FilterKind filter_kind_from_string(const std::string& name);

struct FilterSettings {
    FilterKind kind = FilterKind::Ekf;
    /// Filter-side model: dynamics (incl. its own gravity-gradient flag),
    /// sensors used, R, Q, Σ₀ and the augmentation flag.
    AttitudeModelConfig model;
    /// Added to the true initial state to form the initial estimate.
    Vec initial_offset;
    UkfParams ukf;
    PfParams pf;
};

/// Declarative experiment description. See docs in README for the file grammar.
struct ScenarioConfig {
    std::string name = "scenario";
    std::uint64_t seed = 42;
    double dt = 0.1;
    double t_end = 300.0;
    Parameterization parameterization = Parameterization::Quaternion;

    RigidBodyState initial;                  ///< truth initial state
    std::optional<EulerAngles313> initial_euler;
    DynamicsEnvironment truth;               ///< inertia, orbit, truth torques

    SensorSuite sensors;
    DropoutMode dropout_mode = DropoutMode::Zero;
    std::vector<FaultSpec> faults;

    FilterSettings filter;
    FdirPolicy policy = FdirPolicy::None;
    DetectorConfig detector;

    double settle_time = 20.0;  ///< metrics ignore t < settle_time

    [[nodiscard]] MeasurementLayout layout() const {
        return parameterization == Parameterization::Quaternion ? MeasurementLayout::Quat11
                                                                : MeasurementLayout::Euler9;
    }
    [[nodiscard]] long steps() const;
};

/// Defaults of the baseline satellite: inertia, orbit, ω₀, q₀ and sensor
/// noise of the reference spacecraft.
[[nodiscard]] ScenarioConfig baseline_scenario();

/// Parses YAML text. Throws ConfigError naming the offending key.
[[nodiscard]] ScenarioConfig parse_scenario(const std::string& text);

/// Reads and parses a scenario file. Throws ConfigError.
[[nodiscard]] ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Checks cross-field invariants (fault targets, dimensions, ranges).
void validate(const ScenarioConfig& cfg);

/// Resolves a CLI scenario argument: an existing path, or the name of a
/// bundled scenario in `bundled_dir` (".yaml" appended).
[[nodiscard]] std::filesystem::path resolve_scenario_path(const std::string& arg,
                                                          const std::filesystem::path& bundled_dir);

} // namespace attfdir

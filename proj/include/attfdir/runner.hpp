#pragma once

#include "attfdir/scenario.hpp"

#include <optional>
#include <string>
#include <vector>

namespace attfdir {

/// What run_scenario does after truth and sensor sampling.
enum class RunMode {
    Simulate,  ///< truth and measurements only
    Estimate,  ///< adds the filter; FDIR statistics are computed but never acted on
    Fdir,      ///< filter plus the scenario's detection and recovery policy
};

/// Bit of each sensor in StepRecord::isolated_mask.
[[nodiscard]] int sensor_bit(const std::string& sensor);

struct StepRecord {
    double t = 0.0;
    RigidBodyState truth;
    std::optional<EulerAngles313> truth_euler;  ///< Euler-mode runs
    Vec measurement_clean;                      ///< before fault injection
    Vec measurement;                            ///< as seen by the filter

    // Filter columns, empty in Simulate mode.
    Vec estimate;
    Vec sigma;  ///< square root of the covariance diagonal
    std::optional<InnovationRecord> innovation;
    FaultReport innovation_check;  ///< single-step full-dimension test
    FaultReport sequence_check;    ///< moving-average test
    std::vector<SensorNis> sensor_checks;
    FaultReport report;            ///< what the active policy decided
    int isolated_mask = 0;
    bool update_skipped = false;
    bool pf_degenerate = false;
};

struct RunResult {
    std::string scenario;
    RunMode mode = RunMode::Fdir;
    FilterKind filter = FilterKind::Ekf;
    FdirPolicy policy = FdirPolicy::None;
    MeasurementLayout layout = MeasurementLayout::Quat11;
    bool augmented = false;
    std::vector<StepRecord> steps;

    [[nodiscard]] bool has_filter() const { return mode != RunMode::Simulate; }
};

/// Propagates truth, samples and corrupts the sensors and runs the
/// configured filter and policy. Deterministic for a fixed config. Failures
/// are rethrown with the step index prepended.
[[nodiscard]] RunResult run_scenario(const ScenarioConfig& cfg, RunMode mode = RunMode::Fdir);

struct MetricsWindow {
    double t_from = 20.0;
    double t_to = 1e300;
};

struct Metrics {
    std::string filter;
    double rmse_q = 0.0;      ///< quaternion error norm, hemisphere-aligned
    double rmse_omega = 0.0;  ///< rad/s
    std::optional<double> rmse_bias;
    std::optional<double> detection_latency;  ///< s after the first fault onset
    int detections = 0;
    int false_alarms = 0;
    bool missed_detection = false;
    double mean_nis = 0.0;
    double nis_exceedance = 0.0;  ///< fraction of steps above the single-step threshold
};

/// RMSE over the window and detection figures against the fault list.
/// Detections within [t_start, t_end + grace] of a fault count as hits; all
/// others are false alarms. `grace` defaults to one step, or the window
/// length for the sequence policy.
[[nodiscard]] Metrics compute_metrics(const RunResult& result, const std::vector<FaultSpec>& faults,
                                      const MetricsWindow& window, std::optional<double> grace = {});

/// Metrics of a scenario with its own settle time.
[[nodiscard]] Metrics compute_metrics(const RunResult& result, const ScenarioConfig& cfg);

/// Root-mean-square of per-step error norms between two equally long series.
[[nodiscard]] double rmse(const std::vector<Vec>& estimate, const std::vector<Vec>& truth);

/// Runs the scenario once per filter kind on separate threads. Results come
/// back in the order of `kinds`.
[[nodiscard]] std::vector<RunResult> compare(const ScenarioConfig& cfg,
                                             const std::vector<FilterKind>& kinds,
                                             RunMode mode = RunMode::Fdir);

} // namespace attfdir

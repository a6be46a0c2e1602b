#pragma once

#include "attfdir/innovation.hpp"
#include "attfdir/sensors.hpp"

#include <optional>
#include <string>
#include <vector>

namespace attfdir {

/// Inverse CDF of the chi-square distribution, |CDF(γ) − α| < 1e-10.
/// Requires dof >= 1 and 0 < alpha < 1 (ConfigError otherwise).
[[nodiscard]] double chi2_quantile(int dof, double alpha);

/// Chi-square CDF (regularized lower incomplete gamma).
[[nodiscard]] double chi2_cdf(int dof, double x);

struct DetectorConfig {
    double alpha = 0.95;
    int window = 20;
    bool per_sensor = false;
};

/// Throws ConfigError unless 0 < alpha < 1 and window >= 1.
void validate(const DetectorConfig& cfg);

struct FaultReport {
    double t = 0.0;
    bool detected = false;
    std::vector<std::string> isolated;
    double statistic = 0.0;
    double threshold = 0.0;
    int dof = 0;
};

/// Sliding window over the last N NIS values. During warm-up the mean is
/// taken over the samples pushed so far.
class NisWindow {
public:
    explicit NisWindow(int size);

    void push(double nis);
    /// Running mean over the buffer in insertion order; a constant stream
    /// yields exactly that constant.
    [[nodiscard]] double mean() const;
    [[nodiscard]] int size() const { return size_; }
    [[nodiscard]] int count() const { return static_cast<int>(values_.size()); }
    [[nodiscard]] std::vector<double> contents() const;

private:
    int size_;
    std::vector<double> values_;  ///< ring buffer storage
    std::size_t head_ = 0;        ///< index of the oldest sample once full
};

/// Single-step NIS test against χ²(dim ν, α).
[[nodiscard]] FaultReport innovation_filter_check(const InnovationRecord& record,
                                                  const DetectorConfig& cfg);

/// Pushes nis into the window and tests the moving average against χ²(dof, α).
[[nodiscard]] FaultReport sequence_monitor_update(NisWindow& window, double nis, int dof,
                                                  double t, const DetectorConfig& cfg);

struct SensorNis {
    std::string sensor;
    double nis = 0.0;
    int dof = 0;
    double threshold = 0.0;
    bool flagged = false;
};

/// Per-sensor NIS from the diagonal blocks of the record's S (valid because R
/// is block diagonal, so S_i = H_i Σ⁻ H_iᵀ + R_i).
[[nodiscard]] std::vector<SensorNis> per_sensor_nis(const InnovationRecord& record,
                                                    const SliceMap& slices, double alpha);

/// Same statistic assembled explicitly from the predicted covariance, the
/// measurement Jacobian and R.
[[nodiscard]] std::vector<SensorNis> per_sensor_nis(const InnovationRecord& record,
                                                    const SliceMap& slices, const Mat& sigma_pred,
                                                    const Mat& h, const Mat& r, double alpha);

struct ValidMeasurement {
    Vec y;
    Mat h;
    Mat r;
    std::vector<int> rows;  ///< kept rows of the full measurement
    SliceMap slices;
};

/// Deletes the rows of sensors not in `healthy` from y and H and their
/// blocks from R. Returns nullopt when no healthy sensor is left, meaning the
/// caller performs a prediction-only step.
[[nodiscard]] std::optional<ValidMeasurement> slice_valid(const Vec& y, const Mat& h, const Mat& r,
                                                          const std::vector<std::string>& healthy,
                                                          const SliceMap& slices);

} // namespace attfdir

#pragma once

#include "attfdir/attitude.hpp"
#include "attfdir/rng.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace attfdir {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr const char* kStarTracker = "star_tracker";
inline constexpr const char* kMagnetometer = "magnetometer";
inline constexpr const char* kGyro = "gyro";

/// Rate gyro: y = ω + b + v, v ~ N(0, σ²) per axis.
struct GyroModel {
    double sigma = 0.0;              ///< rad/s
    Vector3 bias = Vector3::Zero();  ///< rad/s
};

/// Attitude sensor reporting truth components plus Gaussian noise with a
/// diagonal covariance (4 entries for quaternions, 3 for Euler angles).
struct AttitudeSensorModel {
    std::string name;
    Vec variances;
};

enum class MeasurementLayout { Euler9, Quat11 };

struct SensorSlice {
    std::string name;
    int offset = 0;
    int size = 0;
};

/// Row ranges of each sensor inside a stacked measurement vector.
class SliceMap {
public:
    SliceMap() = default;
    explicit SliceMap(std::vector<SensorSlice> slices);

    /// Star tracker, magnetometer, gyro in that order.
    static SliceMap standard(MeasurementLayout layout);

    [[nodiscard]] const std::vector<SensorSlice>& slices() const { return slices_; }
    [[nodiscard]] int dim() const;
    [[nodiscard]] bool contains(const std::string& name) const;
    /// Throws ConfigError for unknown sensors.
    [[nodiscard]] const SensorSlice& at(const std::string& name) const;
    [[nodiscard]] int index_of(const std::string& name) const;

    /// Measurement rows of the named sensors, in stacking order.
    [[nodiscard]] std::vector<int> rows(const std::vector<std::string>& names) const;
    /// Map restricted to the named sensors with offsets recomputed.
    [[nodiscard]] SliceMap subset(const std::vector<std::string>& names) const;

private:
    std::vector<SensorSlice> slices_;
};

struct MeasurementVector {
    Vec values;
    MeasurementLayout layout = MeasurementLayout::Quat11;
    SliceMap slices;

    /// Rows belonging to one sensor.
    [[nodiscard]] Vec extract(const std::string& sensor) const;
};

[[nodiscard]] Vector3 sample_gyro(const Vector3& omega_true, const GyroModel& model,
                                  RandomStream& rng);

/// Truth components plus noise; the result is not renormalized.
[[nodiscard]] Vec sample_attitude(const Vec& truth, const AttitudeSensorModel& model,
                                  RandomStream& rng);
[[nodiscard]] Vec sample_attitude(const Quaternion& q_true, const AttitudeSensorModel& model,
                                  RandomStream& rng);
[[nodiscard]] Vec sample_attitude(const EulerAngles313& e_true, const AttitudeSensorModel& model,
                                  RandomStream& rng);

/// [st; mm; gyro]. Layout is inferred from the block sizes (4+4+3 or 3+3+3);
/// anything else throws ConfigError.
[[nodiscard]] MeasurementVector stack_measurements(const Vec& st, const Vec& mm,
                                                   const Vec& gyro);

enum class FaultKind { Spike, Dropout, Step, ConstantBias, Saturation };

enum class DropoutMode { Zero, HoldLast };

struct FaultSpec {
    std::string target;        ///< sensor name
    std::optional<int> axis;   ///< row within the sensor; all rows when empty
    FaultKind kind = FaultKind::Spike;
    double t_start = 0.0;
    double duration = 0.0;
    double magnitude = 0.0;
    double saturation_limit = 0.0;

    /// Constant-bias faults never end; the others cover [t_start, t_start + duration).
    [[nodiscard]] bool active(double t) const;
    [[nodiscard]] double t_end() const;
};

[[nodiscard]] const char* to_string(FaultKind kind);
/// Throws ConfigError for unknown names.
[[nodiscard]] FaultKind fault_kind_from_string(const std::string& name);

/// Throws ConfigError when the target sensor or axis does not exist in the
/// map or the timing fields are negative.
void validate(const FaultSpec& fault, const SliceMap& slices);

/// Applies every active fault in list order. Dropouts write zeros.
[[nodiscard]] MeasurementVector apply_faults(const MeasurementVector& y,
                                             const std::vector<FaultSpec>& faults, double t);

/// Stateful injector. In HoldLast mode a dropout repeats the last reading
/// seen before the dropout window opened; otherwise identical to apply_faults.
class FaultInjector {
public:
    FaultInjector(std::vector<FaultSpec> faults, DropoutMode mode);

    [[nodiscard]] MeasurementVector apply(const MeasurementVector& y, double t);
    [[nodiscard]] const std::vector<FaultSpec>& faults() const { return faults_; }

private:
    std::vector<FaultSpec> faults_;
    DropoutMode mode_;
    std::vector<std::optional<Vec>> held_;
    std::optional<MeasurementVector> last_clean_;
};

/// Sensor models plus their independent noise streams.
struct SensorSuite {
    GyroModel gyro;
    AttitudeSensorModel star_tracker{kStarTracker, Vec::Constant(4, 0.001)};
    AttitudeSensorModel magnetometer{kMagnetometer, (Vec(4) << 0.01, 0.02, 0.05, 0.03).finished()};
};

/// Per-sensor random streams derived from one master seed.
class SensorStreams {
public:
    explicit SensorStreams(std::uint64_t master_seed)
        : star_tracker_(master_seed, "sensor/star_tracker"),
          magnetometer_(master_seed, "sensor/magnetometer"),
          gyro_(master_seed, "sensor/gyro") {}

    RandomStream& star_tracker() { return star_tracker_; }
    RandomStream& magnetometer() { return magnetometer_; }
    RandomStream& gyro() { return gyro_; }

private:
    RandomStream star_tracker_;
    RandomStream magnetometer_;
    RandomStream gyro_;
};

/// Samples all three sensors for the given truth (quaternion layout).
[[nodiscard]] MeasurementVector sample_suite(const Quaternion& q, const Vector3& omega,
                                             const SensorSuite& suite, SensorStreams& streams);
/// Euler layout variant.
[[nodiscard]] MeasurementVector sample_suite(const EulerAngles313& e, const Vector3& omega,
                                             const SensorSuite& suite, SensorStreams& streams);

} // namespace attfdir

#include "attfdir/sensors.hpp"

#include "attfdir/error.hpp"

#include <algorithm>
#include <cmath>

namespace attfdir {

SliceMap::SliceMap(std::vector<SensorSlice> slices) : slices_(std::move(slices)) {}

SliceMap SliceMap::standard(MeasurementLayout layout) {
    const int att = layout == MeasurementLayout::Quat11 ? 4 : 3;
    return SliceMap({{kStarTracker, 0, att}, {kMagnetometer, att, att}, {kGyro, 2 * att, 3}});
}

int SliceMap::dim() const {
    int n = 0;
    for (const auto& s : slices_) {
        n += s.size;
    }
    return n;
}

bool SliceMap::contains(const std::string& name) const {
    return std::any_of(slices_.begin(), slices_.end(),
                       [&](const SensorSlice& s) { return s.name == name; });
}

int SliceMap::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < slices_.size(); ++i) {
        if (slices_[i].name == name) {
            return static_cast<int>(i);
        }
    }
    throw ConfigError("unknown sensor '" + name + "'");
}

const SensorSlice& SliceMap::at(const std::string& name) const {
    return slices_[static_cast<std::size_t>(index_of(name))];
}

std::vector<int> SliceMap::rows(const std::vector<std::string>& names) const {
    std::vector<int> out;
    for (const auto& s : slices_) {
        if (std::find(names.begin(), names.end(), s.name) == names.end()) {
            continue;
        }
        for (int r = 0; r < s.size; ++r) {
            out.push_back(s.offset + r);
        }
    }
    for (const auto& n : names) {
        (void)index_of(n);
    }
    return out;
}

SliceMap SliceMap::subset(const std::vector<std::string>& names) const {
    std::vector<SensorSlice> out;
    int offset = 0;
    for (const auto& s : slices_) {
        if (std::find(names.begin(), names.end(), s.name) != names.end()) {
            out.push_back({s.name, offset, s.size});
            offset += s.size;
        }
    }
    return SliceMap(std::move(out));
}

Vec MeasurementVector::extract(const std::string& sensor) const {
    const SensorSlice& s = slices.at(sensor);
    return values.segment(s.offset, s.size);
}

Vector3 sample_gyro(const Vector3& omega_true, const GyroModel& model, RandomStream& rng) {
    Vector3 y = omega_true + model.bias;
    for (int i = 0; i < 3; ++i) {
        y[i] += model.sigma * rng.normal();
    }
    return y;
}

Vec sample_attitude(const Vec& truth, const AttitudeSensorModel& model, RandomStream& rng) {
    if (truth.size() != model.variances.size()) {
        throw ConfigError("sample_attitude: " + model.name + " covariance has " +
                          std::to_string(model.variances.size()) + " entries, truth has " +
                          std::to_string(truth.size()));
    }
    Vec y = truth;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y[i] += std::sqrt(model.variances[i]) * rng.normal();
    }
    return y;
}

Vec sample_attitude(const Quaternion& q_true, const AttitudeSensorModel& model,
                    RandomStream& rng) {
    return sample_attitude(Vec(q_true.vec()), model, rng);
}

Vec sample_attitude(const EulerAngles313& e, const AttitudeSensorModel& model, RandomStream& rng) {
    return sample_attitude(Vec(Vector3(e.phi, e.theta, e.psi)), model, rng);
}

MeasurementVector stack_measurements(const Vec& st, const Vec& mm, const Vec& gyro) {
    MeasurementLayout layout;
    if (st.size() == 4 && mm.size() == 4 && gyro.size() == 3) {
        layout = MeasurementLayout::Quat11;
    } else if (st.size() == 3 && mm.size() == 3 && gyro.size() == 3) {
        layout = MeasurementLayout::Euler9;
    } else {
        throw ConfigError("stack_measurements: block sizes " + std::to_string(st.size()) + "+" +
                          std::to_string(mm.size()) + "+" + std::to_string(gyro.size()) +
                          " match neither 4+4+3 nor 3+3+3");
    }
    MeasurementVector y;
    y.layout = layout;
    y.slices = SliceMap::standard(layout);
    y.values.resize(st.size() + mm.size() + gyro.size());
    y.values << st, mm, gyro;
    return y;
}

bool FaultSpec::active(double t) const {
    if (t < t_start) {
        return false;
    }
    return kind == FaultKind::ConstantBias || t < t_start + duration;
}

double FaultSpec::t_end() const {
    return kind == FaultKind::ConstantBias ? INFINITY : t_start + duration;
}

const char* to_string(FaultKind kind) {
    switch (kind) {
    case FaultKind::Spike: return "spike";
    case FaultKind::Dropout: return "dropout";
    case FaultKind::Step: return "step";
    case FaultKind::ConstantBias: return "constant_bias";
    case FaultKind::Saturation: return "saturation";
    }
    return "?";
}

FaultKind fault_kind_from_string(const std::string& name) {
    for (FaultKind k : {FaultKind::Spike, FaultKind::Dropout, FaultKind::Step,
                        FaultKind::ConstantBias, FaultKind::Saturation}) {
        if (name == to_string(k)) {
            return k;
        }
    }
    throw ConfigError("unknown fault kind '" + name + "'");
}

void validate(const FaultSpec& f, const SliceMap& slices) {
    if (!slices.contains(f.target)) {
        throw ConfigError("fault target '" + f.target + "' is not a configured sensor");
    }
    if (f.axis && (*f.axis < 0 || *f.axis >= slices.at(f.target).size)) {
        throw ConfigError("fault axis " + std::to_string(*f.axis) + " out of range for " +
                          f.target);
    }
    if (!(f.t_start >= 0.0)) {
        throw ConfigError("fault t_start must be >= 0");
    }
    if (!(f.duration >= 0.0)) {
        throw ConfigError("fault duration must be >= 0");
    }
    if (f.kind == FaultKind::Saturation && !(f.saturation_limit >= 0.0)) {
        throw ConfigError("fault saturation_limit must be >= 0");
    }
}

namespace {

template <typename Fn>
void for_target_rows(const FaultSpec& f, const SliceMap& slices, Fn&& fn) {
    const SensorSlice& s = slices.at(f.target);
    if (f.axis) {
        fn(s.offset + *f.axis);
        return;
    }
    for (int r = 0; r < s.size; ++r) {
        fn(s.offset + r);
    }
}

void apply_one(const FaultSpec& f, MeasurementVector& y) {
    switch (f.kind) {
    case FaultKind::Spike:
    case FaultKind::Step:
    case FaultKind::ConstantBias:
        for_target_rows(f, y.slices, [&](int r) { y.values[r] += f.magnitude; });
        break;
    case FaultKind::Dropout:
        for_target_rows(f, y.slices, [&](int r) { y.values[r] = 0.0; });
        break;
    case FaultKind::Saturation:
        for_target_rows(f, y.slices, [&](int r) {
            y.values[r] = std::clamp(y.values[r], -f.saturation_limit, f.saturation_limit);
        });
        break;
    }
}

} // namespace

MeasurementVector apply_faults(const MeasurementVector& y, const std::vector<FaultSpec>& faults,
                               double t) {
    MeasurementVector out = y;
    for (const auto& f : faults) {
        if (f.active(t)) {
            apply_one(f, out);
        }
    }
    return out;
}

FaultInjector::FaultInjector(std::vector<FaultSpec> faults, DropoutMode mode)
    : faults_(std::move(faults)), mode_(mode), held_(faults_.size()) {}

MeasurementVector FaultInjector::apply(const MeasurementVector& y, double t) {
    MeasurementVector out = y;
    for (std::size_t i = 0; i < faults_.size(); ++i) {
        const FaultSpec& f = faults_[i];
        if (!f.active(t)) {
            held_[i].reset();
            continue;
        }
        if (f.kind == FaultKind::Dropout && mode_ == DropoutMode::HoldLast) {
            if (!held_[i]) {
                held_[i] = last_clean_ ? last_clean_->values : Vec::Zero(y.values.size());
            }
            for_target_rows(f, out.slices, [&](int r) { out.values[r] = (*held_[i])[r]; });
            continue;
        }
        apply_one(f, out);
    }
    last_clean_ = y;
    return out;
}

MeasurementVector sample_suite(const Quaternion& q, const Vector3& omega, const SensorSuite& suite,
                               SensorStreams& streams) {
    const Vec st = sample_attitude(q, suite.star_tracker, streams.star_tracker());
    const Vec mm = sample_attitude(q, suite.magnetometer, streams.magnetometer());
    const Vec gy = sample_gyro(omega, suite.gyro, streams.gyro());
    return stack_measurements(st, mm, gy);
}

MeasurementVector sample_suite(const EulerAngles313& e, const Vector3& omega,
                               const SensorSuite& suite, SensorStreams& streams) {
    const Vec st = sample_attitude(e, suite.star_tracker, streams.star_tracker());
    const Vec mm = sample_attitude(e, suite.magnetometer, streams.magnetometer());
    const Vec gy = sample_gyro(omega, suite.gyro, streams.gyro());
    return stack_measurements(st, mm, gy);
}

} // namespace attfdir

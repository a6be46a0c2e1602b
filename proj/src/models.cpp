#include "attfdir/models.hpp"

#include "attfdir/error.hpp"

namespace attfdir {

Mat jacobian(const StepFunction& f, const Vec& x, double eps) {
    if (!(eps > 0.0)) {
        throw ConfigError("jacobian: eps must be positive");
    }
    const Vec f0 = f(x);
    Mat j(f0.size(), x.size());
    Vec probe = x;
    for (Eigen::Index c = 0; c < x.size(); ++c) {
        probe[c] = x[c] + eps;
        const Vec fp = f(probe);
        probe[c] = x[c] - eps;
        const Vec fm = f(probe);
        probe[c] = x[c];
        j.col(c) = (fp - fm) / (2.0 * eps);
    }
    return j;
}

LinearMeasurementModel::LinearMeasurementModel(Mat h, Mat r, SliceMap slices)
    : h_(std::move(h)), r_(std::move(r)), slices_(std::move(slices)) {
    if (h_.rows() != r_.rows() || r_.rows() != r_.cols() || h_.rows() != slices_.dim()) {
        throw ConfigError("LinearMeasurementModel: inconsistent H, R and slice dimensions");
    }
}

Vec to_vector(const RigidBodyState& s) {
    Vec x(s.dim());
    x.head<4>() = s.q.vec();
    x.segment<3>(4) = s.omega;
    if (s.bias) {
        x.segment<3>(7) = *s.bias;
    }
    return x;
}

RigidBodyState from_vector(const Vec& x) {
    if (x.size() != 7 && x.size() != 10) {
        throw ConfigError("state vector must have 7 or 10 elements");
    }
    RigidBodyState s;
    s.q = Quaternion(Vector4(x.head<4>()));
    s.omega = x.segment<3>(4);
    if (x.size() == 10) {
        s.bias = Vector3(x.segment<3>(7));
    }
    return s;
}

StepFunction AttitudeProcessModel::stepper(double t, double dt) const {
    auto step = std::make_shared<RigidBodyStepper>(env_, t, dt);
    return [step](const Vec& x) -> Vec { return to_vector((*step)(from_vector(x))); };
}

void AttitudeProcessModel::normalize(Vec& x) const {
    x.head<4>() = attfdir::normalize(Quaternion(Vector4(x.head<4>()))).vec();
}

Mat AttitudeModelConfig::default_process_noise(bool augmented) {
    Vec d(augmented ? 10 : 7);
    d.head<4>().setConstant(1e-8);
    d.segment<3>(4).setConstant(1e-6);
    if (augmented) {
        d.tail<3>().setConstant(1e-12);
    }
    return d.asDiagonal();
}

AttitudeMeasurementModel::AttitudeMeasurementModel(const AttitudeModelConfig& cfg)
    : augmented_(cfg.augmented) {
    const int n = cfg.state_dim();
    if (cfg.sensors.empty()) {
        throw ConfigError("filter.sensors: at least one sensor required");
    }
    slices_ = SliceMap::standard(MeasurementLayout::Quat11).subset(cfg.sensors);
    if (static_cast<std::size_t>(slices_.slices().size()) != cfg.sensors.size()) {
        throw ConfigError("filter.sensors: unknown or duplicate sensor name");
    }
    const int m = slices_.dim();
    h_ = Mat::Zero(m, n);
    r_ = Mat::Zero(m, m);
    for (const auto& s : slices_.slices()) {
        if (s.name == kGyro) {
            h_.block(s.offset, 4, 3, 3).setIdentity();
            if (augmented_) {
                h_.block(s.offset, 7, 3, 3).setIdentity();
            }
            r_.block(s.offset, s.offset, 3, 3) = cfg.r_gyro;
        } else {
            h_.block(s.offset, 0, 4, 4).setIdentity();
            r_.block(s.offset, s.offset, 4, 4) =
                s.name == kStarTracker ? cfg.r_star_tracker : cfg.r_magnetometer;
        }
    }
}

Vec AttitudeMeasurementModel::predict(const Vec& x) const {
    Vec y(slices_.dim());
    for (const auto& s : slices_.slices()) {
        if (s.name == kGyro) {
            Vector3 g = x.segment<3>(4);
            if (augmented_) {
                g += x.segment<3>(7);
            }
            y.segment<3>(s.offset) = g;
        } else {
            y.segment<4>(s.offset) = x.head<4>();
        }
    }
    return y;
}

Mat AttitudeMeasurementModel::jacobian(const Vec&) const { return h_; }

void AttitudeMeasurementModel::align(Vec& y, const Vec& x_pred) const {
    for (const auto& s : slices_.slices()) {
        if (s.name == kGyro) {
            continue;
        }
        if (y.segment<4>(s.offset).dot(x_pred.head<4>()) < 0.0) {
            y.segment<4>(s.offset) = -y.segment<4>(s.offset);
        }
    }
}

AttitudeModelConfig make_bias_augmented_model(const AttitudeModelConfig& cfg,
                                              double bias_process_noise,
                                              double bias_initial_variance) {
    if (cfg.augmented || cfg.process_noise.rows() != 7 || cfg.initial_cov.rows() != 7) {
        throw ConfigError("make_bias_augmented_model: base model must be the 7-state model");
    }
    AttitudeModelConfig out = cfg;
    out.augmented = true;
    out.process_noise = Mat::Zero(10, 10);
    out.process_noise.topLeftCorner(7, 7) = cfg.process_noise;
    out.process_noise.bottomRightCorner(3, 3) = Mat::Identity(3, 3) * bias_process_noise;
    out.initial_cov = Mat::Zero(10, 10);
    out.initial_cov.topLeftCorner(7, 7) = cfg.initial_cov;
    out.initial_cov.bottomRightCorner(3, 3) = Mat::Identity(3, 3) * bias_initial_variance;
    return out;
}

} // namespace attfdir

#pragma once

#include "attfdir/dynamics.hpp"
#include "attfdir/sensors.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace attfdir {

using StepFunction = std::function<Vec(const Vec&)>;

/// Discrete process model x⁺ = f(x) over one time step.
class ProcessModel {
public:
    virtual ~ProcessModel() = default;

    [[nodiscard]] virtual int dim() const = 0;
    /// Callable that advances any state over [t, t + dt]. Work shared by all
    /// states of the step (orbit evaluation) is done once here.
    [[nodiscard]] virtual StepFunction stepper(double t, double dt) const = 0;
    /// Projects x back onto the state manifold (unit quaternion). No-op by default.
    virtual void normalize(Vec& x) const { (void)x; }
};

/// Measurement model y = h(x) + v, v ~ N(0, R), R block-diagonal per sensor.
class MeasurementModel {
public:
    virtual ~MeasurementModel() = default;

    [[nodiscard]] virtual const SliceMap& slices() const = 0;
    [[nodiscard]] int dim() const { return slices().dim(); }
    [[nodiscard]] virtual Vec predict(const Vec& x) const = 0;
    [[nodiscard]] virtual Mat jacobian(const Vec& x) const = 0;
    [[nodiscard]] virtual const Mat& noise() const = 0;
    /// Resolves sign-ambiguous blocks of y against a predicted state. No-op by default.
    virtual void align(Vec& y, const Vec& x_pred) const {
        (void)y;
        (void)x_pred;
    }
};

/// Central finite-difference Jacobian, column j = (f(x + eps e_j) − f(x − eps e_j)) / 2 eps.
[[nodiscard]] Mat jacobian(const StepFunction& f, const Vec& x, double eps = 1e-6);

/// x⁺ = F x.
class LinearProcessModel final : public ProcessModel {
public:
    explicit LinearProcessModel(Mat f) : f_(std::move(f)) {}
    [[nodiscard]] int dim() const override { return static_cast<int>(f_.rows()); }
    [[nodiscard]] StepFunction stepper(double, double) const override {
        return [f = f_](const Vec& x) -> Vec { return f * x; };
    }

private:
    Mat f_;
};

/// y = H x + v.
class LinearMeasurementModel final : public MeasurementModel {
public:
    LinearMeasurementModel(Mat h, Mat r, SliceMap slices);
    [[nodiscard]] const SliceMap& slices() const override { return slices_; }
    [[nodiscard]] Vec predict(const Vec& x) const override { return h_ * x; }
    [[nodiscard]] Mat jacobian(const Vec&) const override { return h_; }
    [[nodiscard]] const Mat& noise() const override { return r_; }

private:
    Mat h_;
    Mat r_;
    SliceMap slices_;
};

// ---------------------------------------------------------------------------
// Attitude model: state [q0 q1 q2 q3 ωx ωy ωz (bx by bz)]
// ---------------------------------------------------------------------------

[[nodiscard]] Vec to_vector(const RigidBodyState& s);
/// Accepts 7- or 10-element vectors.
[[nodiscard]] RigidBodyState from_vector(const Vec& x);

/// One RK4 step of the rigid-body dynamics with quaternion renormalization;
/// bias states (10-state variant) are carried unchanged.
class AttitudeProcessModel final : public ProcessModel {
public:
    AttitudeProcessModel(DynamicsEnvironment env, bool augmented)
        : env_(std::move(env)), augmented_(augmented) {}

    [[nodiscard]] int dim() const override { return augmented_ ? 10 : 7; }
    [[nodiscard]] StepFunction stepper(double t, double dt) const override;
    void normalize(Vec& x) const override;

    [[nodiscard]] const DynamicsEnvironment& environment() const { return env_; }

private:
    DynamicsEnvironment env_;
    bool augmented_;
};

/// Filter-side noise and tuning of the attitude model.
struct AttitudeModelConfig {
    DynamicsEnvironment dynamics;
    /// Sensors used by the filter, stacking order is always st, mm, gyro.
    std::vector<std::string> sensors{kStarTracker, kMagnetometer, kGyro};
    Mat r_star_tracker = Mat::Identity(4, 4) * 0.001;
    Mat r_magnetometer = Vec((Vec(4) << 0.01, 0.02, 0.05, 0.03).finished()).asDiagonal();
    Mat r_gyro = Mat::Identity(3, 3) * 0.005 * 0.005;
    /// Process noise and initial covariance, 7×7 or 10×10.
    Mat process_noise = default_process_noise(false);
    Mat initial_cov = Mat::Identity(7, 7) * 1e-2;
    bool augmented = false;

    [[nodiscard]] int state_dim() const { return augmented ? 10 : 7; }
    [[nodiscard]] static Mat default_process_noise(bool augmented);
};

/// Quaternion-layout measurement model h(x) = [q; q; ω + b̂] restricted to
/// the configured sensors. H is constant (identity/selection blocks).
class AttitudeMeasurementModel final : public MeasurementModel {
public:
    AttitudeMeasurementModel(const AttitudeModelConfig& cfg);

    [[nodiscard]] const SliceMap& slices() const override { return slices_; }
    [[nodiscard]] Vec predict(const Vec& x) const override;
    [[nodiscard]] Mat jacobian(const Vec& x) const override;
    [[nodiscard]] const Mat& noise() const override { return r_; }
    /// Flips each attitude-sensor block to the hemisphere of the predicted quaternion.
    void align(Vec& y, const Vec& x_pred) const override;

private:
    SliceMap slices_;
    Mat h_;
    Mat r_;
    bool augmented_;
};

/// 10-state variant of a 7-state configuration: constant bias states, bias
/// added to the gyro rows, Q and Σ₀ extended with the given bias terms.
/// Throws ConfigError when cfg is already augmented.
[[nodiscard]] AttitudeModelConfig make_bias_augmented_model(const AttitudeModelConfig& cfg,
                                                            double bias_process_noise = 1e-12,
                                                            double bias_initial_variance = 1e-2);

} // namespace attfdir

#pragma once

#include "attfdir/attitude.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace attfdir {

/// Earth gravitational parameter, km^3/s^2.
inline constexpr double kEarthMu = 398600.4418;

/// Spacecraft inertia, kg·m². The full tensor is kept for reference; the
/// rigid-body model uses only its diagonal (principal-axis Euler equations).
class InertiaTensor {
public:
    /// Validates symmetry (1e-9), positive definiteness and the triangle
    /// inequalities of the diagonal. Throws ConfigError.
    explicit InertiaTensor(const Matrix3& full);
    static InertiaTensor diagonal(double ixx, double iyy, double izz);

    [[nodiscard]] const Matrix3& full() const { return full_; }
    [[nodiscard]] double ixx() const { return full_(0, 0); }
    [[nodiscard]] double iyy() const { return full_(1, 1); }
    [[nodiscard]] double izz() const { return full_(2, 2); }
    [[nodiscard]] Vector3 principal() const { return full_.diagonal(); }

private:
    Matrix3 full_;
};

/// Classical orbital elements. Angles in radians, a in km.
struct KeplerianElements {
    double a = 7080.6;
    double e = 0.0;
    double i = 0.0;
    double arg_perigee = 0.0;
    double raan = 0.0;
    double nu0 = 0.0;
    double mu = kEarthMu;
};

/// Throws ConfigError unless a > 0, 0 <= e < 1 and mu > 0.
void validate(const KeplerianElements& el);

struct OrbitState {
    Vector3 r_eci; ///< km
    Vector3 v_eci; ///< km/s
};

struct TorqueModel {
    bool gravity_gradient = false;
    Vector3 external = Vector3::Zero(); ///< N·m, body frame
};

/// Attitude, body rate and (when augmented) constant gyro bias.
struct RigidBodyState {
    Quaternion q;
    Vector3 omega = Vector3::Zero();
    std::optional<Vector3> bias;

    [[nodiscard]] int dim() const { return bias ? 10 : 7; }
};

struct StateDerivative {
    Vector4 q_dot = Vector4::Zero();
    Vector3 omega_dot = Vector3::Zero();
    Vector3 bias_dot = Vector3::Zero();
};

/// Everything the right-hand side needs besides the state.
struct DynamicsEnvironment {
    InertiaTensor inertia = InertiaTensor::diagonal(1.0, 1.0, 1.0);
    KeplerianElements orbit;
    TorqueModel torque;
};

/// Principal-axis Euler equations:
/// ω̇x = [τx − (Izz − Iyy) ωy ωz] / Ixx and cyclic permutations.
[[nodiscard]] Vector3 body_rate_derivative(const Vector3& omega, const Vector3& tau,
                                           const InertiaTensor& inertia);

/// 3-1-3 Euler angle rates [φ̇, θ̇, ψ̇] from body rates. Throws NumericalError
/// when |sin θ| <= 1e-6.
[[nodiscard]] Vector3 euler313_rates(const EulerAngles313& e, const Vector3& omega);

/// q̇ = ½ B(q) ω for the ECI->body quaternion. q·q̇ = 0 identically.
[[nodiscard]] Vector4 quaternion_rates(const Quaternion& q, const Vector3& omega);

/// Gravity-gradient torque for a body-frame unit nadir-to-spacecraft direction
/// c, orbit radius in km and mu in km^3/s^2.
[[nodiscard]] Vector3 gravity_gradient_torque_body(const Vector3& c, double radius_km,
                                                   const InertiaTensor& inertia, double mu);

/// Gravity-gradient torque (N·m, body frame): c = R_body<-eci R_rtn<-eci^T [1 0 0]^T,
/// M = 3μ/R³ [(Izz−Iyy) cy cz, (Ixx−Izz) cz cx, (Iyy−Ixx) cx cy].
[[nodiscard]] Vector3 gravity_gradient_torque(const Quaternion& q, const Vector3& r_eci,
                                              const Vector3& v_eci, const InertiaTensor& inertia,
                                              double mu = kEarthMu);

/// Two-body position/velocity at time t (s) after epoch. Kepler's equation is
/// solved by Newton iteration to 1e-12 (at most 50 iterations).
[[nodiscard]] OrbitState kepler_state(const KeplerianElements& el, double t);

/// Continuous-time right-hand side. The orbit state is only used when the
/// gravity-gradient torque is enabled.
[[nodiscard]] StateDerivative derivative(const RigidBodyState& s, const OrbitState& orbit,
                                         const DynamicsEnvironment& env);

/// Same as above with the orbit evaluated at time t.
[[nodiscard]] StateDerivative derivative(const RigidBodyState& s, double t,
                                         const DynamicsEnvironment& env);

/// One classical RK4 step over [t, t + dt]. Orbit states for the three stage
/// times are computed once so the stepper can be applied to many states
/// (sigma points, particles, finite-difference probes).
class RigidBodyStepper {
public:
    RigidBodyStepper(const DynamicsEnvironment& env, double t, double dt);

    /// Advances the state by dt and renormalizes the quaternion once.
    [[nodiscard]] RigidBodyState operator()(const RigidBodyState& s) const;

    [[nodiscard]] double t() const { return t_; }
    [[nodiscard]] double dt() const { return dt_; }

private:
    const DynamicsEnvironment* env_;
    double t_;
    double dt_;
    OrbitState start_, mid_, end_;
};

struct TrajectoryPoint {
    double t;
    RigidBodyState state;
};

/// Fixed-step RK4 from t0 to t1 (the grid t0 + k·dt, k = 0..round((t1-t0)/dt)).
[[nodiscard]] std::vector<TrajectoryPoint> integrate(const RigidBodyState& initial, double t0,
                                                     double t1, double dt,
                                                     const DynamicsEnvironment& env);

struct EulerTrajectoryPoint {
    double t;
    EulerAngles313 angles;
    Vector3 omega;
};

/// RK4 propagation of 3-1-3 angles and body rates (torque-free or constant
/// external torque only). Used to cross-check the quaternion path.
[[nodiscard]] std::vector<EulerTrajectoryPoint>
integrate_euler313(const EulerAngles313& angles, const Vector3& omega, double t0, double t1,
                   double dt, const DynamicsEnvironment& env);

/// Inertial angular momentum C(q)^T I ω with the principal inertia.
[[nodiscard]] Vector3 inertial_angular_momentum(const RigidBodyState& s,
                                                const InertiaTensor& inertia);

/// ½ ωᵀ I ω with the principal inertia.
[[nodiscard]] double kinetic_energy(const Vector3& omega, const InertiaTensor& inertia);

} // namespace attfdir

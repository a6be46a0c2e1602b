#include "attfdir/dynamics.hpp"

#include "attfdir/error.hpp"

#include <cmath>
#include <string>

namespace attfdir {

InertiaTensor::InertiaTensor(const Matrix3& full) : full_(full) {
    if ((full - full.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
        throw ConfigError("inertia: tensor is not symmetric");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix3> eig(full);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) {
        throw ConfigError("inertia: tensor is not positive definite");
    }
    const double x = ixx(), y = iyy(), z = izz();
    if (x + y < z || y + z < x || z + x < y) {
        throw ConfigError("inertia: principal moments violate the triangle inequality");
    }
}

InertiaTensor InertiaTensor::diagonal(double ixx, double iyy, double izz) {
    return InertiaTensor(Vector3(ixx, iyy, izz).asDiagonal().toDenseMatrix());
}

void validate(const KeplerianElements& el) {
    if (!(el.a > 0.0)) {
        throw ConfigError("elements.a: semi-major axis must be positive");
    }
    if (!(el.e >= 0.0 && el.e < 1.0)) {
        throw ConfigError("elements.e: eccentricity must satisfy 0 <= e < 1");
    }
    if (!(el.mu > 0.0)) {
        throw ConfigError("elements.mu: gravitational parameter must be positive");
    }
}

Vector3 body_rate_derivative(const Vector3& w, const Vector3& tau, const InertiaTensor& inertia) {
    const double ix = inertia.ixx(), iy = inertia.iyy(), iz = inertia.izz();
    return {(tau.x() - (iz - iy) * w.y() * w.z()) / ix,
            (tau.y() - (ix - iz) * w.z() * w.x()) / iy,
            (tau.z() - (iy - ix) * w.x() * w.y()) / iz};
}

Vector3 euler313_rates(const EulerAngles313& e, const Vector3& w) {
    const double st = std::sin(e.theta);
    if (std::abs(st) <= 1e-6) {
        throw NumericalError("euler313_rates: sin(theta) too small, 3-1-3 kinematics singular");
    }
    const double sp = std::sin(e.phi), cp = std::cos(e.phi), ct = std::cos(e.theta);
    Matrix3 b;
    b << -sp * ct, -cp * ct, st,
         cp * st, -sp * st, 0.0,
         sp, cp, 0.0;
    return b * w / st;
}

Vector4 quaternion_rates(const Quaternion& q, const Vector3& w) {
    Eigen::Matrix<double, 4, 3> b;
    b << -q.q1, -q.q2, -q.q3,
          q.q0, -q.q3,  q.q2,
          q.q3,  q.q0, -q.q1,
         -q.q2,  q.q1,  q.q0;
    return 0.5 * b * w;
}

Vector3 gravity_gradient_torque_body(const Vector3& c, double radius_km,
                                     const InertiaTensor& inertia, double mu) {
    if (!(radius_km > 0.0)) {
        throw NumericalError("gravity_gradient_torque: orbit radius must be positive");
    }
    // SI: mu [m^3/s^2], R [m]. Inertia is already kg·m², so M comes out in N·m.
    const double mu_si = mu * 1e9;
    const double r_si = radius_km * 1e3;
    const double k = 3.0 * mu_si / (r_si * r_si * r_si);
    const double ix = inertia.ixx(), iy = inertia.iyy(), iz = inertia.izz();
    return k * Vector3((iz - iy) * c.y() * c.z(), (ix - iz) * c.z() * c.x(),
                       (iy - ix) * c.x() * c.y());
}

Vector3 gravity_gradient_torque(const Quaternion& q, const Vector3& r_eci, const Vector3& v_eci,
                                const InertiaTensor& inertia, double mu) {
    const double radius = r_eci.norm();
    if (!(radius > 0.0)) {
        throw NumericalError("gravity_gradient_torque: zero orbit radius");
    }
    const Matrix3 body_from_eci = quat_to_dcm(normalize(q));
    const Matrix3 rtn_from_eci = eci_to_rtn(r_eci, v_eci);
    const Vector3 c = body_from_eci * rtn_from_eci.transpose() * Vector3::UnitX();
    return gravity_gradient_torque_body(c, radius, inertia, mu);
}

OrbitState kepler_state(const KeplerianElements& el, double t) {
    validate(el);
    const double e = el.e;
    const double n = std::sqrt(el.mu / (el.a * el.a * el.a));

    const double e0 = 2.0 * std::atan2(std::sqrt(1.0 - e) * std::sin(el.nu0 / 2.0),
                                       std::sqrt(1.0 + e) * std::cos(el.nu0 / 2.0));
    const double m0 = e0 - e * std::sin(e0);
    const double m = std::remainder(m0 + n * t, 2.0 * M_PI);

    double ecc_anom = e < 0.8 ? m : M_PI;
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
        const double f = ecc_anom - e * std::sin(ecc_anom) - m;
        const double step = f / (1.0 - e * std::cos(ecc_anom));
        ecc_anom -= step;
        if (std::abs(step) < 1e-12) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NumericalError("kepler_state: Newton iteration did not converge");
    }

    const double cos_e = std::cos(ecc_anom);
    const double r = el.a * (1.0 - e * cos_e);
    const double nu = 2.0 * std::atan2(std::sqrt(1.0 + e) * std::sin(ecc_anom / 2.0),
                                       std::sqrt(1.0 - e) * std::cos(ecc_anom / 2.0));
    const double p = el.a * (1.0 - e * e);
    const double vk = std::sqrt(el.mu / p);

    const Vector3 r_pf(r * std::cos(nu), r * std::sin(nu), 0.0);
    const Vector3 v_pf(-vk * std::sin(nu), vk * (e + std::cos(nu)), 0.0);

    // Perifocal -> ECI is the transpose of the frame rotation M3(ω) M1(i) M3(Ω).
    const Matrix3 pf_from_eci =
        frame_rotation_z(el.arg_perigee) * frame_rotation_x(el.i) * frame_rotation_z(el.raan);
    return {pf_from_eci.transpose() * r_pf, pf_from_eci.transpose() * v_pf};
}

namespace {

Vector3 total_torque(const Quaternion& q, const OrbitState& orbit,
                     const DynamicsEnvironment& env) {
    Vector3 tau = env.torque.external;
    if (env.torque.gravity_gradient) {
        tau += gravity_gradient_torque(q, orbit.r_eci, orbit.v_eci, env.inertia, env.orbit.mu);
    }
    return tau;
}

RigidBodyState advance(const RigidBodyState& s, const StateDerivative& d, double h) {
    RigidBodyState out;
    out.q = Quaternion(s.q.vec() + h * d.q_dot);
    out.omega = s.omega + h * d.omega_dot;
    if (s.bias) {
        out.bias = *s.bias + h * d.bias_dot;
    }
    return out;
}

OrbitState orbit_if_needed(const DynamicsEnvironment& env, double t) {
    if (!env.torque.gravity_gradient) {
        return {};
    }
    return kepler_state(env.orbit, t);
}

} // namespace

StateDerivative derivative(const RigidBodyState& s, const OrbitState& orbit,
                           const DynamicsEnvironment& env) {
    StateDerivative d;
    d.q_dot = quaternion_rates(s.q, s.omega);
    d.omega_dot = body_rate_derivative(s.omega, total_torque(s.q, orbit, env), env.inertia);
    return d;
}

StateDerivative derivative(const RigidBodyState& s, double t, const DynamicsEnvironment& env) {
    return derivative(s, orbit_if_needed(env, t), env);
}

RigidBodyStepper::RigidBodyStepper(const DynamicsEnvironment& env, double t, double dt)
    : env_(&env), t_(t), dt_(dt), start_(orbit_if_needed(env, t)),
      mid_(orbit_if_needed(env, t + dt / 2.0)), end_(orbit_if_needed(env, t + dt)) {
    if (!(dt > 0.0)) {
        throw ConfigError("dt must be positive");
    }
}

RigidBodyState RigidBodyStepper::operator()(const RigidBodyState& s) const {
    const double h = dt_;
    const StateDerivative k1 = derivative(s, start_, *env_);
    const StateDerivative k2 = derivative(advance(s, k1, h / 2.0), mid_, *env_);
    const StateDerivative k3 = derivative(advance(s, k2, h / 2.0), mid_, *env_);
    const StateDerivative k4 = derivative(advance(s, k3, h), end_, *env_);

    RigidBodyState out;
    const Vector4 q = s.q.vec() + h / 6.0 * (k1.q_dot + 2.0 * k2.q_dot + 2.0 * k3.q_dot + k4.q_dot);
    out.q = normalize(Quaternion(q));
    out.omega = s.omega + h / 6.0 *
                              (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot);
    out.bias = s.bias;
    return out;
}

namespace {

long step_count(double t0, double t1, double dt) {
    if (!(dt > 0.0)) {
        throw ConfigError("integrate: dt must be positive");
    }
    if (!(t1 > t0)) {
        throw ConfigError("integrate: t1 must be greater than t0");
    }
    return std::lround((t1 - t0) / dt);
}

} // namespace

std::vector<TrajectoryPoint> integrate(const RigidBodyState& initial, double t0, double t1,
                                       double dt, const DynamicsEnvironment& env) {
    const long n = step_count(t0, t1, dt);
    std::vector<TrajectoryPoint> out;
    out.reserve(static_cast<std::size_t>(n) + 1);
    RigidBodyState s = initial;
    s.q = normalize(s.q);
    out.push_back({t0, s});
    for (long k = 0; k < n; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        s = RigidBodyStepper(env, t, dt)(s);
        out.push_back({t0 + static_cast<double>(k + 1) * dt, s});
    }
    return out;
}

namespace {

struct EulerRhs {
    Vector3 angle_rates;
    Vector3 omega_dot;
};

EulerRhs euler_rhs(const EulerAngles313& e, const Vector3& w, double t,
                   const DynamicsEnvironment& env) {
    Vector3 tau = env.torque.external;
    if (env.torque.gravity_gradient) {
        const OrbitState o = kepler_state(env.orbit, t);
        tau += gravity_gradient_torque(euler313_to_quat(e), o.r_eci, o.v_eci, env.inertia,
                                       env.orbit.mu);
    }
    return {euler313_rates(e, w), body_rate_derivative(w, tau, env.inertia)};
}

EulerAngles313 shifted(const EulerAngles313& e, const Vector3& rates, double h) {
    return {e.phi + h * rates.x(), e.theta + h * rates.y(), e.psi + h * rates.z()};
}

} // namespace

std::vector<EulerTrajectoryPoint> integrate_euler313(const EulerAngles313& angles,
                                                     const Vector3& omega, double t0, double t1,
                                                     double dt, const DynamicsEnvironment& env) {
    const long n = step_count(t0, t1, dt);
    std::vector<EulerTrajectoryPoint> out;
    out.reserve(static_cast<std::size_t>(n) + 1);
    EulerAngles313 e = angles;
    Vector3 w = omega;
    out.push_back({t0, e, w});
    for (long k = 0; k < n; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        const EulerRhs k1 = euler_rhs(e, w, t, env);
        const EulerRhs k2 =
            euler_rhs(shifted(e, k1.angle_rates, dt / 2), w + dt / 2 * k1.omega_dot, t + dt / 2, env);
        const EulerRhs k3 =
            euler_rhs(shifted(e, k2.angle_rates, dt / 2), w + dt / 2 * k2.omega_dot, t + dt / 2, env);
        const EulerRhs k4 = euler_rhs(shifted(e, k3.angle_rates, dt), w + dt * k3.omega_dot, t + dt, env);
        const Vector3 rates =
            (k1.angle_rates + 2 * k2.angle_rates + 2 * k3.angle_rates + k4.angle_rates) / 6.0;
        e = shifted(e, rates, dt);
        w += dt / 6.0 * (k1.omega_dot + 2 * k2.omega_dot + 2 * k3.omega_dot + k4.omega_dot);
        out.push_back({t0 + static_cast<double>(k + 1) * dt, e, w});
    }
    return out;
}

Vector3 inertial_angular_momentum(const RigidBodyState& s, const InertiaTensor& inertia) {
    const Vector3 h_body = inertia.principal().cwiseProduct(s.omega);
    return quat_to_dcm(normalize(s.q)).transpose() * h_body;
}

double kinetic_energy(const Vector3& omega, const InertiaTensor& inertia) {
    return 0.5 * omega.dot(inertia.principal().cwiseProduct(omega));
}

} // namespace attfdir

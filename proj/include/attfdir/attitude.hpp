#pragma once

#include <Eigen/Dense>

#include <array>

namespace attfdir {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Vector4 = Eigen::Vector4d;

/// Scalar-first attitude quaternion [q0, q1, q2, q3].
///
/// The quaternion describes the body attitude relative to ECI; its direction
/// cosine matrix (see quat_to_dcm) maps ECI coordinates into body coordinates.
/// q and -q describe the same rotation. Nothing in the library flips the sign
/// implicitly except canonical(), which is meant for API boundaries.
struct Quaternion {
    double q0 = 1.0;
    double q1 = 0.0;
    double q2 = 0.0;
    double q3 = 0.0;

    Quaternion() = default;
    Quaternion(double w, double x, double y, double z) : q0(w), q1(x), q2(y), q3(z) {}
    explicit Quaternion(const Vector4& v) : q0(v[0]), q1(v[1]), q2(v[2]), q3(v[3]) {}

    [[nodiscard]] Vector4 vec() const { return {q0, q1, q2, q3}; }
    [[nodiscard]] double norm() const { return vec().norm(); }
    [[nodiscard]] double dot(const Quaternion& o) const {
        return q0 * o.q0 + q1 * o.q1 + q2 * o.q2 + q3 * o.q3;
    }
    [[nodiscard]] Quaternion operator-() const { return {-q0, -q1, -q2, -q3}; }

    /// Hemisphere representative with q0 >= 0; when q0 == 0 the first nonzero
    /// component is made positive.
    [[nodiscard]] Quaternion canonical() const;
};

/// 3-1-3 Euler angles in radians.
///
/// psi is the first rotation (about z), theta the second (about the new x),
/// phi the third (about the new z). With M1/M3 the frame rotations about x/z,
/// the ECI->body matrix is M3(phi) * M1(theta) * M3(psi); written with active
/// rotations that is (Rz(psi) * Rx(theta) * Rz(phi))^T. This ordering is the
/// one whose kinematics match euler313_rates().
struct EulerAngles313 {
    double phi = 0.0;
    double theta = 0.0;
    double psi = 0.0;
};

/// Unit quaternion in the same direction. Throws NumericalError on a zero
/// (or non-finite) norm.
[[nodiscard]] Quaternion normalize(const Quaternion& q);

/// Quaternion product a ⊗ b, composing so that dcm(a ⊗ b) = dcm(a) * dcm(b).
[[nodiscard]] Quaternion multiply(const Quaternion& a, const Quaternion& b);

/// ECI->body direction cosine matrix. Requires |q| = 1 within 1e-9.
[[nodiscard]] Matrix3 quat_to_dcm(const Quaternion& q);

/// Inverse of quat_to_dcm (Shepperd's method); the result is canonical().
[[nodiscard]] Quaternion dcm_to_quat(const Matrix3& dcm);

/// ECI->body matrix for a 3-1-3 sequence, M3(phi) * M1(theta) * M3(psi).
[[nodiscard]] Matrix3 euler313_to_dcm(const EulerAngles313& e);

/// Closed-form half-angle quaternion of a 3-1-3 sequence.
[[nodiscard]] Quaternion euler313_to_quat(const EulerAngles313& e);

/// 3-1-3 angles of an ECI->body matrix, theta in [0, pi].
[[nodiscard]] EulerAngles313 dcm_to_euler313(const Matrix3& dcm);

/// Frame rotation by `angle` about x / z (coordinates expressed in the
/// rotated frame).
[[nodiscard]] Matrix3 frame_rotation_x(double angle);
[[nodiscard]] Matrix3 frame_rotation_z(double angle);

/// ECI->RTN matrix with rows R̂ = r/|r|, T̂ = N̂ × R̂, N̂ = (r × v)/|r × v|.
/// Inputs in km and km/s. Throws NumericalError for zero or parallel r, v.
[[nodiscard]] Matrix3 eci_to_rtn(const Vector3& r_eci, const Vector3& v_eci);

/// Skew-symmetric cross-product matrix, skew(a) * b = a × b.
[[nodiscard]] Matrix3 skew(const Vector3& v);

} // namespace attfdir

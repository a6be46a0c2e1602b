#include "attfdir/attitude.hpp"

#include "attfdir/error.hpp"

#include <algorithm>
#include <cmath>

namespace attfdir {

Quaternion Quaternion::canonical() const {
    const std::array<double, 4> c{q0, q1, q2, q3};
    for (double v : c) {
        if (v > 0.0) {
            return *this;
        }
        if (v < 0.0) {
            return -*this;
        }
    }
    return *this;
}

Quaternion normalize(const Quaternion& q) {
    const double n = q.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw NumericalError("normalize: quaternion has zero or non-finite norm");
    }
    if (n == 1.0) {
        return q;
    }
    return Quaternion(q.vec() / n);
}

Quaternion multiply(const Quaternion& a, const Quaternion& b) {
    // Hamilton product b * a; with passive DCMs this composes as dcm(a) * dcm(b).
    const Quaternion& p = b;
    const Quaternion& r = a;
    return {p.q0 * r.q0 - p.q1 * r.q1 - p.q2 * r.q2 - p.q3 * r.q3,
            p.q0 * r.q1 + p.q1 * r.q0 + p.q2 * r.q3 - p.q3 * r.q2,
            p.q0 * r.q2 - p.q1 * r.q3 + p.q2 * r.q0 + p.q3 * r.q1,
            p.q0 * r.q3 + p.q1 * r.q2 - p.q2 * r.q1 + p.q3 * r.q0};
}

Matrix3 quat_to_dcm(const Quaternion& q) {
    if (std::abs(q.norm() - 1.0) > 1e-9) {
        throw NumericalError("quat_to_dcm: quaternion is not unit norm");
    }
    const double w = q.q0, x = q.q1, y = q.q2, z = q.q3;
    Matrix3 c;
    c << w * w + x * x - y * y - z * z, 2.0 * (x * y + w * z), 2.0 * (x * z - w * y),
        2.0 * (x * y - w * z), w * w - x * x + y * y - z * z, 2.0 * (y * z + w * x),
        2.0 * (x * z + w * y), 2.0 * (y * z - w * x), w * w - x * x - y * y + z * z;
    return c;
}

Quaternion dcm_to_quat(const Matrix3& c) {
    const double tr = c.trace();
    const std::array<double, 4> cand{(1.0 + tr) / 4.0, (1.0 + 2.0 * c(0, 0) - tr) / 4.0,
                                     (1.0 + 2.0 * c(1, 1) - tr) / 4.0,
                                     (1.0 + 2.0 * c(2, 2) - tr) / 4.0};
    int k = 0;
    for (int i = 1; i < 4; ++i) {
        if (cand[i] > cand[k]) {
            k = i;
        }
    }
    Quaternion q;
    const double s = std::sqrt(cand[k]);
    switch (k) {
    case 0:
        q = {s, (c(1, 2) - c(2, 1)) / (4 * s), (c(2, 0) - c(0, 2)) / (4 * s),
             (c(0, 1) - c(1, 0)) / (4 * s)};
        break;
    case 1:
        q = {(c(1, 2) - c(2, 1)) / (4 * s), s, (c(0, 1) + c(1, 0)) / (4 * s),
             (c(2, 0) + c(0, 2)) / (4 * s)};
        break;
    case 2:
        q = {(c(2, 0) - c(0, 2)) / (4 * s), (c(0, 1) + c(1, 0)) / (4 * s), s,
             (c(1, 2) + c(2, 1)) / (4 * s)};
        break;
    default:
        q = {(c(0, 1) - c(1, 0)) / (4 * s), (c(2, 0) + c(0, 2)) / (4 * s),
             (c(1, 2) + c(2, 1)) / (4 * s), s};
        break;
    }
    return normalize(q).canonical();
}

Matrix3 frame_rotation_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Matrix3 m;
    m << 1, 0, 0, 0, c, s, 0, -s, c;
    return m;
}

Matrix3 frame_rotation_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Matrix3 m;
    m << c, s, 0, -s, c, 0, 0, 0, 1;
    return m;
}

Matrix3 euler313_to_dcm(const EulerAngles313& e) {
    return frame_rotation_z(e.phi) * frame_rotation_x(e.theta) * frame_rotation_z(e.psi);
}

Quaternion euler313_to_quat(const EulerAngles313& e) {
    const double ch = std::cos(e.theta / 2.0), sh = std::sin(e.theta / 2.0);
    const double sum = (e.psi + e.phi) / 2.0, diff = (e.psi - e.phi) / 2.0;
    return {ch * std::cos(sum), sh * std::cos(diff), sh * std::sin(diff), ch * std::sin(sum)};
}

EulerAngles313 dcm_to_euler313(const Matrix3& c) {
    EulerAngles313 e;
    e.theta = std::acos(std::clamp(c(2, 2), -1.0, 1.0));
    e.psi = std::atan2(c(2, 0), -c(2, 1));
    e.phi = std::atan2(c(0, 2), c(1, 2));
    return e;
}

Matrix3 eci_to_rtn(const Vector3& r, const Vector3& v) {
    const double rn = r.norm();
    const Vector3 h = r.cross(v);
    const double hn = h.norm();
    if (!(rn > 0.0) || !(hn > 1e-12 * rn * v.norm()) || !(hn > 0.0)) {
        throw NumericalError("eci_to_rtn: position and velocity are zero or parallel");
    }
    const Vector3 rhat = r / rn;
    const Vector3 nhat = h / hn;
    const Vector3 that = nhat.cross(rhat);
    Matrix3 m;
    m.row(0) = rhat.transpose();
    m.row(1) = that.transpose();
    m.row(2) = nhat.transpose();
    return m;
}

Matrix3 skew(const Vector3& v) {
    Matrix3 m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

} // namespace attfdir

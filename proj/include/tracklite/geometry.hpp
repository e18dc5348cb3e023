#pragma once

#include <cmath>
#include <optional>

#include "tracklite/common.hpp"

namespace tracklite {

// Rigid body transform p_out = R * p_in + t.
//
// Naming convention used throughout: a transform called a_from_b maps
// b-frame coordinates into the a frame.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    // Orthonormal with determinant +1.
    bool is_valid(double tol = 1e-9) const {
        const Mat3 e = rotation.transpose() * rotation - Mat3::Identity();
        return e.cwiseAbs().maxCoeff() <= tol &&
               std::abs(rotation.determinant() - 1.0) <= tol;
    }
};

inline Vec3 transform_point(const RigidTransform& t, const Vec3& p) {
    return t.rotation * p + t.translation;
}

// (A ∘ B)(p) = A(B(p))
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

inline RigidTransform invert(const RigidTransform& t) {
    const Mat3 rt = t.rotation.transpose();
    return {rt, -(rt * t.translation)};
}

inline RigidTransform yaw_rotation(double angle_rad) {
    RigidTransform t;
    t.rotation = Eigen::AngleAxisd(angle_rad, Vec3::UnitZ()).toRotationMatrix();
    return t;
}

inline RigidTransform from_quaternion(double qw, double qx, double qy, double qz,
                                      const Vec3& translation) {
    Eigen::Quaterniond q(qw, qx, qy, qz);
    q.normalize();
    return {q.toRotationMatrix(), translation};
}

// Pinhole camera. Camera frame convention: z forward, x right, y down.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    bool is_valid() const {
        return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cx < width && cy >= 0.0 &&
               cy < height;
    }
};

struct Pixel {
    double u = 0.0;
    double v = 0.0;
};

// Ideal perspective projection. Returns nullopt for points at or behind the
// camera plane (z <= 0), which cannot hit the image plane.
inline std::optional<Pixel> project(const Vec3& p, const CameraIntrinsics& k) {
    if (!(p.z() > 0.0)) return std::nullopt;
    return Pixel{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

}  // namespace tracklite

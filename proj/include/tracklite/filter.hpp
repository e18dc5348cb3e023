#pragma once

#include <cmath>

#include "tracklite/common.hpp"
#include "tracklite/geometry.hpp"

namespace tracklite {

// Tracked object state: 3D position, ground-plane velocity, image-plane box
// size. Position and velocity live in the static map frame once a track is
// established.
struct ObjectState {
    double x = 0.0;   // m
    double y = 0.0;   // m
    double z = 0.0;   // m
    double vx = 0.0;  // m/s
    double vy = 0.0;  // m/s
    double w = 0.0;   // px
    double h = 0.0;   // px

    Vec7 to_vector() const {
        Vec7 v;
        v << x, y, z, vx, vy, w, h;
        return v;
    }
    static ObjectState from_vector(const Vec7& v) {
        return {v(0), v(1), v(2), v(3), v(4), v(5), v(6)};
    }
    Vec3 position() const { return {x, y, z}; }
    Vec2 velocity() const { return {vx, vy}; }
};

// Homogeneous embedding of ObjectState: [x y z 1 vx vy w h]. The unit
// component at index 3 lets a rigid transform act on the state by matrix
// multiplication.
struct AugmentedState {
    Vec8 v = Vec8::Zero();

    static constexpr int kHomIndex = 3;

    double hom() const { return v(kHomIndex); }
};

using Covariance = Mat7;
using AugmentedCovariance = Mat8;

struct StateEstimate {
    ObjectState state;
    Covariance cov = Covariance::Identity();
};

struct AugmentedEstimate {
    AugmentedState state;
    AugmentedCovariance cov = AugmentedCovariance::Zero();
};

// Process/measurement noise diagonals plus new-track variances. All entries
// must be >= 0 (variance must be > 0 where a measurement is expected).
struct NoiseConfig {
    double q_diag[7] = {0.01, 0.01, 0.01, 0.05, 0.05, 10.0, 10.0};
    double r_diag[5] = {0.25, 0.25, 0.25, 25.0, 25.0};
    double init_pos_var = 1.0;    // m^2
    double init_vel_var = 4.0;    // (m/s)^2
    double init_box_var = 100.0;  // px^2

    Mat7 process_noise() const {
        Mat7 q = Mat7::Zero();
        for (int i = 0; i < 7; ++i) q(i, i) = q_diag[i];
        return q;
    }
    Mat5 measurement_noise() const {
        Mat5 r = Mat5::Zero();
        for (int i = 0; i < 5; ++i) r(i, i) = r_diag[i];
        return r;
    }
    Covariance initial_covariance() const {
        Covariance p = Covariance::Zero();
        p(0, 0) = p(1, 1) = p(2, 2) = init_pos_var;
        p(3, 3) = p(4, 4) = init_vel_var;
        p(5, 5) = p(6, 6) = init_box_var;
        return p;
    }
};

enum class MeasurementFrame { sensor, map };

// Position + box measurement [x y z w h].
struct Measurement {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double w = 0.0;
    double h = 0.0;
    MeasurementFrame frame = MeasurementFrame::sensor;

    Vec5 to_vector() const {
        Vec5 v;
        v << x, y, z, w, h;
        return v;
    }
    Vec3 position() const { return {x, y, z}; }
};

// Constant-velocity state matrix: identity plus position <- velocity * T.
inline Mat7 make_A(double dt) {
    Mat7 a = Mat7::Identity();
    a(0, 3) = dt;
    a(1, 4) = dt;
    return a;
}

// Observation matrix: selects position and box size, not velocity.
inline Mat57 measurement_matrix() {
    Mat57 c = Mat57::Zero();
    c(0, 0) = c(1, 1) = c(2, 2) = 1.0;
    c(3, 5) = c(4, 6) = 1.0;
    return c;
}

// Augmented observation matrix (position and box size of the 8-state form).
inline Mat58 measurement_matrix_augmented() {
    Mat58 c = Mat58::Zero();
    c(0, 0) = c(1, 1) = c(2, 2) = 1.0;
    c(3, 6) = c(4, 7) = 1.0;
    return c;
}

// Block-diagonal embedding of the homogeneous 4x4 transform into the 8-state
// space; velocity and box components pass through untouched.
inline Mat8 embed_transform(const RigidTransform& t) {
    Mat8 m = Mat8::Identity();
    m.topLeftCorner<3, 3>() = t.rotation;
    m.block<3, 1>(0, 3) = t.translation;
    return m;
}

inline StateEstimate predict(const StateEstimate& est, double dt, const Mat7& q) {
    const Mat7 a = make_A(dt);
    StateEstimate out;
    out.state = ObjectState::from_vector(a * est.state.to_vector());
    out.cov = a * est.cov * a.transpose() + q;
    return out;
}

namespace detail {

// Solves K = P H^T S^-1 with a condition-number guard on the innovation
// covariance S. Throws SingularInnovation beyond cond(S) > 1e12.
template <typename MatPH>
MatPH gain_from_innovation(const Mat5& s, const MatPH& pht) {
    Eigen::SelfAdjointEigenSolver<Mat5> eig(s);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
        throw SingularInnovation("innovation covariance is numerically singular");
    }
    Eigen::LLT<Mat5> llt(s);
    // K^T = S^-1 (P H^T)^T
    return llt.solve(pht.transpose()).transpose();
}

template <typename Mat>
void symmetrize(Mat& p) {
    p = ((p + p.transpose()) * 0.5).eval();
}

}  // namespace detail

// Linear Kalman update with a sensor-frame measurement against a
// sensor-frame state.
inline StateEstimate update_sensor(const StateEstimate& est,
                                   const Measurement& y, const Mat5& r) {
    const Mat57 c = measurement_matrix();
    const Mat5 s = c * est.cov * c.transpose() + r;
    const Eigen::Matrix<double, 7, 5> k =
        detail::gain_from_innovation(s, (est.cov * c.transpose()).eval());

    StateEstimate out;
    const Vec7 xv = est.state.to_vector();
    out.state = ObjectState::from_vector(xv + k * (y.to_vector() - c * xv));
    out.cov = (Mat7::Identity() - k * c) * est.cov;
    detail::symmetrize(out.cov);
    return out;
}

inline AugmentedEstimate augment(const StateEstimate& est) {
    AugmentedEstimate out;
    const Vec7 xv = est.state.to_vector();
    out.state.v << xv(0), xv(1), xv(2), 1.0, xv(3), xv(4), xv(5), xv(6);
    // Zero row/column at the homogeneous index.
    out.cov = AugmentedCovariance::Zero();
    const auto map = [](int i) { return i < 3 ? i : i + 1; };
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) out.cov(map(i), map(j)) = est.cov(i, j);
    return out;
}

// Drops the homogeneous row/column.
inline StateEstimate deaugment(const AugmentedEstimate& est) {
    StateEstimate out;
    const Vec8& v = est.state.v;
    Vec7 xv;
    xv << v(0), v(1), v(2), v(4), v(5), v(6), v(7);
    out.state = ObjectState::from_vector(xv);
    const auto map = [](int i) { return i < 3 ? i : i + 1; };
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) out.cov(i, j) = est.cov(map(i), map(j));
    return out;
}

// Map-frame update: the state lives in the static map frame while the
// measurement arrives in the sensor frame. The combined observation
// G = C' T' maps the augmented map-frame state into measurement space, so
// the usual update equations apply with G in place of C. The homogeneous
// component and its zero covariance row/column are preserved exactly
// because the corresponding gain row is zero.
inline AugmentedEstimate update_map(const AugmentedEstimate& est,
                                    const Measurement& y,
                                    const RigidTransform& sensor_from_map,
                                    const Mat5& r) {
    const Mat58 g = measurement_matrix_augmented() * embed_transform(sensor_from_map);
    const Mat5 s = g * est.cov * g.transpose() + r;
    const Eigen::Matrix<double, 8, 5> k =
        detail::gain_from_innovation(s, (est.cov * g.transpose()).eval());

    AugmentedEstimate out;
    out.state.v = est.state.v + k * (y.to_vector() - g * est.state.v);
    out.cov = (Mat8::Identity() - k * g) * est.cov;
    detail::symmetrize(out.cov);
    return out;
}

// Symmetric within tol and eigenvalues >= -tol.
inline bool is_symmetric_psd(const Eigen::MatrixXd& m, double tol = 1e-9) {
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    return eig.eigenvalues().minCoeff() >= -tol;
}

}  // namespace tracklite

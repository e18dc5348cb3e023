#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tracklite/common.hpp"
#include "tracklite/geometry.hpp"
#include "tracklite/metrics.hpp"
#include "tracklite/tracker.hpp"

namespace tracklite {

// Synthetic single-pedestrian scenarios with exact analytic ground truth.
// Map frame: x forward (initial ego heading), y left, z up; the ego sensor
// starts at the origin.
enum class ScenarioKind {
    lateral,
    longitudinal_toward,
    longitudinal_away,
    zigzag,
    curve,
    wait
};

inline const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::lateral:             return "lateral";
        case ScenarioKind::longitudinal_toward: return "longitudinal_toward";
        case ScenarioKind::longitudinal_away:   return "longitudinal_away";
        case ScenarioKind::zigzag:              return "zigzag";
        case ScenarioKind::curve:               return "curve";
        case ScenarioKind::wait:                return "wait";
    }
    return "lateral";
}

inline ScenarioKind scenario_kind_from_string(std::string_view s) {
    if (s == "lateral") return ScenarioKind::lateral;
    if (s == "longitudinal_toward") return ScenarioKind::longitudinal_toward;
    if (s == "longitudinal_away") return ScenarioKind::longitudinal_away;
    if (s == "zigzag") return ScenarioKind::zigzag;
    if (s == "curve") return ScenarioKind::curve;
    if (s == "wait") return ScenarioKind::wait;
    throw ParseError("unknown scenario kind: '" + std::string(s) + "'");
}

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::lateral;
    double target_distance = 10.0;  // m, forward offset of the pedestrian path
    double pedestrian_speed = 1.5;  // m/s
    double ego_speed = 0.0;         // m/s, straight line along +x
    double duration = 10.0;         // s
    double rate = 10.0;             // Hz
    std::uint64_t seed = 1;
    double zigzag_leg_duration = 2.0;  // s per leg
    double curve_depth = 3.0;          // m, parabola sag toward the ego

    bool is_valid() const {
        return rate > 0.0 && duration > 0.0 && pedestrian_speed >= 0.0 &&
               ego_speed >= 0.0;
    }
};

struct NoiseSpec {
    double centroid_sigma = 0.0;     // m, per axis
    double sigma_range_scale = 0.0;  // m; > 0 scales sigma by (1 + range/scale)
    double dropout_prob = 0.0;       // [0, 1]
    double clutter_rate = 0.0;       // expected false detections per frame
    double box_sigma = 0.0;          // px

    bool is_valid() const {
        return centroid_sigma >= 0.0 && box_sigma >= 0.0 &&
               dropout_prob >= 0.0 && dropout_prob <= 1.0 && clutter_rate >= 0.0;
    }
};

struct TimedPose {
    double timestamp = 0.0;
    RigidTransform map_from_sensor;
};

struct SimulatedScenario {
    TrackSet truth;               // single pedestrian, id 0
    std::vector<TimedPose> ego;   // sensor pose per frame
    ScenarioSpec spec;
};

// Camera-convention sensor frame (z forward, x right, y down) expressed in
// the map frame (x forward, y left, z up).
inline Mat3 sensor_rotation_in_map() {
    Mat3 r;
    r << 0, 0, 1,
        -1, 0, 0,
         0, -1, 0;
    return r;
}

inline CameraIntrinsics default_camera() {
    return {721.5377, 721.5377, 609.5593, 172.854, 1242, 375};
}

// LIDAR frame (x forward, y left, z up) to camera frame (z forward, x
// right, y down), co-located.
inline RigidTransform default_cam_from_lidar() {
    RigidTransform t;
    t.rotation << 0, -1, 0,
                  0, 0, -1,
                  1, 0, 0;
    return t;
}

namespace detail {

struct PathPoint {
    Vec3 position;
    Vec2 velocity;
};

inline PathPoint pedestrian_at(const ScenarioSpec& spec, double t) {
    const double d = spec.target_distance;
    const double v = spec.pedestrian_speed;
    const double half_width = v * spec.duration / 2.0;
    switch (spec.kind) {
        case ScenarioKind::lateral:
            return {{d, -half_width + v * t, 0.0}, {0.0, v}};
        case ScenarioKind::longitudinal_toward:
            return {{d - v * t, 0.0, 0.0}, {-v, 0.0}};
        case ScenarioKind::longitudinal_away:
            return {{d + v * t, 0.0, 0.0}, {v, 0.0}};
        case ScenarioKind::zigzag: {
            // Advances toward the ego at 45 degree legs of alternating
            // lateral sign.
            const double leg = spec.zigzag_leg_duration;
            const double c = v / std::sqrt(2.0);
            const int n_legs = static_cast<int>(t / leg);
            const double t_in = t - n_legs * leg;
            double x = d - c * t;
            double y = 0.0;
            for (int i = 0; i < n_legs; ++i) y += (i % 2 == 0 ? c : -c) * leg;
            const double sign = n_legs % 2 == 0 ? 1.0 : -1.0;
            y += sign * c * t_in;
            return {{x, y, 0.0}, {-c, sign * c}};
        }
        case ScenarioKind::curve: {
            // Lateral crossing whose forward coordinate dips toward the ego
            // as a parabola in time.
            const double tau = 2.0 * t / spec.duration - 1.0;  // [-1, 1]
            const double x = d - spec.curve_depth * (1.0 - tau * tau);
            const double dx = spec.curve_depth * 2.0 * tau * (2.0 / spec.duration);
            return {{x, -half_width + v * t, 0.0}, {dx, v}};
        }
        case ScenarioKind::wait: {
            // Pedestrian holds position, then crosses laterally once the ego
            // has stopped.
            const double t_cross = 0.5 * spec.duration;
            const double cross_width = v * (spec.duration - t_cross);
            const double x = spec.ego_speed * 0.4 * spec.duration + d;
            if (t < t_cross) return {{x, -cross_width / 2.0, 0.0}, {0.0, 0.0}};
            return {{x, -cross_width / 2.0 + v * (t - t_cross), 0.0}, {0.0, v}};
        }
    }
    return {{d, 0.0, 0.0}, {0.0, 0.0}};
}

inline Vec3 ego_position_at(const ScenarioSpec& spec, double t) {
    if (spec.kind == ScenarioKind::wait) {
        const double t_stop = 0.4 * spec.duration;
        return {spec.ego_speed * std::min(t, t_stop), 0.0, 0.0};
    }
    return {spec.ego_speed * t, 0.0, 0.0};
}

}  // namespace detail

// Deterministic ground truth for the requested scenario: per-frame
// pedestrian samples with analytic path derivatives as velocity, plus the
// ego sensor trajectory.
inline SimulatedScenario generate(const ScenarioSpec& spec) {
    if (!spec.is_valid()) throw ValidationError("invalid scenario spec");
    SimulatedScenario out;
    out.spec = spec;
    const int frames = static_cast<int>(std::lround(spec.duration * spec.rate));
    const Mat3 sensor_rot = sensor_rotation_in_map();
    for (int k = 0; k < frames; ++k) {
        const double t = k / spec.rate;
        const auto ped = detail::pedestrian_at(spec, t);
        TrackSample s;
        s.timestamp = t;
        s.id = 0;
        s.cls = ObjectClass::pedestrian;
        s.position = ped.position;
        s.velocity = ped.velocity;
        out.truth.push_back(s);
        out.ego.push_back({t, {sensor_rot, detail::ego_position_at(spec, t)}});
    }
    return out;
}

// Pre-fused detections: the ground truth transformed into the sensor frame
// with Gaussian centroid noise, Bernoulli dropout, and Poisson clutter.
// Deterministic for a fixed seed.
inline std::vector<FrameInput> corrupt(const SimulatedScenario& scenario,
                                       const NoiseSpec& noise,
                                       std::uint64_t seed) {
    if (!noise.is_valid()) throw ValidationError("invalid noise spec");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const CameraIntrinsics cam = default_camera();

    std::vector<FrameInput> out;
    out.reserve(scenario.truth.size());
    for (std::size_t k = 0; k < scenario.truth.size(); ++k) {
        const TrackSample& gt = scenario.truth[k];
        FrameInput frame;
        frame.timestamp = gt.timestamp;
        frame.sensor_from_map = invert(scenario.ego[k].map_from_sensor);

        const bool dropped =
            noise.dropout_prob > 0.0 && uniform(rng) < noise.dropout_prob;
        if (!dropped) {
            Vec3 p = transform_point(frame.sensor_from_map, gt.position);
            const double range = p.norm();
            double sigma = noise.centroid_sigma;
            if (noise.sigma_range_scale > 0.0) {
                sigma *= 1.0 + range / noise.sigma_range_scale;
            }
            if (sigma > 0.0) {
                p += sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
            }
            double box_h = cam.fy * 1.7 / std::max(range, 1.0);
            double box_w = 0.45 * box_h;
            if (noise.box_sigma > 0.0) {
                box_w += noise.box_sigma * gauss(rng);
                box_h += noise.box_sigma * gauss(rng);
            }
            frame.detections.push_back({p, ObjectClass::pedestrian, 0.9,
                                        std::max(box_w, 1.0),
                                        std::max(box_h, 1.0)});
        }

        if (noise.clutter_rate > 0.0) {
            std::poisson_distribution<int> clutter(noise.clutter_rate);
            const int n = clutter(rng);
            for (int i = 0; i < n; ++i) {
                const Vec3 c(uniform(rng) * 30.0 - 15.0,   // camera x
                             uniform(rng) * 3.0 - 1.5,     // camera y
                             1.0 + uniform(rng) * 39.0);   // camera z (fwd)
                const double range = c.norm();
                const double box_h = cam.fy * 1.7 / std::max(range, 1.0);
                frame.detections.push_back({c, ObjectClass::pedestrian,
                                            0.3 + 0.4 * uniform(rng),
                                            0.45 * box_h, box_h});
            }
        }
        out.push_back(std::move(frame));
    }
    return out;
}

// Raw-mode variant: synthesizes a LIDAR blob for the pedestrian (point count
// inversely proportional to range squared) over a flat ground plane, plus
// the 2D box the detector would have produced. Exercises the clustering
// path end to end.
inline std::vector<FrameInput> corrupt_raw(const SimulatedScenario& scenario,
                                           const NoiseSpec& noise,
                                           std::uint64_t seed) {
    if (!noise.is_valid()) throw ValidationError("invalid noise spec");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const CameraIntrinsics cam = default_camera();
    const RigidTransform cam_from_lidar = default_cam_from_lidar();
    const RigidTransform lidar_from_cam = invert(cam_from_lidar);
    constexpr double kGroundZ = -1.6;  // LIDAR frame, meters below sensor

    std::vector<FrameInput> out;
    out.reserve(scenario.truth.size());
    for (std::size_t k = 0; k < scenario.truth.size(); ++k) {
        const TrackSample& gt = scenario.truth[k];
        FrameInput frame;
        frame.timestamp = gt.timestamp;
        frame.raw = true;
        frame.sensor_from_map = invert(scenario.ego[k].map_from_sensor);
        frame.intrinsics = cam;
        frame.cam_from_lidar = cam_from_lidar;
        frame.cloud.timestamp = gt.timestamp;

        // Sparse ground plane inside the ROI.
        for (double x = 2.0; x <= 40.0; x += 1.0) {
            for (double y = -15.0; y <= 15.0; y += 1.0) {
                frame.cloud.points.emplace_back(
                    x + 0.05 * gauss(rng), y + 0.05 * gauss(rng),
                    kGroundZ + 0.02 * gauss(rng));
            }
        }

        const bool dropped =
            noise.dropout_prob > 0.0 && uniform(rng) < noise.dropout_prob;
        if (!dropped) {
            const RigidTransform lidar_from_map =
                compose(lidar_from_cam, frame.sensor_from_map);
            const Vec3 center = transform_point(lidar_from_map, gt.position);
            const double range = std::max(center.norm(), 1.0);
            const int count = std::clamp(
                static_cast<int>(12000.0 / (range * range)), 8, 400);
            for (int i = 0; i < count; ++i) {
                frame.cloud.points.push_back(
                    center + 0.2 * Vec3(gauss(rng), gauss(rng), gauss(rng)));
            }
            const Vec3 center_cam = transform_point(cam_from_lidar, center);
            const auto px = project(center_cam, cam);
            if (px) {
                const double box_h = cam.fy * 1.7 / range;
                const double box_w = 0.45 * box_h;
                BoundingBox2D box;
                box.u_min = px->u - box_w / 2.0;
                box.u_max = px->u + box_w / 2.0;
                box.v_min = px->v - box_h / 2.0;
                box.v_max = px->v + box_h / 2.0;
                box.cls = ObjectClass::pedestrian;
                box.confidence = 0.9;
                frame.boxes.push_back(box);
            }
        }
        out.push_back(std::move(frame));
    }
    return out;
}

}  // namespace tracklite

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "tracklite/association.hpp"
#include "tracklite/clustering.hpp"
#include "tracklite/common.hpp"
#include "tracklite/filter.hpp"
#include "tracklite/geometry.hpp"

namespace tracklite {

struct Track {
    int id = 0;
    ObjectState state;          // map frame
    Covariance cov = Covariance::Zero();
    ObjectClass cls = ObjectClass::car;
    double confidence = 0.0;
    int missed_frames = 0;
    bool is_trial = true;
    int consecutive_hits = 0;
    int age_frames = 0;
};

// One time step of input. Pre-fused mode supplies sensor-frame Detection3D
// directly; raw mode supplies a LIDAR cloud plus 2D boxes and calibration.
// sensor_from_map maps map-frame points into the sensor (camera) frame.
struct FrameInput {
    double timestamp = 0.0;  // seconds, UTC
    std::vector<Detection3D> detections;
    RigidTransform sensor_from_map;
    bool raw = false;
    PointCloud cloud;
    std::vector<BoundingBox2D> boxes;
    std::optional<CameraIntrinsics> intrinsics;
    std::optional<RigidTransform> cam_from_lidar;
};

struct TrackedObject {
    int id = 0;
    Vec3 position = Vec3::Zero();  // map frame
    Vec2 velocity = Vec2::Zero();  // map frame, ground plane
    ObjectClass cls = ObjectClass::car;
    double confidence = 0.0;
    double box_w = 0.0;
    double box_h = 0.0;
};

// Confirmed tracks only; trial tracks never appear in the output.
struct TrackerOutput {
    double timestamp = 0.0;
    std::vector<TrackedObject> objects;
};

enum class InputMode { fused, raw };

struct PipelineConfig {
    InputMode mode = InputMode::fused;
    NoiseConfig noise;
    GateConfig gates;
    FuseConfig fuse;
    int promote_hits = 3;          // consecutive hits ending the trial period
    int delete_misses = 5;         // consecutive misses removing a track
    double confidence_alpha = 0.5;  // EMA weight for new detection confidence
};

// Trial tracks are confirmed after promote_hits consecutive hits.
inline Track promote(Track track, int promote_hits) {
    if (track.is_trial && track.consecutive_hits >= promote_hits) {
        track.is_trial = false;
    }
    return track;
}

// Per-frame pipeline: predict, (fuse), associate, update, manage lifecycle.
// Single-writer: step() must not run concurrently with itself; outputs are
// value snapshots safe to share.
class Tracker {
public:
    Tracker() = default;
    explicit Tracker(PipelineConfig cfg) : cfg_(std::move(cfg)) {}

    const PipelineConfig& config() const { return cfg_; }
    const std::vector<Track>& tracks() const { return tracks_; }

    // Clears all tracks; the id counter keeps increasing so ids are never
    // reused for the lifetime of the instance.
    void reset() {
        tracks_.clear();
        last_timestamp_.reset();
    }

    TrackerOutput step(const FrameInput& input) {
        if (last_timestamp_ && input.timestamp <= *last_timestamp_) {
            throw NonMonotonicTimestamp("frame timestamp is not increasing");
        }
        const double dt =
            last_timestamp_ ? input.timestamp - *last_timestamp_ : 0.0;
        last_timestamp_ = input.timestamp;

        // 1. Predict every track forward, trial tracks included (coasting).
        if (dt > 0.0) {
            const Mat7 q = cfg_.noise.process_noise();
            for (Track& t : tracks_) {
                StateEstimate est{t.state, t.cov};
                est = predict(est, dt, q);
                t.state = est.state;
                t.cov = est.cov;
            }
        }

        // 2. Obtain sensor-frame detections.
        const bool use_raw = cfg_.mode == InputMode::raw || input.raw;
        std::vector<Detection3D> fused_storage;
        if (use_raw) fused_storage = fused_from_raw(input);
        const std::vector<Detection3D>& detections =
            use_raw ? fused_storage : input.detections;

        // 3. Associate in the map frame.
        const RigidTransform map_from_sensor = invert(input.sensor_from_map);
        std::vector<Vec3> det_map(detections.size());
        for (std::size_t i = 0; i < detections.size(); ++i) {
            det_map[i] = transform_point(map_from_sensor, detections[i].centroid);
        }
        std::vector<TrackCandidate> candidates;
        candidates.reserve(tracks_.size());
        for (const Track& t : tracks_) {
            const double speed = t.state.velocity().norm();
            candidates.push_back({t.id, t.age_frames, t.cls, t.state.position(),
                                  gate_radius(t.cls, speed, dt > 0.0 ? dt : 0.1,
                                              cfg_.gates)});
        }
        std::vector<Detection3D> map_detections = detections;
        for (std::size_t i = 0; i < detections.size(); ++i) {
            map_detections[i].centroid = det_map[i];
        }
        const Assignment assignment = associate(candidates, map_detections);

        // 4. Update matched tracks with the sensor-frame measurement.
        const Mat5 r = cfg_.noise.measurement_noise();
        for (const auto& [track_id, det_index] : assignment.pairs) {
            Track& t = track_by_id(track_id);
            const Detection3D& det = detections[det_index];
            Measurement y{det.centroid.x(), det.centroid.y(), det.centroid.z(),
                          det.box_w, det.box_h, MeasurementFrame::sensor};
            AugmentedEstimate est = augment({t.state, t.cov});
            est = update_map(est, y, input.sensor_from_map, r);
            const StateEstimate flat = deaugment(est);
            t.state = flat.state;
            t.cov = flat.cov;
            ++t.consecutive_hits;
            t.missed_frames = 0;
            t.confidence = cfg_.confidence_alpha * det.confidence +
                           (1.0 - cfg_.confidence_alpha) * t.confidence;
        }

        // 5-6. Misses: trial tracks die on their first miss, confirmed
        // tracks after delete_misses consecutive misses.
        for (int track_id : assignment.unmatched_tracks) {
            Track& t = track_by_id(track_id);
            t.consecutive_hits = 0;
            if (!t.is_trial) ++t.missed_frames;
        }
        std::erase_if(tracks_, [this, &assignment](const Track& t) {
            const bool missed_now =
                std::find(assignment.unmatched_tracks.begin(),
                          assignment.unmatched_tracks.end(),
                          t.id) != assignment.unmatched_tracks.end();
            if (t.is_trial) return missed_now;
            return t.missed_frames >= cfg_.delete_misses;
        });

        // 7. Greedy creation: every unclaimed detection founds a trial track.
        for (int det_index : assignment.unmatched_detections) {
            const Detection3D& det = detections[det_index];
            Track t;
            t.id = next_id_++;
            t.state.x = det_map[det_index].x();
            t.state.y = det_map[det_index].y();
            t.state.z = det_map[det_index].z();
            t.state.w = det.box_w;
            t.state.h = det.box_h;
            t.cov = cfg_.noise.initial_covariance();
            t.cls = det.cls;
            t.confidence = det.confidence;
            t.consecutive_hits = 1;
            tracks_.push_back(t);
        }

        // 8. Promotion, then age bookkeeping.
        for (Track& t : tracks_) {
            t = promote(t, cfg_.promote_hits);
            ++t.age_frames;
        }

        TrackerOutput out;
        out.timestamp = input.timestamp;
        for (const Track& t : tracks_) {
            if (t.is_trial) continue;
            out.objects.push_back({t.id, t.state.position(), t.state.velocity(),
                                   t.cls, t.confidence, t.state.w, t.state.h});
        }
        return out;
    }

private:
    Track& track_by_id(int id) {
        for (Track& t : tracks_) {
            if (t.id == id) return t;
        }
        throw Error("unknown track id");
    }

    std::vector<Detection3D> fused_from_raw(const FrameInput& input) const {
        if (!input.intrinsics || !input.cam_from_lidar) {
            throw ValidationError(
                "raw-mode frame is missing camera intrinsics or extrinsics");
        }
        return fuse(input.cloud, input.boxes, *input.intrinsics,
                    *input.cam_from_lidar, cfg_.fuse);
    }

    PipelineConfig cfg_;
    std::vector<Track> tracks_;
    int next_id_ = 0;
    std::optional<double> last_timestamp_;
};

}  // namespace tracklite

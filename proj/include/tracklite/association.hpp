#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "tracklite/clustering.hpp"
#include "tracklite/common.hpp"

namespace tracklite {

// Gate radii derive from the maximum feasible inter-frame motion per class.
struct GateConfig {
    double ped_max_speed = 6.0;      // m/s
    double cyclist_max_speed = 10.0;  // m/s
    double car_max_speed = 20.0;     // m/s
    double car_margin = 0.5;         // m, on top of the velocity-scaled gate
};

// Pedestrians and cyclists use a fixed speed bound; car gates widen with the
// tracked speed to cover fast vehicles.
inline double gate_radius(ObjectClass cls, double tracked_speed, double dt,
                          const GateConfig& cfg) {
    switch (cls) {
        case ObjectClass::pedestrian:
            return cfg.ped_max_speed * dt;
        case ObjectClass::cyclist:
            return cfg.cyclist_max_speed * dt;
        case ObjectClass::car:
            return std::max(cfg.car_max_speed * dt,
                            tracked_speed * dt + cfg.car_margin);
    }
    return cfg.car_max_speed * dt;
}

struct TrackCandidate {
    int id = 0;
    int age_frames = 0;
    ObjectClass cls = ObjectClass::car;
    Vec3 position = Vec3::Zero();  // predicted, map frame
    double gate_radius = 0.0;      // m
};

struct Assignment {
    std::vector<std::pair<int, int>> pairs;  // (track id, detection index)
    std::vector<int> unmatched_tracks;       // track ids
    std::vector<int> unmatched_detections;   // detection indices
};

// Greedy nearest-neighbor association on 3D Euclidean centroid distance.
// Tracks claim detections in descending age order (ties by ascending id);
// each track takes its nearest unclaimed same-class detection inside its
// gate. Deterministic for identical inputs.
inline Assignment associate(std::vector<TrackCandidate> tracks,
                            const std::vector<Detection3D>& detections) {
    std::sort(tracks.begin(), tracks.end(),
              [](const TrackCandidate& a, const TrackCandidate& b) {
                  if (a.age_frames != b.age_frames)
                      return a.age_frames > b.age_frames;
                  return a.id < b.id;
              });

    Assignment out;
    std::vector<bool> claimed(detections.size(), false);
    for (const TrackCandidate& track : tracks) {
        int best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < detections.size(); ++i) {
            if (claimed[i] || detections[i].cls != track.cls) continue;
            const double dist = (detections[i].centroid - track.position).norm();
            if (dist > track.gate_radius) continue;
            if (dist < best_dist) {
                best = static_cast<int>(i);
                best_dist = dist;
            }
        }
        if (best >= 0) {
            claimed[best] = true;
            out.pairs.emplace_back(track.id, best);
        } else {
            out.unmatched_tracks.push_back(track.id);
        }
    }
    for (std::size_t i = 0; i < detections.size(); ++i) {
        if (!claimed[i]) out.unmatched_detections.push_back(static_cast<int>(i));
    }
    return out;
}

}  // namespace tracklite

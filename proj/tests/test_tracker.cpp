#include "tracklite/tracker.hpp"

#include <gtest/gtest.h>

#include <set>

#include "tracklite/scenario_sim.hpp"

using namespace tracklite;

namespace {

FrameInput frame_at(double t, std::vector<Detection3D> detections = {}) {
    FrameInput f;
    f.timestamp = t;
    f.detections = std::move(detections);
    return f;
}

Detection3D ped_at(const Vec3& p, double confidence = 0.9) {
    return {p, ObjectClass::pedestrian, confidence, 40.0, 80.0};
}

}  // namespace

TEST(TrackerTest, FirstDetectionBecomesTrialTrack) {
    Tracker tracker;
    const TrackerOutput out = tracker.step(frame_at(0.0, {ped_at({5, 0, 0})}));
    EXPECT_TRUE(out.objects.empty());
    ASSERT_EQ(tracker.tracks().size(), 1u);
    EXPECT_TRUE(tracker.tracks()[0].is_trial);
}

TEST(TrackerTest, TrialTrackDiesOnSingleMiss) {
    Tracker tracker;
    tracker.step(frame_at(0.0, {ped_at({5, 0, 0})}));
    ASSERT_EQ(tracker.tracks().size(), 1u);
    tracker.step(frame_at(0.1));
    EXPECT_TRUE(tracker.tracks().empty());
}

TEST(TrackerTest, ConfirmedTrackSurvivesFourMissesDiesOnFifth) {
    Tracker tracker;
    double t = 0.0;
    for (int i = 0; i < 3; ++i, t += 0.1) {
        tracker.step(frame_at(t, {ped_at({5, 0, 0})}));
    }
    ASSERT_EQ(tracker.tracks().size(), 1u);
    ASSERT_FALSE(tracker.tracks()[0].is_trial);

    for (int miss = 1; miss <= 4; ++miss, t += 0.1) {
        tracker.step(frame_at(t));
        EXPECT_EQ(tracker.tracks().size(), 1u) << "miss " << miss;
    }
    tracker.step(frame_at(t));
    EXPECT_TRUE(tracker.tracks().empty());
}

TEST(TrackerTest, PromotionAfterThreeConsecutiveHits) {
    Tracker tracker;
    tracker.step(frame_at(0.0, {ped_at({5, 0, 0})}));
    EXPECT_TRUE(tracker.tracks()[0].is_trial);
    tracker.step(frame_at(0.1, {ped_at({5, 0.1, 0})}));
    EXPECT_TRUE(tracker.tracks()[0].is_trial);
    const TrackerOutput out = tracker.step(frame_at(0.2, {ped_at({5, 0.2, 0})}));
    EXPECT_FALSE(tracker.tracks()[0].is_trial);
    EXPECT_EQ(out.objects.size(), 1u);
}

TEST(PromoteTest, RuleEvaluation) {
    Track t;
    t.is_trial = true;
    t.consecutive_hits = 3;
    EXPECT_FALSE(promote(t, 3).is_trial);
    t.consecutive_hits = 2;
    EXPECT_TRUE(promote(t, 3).is_trial);
    t.is_trial = false;
    t.consecutive_hits = 0;
    EXPECT_FALSE(promote(t, 3).is_trial);
}

TEST(TrackerTest, OutputNeverContainsTrialTracks) {
    Tracker tracker;
    double t = 0.0;
    for (int i = 0; i < 10; ++i, t += 0.1) {
        std::vector<Detection3D> dets = {ped_at({5, 0.1 * i, 0})};
        if (i == 5) dets.push_back(ped_at({20, 0, 0}));  // one-shot clutter
        const TrackerOutput out = tracker.step(frame_at(t, dets));
        std::set<int> trial_ids;
        for (const Track& track : tracker.tracks()) {
            if (track.is_trial) trial_ids.insert(track.id);
        }
        for (const TrackedObject& obj : out.objects) {
            EXPECT_FALSE(trial_ids.count(obj.id));
        }
    }
}

TEST(TrackerTest, NonMonotonicTimestampThrows) {
    Tracker tracker;
    tracker.step(frame_at(1.0));
    EXPECT_THROW(tracker.step(frame_at(1.0)), NonMonotonicTimestamp);
    EXPECT_THROW(tracker.step(frame_at(0.5)), NonMonotonicTimestamp);
}

TEST(TrackerTest, ResetClearsTracksAndKeepsIdsMonotonic) {
    Tracker tracker;
    tracker.step(frame_at(0.0, {ped_at({5, 0, 0})}));
    const int first_id = tracker.tracks()[0].id;
    tracker.reset();
    EXPECT_TRUE(tracker.tracks().empty());
    const TrackerOutput out = tracker.step(frame_at(0.0));
    EXPECT_TRUE(out.objects.empty());
    tracker.reset();
    tracker.reset();  // idempotent
    tracker.step(frame_at(0.0, {ped_at({5, 0, 0})}));
    EXPECT_GT(tracker.tracks()[0].id, first_id);
}

TEST(TrackerTest, IdsStrictlyIncreaseAcrossCreations) {
    Tracker tracker;
    double t = 0.0;
    std::vector<int> ids;
    for (int i = 0; i < 6; ++i, t += 0.1) {
        // Alternate detection placement so every other frame kills the trial
        // and founds a fresh track far from the previous one.
        const double x = (i % 2 == 0) ? 5.0 : 25.0;
        tracker.step(frame_at(t, {ped_at({x, 0, 0})}));
        for (const Track& track : tracker.tracks()) ids.push_back(track.id);
    }
    for (std::size_t i = 1; i < ids.size(); ++i) {
        EXPECT_GE(ids[i], ids[i - 1]);
    }
    EXPECT_GT(std::set<int>(ids.begin(), ids.end()).size(), 1u);
}

TEST(TrackerTest, DeletionRunsBeforeCreationSoNewTrackIsFresh) {
    PipelineConfig cfg;
    cfg.delete_misses = 1;  // confirmed tracks die on their first miss
    Tracker tracker(cfg);
    double t = 0.0;
    for (int i = 0; i < 3; ++i, t += 0.1) {
        tracker.step(frame_at(t, {ped_at({5, 0, 0})}));
    }
    ASSERT_FALSE(tracker.tracks()[0].is_trial);
    const int old_id = tracker.tracks()[0].id;

    // Miss once (track deleted), while a detection just outside the gate
    // founds a brand-new trial track in the same step.
    tracker.step(frame_at(t, {ped_at({5.7, 0, 0})}));
    ASSERT_EQ(tracker.tracks().size(), 1u);
    EXPECT_NE(tracker.tracks()[0].id, old_id);
    EXPECT_TRUE(tracker.tracks()[0].is_trial);
}

TEST(TrackerTest, VelocityConvergesOnNoiselessConstantVelocityTarget) {
    PipelineConfig cfg;
    for (double& q : cfg.noise.q_diag) q = 1e-9;
    for (double& r : cfg.noise.r_diag) r = 1e-9;
    Tracker tracker(cfg);

    const Vec2 v_true(1.2, -0.7);
    const Vec3 start(10.0, 2.0, 0.0);
    TrackerOutput out;
    for (int k = 0; k < 20; ++k) {
        const double t = 0.1 * k;
        const Vec3 p = start + 0.1 * k * Vec3(v_true.x(), v_true.y(), 0.0);
        out = tracker.step(frame_at(t, {ped_at(p)}));
    }
    ASSERT_EQ(out.objects.size(), 1u);
    EXPECT_LT((out.objects[0].velocity - v_true).norm(), 1e-3);
}

TEST(TrackerTest, ConfidenceTracksDetectionsByEma) {
    Tracker tracker;
    tracker.step(frame_at(0.0, {ped_at({5, 0, 0}, 0.8)}));
    EXPECT_DOUBLE_EQ(tracker.tracks()[0].confidence, 0.8);
    tracker.step(frame_at(0.1, {ped_at({5, 0, 0}, 0.4)}));
    EXPECT_DOUBLE_EQ(tracker.tracks()[0].confidence, 0.5 * 0.4 + 0.5 * 0.8);
}

TEST(TrackerTest, MapFrameTrackingThroughMovingSensor) {
    // Static pedestrian observed from an ego moving forward: the map-frame
    // track position must stay put while the sensor-frame measurement
    // changes every frame.
    Tracker tracker;
    const Vec3 ped_map(15.0, 1.0, 0.0);
    const Mat3 sensor_rot = sensor_rotation_in_map();
    TrackerOutput out;
    for (int k = 0; k < 10; ++k) {
        const double t = 0.1 * k;
        FrameInput frame;
        frame.timestamp = t;
        const RigidTransform map_from_sensor{sensor_rot, Vec3(2.0 * t, 0, 0)};
        frame.sensor_from_map = invert(map_from_sensor);
        frame.detections = {
            ped_at(transform_point(frame.sensor_from_map, ped_map))};
        out = tracker.step(frame);
    }
    ASSERT_EQ(out.objects.size(), 1u);
    EXPECT_LT((out.objects[0].position - ped_map).norm(), 1e-6);
    EXPECT_LT(out.objects[0].velocity.norm(), 1e-3);
}

TEST(TrackerTest, RawModeTracksThroughClusteringPath) {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::lateral;
    spec.target_distance = 10.0;
    spec.duration = 4.0;
    const SimulatedScenario scenario = generate(spec);
    const auto frames = corrupt_raw(scenario, NoiseSpec{}, 99);

    PipelineConfig cfg;
    cfg.mode = InputMode::raw;
    Tracker tracker(cfg);
    int confirmed_frames = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const TrackerOutput out = tracker.step(frames[k]);
        if (out.objects.empty()) continue;
        ++confirmed_frames;
        const double err =
            (out.objects[0].position - scenario.truth[k].position).norm();
        worst = std::max(worst, err);
    }
    EXPECT_GT(confirmed_frames, 30);
    EXPECT_LT(worst, 0.5);
}

#include "tracklite/association.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "test_util.hpp"

using namespace tracklite;

namespace {

Detection3D det(double x, double y, double z,
                ObjectClass cls = ObjectClass::pedestrian) {
    return {Vec3(x, y, z), cls, 0.9, 40.0, 80.0};
}

}  // namespace

TEST(GateRadiusTest, PedestrianAtTenHz) {
    EXPECT_DOUBLE_EQ(gate_radius(ObjectClass::pedestrian, 0.0, 0.1, {}), 0.6);
}

TEST(GateRadiusTest, SlowCarUsesMaxSpeedFloor) {
    EXPECT_DOUBLE_EQ(gate_radius(ObjectClass::car, 0.0, 0.1, {}), 2.0);
}

TEST(GateRadiusTest, FastCarWidensGate) {
    GateConfig cfg;
    cfg.car_margin = 0.5;
    EXPECT_DOUBLE_EQ(gate_radius(ObjectClass::car, 30.0, 0.1, cfg), 3.5);
}

TEST(GateRadiusTest, CyclistUsesOwnBound) {
    EXPECT_DOUBLE_EQ(gate_radius(ObjectClass::cyclist, 0.0, 0.1, {}), 1.0);
}

TEST(AssociateTest, NoTracksLeavesAllDetectionsUnmatched) {
    const Assignment a = associate({}, {det(0, 0, 0), det(1, 1, 1)});
    EXPECT_TRUE(a.pairs.empty());
    EXPECT_TRUE(a.unmatched_tracks.empty());
    EXPECT_EQ(a.unmatched_detections, (std::vector<int>{0, 1}));
}

TEST(AssociateTest, SingleMatchInsideGate) {
    const TrackCandidate track{7, 5, ObjectClass::pedestrian, Vec3(0, 0, 0), 0.6};
    const Assignment a = associate({track}, {det(0.3, 0, 0)});
    ASSERT_EQ(a.pairs.size(), 1u);
    EXPECT_EQ(a.pairs[0], std::make_pair(7, 0));
    EXPECT_TRUE(a.unmatched_tracks.empty());
    EXPECT_TRUE(a.unmatched_detections.empty());
}

TEST(AssociateTest, OutsideGateUnmatched) {
    const TrackCandidate track{7, 5, ObjectClass::pedestrian, Vec3(0, 0, 0), 0.6};
    const Assignment a = associate({track}, {det(0.7, 0, 0)});
    EXPECT_TRUE(a.pairs.empty());
    EXPECT_EQ(a.unmatched_tracks, (std::vector<int>{7}));
    EXPECT_EQ(a.unmatched_detections, (std::vector<int>{0}));
}

TEST(AssociateTest, OlderTrackClaimsContestedDetection) {
    TrackCandidate a{1, 10, ObjectClass::pedestrian, Vec3(0.0, 0.0, 0.0), 0.6};
    TrackCandidate b{2, 3, ObjectClass::pedestrian, Vec3(0.4, 0.0, 0.0), 0.6};
    const std::vector<Detection3D> dets = {det(0.2, 0.0, 0.0)};

    Assignment out = associate({a, b}, dets);
    ASSERT_EQ(out.pairs.size(), 1u);
    EXPECT_EQ(out.pairs[0].first, 1);
    EXPECT_EQ(out.unmatched_tracks, (std::vector<int>{2}));

    // The outcome flips when the other track is older.
    a.age_frames = 3;
    b.age_frames = 10;
    out = associate({a, b}, dets);
    ASSERT_EQ(out.pairs.size(), 1u);
    EXPECT_EQ(out.pairs[0].first, 2);
    EXPECT_EQ(out.unmatched_tracks, (std::vector<int>{1}));
}

TEST(AssociateTest, EqualAgeTieBreaksToLowerId) {
    const TrackCandidate a{5, 4, ObjectClass::pedestrian, Vec3(0, 0, 0), 0.6};
    const TrackCandidate b{3, 4, ObjectClass::pedestrian, Vec3(0.4, 0, 0), 0.6};
    const Assignment out = associate({a, b}, {det(0.2, 0, 0)});
    ASSERT_EQ(out.pairs.size(), 1u);
    EXPECT_EQ(out.pairs[0].first, 3);
}

TEST(AssociateTest, ClassPurity) {
    const TrackCandidate car{1, 5, ObjectClass::car, Vec3(0, 0, 0), 2.0};
    const Assignment out = associate({car}, {det(0.1, 0, 0)});
    EXPECT_TRUE(out.pairs.empty());
    EXPECT_EQ(out.unmatched_tracks, (std::vector<int>{1}));
    EXPECT_EQ(out.unmatched_detections, (std::vector<int>{0}));
}

TEST(AssociateTest, InvariantsOnRandomInstances) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> pos(-20.0, 20.0);
    std::uniform_int_distribution<int> count(0, 25);
    std::uniform_int_distribution<int> cls(0, 2);
    std::uniform_int_distribution<int> age(0, 50);

    for (int trial = 0; trial < 100; ++trial) {
        std::vector<TrackCandidate> tracks;
        const int n_tracks = count(rng);
        for (int i = 0; i < n_tracks; ++i) {
            tracks.push_back({i, age(rng), static_cast<ObjectClass>(cls(rng)),
                              Vec3(pos(rng), pos(rng), 0.0), 2.0});
        }
        std::vector<Detection3D> dets;
        const int n_dets = count(rng);
        for (int i = 0; i < n_dets; ++i) {
            dets.push_back(det(pos(rng), pos(rng), 0.0,
                               static_cast<ObjectClass>(cls(rng))));
        }

        const Assignment out = associate(tracks, dets);
        const Assignment again = associate(tracks, dets);
        EXPECT_EQ(out.pairs, again.pairs);  // determinism

        std::set<int> track_ids;
        std::set<int> det_ids;
        for (const auto& [tid, di] : out.pairs) {
            EXPECT_TRUE(track_ids.insert(tid).second);
            EXPECT_TRUE(det_ids.insert(di).second);
            const auto track_it =
                std::find_if(tracks.begin(), tracks.end(),
                             [tid = tid](const TrackCandidate& t) {
                                 return t.id == tid;
                             });
            ASSERT_NE(track_it, tracks.end());
            EXPECT_EQ(track_it->cls, dets[di].cls);
            EXPECT_LE((dets[di].centroid - track_it->position).norm(),
                      track_it->gate_radius);
        }
        for (int tid : out.unmatched_tracks) {
            EXPECT_TRUE(track_ids.insert(tid).second);
        }
        for (int di : out.unmatched_detections) {
            EXPECT_TRUE(det_ids.insert(di).second);
        }
        EXPECT_EQ(track_ids.size(), tracks.size());
        EXPECT_EQ(det_ids.size(), dets.size());
    }
}

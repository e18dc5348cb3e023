#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "tracklite/common.hpp"

namespace tracklite {

struct ImageBox {
    double u_min = 0.0;
    double v_min = 0.0;
    double u_max = 0.0;
    double v_max = 0.0;
};

inline double iou(const ImageBox& a, const ImageBox& b) {
    const double iw = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
    const double ih = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double area_a = (a.u_max - a.u_min) * (a.v_max - a.v_min);
    const double area_b = (b.u_max - b.u_min) * (b.v_max - b.v_min);
    return inter / (area_a + area_b - inter);
}

// One observation of one object at one timestamp. A set of samples covering
// several ids forms a multi-object track set; per-id timestamps must be
// strictly increasing.
struct TrackSample {
    double timestamp = 0.0;
    int id = 0;
    ObjectClass cls = ObjectClass::car;
    Vec3 position = Vec3::Zero();  // map frame, meters
    Vec2 velocity = Vec2::Zero();  // map frame ground plane, m/s
    std::optional<ImageBox> box;
};

using TrackSet = std::vector<TrackSample>;

inline TrackSet filter_by_id(const TrackSet& set, int id) {
    TrackSet out;
    for (const TrackSample& s : set) {
        if (s.id == id) out.push_back(s);
    }
    return out;
}

enum class MatchMode { center3d, iou2d };

struct MotReport {
    double mota = 0.0;
    double motp = 0.0;        // mean matched distance (m) or mean IoU
    double mt_percent = 0.0;  // trajectories covered >= 80% of their life
    double ml_percent = 0.0;  // trajectories covered <= 20% of their life
    int ids = 0;
    int frag = 0;
    double precision = 0.0;
    double recall = 0.0;
    int gt_total = 0;
    int false_positives = 0;
    int false_negatives = 0;
    int matches = 0;
};

namespace detail {

inline std::int64_t frame_key(double t) {
    return std::llround(t * 1e6);  // microsecond frame buckets
}

struct MotItem {
    int id;
    Vec3 position;
    std::optional<ImageBox> box;
};

// Match cost under the chosen mode, or nullopt when the pair is not a valid
// correspondence (outside threshold). Lower cost is better in both modes.
inline std::optional<double> match_cost(const MotItem& gt, const MotItem& hyp,
                                        double threshold, MatchMode mode) {
    if (mode == MatchMode::center3d) {
        const double d = (gt.position - hyp.position).norm();
        if (d > threshold) return std::nullopt;
        return d;
    }
    if (!gt.box || !hyp.box) {
        throw ValidationError("iou2d evaluation requires 2D boxes on every sample");
    }
    const double overlap = iou(*gt.box, *hyp.box);
    if (overlap < threshold) return std::nullopt;
    return 1.0 - overlap;
}

}  // namespace detail

// CLEAR MOT evaluation. Per frame, correspondences carried over from the
// previous frame are kept while still valid; remaining items are matched
// greedily by ascending cost. MOTA = 1 - (FN + FP + IDS) / GT. MOTP is the
// mean matched center distance in center3d mode and the mean matched IoU in
// iou2d mode. A fragmentation is counted each time a ground-truth
// trajectory starts a new continuous same-hypothesis run after the first.
inline MotReport clear_mot(const TrackSet& gt, const TrackSet& hyp,
                           double match_threshold,
                           MatchMode mode = MatchMode::center3d) {
    if (gt.empty()) throw EmptyGroundTruth("no ground-truth samples");

    std::map<std::int64_t, std::vector<detail::MotItem>> gt_frames;
    std::map<std::int64_t, std::vector<detail::MotItem>> hyp_frames;
    for (const TrackSample& s : gt) {
        gt_frames[detail::frame_key(s.timestamp)].push_back(
            {s.id, s.position, s.box});
    }
    for (const TrackSample& s : hyp) {
        hyp_frames[detail::frame_key(s.timestamp)].push_back(
            {s.id, s.position, s.box});
    }

    std::set<std::int64_t> frames;  // ordered union of frame keys
    for (const auto& entry : gt_frames) frames.insert(entry.first);
    for (const auto& entry : hyp_frames) frames.insert(entry.first);

    MotReport report;
    report.gt_total = static_cast<int>(gt.size());
    double matched_cost_sum = 0.0;  // distance or IoU, depending on mode

    std::map<int, int> correspondence;      // gt id -> hyp id, from last frame
    std::map<int, int> last_matched_hyp;    // gt id -> most recent hyp id
    std::map<int, int> gt_frames_total;     // gt id -> lifetime frames
    std::map<int, int> gt_frames_matched;   // gt id -> matched frames
    std::map<int, int> gt_segments;         // gt id -> continuous same-id runs
    // gt id -> (was matched in its previous frame, hyp id then)
    std::map<int, std::pair<bool, int>> prev_state;

    for (const std::int64_t key : frames) {
        const auto git = gt_frames.find(key);
        const auto hit = hyp_frames.find(key);
        const std::vector<detail::MotItem> empty;
        const auto& gts = git != gt_frames.end() ? git->second : empty;
        const auto& hyps = hit != hyp_frames.end() ? hit->second : empty;

        std::vector<bool> gt_done(gts.size(), false);
        std::vector<bool> hyp_done(hyps.size(), false);
        std::vector<std::tuple<int, int, double>> matches;  // gt idx, hyp idx

        // Keep still-valid correspondences from the previous frame.
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            const auto corr = correspondence.find(gts[gi].id);
            if (corr == correspondence.end()) continue;
            for (std::size_t hi = 0; hi < hyps.size(); ++hi) {
                if (hyp_done[hi] || hyps[hi].id != corr->second) continue;
                const auto cost =
                    detail::match_cost(gts[gi], hyps[hi], match_threshold, mode);
                if (cost) {
                    gt_done[gi] = true;
                    hyp_done[hi] = true;
                    matches.emplace_back(static_cast<int>(gi),
                                         static_cast<int>(hi), *cost);
                }
                break;
            }
        }

        // Greedy matching of the remainder by ascending cost; ties resolve
        // by list order, which is independent of hypothesis labels.
        std::vector<std::tuple<double, int, int>> candidates;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            if (gt_done[gi]) continue;
            for (std::size_t hi = 0; hi < hyps.size(); ++hi) {
                if (hyp_done[hi]) continue;
                const auto cost =
                    detail::match_cost(gts[gi], hyps[hi], match_threshold, mode);
                if (cost) {
                    candidates.emplace_back(*cost, static_cast<int>(gi),
                                            static_cast<int>(hi));
                }
            }
        }
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const auto& a, const auto& b) {
                             return std::get<0>(a) < std::get<0>(b);
                         });
        for (const auto& [cost, gi, hi] : candidates) {
            if (gt_done[gi] || hyp_done[hi]) continue;
            gt_done[gi] = true;
            hyp_done[hi] = true;
            matches.emplace_back(gi, hi, cost);
        }

        correspondence.clear();
        std::vector<bool> gt_matched(gts.size(), false);
        for (const auto& [gi, hi, cost] : matches) {
            const int gt_id = gts[gi].id;
            const int hyp_id = hyps[hi].id;
            gt_matched[gi] = true;
            ++report.matches;
            matched_cost_sum +=
                mode == MatchMode::center3d ? cost : 1.0 - cost;
            const auto last = last_matched_hyp.find(gt_id);
            if (last != last_matched_hyp.end() && last->second != hyp_id) {
                ++report.ids;
            }
            last_matched_hyp[gt_id] = hyp_id;
            correspondence[gt_id] = hyp_id;
            ++gt_frames_matched[gt_id];
        }

        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            const int gt_id = gts[gi].id;
            ++gt_frames_total[gt_id];
            if (!gt_matched[gi]) ++report.false_negatives;
            // Segment bookkeeping: a new continuous same-hypothesis run
            // starts when matched after a miss or under a new hypothesis id.
            const auto prev = prev_state.find(gt_id);
            if (gt_matched[gi]) {
                const int hyp_id = correspondence[gt_id];
                const bool continues = prev != prev_state.end() &&
                                       prev->second.first &&
                                       prev->second.second == hyp_id;
                if (!continues) ++gt_segments[gt_id];
                prev_state[gt_id] = {true, hyp_id};
            } else {
                prev_state[gt_id] = {false, 0};
            }
        }
        report.false_positives += static_cast<int>(
            std::count(hyp_done.begin(), hyp_done.end(), false));
    }

    for (const auto& [gt_id, segments] : gt_segments) {
        report.frag += std::max(0, segments - 1);
    }

    int mt = 0;
    int ml = 0;
    for (const auto& [gt_id, total] : gt_frames_total) {
        const double coverage =
            static_cast<double>(gt_frames_matched[gt_id]) / total;
        if (coverage >= 0.8) ++mt;
        if (coverage <= 0.2) ++ml;
    }
    const double n_traj = static_cast<double>(gt_frames_total.size());
    report.mt_percent = 100.0 * mt / n_traj;
    report.ml_percent = 100.0 * ml / n_traj;

    report.mota = 1.0 - static_cast<double>(report.false_negatives +
                                            report.false_positives + report.ids) /
                            report.gt_total;
    report.motp = report.matches > 0 ? matched_cost_sum / report.matches : 0.0;
    const int tp = report.matches;
    report.precision =
        tp + report.false_positives > 0
            ? static_cast<double>(tp) / (tp + report.false_positives)
            : 0.0;
    report.recall = static_cast<double>(tp) / report.gt_total;
    return report;
}

struct RmseReport {
    double position_rmse = 0.0;  // meters, 3D
    double velocity_rmse = 0.0;  // m/s, planar (x, y) vector error
    int sample_count = 0;
};

enum class Interpolation { linear, nearest };

namespace detail {

struct InterpolatedSample {
    Vec3 position;
    Vec2 velocity;
};

// Samples must be sorted by time; t must lie within [front, back].
inline InterpolatedSample interpolate(const TrackSet& samples, double t,
                                      Interpolation mode) {
    auto it = std::lower_bound(
        samples.begin(), samples.end(), t,
        [](const TrackSample& s, double value) { return s.timestamp < value; });
    if (it == samples.begin()) return {it->position, it->velocity};
    if (it == samples.end()) return {samples.back().position, samples.back().velocity};
    const TrackSample& hi = *it;
    const TrackSample& lo = *(it - 1);
    if (mode == Interpolation::nearest) {
        const TrackSample& pick =
            (t - lo.timestamp) <= (hi.timestamp - t) ? lo : hi;
        return {pick.position, pick.velocity};
    }
    const double span = hi.timestamp - lo.timestamp;
    const double a = span > 0.0 ? (t - lo.timestamp) / span : 0.0;
    return {(1.0 - a) * lo.position + a * hi.position,
            (1.0 - a) * lo.velocity + a * hi.velocity};
}

}  // namespace detail

// RMSE of a single estimated trajectory against a single ground-truth
// trajectory, evaluated at the ground-truth timestamps with the estimate
// interpolated to each. Ground-truth timestamps outside the estimate's time
// span are skipped; if none remain, throws NoOverlap. Position error is the
// 3D distance, velocity error the planar (x, y) vector difference.
inline RmseReport rmse(const TrackSet& gt, const TrackSet& est,
                       Interpolation interpolation = Interpolation::linear) {
    if (gt.empty()) throw EmptyGroundTruth("no ground-truth samples");
    TrackSet est_sorted = est;
    std::sort(est_sorted.begin(), est_sorted.end(),
              [](const TrackSample& a, const TrackSample& b) {
                  return a.timestamp < b.timestamp;
              });
    if (est_sorted.empty()) throw NoOverlap("estimate track is empty");

    double pos_sq = 0.0;
    double vel_sq = 0.0;
    int count = 0;
    for (const TrackSample& g : gt) {
        if (g.timestamp < est_sorted.front().timestamp ||
            g.timestamp > est_sorted.back().timestamp) {
            continue;
        }
        const auto e = detail::interpolate(est_sorted, g.timestamp, interpolation);
        pos_sq += (e.position - g.position).squaredNorm();
        vel_sq += (e.velocity - g.velocity).squaredNorm();
        ++count;
    }
    if (count == 0) throw NoOverlap("no overlapping timestamps");
    return {std::sqrt(pos_sq / count), std::sqrt(vel_sq / count), count};
}

struct DistanceBucket {
    double lo = 0.0;
    double hi = 0.0;
    RmseReport report;
};

// Splits ground-truth samples into range buckets (distance of the sample
// from the map origin, i.e. a stationary ego sensor) and reports RMSE per
// populated bucket. Empty buckets are omitted.
inline std::vector<DistanceBucket> bucket_by_distance(
    const TrackSet& gt, const TrackSet& est, const std::vector<double>& edges,
    Interpolation interpolation = Interpolation::linear) {
    std::vector<DistanceBucket> out;
    if (edges.size() < 2) return out;
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        TrackSet bucket_gt;
        for (const TrackSample& g : gt) {
            const double range = g.position.norm();
            if (range >= edges[b] && range < edges[b + 1]) {
                bucket_gt.push_back(g);
            }
        }
        if (bucket_gt.empty()) continue;
        try {
            out.push_back(
                {edges[b], edges[b + 1], rmse(bucket_gt, est, interpolation)});
        } catch (const NoOverlap&) {
            // bucket has no overlapping estimate samples: omitted
        }
    }
    return out;
}

// Ground-truth velocity from positions: central finite difference smoothed
// with a 5-tap moving average. Endpoints use one-sided differences. Samples
// must belong to a single trajectory sorted by time.
inline TrackSet derive_velocities(TrackSet track, int taps = 5) {
    const int n = static_cast<int>(track.size());
    if (n < 2) return track;
    std::vector<Vec2> raw(n);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - 1);
        const int hi = std::min(n - 1, i + 1);
        const double span = track[hi].timestamp - track[lo].timestamp;
        raw[i] = span > 0.0
                     ? Vec2((track[hi].position.x() - track[lo].position.x()) / span,
                            (track[hi].position.y() - track[lo].position.y()) / span)
                     : Vec2::Zero();
    }
    const int half = taps / 2;
    for (int i = 0; i < n; ++i) {
        Vec2 acc = Vec2::Zero();
        int cnt = 0;
        for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) {
            acc += raw[j];
            ++cnt;
        }
        track[i].velocity = acc / cnt;
    }
    return track;
}

}  // namespace tracklite

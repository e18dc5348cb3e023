#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "tracklite/common.hpp"
#include "tracklite/geometry.hpp"

namespace tracklite {

// LIDAR cloud in the sensor (LIDAR) frame: x forward, y left, z up.
struct PointCloud {
    std::vector<Vec3> points;
    double timestamp = 0.0;  // seconds, UTC
};

struct BoundingBox2D {
    double u_min = 0.0;
    double v_min = 0.0;
    double u_max = 0.0;
    double v_max = 0.0;
    ObjectClass cls = ObjectClass::car;
    double confidence = 0.0;

    bool is_valid() const {
        return u_min < u_max && v_min < v_max && confidence >= 0.0 &&
               confidence <= 1.0;
    }
};

struct Cluster {
    std::vector<int> point_indices;  // indices into the clustered point list
    Vec3 centroid = Vec3::Zero();    // arithmetic mean of member points
    double extent = 0.0;             // longest axis-aligned dimension (m)
};

// Fused 3D measurement for one 2D detection: the centroid of the selected
// LIDAR cluster plus the image-plane box size.
struct Detection3D {
    Vec3 centroid = Vec3::Zero();  // meters, sensor (camera) frame
    ObjectClass cls = ObjectClass::car;
    double confidence = 0.0;
    double box_w = 0.0;  // pixels
    double box_h = 0.0;  // pixels
};

struct RoiConfig {
    double max_forward = 40.0;  // meters ahead of the sensor
    double max_lateral = 15.0;  // meters to each side
};

struct GroundConfig {
    int max_iterations = 200;
    double inlier_threshold = 0.2;      // meters
    double min_inlier_fraction = 0.3;   // of the input cloud
    double max_normal_tilt_deg = 30.0;  // plane normal w.r.t. vertical
    std::uint64_t seed = 7;
};

struct SelectConfig {
    double alpha = 0.25;                // extent-mismatch weight (per meter)
    double max_extent_ratio = 2.0;      // hard reject beyond ratio * expected
    double max_range_disagreement = 0.5;  // vs box-height-implied range
    // Longest expected dimension per class (m), indexed by ObjectClass.
    double expected_extent[3] = {4.5, 0.8, 1.8};
    // Expected physical height per class (m), used to imply range from the
    // box height in pixels.
    double expected_height[3] = {1.5, 1.7, 1.7};

    double extent_for(ObjectClass c) const {
        return expected_extent[static_cast<int>(c)];
    }
    double height_for(ObjectClass c) const {
        return expected_height[static_cast<int>(c)];
    }
};

struct FuseConfig {
    RoiConfig roi;
    GroundConfig ground;
    double cluster_tolerance = 0.5;  // meters
    int cluster_min_points = 5;
    SelectConfig select;
};

// Keeps points with 0 < x <= max_forward and |y| <= max_lateral.
inline PointCloud crop_roi(const PointCloud& cloud, const RoiConfig& cfg) {
    PointCloud out;
    out.timestamp = cloud.timestamp;
    out.points.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) {
        if (p.x() > 0.0 && p.x() <= cfg.max_forward &&
            std::abs(p.y()) <= cfg.max_lateral) {
            out.points.push_back(p);
        }
    }
    return out;
}

// RANSAC plane extraction restricted to near-vertical normals. If no plane
// reaches min_inlier_fraction support the cloud is returned unchanged.
inline PointCloud remove_ground(const PointCloud& cloud, const GroundConfig& cfg) {
    const std::size_t n = cloud.points.size();
    if (n < 3) return cloud;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const double cos_tilt =
        std::cos(cfg.max_normal_tilt_deg * M_PI / 180.0);

    Vec3 best_normal = Vec3::UnitZ();
    double best_offset = 0.0;
    std::size_t best_count = 0;

    for (int it = 0; it < cfg.max_iterations; ++it) {
        const Vec3& a = cloud.points[pick(rng)];
        const Vec3& b = cloud.points[pick(rng)];
        const Vec3& c = cloud.points[pick(rng)];
        Vec3 normal = (b - a).cross(c - a);
        const double norm = normal.norm();
        if (norm < 1e-12) continue;  // degenerate sample
        normal /= norm;
        if (std::abs(normal.z()) < cos_tilt) continue;  // not ground-like
        const double offset = -normal.dot(a);

        std::size_t count = 0;
        for (const Vec3& p : cloud.points) {
            if (std::abs(normal.dot(p) + offset) <= cfg.inlier_threshold) ++count;
        }
        if (count > best_count) {
            best_count = count;
            best_normal = normal;
            best_offset = offset;
        }
    }

    if (static_cast<double>(best_count) <
        cfg.min_inlier_fraction * static_cast<double>(n)) {
        return cloud;
    }

    PointCloud out;
    out.timestamp = cloud.timestamp;
    out.points.reserve(n - best_count);
    for (const Vec3& p : cloud.points) {
        if (std::abs(best_normal.dot(p) + best_offset) > cfg.inlier_threshold) {
            out.points.push_back(p);
        }
    }
    return out;
}

// Camera-frame points whose projection lands inside the box. Points at or
// behind the camera are excluded.
inline std::vector<Vec3> gather_frustum(const PointCloud& cloud,
                                        const BoundingBox2D& box,
                                        const CameraIntrinsics& k,
                                        const RigidTransform& cam_from_lidar) {
    std::vector<Vec3> out;
    for (const Vec3& p : cloud.points) {
        const Vec3 pc = transform_point(cam_from_lidar, p);
        const auto px = project(pc, k);
        if (!px) continue;
        if (px->u >= box.u_min && px->u <= box.u_max && px->v >= box.v_min &&
            px->v <= box.v_max) {
            out.push_back(pc);
        }
    }
    return out;
}

namespace detail {

class UnionFind {
public:
    explicit UnionFind(int n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<int> parent_;
};

inline std::uint64_t voxel_key(const Vec3& p, double cell) {
    // 21 bits per axis, offset to stay non-negative.
    const auto q = [cell](double v) {
        return static_cast<std::uint64_t>(
            static_cast<std::int64_t>(std::floor(v / cell)) + (1 << 20));
    };
    return (q(p.x()) << 42) | (q(p.y()) << 21) | q(p.z());
}

inline Cluster make_cluster(const std::vector<Vec3>& points,
                            std::vector<int> indices) {
    Cluster c;
    c.point_indices = std::move(indices);
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    Vec3 sum = Vec3::Zero();
    for (int i : c.point_indices) {
        const Vec3& p = points[i];
        sum += p;
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    c.centroid = sum / static_cast<double>(c.point_indices.size());
    c.extent = (hi - lo).maxCoeff();
    return c;
}

}  // namespace detail

// Single-linkage Euclidean clustering: two points share a cluster iff they
// are connected by a chain of hops each <= tolerance. Neighbor search uses a
// voxel hash with cell size = tolerance, so only the 27 surrounding cells
// need checking. Clusters smaller than min_points are discarded; the result
// is sorted by descending size (ties: smallest member index first).
inline std::vector<Cluster> euclidean_cluster(const std::vector<Vec3>& points,
                                              double tolerance, int min_points) {
    std::vector<Cluster> clusters;
    const int n = static_cast<int>(points.size());
    if (n == 0 || !(tolerance > 0.0)) return clusters;

    std::unordered_map<std::uint64_t, std::vector<int>> grid;
    grid.reserve(static_cast<std::size_t>(n) * 2);
    for (int i = 0; i < n; ++i) {
        grid[detail::voxel_key(points[i], tolerance)].push_back(i);
    }

    detail::UnionFind uf(n);
    const double tol2 = tolerance * tolerance;
    for (int i = 0; i < n; ++i) {
        const Vec3& p = points[i];
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dz = -1; dz <= 1; ++dz) {
                    const Vec3 probe = p + tolerance * Vec3(dx, dy, dz);
                    auto it = grid.find(detail::voxel_key(probe, tolerance));
                    if (it == grid.end()) continue;
                    for (int j : it->second) {
                        if (j >= i) continue;
                        if ((points[j] - p).squaredNorm() <= tol2) uf.unite(i, j);
                    }
                }
            }
        }
    }

    std::unordered_map<int, std::vector<int>> groups;
    for (int i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);
    for (auto& [root, members] : groups) {
        if (static_cast<int>(members.size()) < min_points) continue;
        clusters.push_back(detail::make_cluster(points, std::move(members)));
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& a, const Cluster& b) {
                  if (a.point_indices.size() != b.point_indices.size())
                      return a.point_indices.size() > b.point_indices.size();
                  return a.point_indices.front() < b.point_indices.front();
              });
    return clusters;
}

// Scores candidate clusters by normalized point count minus an extent
// mismatch penalty. Hard rejections: extent beyond max_extent_ratio times
// the class expectation, or (when implied_range is given) centroid range
// disagreeing with the box-height-implied range by more than
// max_range_disagreement. Ties go to the closer cluster.
inline std::optional<Cluster> select_best_cluster(
    const std::vector<Cluster>& clusters, ObjectClass cls,
    const SelectConfig& cfg,
    std::optional<double> implied_range = std::nullopt) {
    if (clusters.empty()) return std::nullopt;

    std::size_t max_count = 0;
    for (const Cluster& c : clusters)
        max_count = std::max(max_count, c.point_indices.size());

    const double expected = cfg.extent_for(cls);
    std::optional<Cluster> best;
    double best_score = 0.0;
    double best_range = 0.0;
    for (const Cluster& c : clusters) {
        if (c.extent > cfg.max_extent_ratio * expected) continue;
        const double range = c.centroid.norm();
        if (implied_range && *implied_range > 0.0 &&
            std::abs(range - *implied_range) >
                cfg.max_range_disagreement * *implied_range) {
            continue;
        }
        const double score =
            static_cast<double>(c.point_indices.size()) /
                static_cast<double>(max_count) -
            cfg.alpha * std::abs(c.extent - expected);
        if (!best || score > best_score ||
            (score == best_score && range < best_range)) {
            best = c;
            best_score = score;
            best_range = range;
        }
    }
    return best;
}

// End-to-end detection fusion: ROI crop, ground removal, projection into the
// image, per-box frustum clustering and cluster selection. Emits one
// Detection3D (camera-frame centroid) per box with a surviving cluster.
inline std::vector<Detection3D> fuse(const PointCloud& cloud,
                                     const std::vector<BoundingBox2D>& boxes,
                                     const CameraIntrinsics& k,
                                     const RigidTransform& cam_from_lidar,
                                     const FuseConfig& cfg) {
    const PointCloud cropped = crop_roi(cloud, cfg.roi);
    const PointCloud objects = remove_ground(cropped, cfg.ground);

    // Transform and project once; boxes reuse the shared image-plane table.
    std::vector<Vec3> cam_points;
    std::vector<Pixel> pixels;
    cam_points.reserve(objects.points.size());
    pixels.reserve(objects.points.size());
    for (const Vec3& p : objects.points) {
        const Vec3 pc = transform_point(cam_from_lidar, p);
        const auto px = project(pc, k);
        if (!px) continue;
        cam_points.push_back(pc);
        pixels.push_back(*px);
    }

    std::vector<Detection3D> detections;
    std::vector<Vec3> frustum;
    for (const BoundingBox2D& box : boxes) {
        frustum.clear();
        for (std::size_t i = 0; i < cam_points.size(); ++i) {
            if (pixels[i].u >= box.u_min && pixels[i].u <= box.u_max &&
                pixels[i].v >= box.v_min && pixels[i].v <= box.v_max) {
                frustum.push_back(cam_points[i]);
            }
        }
        const auto clusters = euclidean_cluster(frustum, cfg.cluster_tolerance,
                                                cfg.cluster_min_points);
        const double box_h = box.v_max - box.v_min;
        const double implied_range =
            k.fy * cfg.select.height_for(box.cls) / box_h;
        const auto best =
            select_best_cluster(clusters, box.cls, cfg.select, implied_range);
        if (!best) continue;
        detections.push_back({best->centroid, box.cls, box.confidence,
                              box.u_max - box.u_min, box_h});
    }
    return detections;
}

}  // namespace tracklite

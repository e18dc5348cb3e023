#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tracklite/common.hpp"
#include "tracklite/metrics.hpp"
#include "tracklite/scenario_sim.hpp"
#include "tracklite/tracker.hpp"

namespace tracklite {

namespace io_detail {

// Shortest decimal representation that parses back to the exact same
// double. Keeps text files diffable while making write/load a true
// round-trip.
inline std::string format_double(double v) {
    char buf[64];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline double parse_double(const std::string& field, const std::string& context) {
    if (field.empty()) throw ParseError(context + ": empty numeric field");
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size()) {
        throw ParseError(context + ": malformed number '" + field + "'");
    }
    if (!std::isfinite(v)) {
        throw ParseError(context + ": non-finite number '" + field + "'");
    }
    return v;
}

inline long parse_int(const std::string& field, const std::string& context) {
    if (field.empty()) throw ParseError(context + ": empty integer field");
    char* end = nullptr;
    const long v = std::strtol(field.c_str(), &end, 10);
    if (end != field.c_str() + field.size()) {
        throw ParseError(context + ": malformed integer '" + field + "'");
    }
    return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);  // binary: stable line endings
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open: " + path.string());
    return in;
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Detections (fused measurements), one CSV per frame.
// Columns: class,confidence,x,y,z,box_w,box_h  (sensor-frame meters, pixels)
// ---------------------------------------------------------------------------

inline void write_detections(const std::filesystem::path& path,
                             const std::vector<Detection3D>& detections) {
    using io_detail::format_double;
    auto out = io_detail::open_out(path);
    out << "class,confidence,x,y,z,box_w,box_h\n";
    for (const Detection3D& d : detections) {
        out << to_string(d.cls) << ',' << format_double(d.confidence) << ','
            << format_double(d.centroid.x()) << ','
            << format_double(d.centroid.y()) << ','
            << format_double(d.centroid.z()) << ',' << format_double(d.box_w)
            << ',' << format_double(d.box_h) << '\n';
    }
}

inline std::vector<Detection3D> read_detections(
    const std::filesystem::path& path) {
    auto in = io_detail::open_in(path);
    std::vector<Detection3D> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = io_detail::trim(line);
        if (line.empty() || line_no == 1) continue;  // header
        const std::string ctx = path.string() + ":" + std::to_string(line_no);
        const auto f = io_detail::split(line, ',');
        if (f.size() != 7) throw ParseError(ctx + ": expected 7 fields");
        Detection3D d;
        d.cls = object_class_from_string(f[0]);
        d.confidence = io_detail::parse_double(f[1], ctx);
        d.centroid = {io_detail::parse_double(f[2], ctx),
                      io_detail::parse_double(f[3], ctx),
                      io_detail::parse_double(f[4], ctx)};
        d.box_w = io_detail::parse_double(f[5], ctx);
        d.box_h = io_detail::parse_double(f[6], ctx);
        out.push_back(d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// 2D boxes (raw mode), one CSV per frame.
// Columns: class,confidence,u_min,v_min,u_max,v_max
// ---------------------------------------------------------------------------

inline void write_boxes(const std::filesystem::path& path,
                        const std::vector<BoundingBox2D>& boxes) {
    using io_detail::format_double;
    auto out = io_detail::open_out(path);
    out << "class,confidence,u_min,v_min,u_max,v_max\n";
    for (const BoundingBox2D& b : boxes) {
        out << to_string(b.cls) << ',' << format_double(b.confidence) << ','
            << format_double(b.u_min) << ',' << format_double(b.v_min) << ','
            << format_double(b.u_max) << ',' << format_double(b.v_max) << '\n';
    }
}

inline std::vector<BoundingBox2D> read_boxes(const std::filesystem::path& path) {
    auto in = io_detail::open_in(path);
    std::vector<BoundingBox2D> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = io_detail::trim(line);
        if (line.empty() || line_no == 1) continue;
        const std::string ctx = path.string() + ":" + std::to_string(line_no);
        const auto f = io_detail::split(line, ',');
        if (f.size() != 6) throw ParseError(ctx + ": expected 6 fields");
        BoundingBox2D b;
        b.cls = object_class_from_string(f[0]);
        b.confidence = io_detail::parse_double(f[1], ctx);
        b.u_min = io_detail::parse_double(f[2], ctx);
        b.v_min = io_detail::parse_double(f[3], ctx);
        b.u_max = io_detail::parse_double(f[4], ctx);
        b.v_max = io_detail::parse_double(f[5], ctx);
        if (!b.is_valid()) throw ParseError(ctx + ": degenerate box");
        out.push_back(b);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Point clouds: "TLPC" magic, uint32 count, then count * 3 float32 (x,y,z),
// little-endian.
// ---------------------------------------------------------------------------

inline void write_point_cloud(const std::filesystem::path& path,
                              const PointCloud& cloud) {
    auto out = io_detail::open_out(path);
    out.write("TLPC", 4);
    const std::uint32_t count = static_cast<std::uint32_t>(cloud.points.size());
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const Vec3& p : cloud.points) {
        const float xyz[3] = {static_cast<float>(p.x()),
                              static_cast<float>(p.y()),
                              static_cast<float>(p.z())};
        out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
}

inline PointCloud read_point_cloud(const std::filesystem::path& path) {
    auto in = io_detail::open_in(path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TLPC", 4) != 0) {
        throw ParseError(path.string() + ": not a TLPC point cloud");
    }
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    PointCloud cloud;
    cloud.points.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        float xyz[3];
        in.read(reinterpret_cast<char*>(xyz), sizeof(xyz));
        if (!in) throw ParseError(path.string() + ": truncated point data");
        if (!std::isfinite(xyz[0]) || !std::isfinite(xyz[1]) ||
            !std::isfinite(xyz[2])) {
            throw ParseError(path.string() + ": non-finite point");
        }
        cloud.points.emplace_back(xyz[0], xyz[1], xyz[2]);
    }
    return cloud;
}

// ---------------------------------------------------------------------------
// Ego pose log. Columns: timestamp,tx,ty,tz,qw,qx,qy,qz describing
// map_from_sensor (the sensor pose in the map frame).
// ---------------------------------------------------------------------------

inline void write_pose_log(const std::filesystem::path& path,
                           const std::vector<TimedPose>& poses) {
    using io_detail::format_double;
    auto out = io_detail::open_out(path);
    out << "timestamp,tx,ty,tz,qw,qx,qy,qz\n";
    for (const TimedPose& p : poses) {
        const Eigen::Quaterniond q(p.map_from_sensor.rotation);
        const Vec3& t = p.map_from_sensor.translation;
        out << format_double(p.timestamp) << ',' << format_double(t.x()) << ','
            << format_double(t.y()) << ',' << format_double(t.z()) << ','
            << format_double(q.w()) << ',' << format_double(q.x()) << ','
            << format_double(q.y()) << ',' << format_double(q.z()) << '\n';
    }
}

inline std::vector<TimedPose> read_pose_log(const std::filesystem::path& path) {
    auto in = io_detail::open_in(path);
    std::vector<TimedPose> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = io_detail::trim(line);
        if (line.empty() || line_no == 1) continue;
        const std::string ctx = path.string() + ":" + std::to_string(line_no);
        const auto f = io_detail::split(line, ',');
        if (f.size() != 8) throw ParseError(ctx + ": expected 8 fields");
        TimedPose p;
        p.timestamp = io_detail::parse_double(f[0], ctx);
        const Vec3 t(io_detail::parse_double(f[1], ctx),
                     io_detail::parse_double(f[2], ctx),
                     io_detail::parse_double(f[3], ctx));
        p.map_from_sensor = from_quaternion(io_detail::parse_double(f[4], ctx),
                                            io_detail::parse_double(f[5], ctx),
                                            io_detail::parse_double(f[6], ctx),
                                            io_detail::parse_double(f[7], ctx), t);
        out.push_back(p);
    }
    return out;
}

// Nearest-neighbor pose lookup; poses further than max_staleness from the
// query time are an error rather than a silent extrapolation.
inline RigidTransform pose_at(const std::vector<TimedPose>& poses, double t,
                              double max_staleness = 0.2) {
    if (poses.empty()) throw ValidationError("empty pose log");
    const TimedPose* best = &poses.front();
    double best_dt = std::abs(best->timestamp - t);
    for (const TimedPose& p : poses) {
        const double dt = std::abs(p.timestamp - t);
        if (dt < best_dt) {
            best = &p;
            best_dt = dt;
        }
    }
    if (best_dt > max_staleness) {
        throw ValidationError("no ego pose within " +
                              io_detail::format_double(max_staleness) +
                              " s of t=" + io_detail::format_double(t));
    }
    return best->map_from_sensor;
}

// ---------------------------------------------------------------------------
// Track sets (ground truth and tracking output).
// Columns: timestamp,id,class,x,y,z,vx,vy,u_min,v_min,u_max,v_max
// Box columns stay empty for samples without an image box.
// ---------------------------------------------------------------------------

inline void write_track_set(const std::filesystem::path& path,
                            const TrackSet& set) {
    using io_detail::format_double;
    auto out = io_detail::open_out(path);
    out << "timestamp,id,class,x,y,z,vx,vy,u_min,v_min,u_max,v_max\n";
    for (const TrackSample& s : set) {
        out << format_double(s.timestamp) << ',' << s.id << ','
            << to_string(s.cls) << ',' << format_double(s.position.x()) << ','
            << format_double(s.position.y()) << ','
            << format_double(s.position.z()) << ','
            << format_double(s.velocity.x()) << ','
            << format_double(s.velocity.y()) << ',';
        if (s.box) {
            out << format_double(s.box->u_min) << ','
                << format_double(s.box->v_min) << ','
                << format_double(s.box->u_max) << ','
                << format_double(s.box->v_max);
        } else {
            out << ",,,";
        }
        out << '\n';
    }
}

inline TrackSet read_track_set(const std::filesystem::path& path) {
    auto in = io_detail::open_in(path);
    TrackSet out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = io_detail::trim(line);
        if (line.empty() || line_no == 1) continue;
        const std::string ctx = path.string() + ":" + std::to_string(line_no);
        const auto f = io_detail::split(line, ',');
        if (f.size() != 12) throw ParseError(ctx + ": expected 12 fields");
        TrackSample s;
        s.timestamp = io_detail::parse_double(f[0], ctx);
        s.id = static_cast<int>(io_detail::parse_int(f[1], ctx));
        s.cls = object_class_from_string(f[2]);
        s.position = {io_detail::parse_double(f[3], ctx),
                      io_detail::parse_double(f[4], ctx),
                      io_detail::parse_double(f[5], ctx)};
        s.velocity = {io_detail::parse_double(f[6], ctx),
                      io_detail::parse_double(f[7], ctx)};
        const bool has_box = !f[8].empty() || !f[9].empty() ||
                             !f[10].empty() || !f[11].empty();
        if (has_box) {
            s.box = ImageBox{io_detail::parse_double(f[8], ctx),
                             io_detail::parse_double(f[9], ctx),
                             io_detail::parse_double(f[10], ctx),
                             io_detail::parse_double(f[11], ctx)};
        }
        out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// KITTI tracking results. One space-separated line per (frame, track):
// frame id type truncated occluded alpha x1 y1 x2 y2 h w l X Y Z ry score
// Unknown fields carry the dev-kit ignore sentinels (-1 for truncation,
// occlusion and dimensions, -10 for angles, -1000 for unknown locations).
// ---------------------------------------------------------------------------

struct KittiTrackRecord {
    int frame = 0;
    int track_id = 0;
    std::string type = "Car";
    double truncated = -1.0;
    int occluded = -1;
    double alpha = -10.0;
    double bbox_left = 0.0;
    double bbox_top = 0.0;
    double bbox_right = 0.0;
    double bbox_bottom = 0.0;
    double dim_height = -1.0;
    double dim_width = -1.0;
    double dim_length = -1.0;
    double loc_x = -1000.0;
    double loc_y = -1000.0;
    double loc_z = -1000.0;
    double rotation_y = -10.0;
    double score = 1.0;
};

inline void write_kitti_results(const std::vector<KittiTrackRecord>& records,
                                const std::filesystem::path& path) {
    using io_detail::format_double;
    auto out = io_detail::open_out(path);
    for (const KittiTrackRecord& r : records) {
        out << r.frame << ' ' << r.track_id << ' ' << r.type << ' '
            << format_double(r.truncated) << ' ' << r.occluded << ' '
            << format_double(r.alpha) << ' ' << format_double(r.bbox_left)
            << ' ' << format_double(r.bbox_top) << ' '
            << format_double(r.bbox_right) << ' '
            << format_double(r.bbox_bottom) << ' '
            << format_double(r.dim_height) << ' ' << format_double(r.dim_width)
            << ' ' << format_double(r.dim_length) << ' '
            << format_double(r.loc_x) << ' ' << format_double(r.loc_y) << ' '
            << format_double(r.loc_z) << ' ' << format_double(r.rotation_y)
            << ' ' << format_double(r.score) << '\n';
    }
}

// Accepts 17 (label) or 18 (result with score) whitespace-separated fields.
inline std::vector<KittiTrackRecord> read_kitti_results(
    const std::filesystem::path& path) {
    auto in = io_detail::open_in(path);
    std::vector<KittiTrackRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = io_detail::trim(line);
        if (line.empty()) continue;
        const std::string ctx = path.string() + ":" + std::to_string(line_no);
        std::stringstream ss(line);
        std::vector<std::string> f;
        std::string tok;
        while (ss >> tok) f.push_back(tok);
        if (f.size() != 17 && f.size() != 18) {
            throw ParseError(ctx + ": expected 17 or 18 fields, got " +
                             std::to_string(f.size()));
        }
        KittiTrackRecord r;
        r.frame = static_cast<int>(io_detail::parse_int(f[0], ctx));
        r.track_id = static_cast<int>(io_detail::parse_int(f[1], ctx));
        r.type = f[2];
        r.truncated = io_detail::parse_double(f[3], ctx);
        r.occluded = static_cast<int>(io_detail::parse_int(f[4], ctx));
        r.alpha = io_detail::parse_double(f[5], ctx);
        r.bbox_left = io_detail::parse_double(f[6], ctx);
        r.bbox_top = io_detail::parse_double(f[7], ctx);
        r.bbox_right = io_detail::parse_double(f[8], ctx);
        r.bbox_bottom = io_detail::parse_double(f[9], ctx);
        if (r.bbox_left >= r.bbox_right || r.bbox_top >= r.bbox_bottom) {
            throw ParseError(ctx + ": degenerate bbox");
        }
        r.dim_height = io_detail::parse_double(f[10], ctx);
        r.dim_width = io_detail::parse_double(f[11], ctx);
        r.dim_length = io_detail::parse_double(f[12], ctx);
        r.loc_x = io_detail::parse_double(f[13], ctx);
        r.loc_y = io_detail::parse_double(f[14], ctx);
        r.loc_z = io_detail::parse_double(f[15], ctx);
        r.rotation_y = io_detail::parse_double(f[16], ctx);
        if (f.size() == 18) r.score = io_detail::parse_double(f[17], ctx);
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sequence manifest: "key = value" preamble, then a [frames] CSV block with
// columns frame,timestamp,data,boxes. In fused mode `data` points at a
// detections CSV; in raw mode `data` is a TLPC point cloud and `boxes` a 2D
// box CSV. Paths are relative to the manifest location.
// ---------------------------------------------------------------------------

struct SequenceManifest {
    std::filesystem::path base_dir;
    std::string sequence_id;
    InputMode mode = InputMode::fused;
    std::filesystem::path pose_log;
    std::optional<CameraIntrinsics> intrinsics;
    std::optional<RigidTransform> cam_from_lidar;
    std::optional<ScenarioSpec> scenario;
    std::optional<NoiseSpec> noise;

    struct FrameRecord {
        int frame = 0;
        double timestamp = 0.0;
        std::filesystem::path data;
        std::filesystem::path boxes;  // raw mode only
    };
    std::vector<FrameRecord> frames;
};

namespace io_detail {

inline std::string transform_to_string(const RigidTransform& t) {
    std::string s;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            s += format_double(t.rotation(r, c)) + " ";
        }
        s += format_double(t.translation(r));
        if (r < 2) s += " ";
    }
    return s;
}

inline RigidTransform transform_from_string(const std::string& s,
                                            const std::string& ctx) {
    std::stringstream ss(s);
    std::vector<double> v;
    std::string tok;
    while (ss >> tok) v.push_back(parse_double(tok, ctx));
    if (v.size() != 12) throw ParseError(ctx + ": transform needs 12 numbers");
    RigidTransform t;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) t.rotation(r, c) = v[r * 4 + c];
        t.translation(r) = v[r * 4 + 3];
    }
    if (!t.is_valid(1e-6)) throw ParseError(ctx + ": rotation not orthonormal");
    return t;
}

}  // namespace io_detail

inline void write_manifest(const std::filesystem::path& path,
                           const SequenceManifest& m) {
    using io_detail::format_double;
    auto out = io_detail::open_out(path);
    out << "# tracklite sequence manifest\n";
    out << "sequence_id = " << m.sequence_id << '\n';
    out << "mode = " << (m.mode == InputMode::raw ? "raw" : "fused") << '\n';
    out << "pose_log = " << m.pose_log.generic_string() << '\n';
    if (m.intrinsics) {
        out << "fx = " << format_double(m.intrinsics->fx) << '\n';
        out << "fy = " << format_double(m.intrinsics->fy) << '\n';
        out << "cx = " << format_double(m.intrinsics->cx) << '\n';
        out << "cy = " << format_double(m.intrinsics->cy) << '\n';
        out << "image_width = " << m.intrinsics->width << '\n';
        out << "image_height = " << m.intrinsics->height << '\n';
    }
    if (m.cam_from_lidar) {
        out << "cam_from_lidar = "
            << io_detail::transform_to_string(*m.cam_from_lidar) << '\n';
    }
    if (m.scenario) {
        out << "scenario_kind = " << to_string(m.scenario->kind) << '\n';
        out << "scenario_target_distance = "
            << format_double(m.scenario->target_distance) << '\n';
        out << "scenario_pedestrian_speed = "
            << format_double(m.scenario->pedestrian_speed) << '\n';
        out << "scenario_ego_speed = " << format_double(m.scenario->ego_speed)
            << '\n';
        out << "scenario_duration = " << format_double(m.scenario->duration)
            << '\n';
        out << "scenario_rate = " << format_double(m.scenario->rate) << '\n';
        out << "scenario_seed = " << m.scenario->seed << '\n';
        out << "scenario_zigzag_leg_duration = "
            << format_double(m.scenario->zigzag_leg_duration) << '\n';
        out << "scenario_curve_depth = "
            << format_double(m.scenario->curve_depth) << '\n';
    }
    if (m.noise) {
        out << "noise_centroid_sigma = " << format_double(m.noise->centroid_sigma)
            << '\n';
        out << "noise_sigma_range_scale = "
            << format_double(m.noise->sigma_range_scale) << '\n';
        out << "noise_dropout_prob = " << format_double(m.noise->dropout_prob)
            << '\n';
        out << "noise_clutter_rate = " << format_double(m.noise->clutter_rate)
            << '\n';
        out << "noise_box_sigma = " << format_double(m.noise->box_sigma) << '\n';
    }
    out << "[frames]\n";
    out << "frame,timestamp,data,boxes\n";
    for (const auto& f : m.frames) {
        out << f.frame << ',' << format_double(f.timestamp) << ','
            << f.data.generic_string() << ',' << f.boxes.generic_string()
            << '\n';
    }
}

// Parses and validates a manifest: keys known, timestamps strictly
// increasing, referenced files present on disk.
inline SequenceManifest read_manifest(const std::filesystem::path& path) {
    auto in = io_detail::open_in(path);
    SequenceManifest m;
    m.base_dir = path.parent_path();

    std::string line;
    int line_no = 0;
    bool in_frames = false;
    bool saw_header = false;
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    int intrinsics_keys = 0;
    ScenarioSpec scenario;
    int scenario_keys = 0;
    NoiseSpec noise;
    int noise_keys = 0;
    double prev_ts = 0.0;

    while (std::getline(in, line)) {
        ++line_no;
        line = io_detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string ctx = path.string() + ":" + std::to_string(line_no);
        if (line == "[frames]") {
            in_frames = true;
            continue;
        }
        if (!in_frames) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ParseError(ctx + ": expected 'key = value'");
            }
            const std::string key = io_detail::trim(line.substr(0, eq));
            const std::string value = io_detail::trim(line.substr(eq + 1));
            if (key == "sequence_id") m.sequence_id = value;
            else if (key == "mode") {
                if (value == "fused") m.mode = InputMode::fused;
                else if (value == "raw") m.mode = InputMode::raw;
                else throw ParseError(ctx + ": mode must be fused|raw");
            } else if (key == "pose_log") m.pose_log = value;
            else if (key == "fx") { fx = io_detail::parse_double(value, ctx); ++intrinsics_keys; }
            else if (key == "fy") { fy = io_detail::parse_double(value, ctx); ++intrinsics_keys; }
            else if (key == "cx") { cx = io_detail::parse_double(value, ctx); ++intrinsics_keys; }
            else if (key == "cy") { cy = io_detail::parse_double(value, ctx); ++intrinsics_keys; }
            else if (key == "image_width") { width = static_cast<int>(io_detail::parse_int(value, ctx)); ++intrinsics_keys; }
            else if (key == "image_height") { height = static_cast<int>(io_detail::parse_int(value, ctx)); ++intrinsics_keys; }
            else if (key == "cam_from_lidar") {
                m.cam_from_lidar = io_detail::transform_from_string(value, ctx);
            } else if (key == "scenario_kind") { scenario.kind = scenario_kind_from_string(value); ++scenario_keys; }
            else if (key == "scenario_target_distance") { scenario.target_distance = io_detail::parse_double(value, ctx); ++scenario_keys; }
            else if (key == "scenario_pedestrian_speed") { scenario.pedestrian_speed = io_detail::parse_double(value, ctx); ++scenario_keys; }
            else if (key == "scenario_ego_speed") { scenario.ego_speed = io_detail::parse_double(value, ctx); ++scenario_keys; }
            else if (key == "scenario_duration") { scenario.duration = io_detail::parse_double(value, ctx); ++scenario_keys; }
            else if (key == "scenario_rate") { scenario.rate = io_detail::parse_double(value, ctx); ++scenario_keys; }
            else if (key == "scenario_seed") { scenario.seed = static_cast<std::uint64_t>(io_detail::parse_int(value, ctx)); ++scenario_keys; }
            else if (key == "scenario_zigzag_leg_duration") { scenario.zigzag_leg_duration = io_detail::parse_double(value, ctx); ++scenario_keys; }
            else if (key == "scenario_curve_depth") { scenario.curve_depth = io_detail::parse_double(value, ctx); ++scenario_keys; }
            else if (key == "noise_centroid_sigma") { noise.centroid_sigma = io_detail::parse_double(value, ctx); ++noise_keys; }
            else if (key == "noise_sigma_range_scale") { noise.sigma_range_scale = io_detail::parse_double(value, ctx); ++noise_keys; }
            else if (key == "noise_dropout_prob") { noise.dropout_prob = io_detail::parse_double(value, ctx); ++noise_keys; }
            else if (key == "noise_clutter_rate") { noise.clutter_rate = io_detail::parse_double(value, ctx); ++noise_keys; }
            else if (key == "noise_box_sigma") { noise.box_sigma = io_detail::parse_double(value, ctx); ++noise_keys; }
            else throw ParseError(ctx + ": unknown key '" + key + "'");
            continue;
        }
        // frames block
        if (!saw_header) {
            if (line != "frame,timestamp,data,boxes") {
                throw ParseError(ctx + ": bad frames header");
            }
            saw_header = true;
            continue;
        }
        const auto f = io_detail::split(line, ',');
        if (f.size() != 4) throw ParseError(ctx + ": expected 4 fields");
        SequenceManifest::FrameRecord rec;
        rec.frame = static_cast<int>(io_detail::parse_int(f[0], ctx));
        rec.timestamp = io_detail::parse_double(f[1], ctx);
        rec.data = f[2];
        rec.boxes = f[3];
        if (!m.frames.empty() && rec.timestamp <= prev_ts) {
            throw ParseError(ctx + ": timestamps must be strictly increasing");
        }
        prev_ts = rec.timestamp;
        m.frames.push_back(rec);
    }
    if (!in_frames) throw ParseError(path.string() + ": missing [frames] block");

    if (intrinsics_keys > 0) {
        if (intrinsics_keys != 6) {
            throw ParseError(path.string() +
                             ": intrinsics block requires fx, fy, cx, cy, "
                             "image_width, image_height");
        }
        const CameraIntrinsics k{fx, fy, cx, cy, width, height};
        if (!k.is_valid()) {
            throw ValidationError(path.string() + ": invalid intrinsics");
        }
        m.intrinsics = k;
    }
    if (scenario_keys > 0) m.scenario = scenario;
    if (noise_keys > 0) m.noise = noise;

    if (m.mode == InputMode::raw) {
        if (!m.intrinsics || !m.cam_from_lidar) {
            throw ValidationError(path.string() +
                                  ": raw mode requires intrinsics and "
                                  "cam_from_lidar");
        }
    }

    // Referenced files must exist at load time.
    if (m.pose_log.empty()) {
        throw ParseError(path.string() + ": pose_log is required");
    }
    const auto resolve = [&m](const std::filesystem::path& p) {
        return p.is_absolute() ? p : m.base_dir / p;
    };
    if (!std::filesystem::exists(resolve(m.pose_log))) {
        throw MissingFile("pose log not found: " + resolve(m.pose_log).string());
    }
    for (const auto& rec : m.frames) {
        if (!std::filesystem::exists(resolve(rec.data))) {
            throw MissingFile("frame data not found: " +
                              resolve(rec.data).string());
        }
        if (m.mode == InputMode::raw &&
            !std::filesystem::exists(resolve(rec.boxes))) {
            throw MissingFile("frame boxes not found: " +
                              resolve(rec.boxes).string());
        }
    }
    return m;
}

// Single-consumer stream over a sequence; frame files are read on demand in
// timestamp order.
class SequenceLoader {
public:
    explicit SequenceLoader(const std::filesystem::path& manifest_path)
        : manifest_(read_manifest(manifest_path)) {
        poses_ = read_pose_log(resolve(manifest_.pose_log));
    }

    const SequenceManifest& manifest() const { return manifest_; }

    std::optional<FrameInput> next() {
        if (cursor_ >= manifest_.frames.size()) return std::nullopt;
        const auto& rec = manifest_.frames[cursor_++];
        FrameInput frame;
        frame.timestamp = rec.timestamp;
        frame.sensor_from_map = invert(pose_at(poses_, rec.timestamp));
        if (manifest_.mode == InputMode::raw) {
            frame.raw = true;
            frame.cloud = read_point_cloud(resolve(rec.data));
            frame.cloud.timestamp = rec.timestamp;
            frame.boxes = read_boxes(resolve(rec.boxes));
            frame.intrinsics = manifest_.intrinsics;
            frame.cam_from_lidar = manifest_.cam_from_lidar;
        } else {
            frame.detections = read_detections(resolve(rec.data));
        }
        return frame;
    }

private:
    std::filesystem::path resolve(const std::filesystem::path& p) const {
        return p.is_absolute() ? p : manifest_.base_dir / p;
    }

    SequenceManifest manifest_;
    std::vector<TimedPose> poses_;
    std::size_t cursor_ = 0;
};

// Eager convenience wrapper around SequenceLoader.
inline std::vector<FrameInput> load_sequence(
    const std::filesystem::path& manifest_path) {
    SequenceLoader loader(manifest_path);
    std::vector<FrameInput> out;
    while (auto frame = loader.next()) out.push_back(std::move(*frame));
    return out;
}

// Converts one tracker output frame into KITTI records. The image box is
// centered on the projected track position using the tracked box size;
// objects projecting behind the camera are skipped. Locations are written
// in the sensor (camera) frame.
inline std::vector<KittiTrackRecord> kitti_records_from_output(
    const TrackerOutput& output, int frame,
    const RigidTransform& sensor_from_map, const CameraIntrinsics& k) {
    std::vector<KittiTrackRecord> out;
    for (const TrackedObject& obj : output.objects) {
        const Vec3 cam = transform_point(sensor_from_map, obj.position);
        const auto px = project(cam, k);
        if (!px) continue;
        KittiTrackRecord r;
        r.frame = frame;
        r.track_id = obj.id;
        switch (obj.cls) {
            case ObjectClass::car:        r.type = "Car"; break;
            case ObjectClass::pedestrian: r.type = "Pedestrian"; break;
            case ObjectClass::cyclist:    r.type = "Cyclist"; break;
        }
        r.bbox_left = px->u - obj.box_w / 2.0;
        r.bbox_right = px->u + obj.box_w / 2.0;
        r.bbox_top = px->v - obj.box_h / 2.0;
        r.bbox_bottom = px->v + obj.box_h / 2.0;
        r.loc_x = cam.x();
        r.loc_y = cam.y();
        r.loc_z = cam.z();
        r.score = obj.confidence;
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline configuration, TOML-style sections of "key = value" lines.
// load_config on a missing path returns the built-in defaults.
// ---------------------------------------------------------------------------

namespace io_detail {

struct ConfigSetter {
    PipelineConfig* cfg;
    std::string section;

    // Applies "key = value" inside the current section; unknown keys are a
    // ParseError so typos never pass silently.
    void apply(const std::string& key, const std::string& value,
               const std::string& ctx) const {
        const auto num = [&] { return parse_double(value, ctx); };
        const auto integer = [&] {
            return static_cast<int>(parse_int(value, ctx));
        };
        if (section == "tracker") {
            if (key == "mode") {
                if (value == "fused") cfg->mode = InputMode::fused;
                else if (value == "raw") cfg->mode = InputMode::raw;
                else throw ParseError(ctx + ": mode must be fused|raw");
            } else if (key == "promote_hits") cfg->promote_hits = integer();
            else if (key == "delete_misses") cfg->delete_misses = integer();
            else if (key == "confidence_alpha") cfg->confidence_alpha = num();
            else throw ParseError(ctx + ": unknown tracker key '" + key + "'");
        } else if (section == "filter") {
            if (key == "q_diag") {
                const auto vals = parse_numbers(value, ctx, 7);
                for (int i = 0; i < 7; ++i) cfg->noise.q_diag[i] = vals[i];
            } else if (key == "r_diag") {
                const auto vals = parse_numbers(value, ctx, 5);
                for (int i = 0; i < 5; ++i) cfg->noise.r_diag[i] = vals[i];
            } else if (key == "init_pos_var") cfg->noise.init_pos_var = num();
            else if (key == "init_vel_var") cfg->noise.init_vel_var = num();
            else if (key == "init_box_var") cfg->noise.init_box_var = num();
            else throw ParseError(ctx + ": unknown filter key '" + key + "'");
        } else if (section == "gates") {
            if (key == "ped_max_speed") cfg->gates.ped_max_speed = num();
            else if (key == "cyclist_max_speed") cfg->gates.cyclist_max_speed = num();
            else if (key == "car_max_speed") cfg->gates.car_max_speed = num();
            else if (key == "car_margin") cfg->gates.car_margin = num();
            else throw ParseError(ctx + ": unknown gates key '" + key + "'");
        } else if (section == "roi") {
            if (key == "max_forward") cfg->fuse.roi.max_forward = num();
            else if (key == "max_lateral") cfg->fuse.roi.max_lateral = num();
            else throw ParseError(ctx + ": unknown roi key '" + key + "'");
        } else if (section == "ground") {
            if (key == "max_iterations") cfg->fuse.ground.max_iterations = integer();
            else if (key == "inlier_threshold") cfg->fuse.ground.inlier_threshold = num();
            else if (key == "min_inlier_fraction") cfg->fuse.ground.min_inlier_fraction = num();
            else if (key == "max_normal_tilt_deg") cfg->fuse.ground.max_normal_tilt_deg = num();
            else if (key == "seed") cfg->fuse.ground.seed = static_cast<std::uint64_t>(parse_int(value, ctx));
            else throw ParseError(ctx + ": unknown ground key '" + key + "'");
        } else if (section == "cluster") {
            if (key == "tolerance") cfg->fuse.cluster_tolerance = num();
            else if (key == "min_points") cfg->fuse.cluster_min_points = integer();
            else throw ParseError(ctx + ": unknown cluster key '" + key + "'");
        } else if (section == "select") {
            if (key == "alpha") cfg->fuse.select.alpha = num();
            else if (key == "max_extent_ratio") cfg->fuse.select.max_extent_ratio = num();
            else if (key == "max_range_disagreement") cfg->fuse.select.max_range_disagreement = num();
            else if (key == "car_extent") cfg->fuse.select.expected_extent[0] = num();
            else if (key == "pedestrian_extent") cfg->fuse.select.expected_extent[1] = num();
            else if (key == "cyclist_extent") cfg->fuse.select.expected_extent[2] = num();
            else if (key == "car_height") cfg->fuse.select.expected_height[0] = num();
            else if (key == "pedestrian_height") cfg->fuse.select.expected_height[1] = num();
            else if (key == "cyclist_height") cfg->fuse.select.expected_height[2] = num();
            else throw ParseError(ctx + ": unknown select key '" + key + "'");
        } else {
            throw ParseError(ctx + ": unknown section [" + section + "]");
        }
    }

    static std::vector<double> parse_numbers(const std::string& value,
                                             const std::string& ctx, int n) {
        std::stringstream ss(value);
        std::vector<double> out;
        std::string tok;
        while (ss >> tok) out.push_back(parse_double(tok, ctx));
        if (static_cast<int>(out.size()) != n) {
            throw ParseError(ctx + ": expected " + std::to_string(n) +
                             " numbers");
        }
        return out;
    }
};

}  // namespace io_detail

inline void validate_config(const PipelineConfig& cfg) {
    for (double q : cfg.noise.q_diag) {
        if (q < 0.0) throw ValidationError("q_diag entries must be >= 0");
    }
    for (double r : cfg.noise.r_diag) {
        if (r < 0.0) throw ValidationError("r_diag entries must be >= 0");
    }
    if (cfg.noise.init_pos_var < 0.0 || cfg.noise.init_vel_var < 0.0 ||
        cfg.noise.init_box_var < 0.0) {
        throw ValidationError("initial variances must be >= 0");
    }
    if (cfg.gates.ped_max_speed <= 0.0 || cfg.gates.cyclist_max_speed <= 0.0 ||
        cfg.gates.car_max_speed <= 0.0 || cfg.gates.car_margin <= 0.0) {
        throw ValidationError("gate speeds and margin must be > 0");
    }
    if (cfg.promote_hits < 1) throw ValidationError("promote_hits must be >= 1");
    if (cfg.delete_misses < 1) throw ValidationError("delete_misses must be >= 1");
    if (cfg.confidence_alpha < 0.0 || cfg.confidence_alpha > 1.0) {
        throw ValidationError("confidence_alpha must lie in [0, 1]");
    }
    if (cfg.fuse.cluster_tolerance <= 0.0) {
        throw ValidationError("cluster tolerance must be > 0");
    }
    if (cfg.fuse.cluster_min_points < 1) {
        throw ValidationError("cluster min_points must be >= 1");
    }
    if (cfg.fuse.ground.min_inlier_fraction < 0.0 ||
        cfg.fuse.ground.min_inlier_fraction > 1.0) {
        throw ValidationError("min_inlier_fraction must lie in [0, 1]");
    }
}

inline PipelineConfig parse_config(std::istream& in, const std::string& name) {
    PipelineConfig cfg;
    io_detail::ConfigSetter setter{&cfg, ""};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = io_detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string ctx = name + ":" + std::to_string(line_no);
        if (line.front() == '[' && line.back() == ']') {
            setter.section = io_detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(ctx + ": expected 'key = value'");
        }
        if (setter.section.empty()) {
            throw ParseError(ctx + ": key outside any [section]");
        }
        setter.apply(io_detail::trim(line.substr(0, eq)),
                     io_detail::trim(line.substr(eq + 1)), ctx);
    }
    validate_config(cfg);
    return cfg;
}

// Missing files yield the built-in defaults (every default matches the
// shipped tuning); present files are parsed and validated.
inline PipelineConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        PipelineConfig cfg;
        validate_config(cfg);
        return cfg;
    }
    auto in = io_detail::open_in(path);
    return parse_config(in, path.string());
}

inline void save_config(const std::filesystem::path& path,
                        const PipelineConfig& cfg) {
    using io_detail::format_double;
    auto out = io_detail::open_out(path);
    out << "# tracklite pipeline configuration\n";
    out << "[tracker]\n";
    out << "mode = " << (cfg.mode == InputMode::raw ? "raw" : "fused") << '\n';
    out << "promote_hits = " << cfg.promote_hits << '\n';
    out << "delete_misses = " << cfg.delete_misses << '\n';
    out << "confidence_alpha = " << format_double(cfg.confidence_alpha) << '\n';
    out << "[filter]\n";
    out << "q_diag =";
    for (double q : cfg.noise.q_diag) out << ' ' << format_double(q);
    out << '\n';
    out << "r_diag =";
    for (double r : cfg.noise.r_diag) out << ' ' << format_double(r);
    out << '\n';
    out << "init_pos_var = " << format_double(cfg.noise.init_pos_var) << '\n';
    out << "init_vel_var = " << format_double(cfg.noise.init_vel_var) << '\n';
    out << "init_box_var = " << format_double(cfg.noise.init_box_var) << '\n';
    out << "[gates]\n";
    out << "ped_max_speed = " << format_double(cfg.gates.ped_max_speed) << '\n';
    out << "cyclist_max_speed = " << format_double(cfg.gates.cyclist_max_speed)
        << '\n';
    out << "car_max_speed = " << format_double(cfg.gates.car_max_speed) << '\n';
    out << "car_margin = " << format_double(cfg.gates.car_margin) << '\n';
    out << "[roi]\n";
    out << "max_forward = " << format_double(cfg.fuse.roi.max_forward) << '\n';
    out << "max_lateral = " << format_double(cfg.fuse.roi.max_lateral) << '\n';
    out << "[ground]\n";
    out << "max_iterations = " << cfg.fuse.ground.max_iterations << '\n';
    out << "inlier_threshold = "
        << format_double(cfg.fuse.ground.inlier_threshold) << '\n';
    out << "min_inlier_fraction = "
        << format_double(cfg.fuse.ground.min_inlier_fraction) << '\n';
    out << "max_normal_tilt_deg = "
        << format_double(cfg.fuse.ground.max_normal_tilt_deg) << '\n';
    out << "seed = " << cfg.fuse.ground.seed << '\n';
    out << "[cluster]\n";
    out << "tolerance = " << format_double(cfg.fuse.cluster_tolerance) << '\n';
    out << "min_points = " << cfg.fuse.cluster_min_points << '\n';
    out << "[select]\n";
    out << "alpha = " << format_double(cfg.fuse.select.alpha) << '\n';
    out << "max_extent_ratio = "
        << format_double(cfg.fuse.select.max_extent_ratio) << '\n';
    out << "max_range_disagreement = "
        << format_double(cfg.fuse.select.max_range_disagreement) << '\n';
    out << "car_extent = " << format_double(cfg.fuse.select.expected_extent[0])
        << '\n';
    out << "pedestrian_extent = "
        << format_double(cfg.fuse.select.expected_extent[1]) << '\n';
    out << "cyclist_extent = "
        << format_double(cfg.fuse.select.expected_extent[2]) << '\n';
    out << "car_height = " << format_double(cfg.fuse.select.expected_height[0])
        << '\n';
    out << "pedestrian_height = "
        << format_double(cfg.fuse.select.expected_height[1]) << '\n';
    out << "cyclist_height = "
        << format_double(cfg.fuse.select.expected_height[2]) << '\n';
}

// CLI-style override "section.key=value" applied on top of a loaded config.
inline void apply_override(PipelineConfig& cfg, const std::string& spec) {
    const auto eq = spec.find('=');
    const auto dot = spec.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ValidationError("override must look like section.key=value: '" +
                              spec + "'");
    }
    io_detail::ConfigSetter setter{&cfg, io_detail::trim(spec.substr(0, dot))};
    setter.apply(io_detail::trim(spec.substr(dot + 1, eq - dot - 1)),
                 io_detail::trim(spec.substr(eq + 1)), "override '" + spec + "'");
    validate_config(cfg);
}

}  // namespace tracklite

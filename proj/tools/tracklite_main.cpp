// Command-line front end: track, evaluate, simulate, benchmark.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tracklite/tracklite.hpp"

namespace fs = std::filesystem;
using namespace tracklite;

namespace {

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::cerr << "[tracklite] " << msg << "\n";
}

PipelineConfig config_from_options(const std::string& config_path,
                                   const std::vector<std::string>& overrides) {
    PipelineConfig cfg;
    if (!config_path.empty()) {
        if (!fs::exists(config_path)) {
            log_info("config file missing, using defaults: " + config_path);
        }
        cfg = load_config(config_path);
    }
    for (const std::string& o : overrides) apply_override(cfg, o);
    return cfg;
}

ImageBox box_from(const TrackedObject& obj, const Pixel& center) {
    return {center.u - obj.box_w / 2.0, center.v - obj.box_h / 2.0,
            center.u + obj.box_w / 2.0, center.v + obj.box_h / 2.0};
}

int run_track(const std::string& manifest_path, const std::string& config_path,
              const std::string& out_path, const std::string& kitti_out,
              const std::vector<std::string>& overrides) {
    const PipelineConfig file_cfg = config_from_options(config_path, overrides);
    SequenceLoader loader(manifest_path);

    PipelineConfig cfg = file_cfg;
    cfg.mode = loader.manifest().mode;  // the data dictates raw vs fused
    Tracker tracker(cfg);

    TrackSet results;
    std::vector<KittiTrackRecord> kitti_records;
    int frame_index = 0;
    while (auto frame = loader.next()) {
        const TrackerOutput output = tracker.step(*frame);
        for (const TrackedObject& obj : output.objects) {
            TrackSample s;
            s.timestamp = output.timestamp;
            s.id = obj.id;
            s.cls = obj.cls;
            s.position = obj.position;
            s.velocity = obj.velocity;
            if (loader.manifest().intrinsics) {
                const Vec3 cam =
                    transform_point(frame->sensor_from_map, obj.position);
                if (const auto px = project(cam, *loader.manifest().intrinsics)) {
                    s.box = box_from(obj, *px);
                }
            }
            results.push_back(s);
        }
        if (!kitti_out.empty() && loader.manifest().intrinsics) {
            const auto records = kitti_records_from_output(
                output, frame_index, frame->sensor_from_map,
                *loader.manifest().intrinsics);
            kitti_records.insert(kitti_records.end(), records.begin(),
                                 records.end());
        }
        ++frame_index;
    }
    write_track_set(out_path, results);
    log_info("wrote " + std::to_string(results.size()) + " track samples to " +
             out_path);
    if (!kitti_out.empty()) {
        if (!loader.manifest().intrinsics) {
            std::cerr << "error: --kitti-out requires manifest intrinsics\n";
            return 1;
        }
        write_kitti_results(kitti_records, kitti_out);
        log_info("wrote KITTI results to " + kitti_out);
    }
    return 0;
}

// Pools the per-frame nearest hypothesis for every ground-truth trajectory,
// the single-object evaluation style used for the range/scenario tables.
RmseReport paired_rmse(const TrackSet& gt, const TrackSet& hyp) {
    TrackSet est;
    std::map<std::int64_t, std::vector<const TrackSample*>> hyp_by_frame;
    for (const TrackSample& h : hyp) {
        hyp_by_frame[std::llround(h.timestamp * 1e6)].push_back(&h);
    }
    for (const TrackSample& g : gt) {
        const auto it = hyp_by_frame.find(std::llround(g.timestamp * 1e6));
        if (it == hyp_by_frame.end()) continue;
        const TrackSample* best = nullptr;
        double best_d = std::numeric_limits<double>::infinity();
        for (const TrackSample* h : it->second) {
            const double d = (h->position - g.position).norm();
            if (d < best_d) {
                best_d = d;
                best = h;
            }
        }
        if (best) {
            TrackSample s = *best;
            s.timestamp = g.timestamp;
            est.push_back(s);
        }
    }
    return rmse(gt, est);
}

int run_evaluate(const std::string& gt_path, const std::string& hyp_path,
                 const std::string& match_mode, double threshold,
                 const std::string& out_path, bool with_rmse,
                 const std::string& buckets_arg) {
    const TrackSet gt = read_track_set(gt_path);
    const TrackSet hyp = read_track_set(hyp_path);
    const MatchMode mode =
        match_mode == "iou2d" ? MatchMode::iou2d : MatchMode::center3d;
    if (threshold <= 0.0) threshold = mode == MatchMode::iou2d ? 0.5 : 1.0;

    const MotReport mot = clear_mot(gt, hyp, threshold, mode);

    std::ostringstream csv;
    csv << "metric,value\n";
    csv << "mota," << mot.mota << "\n";
    csv << "motp," << mot.motp << "\n";
    csv << "mt_percent," << mot.mt_percent << "\n";
    csv << "ml_percent," << mot.ml_percent << "\n";
    csv << "ids," << mot.ids << "\n";
    csv << "frag," << mot.frag << "\n";
    csv << "precision," << mot.precision << "\n";
    csv << "recall," << mot.recall << "\n";

    if (with_rmse) {
        const RmseReport r = paired_rmse(gt, hyp);
        csv << "position_rmse," << r.position_rmse << "\n";
        csv << "velocity_rmse," << r.velocity_rmse << "\n";
        if (!buckets_arg.empty()) {
            std::vector<double> edges;
            std::stringstream ss(buckets_arg);
            std::string tok;
            while (std::getline(ss, tok, ',')) edges.push_back(std::stod(tok));
            for (const DistanceBucket& b : bucket_by_distance(gt, hyp, edges)) {
                csv << "position_rmse_" << b.lo << "_" << b.hi << ","
                    << b.report.position_rmse << "\n";
                csv << "velocity_rmse_" << b.lo << "_" << b.hi << ","
                    << b.report.velocity_rmse << "\n";
            }
        }
    }

    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + out_path);
        out << csv.str();
        std::cout << "mota=" << mot.mota << " motp=" << mot.motp
                  << " ids=" << mot.ids << " frag=" << mot.frag << "\n";
    }
    return 0;
}

int run_simulate(const ScenarioSpec& spec, const NoiseSpec& noise,
                 const std::string& mode, const std::string& out_dir) {
    const SimulatedScenario scenario = generate(spec);
    const bool raw = mode == "raw";

    fs::create_directories(fs::path(out_dir) / "frames");
    SequenceManifest manifest;
    manifest.sequence_id = std::string("sim_") + to_string(spec.kind);
    manifest.mode = raw ? InputMode::raw : InputMode::fused;
    manifest.pose_log = "poses.csv";
    manifest.scenario = spec;
    manifest.noise = noise;
    if (raw) {
        manifest.intrinsics = default_camera();
        manifest.cam_from_lidar = default_cam_from_lidar();
    } else {
        manifest.intrinsics = default_camera();
    }

    const auto frames =
        raw ? corrupt_raw(scenario, noise, spec.seed)
            : corrupt(scenario, noise, spec.seed);
    char name[32];
    for (std::size_t k = 0; k < frames.size(); ++k) {
        SequenceManifest::FrameRecord rec;
        rec.frame = static_cast<int>(k);
        rec.timestamp = frames[k].timestamp;
        if (raw) {
            std::snprintf(name, sizeof(name), "frames/%06zu.tlpc", k);
            rec.data = name;
            write_point_cloud(fs::path(out_dir) / name, frames[k].cloud);
            std::snprintf(name, sizeof(name), "frames/%06zu.boxes.csv", k);
            rec.boxes = name;
            write_boxes(fs::path(out_dir) / name, frames[k].boxes);
        } else {
            std::snprintf(name, sizeof(name), "frames/%06zu.csv", k);
            rec.data = name;
            write_detections(fs::path(out_dir) / name, frames[k].detections);
        }
        manifest.frames.push_back(rec);
    }
    write_pose_log(fs::path(out_dir) / "poses.csv", scenario.ego);
    write_track_set(fs::path(out_dir) / "gt.csv", scenario.truth);
    write_manifest(fs::path(out_dir) / "manifest.csv", manifest);
    log_info("simulated " + std::to_string(frames.size()) + " frames into " +
             out_dir);
    return 0;
}

struct LatencyStats {
    double p50 = 0.0;
    double p95 = 0.0;
    double max = 0.0;
};

LatencyStats stats_from(std::vector<double> samples_ms) {
    std::sort(samples_ms.begin(), samples_ms.end());
    const auto pick = [&](double q) {
        const std::size_t i = static_cast<std::size_t>(
            q * static_cast<double>(samples_ms.size() - 1));
        return samples_ms[i];
    };
    return {pick(0.5), pick(0.95), samples_ms.back()};
}

int run_benchmark(int n_tracks, int n_detections, int n_iters,
                  int cluster_points, int cluster_boxes, int cluster_iters) {
    std::cout << "benchmark,p50_ms,p95_ms,max_ms\n";
    {
        // Steady-state tracker load: n_tracks established tracks, each fed a
        // nearby detection every frame.
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> ux(2.0, 38.0);
        std::uniform_real_distribution<double> uy(-14.0, 14.0);
        std::normal_distribution<double> jitter(0.0, 0.05);

        std::vector<Vec3> centers(n_tracks);
        for (Vec3& c : centers) c = Vec3(ux(rng), uy(rng), 0.0);

        Tracker tracker;
        const Mat3 rot = sensor_rotation_in_map();
        const RigidTransform sensor_from_map = invert({rot, Vec3::Zero()});
        std::vector<double> samples;
        for (int it = 0; it < n_iters; ++it) {
            FrameInput frame;
            frame.timestamp = 0.1 * (it + 1);
            frame.sensor_from_map = sensor_from_map;
            for (int d = 0; d < n_detections; ++d) {
                const Vec3 map_pos =
                    centers[d % n_tracks] +
                    Vec3(jitter(rng), jitter(rng), jitter(rng));
                frame.detections.push_back(
                    {transform_point(sensor_from_map, map_pos),
                     ObjectClass::pedestrian, 0.9, 40.0, 80.0});
            }
            const auto t0 = std::chrono::steady_clock::now();
            tracker.step(frame);
            const auto t1 = std::chrono::steady_clock::now();
            samples.push_back(
                std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        const LatencyStats s = stats_from(samples);
        std::cout << "tracker_step," << s.p50 << ',' << s.p95 << ',' << s.max
                  << "\n";
    }
    if (cluster_points > 0) {
        // Clustering load: a dense ground plane plus one blob per box.
        std::mt19937_64 rng(43);
        std::uniform_real_distribution<double> ux(1.0, 39.0);
        std::uniform_real_distribution<double> uy(-14.0, 14.0);
        std::normal_distribution<double> blob(0.0, 0.2);

        const CameraIntrinsics cam = default_camera();
        const RigidTransform cam_from_lidar = default_cam_from_lidar();
        FuseConfig cfg;

        std::vector<Vec3> centers(cluster_boxes);
        std::vector<BoundingBox2D> boxes;
        for (Vec3& c : centers) {
            c = Vec3(ux(rng), uy(rng) / 2.0, -0.5);
            const Vec3 cam_pt = transform_point(cam_from_lidar, c);
            const auto px = project(cam_pt, cam);
            const double h = cam.fy * 1.7 / cam_pt.z();
            boxes.push_back({px->u - 0.3 * h, px->v - h / 2.0, px->u + 0.3 * h,
                             px->v + h / 2.0, ObjectClass::pedestrian, 0.9});
        }
        PointCloud cloud;
        const int blob_points = 200 * cluster_boxes;
        for (int i = 0; i < cluster_points - blob_points; ++i) {
            cloud.points.emplace_back(ux(rng), uy(rng), -1.6 + 0.02 * blob(rng));
        }
        for (int b = 0; b < cluster_boxes; ++b) {
            for (int i = 0; i < 200; ++i) {
                cloud.points.push_back(centers[b] +
                                       Vec3(blob(rng), blob(rng), blob(rng)));
            }
        }
        std::vector<double> samples;
        for (int it = 0; it < cluster_iters; ++it) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto detections =
                fuse(cloud, boxes, cam, cam_from_lidar, cfg);
            const auto t1 = std::chrono::steady_clock::now();
            samples.push_back(
                std::chrono::duration<double, std::milli>(t1 - t0).count());
            if (detections.empty()) std::cerr << "warning: no detections\n";
        }
        const LatencyStats s = stats_from(samples);
        std::cout << "clustering," << s.p50 << ',' << s.p95 << ',' << s.max
                  << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aUToTrack-style 3D detection fusion and tracking pipeline"};
    app.require_subcommand(1);

    // track
    auto* track = app.add_subcommand("track", "Run tracking over a sequence");
    std::string manifest_path, config_path, out_path, kitti_out;
    std::vector<std::string> overrides;
    track->add_option("--manifest", manifest_path, "Sequence manifest")
        ->required();
    track->add_option("--config", config_path, "Pipeline config file");
    track->add_option("--out", out_path, "Output track CSV")->required();
    track->add_option("--kitti-out", kitti_out, "Also write KITTI results");
    track->add_option("--set", overrides, "Override section.key=value");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Score tracks against GT");
    std::string gt_path, hyp_path, match_mode = "center3d", report_out,
                buckets_arg;
    double threshold = 0.0;
    bool with_rmse = false;
    evaluate->add_option("--gt", gt_path, "Ground-truth track CSV")->required();
    evaluate->add_option("--hyp", hyp_path, "Hypothesis track CSV")->required();
    evaluate->add_option("--match", match_mode, "center3d|iou2d")
        ->check(CLI::IsMember({"center3d", "iou2d"}));
    evaluate->add_option("--threshold", threshold,
                         "Match threshold (m or IoU); 0 = mode default");
    evaluate->add_option("--out", report_out, "Report CSV (default: stdout)");
    evaluate->add_flag("--rmse", with_rmse, "Include RMSE metrics");
    evaluate->add_option("--buckets", buckets_arg,
                         "Comma-separated range bucket edges (m)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic sequence");
    ScenarioSpec spec;
    NoiseSpec noise;
    std::string kind = "lateral", sim_mode = "fused", sim_out;
    simulate->add_option("--kind", kind,
                         "lateral|longitudinal_toward|longitudinal_away|"
                         "zigzag|curve|wait")
        ->check(CLI::IsMember({"lateral", "longitudinal_toward",
                               "longitudinal_away", "zigzag", "curve", "wait"}));
    simulate->add_option("--distance", spec.target_distance, "Target distance (m)");
    simulate->add_option("--speed", spec.pedestrian_speed, "Pedestrian speed (m/s)");
    simulate->add_option("--ego-speed", spec.ego_speed, "Ego speed (m/s)");
    simulate->add_option("--duration", spec.duration, "Duration (s)");
    simulate->add_option("--rate", spec.rate, "Frame rate (Hz)");
    simulate->add_option("--seed", spec.seed, "RNG seed");
    simulate->add_option("--sigma", noise.centroid_sigma, "Centroid noise (m)");
    simulate->add_option("--sigma-range-scale", noise.sigma_range_scale,
                         "Range scale (m); sigma *= 1 + range/scale");
    simulate->add_option("--dropout", noise.dropout_prob, "Dropout probability");
    simulate->add_option("--clutter", noise.clutter_rate,
                         "Expected clutter detections per frame");
    simulate->add_option("--box-sigma", noise.box_sigma, "Box noise (px)");
    simulate->add_option("--mode", sim_mode, "fused|raw")
        ->check(CLI::IsMember({"fused", "raw"}));
    simulate->add_option("--out", sim_out, "Output directory")->required();

    // benchmark
    auto* benchmark = app.add_subcommand("benchmark", "Measure step latency");
    int n_tracks = 100, n_detections = 100, n_iters = 200;
    int cluster_points = 0, cluster_boxes = 10, cluster_iters = 20;
    benchmark->add_option("--tracks", n_tracks, "Number of live tracks");
    benchmark->add_option("--detections", n_detections, "Detections per frame");
    benchmark->add_option("--iters", n_iters, "Measured steps");
    benchmark->add_option("--cluster-points", cluster_points,
                          "Also benchmark clustering with this cloud size");
    benchmark->add_option("--cluster-boxes", cluster_boxes, "Boxes per frame");
    benchmark->add_option("--cluster-iters", cluster_iters, "Clustering runs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(track)) {
            return run_track(manifest_path, config_path, out_path, kitti_out,
                             overrides);
        }
        if (app.got_subcommand(evaluate)) {
            return run_evaluate(gt_path, hyp_path, match_mode, threshold,
                                report_out, with_rmse, buckets_arg);
        }
        if (app.got_subcommand(simulate)) {
            spec.kind = scenario_kind_from_string(kind);
            return run_simulate(spec, noise, sim_mode, sim_out);
        }
        if (app.got_subcommand(benchmark)) {
            return run_benchmark(n_tracks, n_detections, n_iters,
                                 cluster_points, cluster_boxes, cluster_iters);
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const MissingFile& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

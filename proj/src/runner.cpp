#include "viewfusion/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "viewfusion/log.hpp"

namespace viewfusion {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_filename(int stage_index, int channels) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%03d.%s", stage_index, channels == 3 ? "ppm" : "pgm");
    return buf;
}

json offset_json(const PoseOffset& o) {
    return json{{"azimuth_deg", rad_to_deg(o.d_azimuth)},
                {"elevation_deg", rad_to_deg(o.d_elevation)},
                {"distance", o.d_distance}};
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

/// Frames ordered for consistency evaluation: spins are re-ordered by azimuth
/// so adjacency means spatial adjacency, single-target runs keep stage order.
std::vector<int> report_order(const GenerationTrace& trace) {
    std::vector<int> order(trace.stages.size());
    std::iota(order.begin(), order.end(), 0);
    if (trace.trajectory_mode == TrajectoryMode::kSpin) {
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            double aa = trace.stages[a].target_offset.d_azimuth;
            double ab = trace.stages[b].target_offset.d_azimuth;
            if (aa < 0.0) aa += 2.0 * kPi;
            if (ab < 0.0) ab += 2.0 * kPi;
            return aa < ab;
        });
    }
    return order;
}

/// Ground-truth mode shared by every synthetic condition, when unambiguous.
std::optional<int> declared_mode(const RunConfig& cfg) {
    std::optional<int> mode;
    for (const ConditionConfig& c : cfg.conditions) {
        if (!c.mode) return std::nullopt;
        if (mode && *mode != *c.mode) return std::nullopt;
        mode = *c.mode;
    }
    return mode;
}

}  // namespace

RunResult run_single(const RunConfig& cfg, Variant variant, uint64_t seed) {
    RunParams params = cfg.sampler;
    params.variant = variant;
    const NoiseSchedule sched = build_schedule(cfg);
    const Trajectory traj = build_trajectory(cfg);
    const std::vector<ViewSetEntry> conditions = build_conditions(cfg);

    RunResult result;
    result.variant = variant;
    result.seed = seed;
    result.trace = run_variant(cfg.world, sched, params, conditions, traj, seed);

    const std::vector<int> order = report_order(result.trace);
    std::vector<ImageGrid> frames;
    frames.reserve(order.size());
    result.frame_poses.reserve(order.size());
    for (int idx : order) {
        frames.push_back(result.trace.stages[idx].frame);
        result.frame_poses.push_back(
            apply_offset(cfg.world.reference_pose, result.trace.stages[idx].target_offset));
    }
    if (frames.size() >= 2) {
        const bool cyclic = result.trace.trajectory_mode == TrajectoryMode::kSpin;
        result.report = adjacent_consistency(frames, cyclic, &cfg.world, &result.frame_poses);
    }

    if (const std::optional<int> gt = declared_mode(cfg); gt && !frames.empty()) {
        double sum = 0.0;
        for (size_t i = 0; i < frames.size(); ++i) {
            sum += psnr(frames[i], render(cfg.world, *gt, result.frame_poses[i]));
        }
        result.gt_psnr = sum / static_cast<double>(frames.size());
    }
    return result;
}

std::string trace_json(const GenerationTrace& trace) {
    json doc;
    doc["schema_version"] = 1;
    doc["variant"] = to_string(trace.variant);
    doc["sampler_kind"] = to_string(trace.kind);
    doc["seed"] = trace.seed;
    doc["reference_pose"] = {{"azimuth_deg", rad_to_deg(trace.reference_pose.azimuth)},
                             {"elevation_deg", rad_to_deg(trace.reference_pose.elevation)},
                             {"distance", trace.reference_pose.distance}};
    doc["trajectory_mode"] =
        trace.trajectory_mode == TrajectoryMode::kSpin ? "spin" : "single-target";
    doc["warnings"] = trace.warnings;
    json stages = json::array();
    for (const StageRecord& stage : trace.stages) {
        json members = json::array();
        for (const StageMemberRecord& m : stage.members) {
            members.push_back({{"offset_to_target", offset_json(m.offset_to_target)},
                               {"origin", m.origin == ViewOrigin::kGiven ? "given" : "generated"},
                               {"delta", m.delta},
                               {"weight", m.weight},
                               {"active", m.active}});
        }
        stages.push_back({{"index", stage.index},
                          {"target_offset", offset_json(stage.target_offset)},
                          {"members", members},
                          {"eps_norms", stage.eps_norms},
                          {"frame", frame_filename(stage.index, stage.frame.channels)}});
    }
    doc["stages"] = stages;
    return doc.dump(2) + "\n";
}

std::string consistency_json(const ConsistencyReport& report,
                             const std::vector<std::string>& frame_files) {
    json doc;
    doc["schema_version"] = 1;
    doc["cyclic"] = report.cyclic;
    doc["frame_count"] = frame_files.size();
    json frames = json::array();
    for (size_t i = 0; i < frame_files.size(); ++i) {
        json f = {{"file", frame_files[i]}};
        if (i < report.decoded_modes.size()) f["decoded_mode"] = report.decoded_modes[i];
        frames.push_back(f);
    }
    doc["frames"] = frames;
    json pairs = json::array();
    for (const PairMetrics& p : report.pairs) {
        json jp = {{"a", p.a}, {"b", p.b}, {"psnr", p.psnr}, {"ssim", p.ssim}, {"l1", p.l1}};
        if (p.mode_agree) jp["mode_agree"] = *p.mode_agree;
        pairs.push_back(jp);
    }
    doc["pairs"] = pairs;
    doc["aggregates"] = {{"mean_psnr", report.mean_psnr}, {"min_psnr", report.min_psnr},
                         {"mean_ssim", report.mean_ssim}, {"min_ssim", report.min_ssim},
                         {"mean_l1", report.mean_l1},
                         {"mode_agreement_rate", report.mode_agreement_rate}};
    return doc.dump(2) + "\n";
}

std::string consistency_csv(const ConsistencyReport& report) {
    std::ostringstream out;
    out << "a,b,psnr,ssim,l1,mode_agree\n";
    for (const PairMetrics& p : report.pairs) {
        out << p.a << "," << p.b << "," << p.psnr << "," << p.ssim << "," << p.l1 << ",";
        if (p.mode_agree) out << (*p.mode_agree ? 1 : 0);
        out << "\n";
    }
    return out.str();
}

void write_run_artifacts(const RunResult& result, const RunConfig& cfg, const std::string& dir) {
    fs::create_directories(dir);
    const fs::path base(dir);
    std::vector<std::string> frame_files;
    const std::vector<int> order = report_order(result.trace);
    for (int idx : order) {
        const StageRecord& stage = result.trace.stages[idx];
        const std::string name = frame_filename(stage.index, stage.frame.channels);
        write_pnm(stage.frame, (base / name).string());
        frame_files.push_back(name);
    }
    write_text_file(base / "trace.json", trace_json(result.trace));
    if (!result.report.pairs.empty()) {
        write_text_file(base / "consistency.json", consistency_json(result.report, frame_files));
        if (cfg.reports.emit_csv) {
            write_text_file(base / "consistency.csv", consistency_csv(result.report));
        }
    }
    // Timing lives outside trace.json so reruns of one config stay byte-identical.
    json timing = {{"wall_time_s", result.trace.wall_time_s}};
    write_text_file(base / "timing.json", timing.dump(2) + "\n");
}

namespace {

RunConfig load_with_overrides(const CliOptions& opts) {
    if (opts.config_path.empty()) throw ConfigError("missing --config PATH");
    RunConfig cfg = load_config_file(opts.config_path);
    if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
    if (opts.seed) {
        cfg.seeds.base = *opts.seed;
        cfg.seeds.count = 1;
        cfg.seeds.list.clear();
    }
    return cfg;
}

/// Run f(i) for i in [0, n) on `jobs` worker threads. Exceptions are captured
/// and rethrown after all workers finish.
void parallel_for(int n, int jobs, const std::function<void(int)>& f) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

int guard(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        VF_LOG_ERROR("%s", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        VF_LOG_ERROR("%s", e.what());
        return kExitRuntime;
    }
}

}  // namespace

int cmd_generate(const CliOptions& opts) {
    return guard([&]() {
        const RunConfig cfg = load_with_overrides(opts);
        // Surface trajectory and condition problems before touching the disk.
        build_trajectory(cfg);
        build_conditions(cfg);
        const std::vector<uint64_t> seeds = cfg.seeds.resolved();
        fs::create_directories(cfg.output_dir);
        write_text_file(fs::path(cfg.output_dir) / "effective_config.json",
                        effective_config_json(cfg));
        parallel_for(static_cast<int>(seeds.size()), opts.jobs, [&](int i) {
            const uint64_t seed = seeds[i];
            const RunResult result = run_single(cfg, cfg.sampler.variant, seed);
            const fs::path dir = fs::path(cfg.output_dir) / ("seed_" + std::to_string(seed));
            write_run_artifacts(result, cfg, dir.string());
            VF_LOG_INFO("seed %llu: %zu frames -> %s", static_cast<unsigned long long>(seed),
                        result.trace.stages.size(), dir.string().c_str());
        });
        return kExitOk;
    });
}

namespace {

struct VariantSummary {
    Variant variant;
    double mean_ssim = 0.0;
    double mean_psnr = 0.0;
    double mean_agreement = 0.0;
    double mean_gt_psnr = 0.0;
    bool has_gt = false;
};

}  // namespace

int cmd_compare(const CliOptions& opts) {
    return guard([&]() {
        const RunConfig cfg = load_with_overrides(opts);
        if (cfg.variants.size() < 2) {
            throw ConfigError("variants: compare needs at least 2 variants");
        }
        build_trajectory(cfg);
        build_conditions(cfg);
        const std::vector<uint64_t> seeds = cfg.seeds.resolved();
        fs::create_directories(cfg.output_dir);
        write_text_file(fs::path(cfg.output_dir) / "effective_config.json",
                        effective_config_json(cfg));

        const int n_runs = static_cast<int>(cfg.variants.size() * seeds.size());
        std::vector<RunResult> results(n_runs);
        parallel_for(n_runs, opts.jobs, [&](int i) {
            const Variant variant = cfg.variants[static_cast<size_t>(i) / seeds.size()];
            const uint64_t seed = seeds[static_cast<size_t>(i) % seeds.size()];
            results[i] = run_single(cfg, variant, seed);
            const fs::path dir = fs::path(cfg.output_dir) / to_string(variant) /
                                 ("seed_" + std::to_string(seed));
            write_run_artifacts(results[i], cfg, dir.string());
        });

        json doc;
        doc["schema_version"] = 1;
        doc["seeds"] = seeds;
        if (seeds.size() < 2) doc["warning"] = "single seed: sample too small for stable means";
        json variants = json::array();
        std::vector<VariantSummary> summaries;
        for (size_t v = 0; v < cfg.variants.size(); ++v) {
            VariantSummary s;
            s.variant = cfg.variants[v];
            json per_seed = json::array();
            int gt_count = 0;
            for (size_t i = 0; i < seeds.size(); ++i) {
                const RunResult& r = results[v * seeds.size() + i];
                s.mean_ssim += r.report.mean_ssim;
                s.mean_psnr += r.report.mean_psnr;
                s.mean_agreement += r.report.mode_agreement_rate;
                if (r.gt_psnr >= 0.0) {
                    s.mean_gt_psnr += r.gt_psnr;
                    ++gt_count;
                }
                per_seed.push_back({{"seed", r.seed},
                                    {"mean_ssim", r.report.mean_ssim},
                                    {"mean_psnr", r.report.mean_psnr},
                                    {"mode_agreement_rate", r.report.mode_agreement_rate},
                                    {"gt_psnr", r.gt_psnr}});
            }
            const double n = static_cast<double>(seeds.size());
            s.mean_ssim /= n;
            s.mean_psnr /= n;
            s.mean_agreement /= n;
            s.has_gt = gt_count == static_cast<int>(seeds.size());
            if (gt_count > 0) s.mean_gt_psnr /= gt_count;
            summaries.push_back(s);
            variants.push_back({{"variant", to_string(s.variant)},
                                {"mean_adjacent_ssim", s.mean_ssim},
                                {"mean_adjacent_psnr", s.mean_psnr},
                                {"mean_mode_agreement", s.mean_agreement},
                                {"mean_gt_psnr", s.has_gt ? json(s.mean_gt_psnr) : json(nullptr)},
                                {"per_seed", per_seed}});
        }
        doc["variants"] = variants;
        write_text_file(fs::path(cfg.output_dir) / "compare.json", doc.dump(2) + "\n");

        std::ostringstream table;
        table << "variant                    adj_ssim   adj_psnr  agreement    gt_psnr\n";
        for (const VariantSummary& s : summaries) {
            char line[160];
            std::snprintf(line, sizeof(line), "%-26s %8.4f %10.3f %10.3f %10.3f\n",
                          to_string(s.variant), s.mean_ssim, s.mean_psnr, s.mean_agreement,
                          s.has_gt ? s.mean_gt_psnr : std::nan(""));
            table << line;
        }
        if (seeds.size() < 2) table << "warning: single seed, means are noisy\n";
        const std::string table_str = table.str();
        write_text_file(fs::path(cfg.output_dir) / "compare.txt", table_str);
        std::fputs(table_str.c_str(), stdout);
        return kExitOk;
    });
}

int cmd_slices(const std::string& frames_dir, int scanline, const std::string& out_path) {
    return guard([&]() -> int {
        if (!fs::is_directory(frames_dir)) {
            throw ConfigError("frames directory not found: " + frames_dir);
        }
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(frames_dir)) {
            const std::string ext = entry.path().extension().string();
            if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) {
                files.push_back(entry.path());
            }
        }
        if (files.empty()) throw ConfigError("no .pgm/.ppm frames in " + frames_dir);
        std::sort(files.begin(), files.end());

        // Generation dirs carry a trace; use it to stack frames in viewing
        // (azimuth) order rather than the skip order their names encode.
        const fs::path trace_path = fs::path(frames_dir) / "trace.json";
        if (fs::exists(trace_path)) {
            std::ifstream in(trace_path);
            json trace = json::parse(in, nullptr, false);
            if (!trace.is_discarded() && trace.contains("stages")) {
                std::vector<std::pair<double, fs::path>> ordered;
                for (const json& stage : trace["stages"]) {
                    const fs::path frame = fs::path(frames_dir) / stage["frame"].get<std::string>();
                    if (!fs::exists(frame)) continue;
                    double az = stage["target_offset"]["azimuth_deg"].get<double>();
                    if (az < 0.0) az += 360.0;
                    ordered.push_back({az, frame});
                }
                if (!ordered.empty()) {
                    std::stable_sort(ordered.begin(), ordered.end(),
                                     [](const auto& a, const auto& b) { return a.first < b.first; });
                    files.clear();
                    for (const auto& [az, path] : ordered) files.push_back(path);
                }
            }
        }
        std::vector<ImageGrid> frames;
        frames.reserve(files.size());
        for (const fs::path& f : files) frames.push_back(read_pnm(f.string()));
        const int line = scanline >= 0 ? scanline : frames[0].height / 2;
        if (line >= frames[0].height) {
            throw ConfigError("scanline " + std::to_string(line) + " outside frame height " +
                              std::to_string(frames[0].height));
        }
        const ImageGrid slice = spacetime_slice(frames, line);
        std::string out = out_path;
        if (out.empty()) {
            out = (fs::path(frames_dir) / (slice.channels == 3 ? "slice.ppm" : "slice.pgm")).string();
        }
        write_pnm(slice, out);
        VF_LOG_INFO("wrote %s (%zu frames, scanline %d)", out.c_str(), frames.size(), line);
        return kExitOk;
    });
}

int cmd_validate_config(const CliOptions& opts) {
    return guard([&]() {
        const RunConfig cfg = load_with_overrides(opts);
        build_trajectory(cfg);  // surfaces spin consistency errors early
        std::fputs(effective_config_json(cfg).c_str(), stdout);
        return kExitOk;
    });
}

}  // namespace viewfusion

#pragma once

#include <string>
#include <vector>

#include "viewfusion/config.hpp"
#include "viewfusion/metrics.hpp"
#include "viewfusion/samplers.hpp"

namespace viewfusion {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

struct CliOptions {
    std::string config_path;
    std::string out_dir;              // overrides config output_dir when set
    std::optional<uint64_t> seed;     // overrides config seeds when set
    int jobs = 1;
};

/// Outcome of one (variant, seed) run, with the consistency metrics computed
/// over its generated frames.
struct RunResult {
    Variant variant;
    uint64_t seed = 0;
    GenerationTrace trace;
    ConsistencyReport report;
    std::vector<Pose> frame_poses;
    double gt_psnr = -1.0;  // mean PSNR to the true-mode rendering, -1 if unknown
};

/// Run one seed of one variant in memory (no files written).
RunResult run_single(const RunConfig& cfg, Variant variant, uint64_t seed);

/// Serialization used by both the CLI and the tests. The effective config is
/// written separately next to each trace, so the trace itself stays
/// path-independent.
std::string trace_json(const GenerationTrace& trace);
std::string consistency_json(const ConsistencyReport& report, const std::vector<std::string>& frame_files);
std::string consistency_csv(const ConsistencyReport& report);

/// Write frames, trace.json, consistency.json (and optional CSV) for one run.
void write_run_artifacts(const RunResult& result, const RunConfig& cfg, const std::string& dir);

int cmd_generate(const CliOptions& opts);
int cmd_compare(const CliOptions& opts);
int cmd_slices(const std::string& frames_dir, int scanline, const std::string& out_path);
int cmd_validate_config(const CliOptions& opts);

/// Argument-level entry point (everything after the program name).
int run_cli(const std::vector<std::string>& args);

}  // namespace viewfusion

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "viewfusion/conditioning.hpp"
#include "viewfusion/pose.hpp"
#include "viewfusion/samplers.hpp"
#include "viewfusion/toyworld.hpp"

namespace viewfusion {

/// Invalid or unusable configuration; maps to exit code 2 at the CLI.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScheduleConfig {
    std::string kind = "linear";  // only linear is implemented
    int timesteps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
};

struct TrajectoryConfig {
    TrajectoryMode mode = TrajectoryMode::kSpin;
    double delta_deg = 22.5;
    int n_views = 16;           // spin mode
    PoseOffset target;          // single-target mode
};

/// One conditioning input: either a mode index (rendered synthetically at the
/// offset pose) or a path to an externally supplied PGM/PPM image.
struct ConditionConfig {
    PoseOffset offset;  // from the reference view
    std::optional<int> mode;
    std::optional<std::string> image_path;
};

struct SeedConfig {
    uint64_t base = 42;
    int count = 1;
    std::vector<uint64_t> list;  // overrides base/count when non-empty
    std::vector<uint64_t> resolved() const;
};

struct ReportConfig {
    bool emit_csv = false;
    int scanline = -1;  // -1 = center row
};

struct RunConfig {
    int schema_version = 1;
    ToyWorld world = ToyWorld::make_default();
    std::string renderer = "beacon";
    ScheduleConfig schedule;
    RunParams sampler;
    TrajectoryConfig trajectory;
    std::vector<ConditionConfig> conditions;
    SeedConfig seeds;
    std::vector<Variant> variants;  // compare command only
    ReportConfig reports;
    std::string output_dir = "out";

    static RunConfig defaults();
};

/// Parse + validate a config JSON document. Unknown keys are rejected and
/// parse errors are reported with their line number.
RunConfig load_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

/// Serialize the fully resolved config (defaults filled in). Loading the
/// result again reproduces it byte for byte.
std::string effective_config_json(const RunConfig& cfg);

/// Build the domain objects a run needs.
NoiseSchedule build_schedule(const RunConfig& cfg);
Trajectory build_trajectory(const RunConfig& cfg);
std::vector<ViewSetEntry> build_conditions(const RunConfig& cfg);

}  // namespace viewfusion

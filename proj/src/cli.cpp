#include "viewfusion/runner.hpp"

#include "CLI11.hpp"
#include "viewfusion/log.hpp"

namespace viewfusion {

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"viewfusion: multi-view consistent diffusion sampling on an analytic toy world"};
    app.require_subcommand(1);

    CliOptions opts;
    int64_t seed_flag = -1;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* config_opt = cmd->add_option("--config", opts.config_path, "config JSON path");
        if (needs_config) config_opt->required();
        cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", seed_flag, "single seed (overrides config seeds)")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--jobs", opts.jobs, "worker threads for seed sweeps")
            ->check(CLI::PositiveNumber);
    };

    CLI::App* generate = app.add_subcommand("generate", "run one generation experiment");
    add_common(generate, true);

    CLI::App* compare = app.add_subcommand("compare", "run several variants on identical seeds");
    add_common(compare, true);

    CLI::App* validate = app.add_subcommand("validate-config", "check a config and print it resolved");
    add_common(validate, true);

    std::string frames_dir;
    int scanline = -1;
    std::string slice_out;
    CLI::App* slices = app.add_subcommand("slices", "stack one scanline from every frame in a directory");
    slices->add_option("frames-dir", frames_dir, "directory of ordered .pgm/.ppm frames")->required();
    slices->add_option("--scanline", scanline, "row to extract (default: center)");
    slices->add_option("--out", slice_out, "output image path");

    std::vector<const char*> argv;
    argv.push_back("viewfusion");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (seed_flag >= 0) opts.seed = static_cast<uint64_t>(seed_flag);

    if (generate->parsed()) return cmd_generate(opts);
    if (compare->parsed()) return cmd_compare(opts);
    if (validate->parsed()) return cmd_validate_config(opts);
    if (slices->parsed()) return cmd_slices(frames_dir, scanline, slice_out);
    return kExitConfig;
}

}  // namespace viewfusion

#include "viewfusion/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace viewfusion {

using nlohmann::json;

namespace {

int line_of_offset(const std::string& text, size_t byte) {
    int line = 1;
    for (size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw ConfigError(field + ": " + message);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
                return item.key() == k;
            }) == allowed.end()) {
            fail(where.empty() ? item.key() : where + "." + item.key(), "unknown field");
        }
    }
}

double get_num(const json& obj, const std::string& where, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) fail(where + "." + key, "must be a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& where, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) fail(where + "." + key, "must be an integer");
    return obj[key].get<int>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) fail(where + "." + key, "must be a boolean");
    return obj[key].get<bool>();
}

std::string get_str(const json& obj, const std::string& where, const char* key,
                    const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) fail(where + "." + key, "must be a string");
    return obj[key].get<std::string>();
}

PoseOffset parse_offset(const json& obj, const std::string& where) {
    if (!obj.is_object()) fail(where, "must be an object");
    check_keys(obj, where, {"azimuth_deg", "elevation_deg", "distance"});
    return make_offset(deg_to_rad(get_num(obj, where, "azimuth_deg", 0.0)),
                       deg_to_rad(get_num(obj, where, "elevation_deg", 0.0)),
                       get_num(obj, where, "distance", 0.0));
}

json offset_json(const PoseOffset& o) {
    return json{{"azimuth_deg", rad_to_deg(o.d_azimuth)},
                {"elevation_deg", rad_to_deg(o.d_elevation)},
                {"distance", o.d_distance}};
}

Variant parse_variant(const std::string& name, const std::string& where) {
    for (Variant v : {Variant::kDirect, Variant::kInterpolatedDenoising,
                      Variant::kStandardAutoregression, Variant::kInterpolatedConditions,
                      Variant::kInterpolatedOutputs, Variant::kStochasticConditioning}) {
        if (name == to_string(v)) return v;
    }
    fail(where, "unknown variant '" + name + "'");
}

}  // namespace

std::vector<uint64_t> SeedConfig::resolved() const {
    if (!list.empty()) return list;
    std::vector<uint64_t> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(base + static_cast<uint64_t>(i));
    return out;
}

RunConfig RunConfig::defaults() { return RunConfig{}; }

RunConfig load_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("line " + std::to_string(line_of_offset(text, e.byte)) +
                          ": JSON parse error: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("top level: must be a JSON object");

    RunConfig cfg;
    check_keys(doc, "", {"schema_version", "world", "schedule", "sampler", "weights", "trajectory",
                         "conditions", "seeds", "variants", "reports", "output_dir"});

    cfg.schema_version = get_int(doc, "", "schema_version", 1);
    if (cfg.schema_version != 1) fail("schema_version", "unsupported version");

    if (doc.contains("world")) {
        const json& w = doc["world"];
        const std::string where = "world";
        check_keys(w, where, {"height", "width", "channels", "modes", "prior", "sigma_data",
                              "renderer", "reference_pose"});
        cfg.world.height = get_int(w, where, "height", cfg.world.height);
        cfg.world.width = get_int(w, where, "width", cfg.world.width);
        cfg.world.channels = get_int(w, where, "channels", cfg.world.channels);
        cfg.world.n_modes = get_int(w, where, "modes", cfg.world.n_modes);
        cfg.world.sigma_data = get_num(w, where, "sigma_data", cfg.world.sigma_data);
        cfg.renderer = get_str(w, where, "renderer", cfg.renderer);
        if (w.contains("prior")) {
            if (!w["prior"].is_array()) fail("world.prior", "must be an array");
            cfg.world.prior = w["prior"].get<std::vector<double>>();
        }
        if (w.contains("reference_pose")) {
            const json& rp = w["reference_pose"];
            check_keys(rp, "world.reference_pose", {"azimuth_deg", "elevation_deg", "distance"});
            cfg.world.reference_pose.azimuth =
                deg_to_rad(get_num(rp, "world.reference_pose", "azimuth_deg", 0.0));
            cfg.world.reference_pose.elevation =
                deg_to_rad(get_num(rp, "world.reference_pose", "elevation_deg", 0.0));
            cfg.world.reference_pose.distance = get_num(rp, "world.reference_pose", "distance", 1.5);
        }
    }
    if (cfg.world.height < 1 || cfg.world.width < 1) fail("world", "grid dimensions must be positive");
    if (cfg.world.channels != 1 && cfg.world.channels != 3) fail("world.channels", "must be 1 or 3");
    if (cfg.world.n_modes < 1) fail("world.modes", "must be at least 1");
    if (!(cfg.world.sigma_data > 0.0)) fail("world.sigma_data", "must be positive");
    if (!(cfg.world.reference_pose.distance > 0.0)) fail("world.reference_pose.distance", "must be positive");
    if (cfg.renderer != "beacon") fail("world.renderer", "unknown renderer '" + cfg.renderer + "'");
    if (cfg.world.prior.empty()) {
        cfg.world.prior.assign(cfg.world.n_modes, 1.0 / cfg.world.n_modes);
    }
    if (static_cast<int>(cfg.world.prior.size()) != cfg.world.n_modes) {
        fail("world.prior", "length must equal world.modes");
    }
    double prior_sum = 0.0;
    for (double p : cfg.world.prior) {
        if (!(p >= 0.0)) fail("world.prior", "entries must be non-negative");
        prior_sum += p;
    }
    if (std::abs(prior_sum - 1.0) > 1e-9) fail("world.prior", "must sum to 1");

    if (doc.contains("schedule")) {
        const json& s = doc["schedule"];
        check_keys(s, "schedule", {"kind", "timesteps", "beta_start", "beta_end"});
        cfg.schedule.kind = get_str(s, "schedule", "kind", cfg.schedule.kind);
        cfg.schedule.timesteps = get_int(s, "schedule", "timesteps", cfg.schedule.timesteps);
        cfg.schedule.beta_start = get_num(s, "schedule", "beta_start", cfg.schedule.beta_start);
        cfg.schedule.beta_end = get_num(s, "schedule", "beta_end", cfg.schedule.beta_end);
    }
    if (cfg.schedule.kind != "linear") fail("schedule.kind", "only 'linear' is implemented");
    if (cfg.schedule.timesteps < 2) fail("schedule.timesteps", "must be at least 2");
    if (!(cfg.schedule.beta_start > 0.0) || !(cfg.schedule.beta_start <= cfg.schedule.beta_end) ||
        !(cfg.schedule.beta_end < 1.0)) {
        fail("schedule", "need 0 < beta_start <= beta_end < 1");
    }

    if (doc.contains("sampler")) {
        const json& s = doc["sampler"];
        const std::string where = "sampler";
        check_keys(s, where, {"kind", "ddim_steps", "eta", "guidance_scale", "variant",
                              "fusion_order", "max_conditions_per_step", "literal_alg1_x0"});
        const std::string kind = get_str(s, where, "kind", "ddim");
        if (kind == "ddpm") cfg.sampler.kind = SamplerKind::kDdpm;
        else if (kind == "ddim") cfg.sampler.kind = SamplerKind::kDdim;
        else fail("sampler.kind", "must be 'ddpm' or 'ddim'");
        cfg.sampler.ddim_steps = get_int(s, where, "ddim_steps", cfg.sampler.ddim_steps);
        cfg.sampler.eta = get_num(s, where, "eta", cfg.sampler.eta);
        cfg.sampler.guidance_scale = get_num(s, where, "guidance_scale", cfg.sampler.guidance_scale);
        cfg.sampler.variant =
            parse_variant(get_str(s, where, "variant", to_string(cfg.sampler.variant)), "sampler.variant");
        const std::string fusion = get_str(s, where, "fusion_order", to_string(cfg.sampler.fusion_order));
        if (fusion == "epsilon") cfg.sampler.fusion_order = FusionOrder::kEpsilon;
        else if (fusion == "next-state") cfg.sampler.fusion_order = FusionOrder::kNextState;
        else fail("sampler.fusion_order", "must be 'epsilon' or 'next-state'");
        cfg.sampler.max_conditions_per_step =
            get_int(s, where, "max_conditions_per_step", cfg.sampler.max_conditions_per_step);
        cfg.sampler.literal_alg1_x0 = get_bool(s, where, "literal_alg1_x0", cfg.sampler.literal_alg1_x0);
    }
    if (cfg.sampler.ddim_steps < 1 || cfg.sampler.ddim_steps > cfg.schedule.timesteps) {
        fail("sampler.ddim_steps", "must be in [1, schedule.timesteps]");
    }
    if (!(cfg.sampler.eta >= 0.0) || !(cfg.sampler.eta <= 1.0)) fail("sampler.eta", "must be in [0, 1]");
    if (!(cfg.sampler.guidance_scale >= 0.0)) fail("sampler.guidance_scale", "must be non-negative");
    if (cfg.sampler.max_conditions_per_step < 0) {
        fail("sampler.max_conditions_per_step", "must be >= 0 (0 = unlimited)");
    }

    if (doc.contains("weights")) {
        const json& w = doc["weights"];
        check_keys(w, "weights", {"tau_c", "tau_g"});
        cfg.sampler.weights.tau_c = get_num(w, "weights", "tau_c", cfg.sampler.weights.tau_c);
        cfg.sampler.weights.tau_g = get_num(w, "weights", "tau_g", cfg.sampler.weights.tau_g);
    }
    if (!(cfg.sampler.weights.tau_c > 0.0)) fail("weights.tau_c", "must be positive");
    if (!(cfg.sampler.weights.tau_g > 0.0)) fail("weights.tau_g", "must be positive");

    if (doc.contains("trajectory")) {
        const json& t = doc["trajectory"];
        const std::string where = "trajectory";
        check_keys(t, where, {"mode", "delta_deg", "n_views", "target"});
        const std::string mode = get_str(t, where, "mode", "spin");
        if (mode == "spin") cfg.trajectory.mode = TrajectoryMode::kSpin;
        else if (mode == "single-target") cfg.trajectory.mode = TrajectoryMode::kSingleTarget;
        else fail("trajectory.mode", "must be 'spin' or 'single-target'");
        cfg.trajectory.delta_deg = get_num(t, where, "delta_deg", cfg.trajectory.delta_deg);
        cfg.trajectory.n_views = get_int(t, where, "n_views", cfg.trajectory.n_views);
        if (t.contains("target")) cfg.trajectory.target = parse_offset(t["target"], "trajectory.target");
    }
    if (!(cfg.trajectory.delta_deg > 0.0)) fail("trajectory.delta_deg", "must be positive");
    if (cfg.trajectory.mode == TrajectoryMode::kSpin && cfg.trajectory.n_views < 2) {
        fail("trajectory.n_views", "must be at least 2");
    }

    if (doc.contains("conditions")) {
        if (!doc["conditions"].is_array()) fail("conditions", "must be an array");
        for (size_t i = 0; i < doc["conditions"].size(); ++i) {
            const json& c = doc["conditions"][i];
            const std::string where = "conditions[" + std::to_string(i) + "]";
            check_keys(c, where, {"offset", "mode", "image"});
            ConditionConfig cc;
            if (c.contains("offset")) cc.offset = parse_offset(c["offset"], where + ".offset");
            if (c.contains("mode")) cc.mode = get_int(c, where, "mode", 0);
            if (c.contains("image")) cc.image_path = get_str(c, where, "image", "");
            if (cc.mode.has_value() == cc.image_path.has_value()) {
                fail(where, "needs exactly one of 'mode' or 'image'");
            }
            if (cc.mode && (*cc.mode < 0 || *cc.mode >= cfg.world.n_modes)) {
                fail(where + ".mode", "outside [0, world.modes)");
            }
            cfg.conditions.push_back(std::move(cc));
        }
    }
    if (cfg.conditions.empty()) {
        ConditionConfig cc;
        cc.mode = 0;
        cfg.conditions.push_back(cc);
    }

    if (doc.contains("seeds")) {
        const json& s = doc["seeds"];
        check_keys(s, "seeds", {"base", "count", "list"});
        if (s.contains("base")) {
            if (!s["base"].is_number_integer()) fail("seeds.base", "must be an integer");
            cfg.seeds.base = s["base"].get<uint64_t>();
        }
        cfg.seeds.count = get_int(s, "seeds", "count", cfg.seeds.count);
        if (s.contains("list")) {
            if (!s["list"].is_array()) fail("seeds.list", "must be an array");
            cfg.seeds.list = s["list"].get<std::vector<uint64_t>>();
        }
    }
    if (cfg.seeds.list.empty() && cfg.seeds.count < 1) fail("seeds.count", "must be at least 1");

    if (doc.contains("variants")) {
        if (!doc["variants"].is_array()) fail("variants", "must be an array");
        for (size_t i = 0; i < doc["variants"].size(); ++i) {
            if (!doc["variants"][i].is_string()) fail("variants", "entries must be strings");
            cfg.variants.push_back(parse_variant(doc["variants"][i].get<std::string>(),
                                                 "variants[" + std::to_string(i) + "]"));
        }
    }

    if (doc.contains("reports")) {
        const json& r = doc["reports"];
        check_keys(r, "reports", {"emit_csv", "scanline"});
        cfg.reports.emit_csv = get_bool(r, "reports", "emit_csv", cfg.reports.emit_csv);
        cfg.reports.scanline = get_int(r, "reports", "scanline", cfg.reports.scanline);
    }
    if (cfg.reports.scanline != -1 &&
        (cfg.reports.scanline < 0 || cfg.reports.scanline >= cfg.world.height)) {
        fail("reports.scanline", "outside [0, world.height)");
    }

    cfg.output_dir = get_str(doc, "", "output_dir", cfg.output_dir);
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return load_config_text(buffer.str());
}

std::string effective_config_json(const RunConfig& cfg) {
    json doc;
    doc["schema_version"] = cfg.schema_version;
    doc["world"] = {
        {"height", cfg.world.height},
        {"width", cfg.world.width},
        {"channels", cfg.world.channels},
        {"modes", cfg.world.n_modes},
        {"prior", cfg.world.prior},
        {"sigma_data", cfg.world.sigma_data},
        {"renderer", cfg.renderer},
        {"reference_pose",
         {{"azimuth_deg", rad_to_deg(cfg.world.reference_pose.azimuth)},
          {"elevation_deg", rad_to_deg(cfg.world.reference_pose.elevation)},
          {"distance", cfg.world.reference_pose.distance}}},
    };
    doc["schedule"] = {{"kind", cfg.schedule.kind},
                       {"timesteps", cfg.schedule.timesteps},
                       {"beta_start", cfg.schedule.beta_start},
                       {"beta_end", cfg.schedule.beta_end}};
    doc["sampler"] = {{"kind", to_string(cfg.sampler.kind)},
                      {"ddim_steps", cfg.sampler.ddim_steps},
                      {"eta", cfg.sampler.eta},
                      {"guidance_scale", cfg.sampler.guidance_scale},
                      {"variant", to_string(cfg.sampler.variant)},
                      {"fusion_order", to_string(cfg.sampler.fusion_order)},
                      {"max_conditions_per_step", cfg.sampler.max_conditions_per_step},
                      {"literal_alg1_x0", cfg.sampler.literal_alg1_x0}};
    doc["weights"] = {{"tau_c", cfg.sampler.weights.tau_c}, {"tau_g", cfg.sampler.weights.tau_g}};
    json traj = {{"mode", cfg.trajectory.mode == TrajectoryMode::kSpin ? "spin" : "single-target"},
                 {"delta_deg", cfg.trajectory.delta_deg}};
    if (cfg.trajectory.mode == TrajectoryMode::kSpin) {
        traj["n_views"] = cfg.trajectory.n_views;
    } else {
        traj["target"] = offset_json(cfg.trajectory.target);
    }
    doc["trajectory"] = traj;
    json conds = json::array();
    for (const ConditionConfig& c : cfg.conditions) {
        json jc;
        jc["offset"] = offset_json(c.offset);
        if (c.mode) jc["mode"] = *c.mode;
        if (c.image_path) jc["image"] = *c.image_path;
        conds.push_back(jc);
    }
    doc["conditions"] = conds;
    if (cfg.seeds.list.empty()) {
        doc["seeds"] = {{"base", cfg.seeds.base}, {"count", cfg.seeds.count}};
    } else {
        doc["seeds"] = {{"list", cfg.seeds.list}};
    }
    if (!cfg.variants.empty()) {
        json vs = json::array();
        for (Variant v : cfg.variants) vs.push_back(to_string(v));
        doc["variants"] = vs;
    }
    doc["reports"] = {{"emit_csv", cfg.reports.emit_csv}, {"scanline", cfg.reports.scanline}};
    doc["output_dir"] = cfg.output_dir;
    return doc.dump(2) + "\n";
}

NoiseSchedule build_schedule(const RunConfig& cfg) {
    return linear_schedule(cfg.schedule.timesteps, cfg.schedule.beta_start, cfg.schedule.beta_end);
}

Trajectory build_trajectory(const RunConfig& cfg) {
    const double delta = deg_to_rad(cfg.trajectory.delta_deg);
    try {
        if (cfg.trajectory.mode == TrajectoryMode::kSpin) {
            return plan_spin(delta, cfg.trajectory.n_views);
        }
        return plan_single_target(cfg.trajectory.target, delta);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("trajectory: ") + e.what());
    }
}

std::vector<ViewSetEntry> build_conditions(const RunConfig& cfg) {
    std::vector<ViewSetEntry> entries;
    for (size_t i = 0; i < cfg.conditions.size(); ++i) {
        const ConditionConfig& c = cfg.conditions[i];
        ViewSetEntry entry;
        entry.offset_from_reference = c.offset;
        entry.origin = ViewOrigin::kGiven;
        if (c.mode) {
            entry.image = render(cfg.world, *c.mode, apply_offset(cfg.world.reference_pose, c.offset));
        } else {
            if (!std::filesystem::exists(*c.image_path)) {
                throw ConfigError("conditions[" + std::to_string(i) + "].image: file not found: " +
                                  *c.image_path);
            }
            entry.image = clamp_unit(read_pnm(*c.image_path));
            if (entry.image.height != cfg.world.height || entry.image.width != cfg.world.width ||
                entry.image.channels != cfg.world.channels) {
                throw ConfigError("conditions[" + std::to_string(i) + "].image: shape " +
                                  entry.image.shape_str() + " does not match the world");
            }
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

}  // namespace viewfusion

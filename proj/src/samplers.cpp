#include "viewfusion/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace viewfusion {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::kDirect: return "direct";
        case Variant::kInterpolatedDenoising: return "interpolated-denoising";
        case Variant::kStandardAutoregression: return "standard-autoregression";
        case Variant::kInterpolatedConditions: return "interpolated-conditions";
        case Variant::kInterpolatedOutputs: return "interpolated-outputs";
        case Variant::kStochasticConditioning: return "stochastic-conditioning";
    }
    return "?";
}

const char* to_string(SamplerKind k) {
    return k == SamplerKind::kDdpm ? "ddpm" : "ddim";
}

const char* to_string(FusionOrder f) {
    return f == FusionOrder::kEpsilon ? "epsilon" : "next-state";
}

ImageGrid ddpm_reverse_step(const ImageGrid& x_t, int t, const ImageGrid& eps_hat,
                            const NoiseSchedule& sched, const ImageGrid& noise) {
    if (t < 1 || t > sched.timesteps) throw std::invalid_argument("ddpm_reverse_step: t outside [1, T]");
    if (!x_t.same_shape(eps_hat) || !x_t.same_shape(noise)) {
        throw std::invalid_argument("ddpm_reverse_step: shape mismatch");
    }
    const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha_at(t));
    const double eps_coef = sched.beta_at(t) / std::sqrt(1.0 - sched.alpha_bar_at(t));
    const double sigma = t > 1 ? sched.sigma_at(t) : 0.0;
    ImageGrid out(x_t.height, x_t.width, x_t.channels);
    for (size_t k = 0; k < out.data.size(); ++k) {
        out.data[k] = inv_sqrt_alpha * (x_t.data[k] - eps_coef * eps_hat.data[k]) + sigma * noise.data[k];
    }
    return out;
}

ImageGrid ddim_update(const ImageGrid& x_t, int t, int t_prev, const ImageGrid& eps,
                      const NoiseSchedule& sched, double sigma, const ImageGrid& noise,
                      bool literal_alg1_x0) {
    if (t_prev < 0 || t_prev >= t || t > sched.timesteps) {
        throw std::invalid_argument("ddim_update: need 0 <= t_prev < t <= T");
    }
    if (!x_t.same_shape(eps) || !x_t.same_shape(noise)) {
        throw std::invalid_argument("ddim_update: shape mismatch");
    }
    const double abar_t = sched.alpha_bar_at(t);
    const double abar_prev = sched.alpha_bar_at(t_prev);
    const double radicand = 1.0 - abar_prev - sigma * sigma;
    if (radicand < 0.0) {
        throw std::invalid_argument("ddim_update: sigma^2 exceeds 1 - alpha_bar_prev (infeasible)");
    }
    const double x0_radical = std::sqrt(1.0 - (literal_alg1_x0 ? abar_prev : abar_t));
    const double inv_sqrt_abar_t = 1.0 / std::sqrt(abar_t);
    const double sqrt_abar_prev = std::sqrt(abar_prev);
    const double dir_coef = std::sqrt(radicand);
    ImageGrid out(x_t.height, x_t.width, x_t.channels);
    for (size_t k = 0; k < out.data.size(); ++k) {
        const double x0_est = (x_t.data[k] - x0_radical * eps.data[k]) * inv_sqrt_abar_t;
        out.data[k] = sqrt_abar_prev * x0_est + dir_coef * eps.data[k] + sigma * noise.data[k];
    }
    return out;
}

namespace {

ImageGrid cfg_combine(const ImageGrid& eps_u, const ImageGrid& eps_c, double u) {
    ImageGrid out(eps_u.height, eps_u.width, eps_u.channels);
    for (size_t k = 0; k < out.data.size(); ++k) {
        out.data[k] = eps_u.data[k] + u * (eps_c.data[k] - eps_u.data[k]);
    }
    return out;
}

}  // namespace

ImageGrid guided_eps(const OptimalPredictor& pred, const ImageGrid& x_t, int t,
                     int cond_index, double u) {
    if (u == 1.0) return pred.eps(x_t, t, cond_index);
    return cfg_combine(pred.eps(x_t, t, OptimalPredictor::kUnconditional),
                       pred.eps(x_t, t, cond_index), u);
}

GuidedStepResult ddim_guided_step(const ImageGrid& x_t, int t, int t_prev,
                                  const OptimalPredictor& pred, int cond_index,
                                  const NoiseSchedule& sched, double u, double eta,
                                  const ImageGrid& shared_noise, bool literal_alg1_x0) {
    GuidedStepResult result;
    result.eps_used = guided_eps(pred, x_t, t, cond_index, u);
    const double sigma = ddim_sigma(sched, t, t_prev, eta);
    result.x_prev = ddim_update(x_t, t, t_prev, result.eps_used, sched, sigma, shared_noise,
                                literal_alg1_x0);
    return result;
}

namespace {

struct Transition {
    int t;
    int t_prev;
};

std::vector<Transition> make_transitions(const NoiseSchedule& sched, const RunParams& params) {
    std::vector<Transition> out;
    if (params.kind == SamplerKind::kDdpm) {
        out.reserve(sched.timesteps);
        for (int t = sched.timesteps; t >= 1; --t) out.push_back({t, t - 1});
    } else {
        const DdimSubSchedule sub = make_ddim_subschedule(sched.timesteps, params.ddim_steps, params.eta);
        out.reserve(sub.steps.size());
        for (size_t i = 0; i < sub.steps.size(); ++i) {
            const int t_prev = i + 1 < sub.steps.size() ? sub.steps[i + 1] : 0;
            out.push_back({sub.steps[i], t_prev});
        }
    }
    return out;
}

ImageGrid apply_step(const ImageGrid& x, const ImageGrid& eps, const Transition& tr,
                     const NoiseSchedule& sched, const RunParams& params, const ImageGrid& noise) {
    if (params.kind == SamplerKind::kDdpm) {
        return ddpm_reverse_step(x, tr.t, eps, sched, noise);
    }
    const double sigma = ddim_sigma(sched, tr.t, tr.t_prev, params.eta);
    return ddim_update(x, tr.t, tr.t_prev, eps, sched, sigma, noise, params.literal_alg1_x0);
}

/// Per-condition guided predictions at a shared state, evaluating the
/// unconditional branch once.
std::vector<ImageGrid> guided_eps_all(const OptimalPredictor& pred, const ImageGrid& x, int t,
                                      double u) {
    const int n = pred.n_conditions();
    std::vector<ImageGrid> eps_list;
    eps_list.reserve(n);
    if (u == 1.0) {
        for (int i = 0; i < n; ++i) eps_list.push_back(pred.eps(x, t, i));
    } else {
        const ImageGrid eps_u = pred.eps(x, t, OptimalPredictor::kUnconditional);
        for (int i = 0; i < n; ++i) eps_list.push_back(cfg_combine(eps_u, pred.eps(x, t, i), u));
    }
    return eps_list;
}

}  // namespace

ImageGrid interpolated_denoise_stage(const ToyWorld& world, const NoiseSchedule& sched,
                                     const RunParams& params,
                                     const std::vector<ConditionView>& conditions,
                                     const std::vector<double>& weights,
                                     const Pose& target_abs, SeededRng& rng,
                                     StageRecord* record) {
    if (conditions.empty()) {
        throw std::invalid_argument("interpolated_denoise_stage: empty condition set");
    }
    if (conditions.size() != weights.size()) {
        throw std::invalid_argument("interpolated_denoise_stage: " + std::to_string(weights.size()) +
                                    " weights for " + std::to_string(conditions.size()) + " conditions");
    }
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(wsum - 1.0) > 1e-9) {
        throw std::invalid_argument("interpolated_denoise_stage: weights sum to " + std::to_string(wsum));
    }

    const OptimalPredictor pred(world, sched, target_abs, conditions);
    const std::vector<Transition> transitions = make_transitions(sched, params);
    ImageGrid x = rng.normal_grid(world.height, world.width, world.channels);
    for (const Transition& tr : transitions) {
        const ImageGrid noise = rng.normal_grid(world.height, world.width, world.channels);
        const std::vector<ImageGrid> eps_list = guided_eps_all(pred, x, tr.t, params.guidance_scale);
        const ImageGrid eps_bar = axpy_grids(weights, eps_list);
        if (record) record->eps_norms.push_back(l2_norm(eps_bar));
        if (params.fusion_order == FusionOrder::kEpsilon) {
            x = apply_step(x, eps_bar, tr, sched, params, noise);
        } else {
            std::vector<ImageGrid> next_states;
            next_states.reserve(eps_list.size());
            for (const ImageGrid& eps_i : eps_list) {
                next_states.push_back(apply_step(x, eps_i, tr, sched, params, noise));
            }
            x = axpy_grids(weights, next_states);
        }
    }
    return x;
}

namespace {

ImageGrid stochastic_stage(const ToyWorld& world, const NoiseSchedule& sched,
                           const RunParams& params,
                           const std::vector<ConditionView>& conditions,
                           const Pose& target_abs, SeededRng& rng, SeededRng& select_rng,
                           StageRecord* record) {
    const OptimalPredictor pred(world, sched, target_abs, conditions);
    const std::vector<Transition> transitions = make_transitions(sched, params);
    const int n = static_cast<int>(conditions.size());
    ImageGrid x = rng.normal_grid(world.height, world.width, world.channels);
    for (const Transition& tr : transitions) {
        const ImageGrid noise = rng.normal_grid(world.height, world.width, world.channels);
        const int pick = select_rng.uniform_int(n);
        ImageGrid eps;
        if (params.guidance_scale == 1.0) {
            eps = pred.eps(x, tr.t, pick);
        } else {
            eps = cfg_combine(pred.eps(x, tr.t, OptimalPredictor::kUnconditional),
                              pred.eps(x, tr.t, pick), params.guidance_scale);
        }
        if (record) record->eps_norms.push_back(l2_norm(eps));
        x = apply_step(x, eps, tr, sched, params, noise);
    }
    return x;
}

/// Independent single-condition chains in lockstep, sharing the starting noise
/// and the per-step noise; the outputs are fused at the end. Each chain is
/// bit-identical to the single-condition chain run on its own.
ImageGrid outputs_stage(const ToyWorld& world, const NoiseSchedule& sched, const RunParams& params,
                        const std::vector<ConditionView>& conditions,
                        const std::vector<double>& weights, const Pose& target_abs,
                        SeededRng& rng, StageRecord* record) {
    const OptimalPredictor pred(world, sched, target_abs, conditions);
    const std::vector<Transition> transitions = make_transitions(sched, params);
    const int n = static_cast<int>(conditions.size());
    const ImageGrid x_start = rng.normal_grid(world.height, world.width, world.channels);
    std::vector<ImageGrid> xs(n, x_start);
    for (const Transition& tr : transitions) {
        const ImageGrid noise = rng.normal_grid(world.height, world.width, world.channels);
        double norm_acc = 0.0;
        for (int i = 0; i < n; ++i) {
            ImageGrid eps;
            if (params.guidance_scale == 1.0) {
                eps = pred.eps(xs[i], tr.t, i);
            } else {
                eps = cfg_combine(pred.eps(xs[i], tr.t, OptimalPredictor::kUnconditional),
                                  pred.eps(xs[i], tr.t, i), params.guidance_scale);
            }
            norm_acc += weights[i] * l2_norm(eps);
            xs[i] = apply_step(xs[i], eps, tr, sched, params, noise);
        }
        if (record) record->eps_norms.push_back(norm_acc);
    }
    return axpy_grids(weights, xs);
}

PoseOffset fuse_offsets(const std::vector<PoseOffset>& offsets, const std::vector<double>& weights) {
    if (offsets.size() == 1) return offsets[0];
    double sin_sum = 0.0, cos_sum = 0.0, elev = 0.0, dist = 0.0;
    for (size_t i = 0; i < offsets.size(); ++i) {
        sin_sum += weights[i] * std::sin(offsets[i].d_azimuth);
        cos_sum += weights[i] * std::cos(offsets[i].d_azimuth);
        elev += weights[i] * offsets[i].d_elevation;
        dist += weights[i] * offsets[i].d_distance;
    }
    return {wrap_angle(std::atan2(sin_sum, cos_sum)), elev, dist};
}

struct ActivePlan {
    std::vector<int> indices;       // into the available member list, given views first
    std::vector<double> weights;    // aligned with indices, sums to 1
    std::vector<double> full_weights;  // per available member, 0 when inactive
};

ActivePlan plan_active_set(Variant variant, const std::vector<ViewSetEntry*>& available,
                           const std::vector<double>& deltas, const RunParams& params) {
    ActivePlan plan;
    const int n_avail = static_cast<int>(available.size());

    std::vector<int> base;
    if (variant == Variant::kStandardAutoregression) {
        int last_generated = -1;
        for (int i = 0; i < n_avail; ++i) {
            if (available[i]->origin == ViewOrigin::kGenerated) last_generated = i;
        }
        if (last_generated >= 0) {
            base = {last_generated};
        } else {
            for (int i = 0; i < n_avail; ++i) base.push_back(i);
        }
    } else {
        for (int i = 0; i < n_avail; ++i) base.push_back(i);
    }

    std::vector<double> base_weights;
    if (base.size() == 1) {
        base_weights = {1.0};
    } else if (variant == Variant::kStochasticConditioning) {
        base_weights.assign(base.size(), 1.0 / static_cast<double>(base.size()));
    } else {
        std::vector<double> given_deltas, generated_deltas;
        for (int idx : base) {
            if (available[idx]->origin == ViewOrigin::kGiven) given_deltas.push_back(deltas[idx]);
            else generated_deltas.push_back(deltas[idx]);
        }
        base_weights = compute_weights(given_deltas, generated_deltas, params.weights);
    }

    // Optional cap on how many members each step consults: keep the heaviest.
    if (params.max_conditions_per_step > 0 &&
        static_cast<int>(base.size()) > params.max_conditions_per_step) {
        std::vector<int> order(base.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return base_weights[a] > base_weights[b];
        });
        order.resize(params.max_conditions_per_step);
        std::sort(order.begin(), order.end());
        std::vector<int> kept;
        std::vector<double> kept_weights;
        double total = 0.0;
        for (int o : order) {
            kept.push_back(base[o]);
            kept_weights.push_back(base_weights[o]);
            total += base_weights[o];
        }
        for (double& w : kept_weights) w /= total;
        base = std::move(kept);
        base_weights = std::move(kept_weights);
    }

    plan.indices = base;
    plan.weights = base_weights;
    plan.full_weights.assign(n_avail, 0.0);
    for (size_t i = 0; i < base.size(); ++i) plan.full_weights[base[i]] = base_weights[i];
    return plan;
}

}  // namespace

GenerationTrace run_variant(const ToyWorld& world, const NoiseSchedule& sched,
                            const RunParams& params,
                            const std::vector<ViewSetEntry>& initial_conditions,
                            const Trajectory& trajectory, uint64_t seed) {
    if (initial_conditions.empty()) {
        throw std::invalid_argument("run_variant: need at least one initial condition view");
    }
    for (const ViewSetEntry& entry : initial_conditions) {
        if (entry.image.height != world.height || entry.image.width != world.width ||
            entry.image.channels != world.channels) {
            throw std::invalid_argument("run_variant: condition image shape " +
                                        entry.image.shape_str() + " does not match the world");
        }
    }

    const auto t_start = std::chrono::steady_clock::now();
    GenerationTrace trace;
    trace.variant = params.variant;
    trace.kind = params.kind;
    trace.seed = seed;
    trace.reference_pose = world.reference_pose;
    trace.trajectory_mode = trajectory.mode;
    if (trajectory.identity_target) {
        trace.warnings.push_back("identity target: trajectory is empty, nothing generated");
    }

    std::vector<ViewSetEntry> view_set = initial_conditions;
    for (ViewSetEntry& entry : view_set) entry.origin = ViewOrigin::kGiven;

    for (size_t s = 0; s < trajectory.waypoints.size(); ++s) {
        const PoseOffset target_offset = trajectory.waypoints[s];
        const Pose target_abs = apply_offset(world.reference_pose, target_offset);

        // Direct generation never feeds generated views back in.
        std::vector<ViewSetEntry*> available;
        for (ViewSetEntry& entry : view_set) {
            if (params.variant == Variant::kDirect && entry.origin == ViewOrigin::kGenerated) continue;
            available.push_back(&entry);
        }

        std::vector<PoseOffset> rel_offsets;
        std::vector<double> deltas;
        for (const ViewSetEntry* entry : available) {
            const PoseOffset rel = relative_offset(entry->offset_from_reference, target_offset);
            rel_offsets.push_back(rel);
            deltas.push_back(rel.delta());
        }

        const ActivePlan plan = plan_active_set(params.variant, available, deltas, params);

        StageRecord record;
        record.index = static_cast<int>(s);
        record.target_offset = target_offset;
        for (size_t i = 0; i < available.size(); ++i) {
            StageMemberRecord member;
            member.offset_to_target = rel_offsets[i];
            member.origin = available[i]->origin;
            member.delta = deltas[i];
            member.weight = plan.full_weights[i];
            member.active = std::find(plan.indices.begin(), plan.indices.end(),
                                      static_cast<int>(i)) != plan.indices.end();
            record.members.push_back(member);
        }

        std::vector<ConditionView> active_conditions;
        for (int idx : plan.indices) {
            active_conditions.push_back(
                {available[idx]->image, rel_offsets[idx], available[idx]->origin});
        }

        SeededRng stage_rng(seed, stage_noise_stream(static_cast<int>(s)));
        SeededRng select_rng(seed, stage_select_stream(static_cast<int>(s)));

        ImageGrid frame;
        switch (params.variant) {
            case Variant::kDirect:
            case Variant::kInterpolatedDenoising:
            case Variant::kStandardAutoregression:
                frame = interpolated_denoise_stage(world, sched, params, active_conditions,
                                                   plan.weights, target_abs, stage_rng, &record);
                break;
            case Variant::kInterpolatedConditions: {
                std::vector<ImageGrid> images;
                std::vector<PoseOffset> offsets;
                for (const ConditionView& c : active_conditions) {
                    images.push_back(c.image);
                    offsets.push_back(c.pose);
                }
                ConditionView fused;
                fused.image = active_conditions.size() == 1 ? active_conditions[0].image
                                                            : axpy_grids(plan.weights, images);
                fused.pose = fuse_offsets(offsets, plan.weights);
                fused.origin = ViewOrigin::kGiven;
                frame = interpolated_denoise_stage(world, sched, params, {fused}, {1.0}, target_abs,
                                                   stage_rng, &record);
                break;
            }
            case Variant::kInterpolatedOutputs:
                frame = outputs_stage(world, sched, params, active_conditions, plan.weights,
                                      target_abs, stage_rng, &record);
                break;
            case Variant::kStochasticConditioning:
                frame = stochastic_stage(world, sched, params, active_conditions, target_abs,
                                         stage_rng, select_rng, &record);
                break;
        }

        if (!frame.all_finite()) {
            throw std::runtime_error("run_variant: stage " + std::to_string(s) +
                                     " produced non-finite values");
        }

        if (params.variant != Variant::kDirect) {
            view_set.push_back({clamp_unit(frame), target_offset, ViewOrigin::kGenerated});
        }
        record.frame = std::move(frame);
        trace.stages.push_back(std::move(record));
    }

    trace.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return trace;
}

GenerationTrace run_autoregressive(const ToyWorld& world, const NoiseSchedule& sched,
                                   const RunParams& params,
                                   const std::vector<ViewSetEntry>& initial_conditions,
                                   const Trajectory& trajectory, uint64_t seed) {
    RunParams p = params;
    p.variant = Variant::kInterpolatedDenoising;
    return run_variant(world, sched, p, initial_conditions, trajectory, seed);
}

}  // namespace viewfusion

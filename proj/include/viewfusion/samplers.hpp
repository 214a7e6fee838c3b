#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "viewfusion/conditioning.hpp"
#include "viewfusion/grid.hpp"
#include "viewfusion/pose.hpp"
#include "viewfusion/rng.hpp"
#include "viewfusion/schedule.hpp"
#include "viewfusion/toyworld.hpp"

namespace viewfusion {

enum class SamplerKind { kDdpm, kDdim };

enum class Variant {
    kDirect,                   // every view from the given conditions only
    kInterpolatedDenoising,    // fuse per-condition noise predictions each step
    kStandardAutoregression,   // condition on the last generated view only
    kInterpolatedConditions,   // fuse condition images/poses, then one chain
    kInterpolatedOutputs,      // independent chains per condition, fuse outputs
    kStochasticConditioning,   // resample one condition per diffusion step
};

enum class FusionOrder {
    kEpsilon,    // fuse noise predictions, then take one step
    kNextState,  // step per condition with shared noise, then fuse states
};

const char* to_string(Variant v);
const char* to_string(SamplerKind k);
const char* to_string(FusionOrder f);

struct RunParams {
    SamplerKind kind = SamplerKind::kDdim;
    int ddim_steps = 50;
    double eta = 0.0;
    double guidance_scale = 3.0;  // u; u == 1 short-circuits to the conditional prediction
    Variant variant = Variant::kInterpolatedDenoising;
    FusionOrder fusion_order = FusionOrder::kEpsilon;
    int max_conditions_per_step = 0;  // 0 = use every view-set member
    bool literal_alg1_x0 = false;     // use sqrt(1-abar_prev) inside the x0 estimate
    WeightParams weights;
};

/// One member of the growing view set, with its offset from the reference view.
struct ViewSetEntry {
    ImageGrid image;
    PoseOffset offset_from_reference;
    ViewOrigin origin = ViewOrigin::kGiven;
};

struct StageMemberRecord {
    PoseOffset offset_to_target;  // member pose relative to the stage target
    ViewOrigin origin = ViewOrigin::kGiven;
    double delta = 0.0;
    double weight = 0.0;
    bool active = true;
};

struct StageRecord {
    int index = 0;
    PoseOffset target_offset;  // from the reference view
    std::vector<StageMemberRecord> members;
    std::vector<double> eps_norms;  // L2 of the applied noise prediction per step
    ImageGrid frame;
};

/// Full record of one auto-regressive run.
struct GenerationTrace {
    Variant variant = Variant::kInterpolatedDenoising;
    SamplerKind kind = SamplerKind::kDdim;
    uint64_t seed = 0;
    Pose reference_pose;
    TrajectoryMode trajectory_mode = TrajectoryMode::kSingleTarget;
    std::vector<StageRecord> stages;
    std::vector<std::string> warnings;
    double wall_time_s = 0.0;  // reported separately from the serialized trace
};

/// Mean step of the reverse chain, mu = (x_t - beta_t/sqrt(1-abar_t) * eps_hat)/sqrt(alpha_t),
/// plus sigma_t * noise for t > 1. t = 1 returns the mean.
ImageGrid ddpm_reverse_step(const ImageGrid& x_t, int t, const ImageGrid& eps_hat,
                            const NoiseSchedule& sched, const ImageGrid& noise);

/// One DDIM transition t -> t_prev with noise scale sigma:
/// x_prev = sqrt(abar_prev) * x0_est + sqrt(1 - abar_prev - sigma^2) * eps + sigma * noise.
/// x0_est = (x_t - sqrt(1-abar_t) * eps) / sqrt(abar_t), or the literal
/// sqrt(1-abar_prev) radical when literal_alg1_x0 is set.
ImageGrid ddim_update(const ImageGrid& x_t, int t, int t_prev, const ImageGrid& eps,
                      const NoiseSchedule& sched, double sigma, const ImageGrid& noise,
                      bool literal_alg1_x0 = false);

/// Classifier-free guidance: eps_u + u * (eps_c - eps_u), computed through the
/// predictor. u == 1 returns the conditional prediction without evaluating the
/// unconditional branch.
ImageGrid guided_eps(const OptimalPredictor& pred, const ImageGrid& x_t, int t,
                     int cond_index, double u);

/// Guided DDIM step against a single condition; returns the next state and the
/// guided noise prediction it used.
struct GuidedStepResult {
    ImageGrid x_prev;
    ImageGrid eps_used;
};
GuidedStepResult ddim_guided_step(const ImageGrid& x_t, int t, int t_prev,
                                  const OptimalPredictor& pred, int cond_index,
                                  const NoiseSchedule& sched, double u, double eta,
                                  const ImageGrid& shared_noise,
                                  bool literal_alg1_x0 = false);

/// One full reverse chain for a target pose, fusing per-condition guided noise
/// predictions with the given weights at every step. All per-condition
/// branches share x_t and the per-step noise, so epsilon-fusion and
/// next-state fusion agree up to rounding.
ImageGrid interpolated_denoise_stage(const ToyWorld& world, const NoiseSchedule& sched,
                                     const RunParams& params,
                                     const std::vector<ConditionView>& conditions,
                                     const std::vector<double>& weights,
                                     const Pose& target_abs, SeededRng& rng,
                                     StageRecord* record = nullptr);

/// Auto-regressive generation along a trajectory with the interpolated
/// denoising rule (params.variant is ignored; this is the
/// interpolated-denoising path).
GenerationTrace run_autoregressive(const ToyWorld& world, const NoiseSchedule& sched,
                                   const RunParams& params,
                                   const std::vector<ViewSetEntry>& initial_conditions,
                                   const Trajectory& trajectory, uint64_t seed);

/// Generation with the per-stage procedure of params.variant substituted.
GenerationTrace run_variant(const ToyWorld& world, const NoiseSchedule& sched,
                            const RunParams& params,
                            const std::vector<ViewSetEntry>& initial_conditions,
                            const Trajectory& trajectory, uint64_t seed);

}  // namespace viewfusion

#pragma once

#include <vector>

#include "viewfusion/pose.hpp"

namespace viewfusion {

/// Temperatures for the view-distance weight schedule: tau_c governs how fast
/// the given condition views decay with distance, tau_g the generated views.
struct WeightParams {
    double tau_c = 0.5;
    double tau_g = 1.0;
};

/// Weights for k given views followed by any number of generated views.
/// Given view n: w_n = exp(-d_n/tau_c) * p_n with p_n the normalized
/// exponential share exp(-d_n/tau_c) / sum_m exp(-d_m/tau_c). Generated views
/// split the leftover mass 1 - sum(given) by normalized exp(-d/tau_g). With no
/// generated views the given weights are renormalized to sum to 1. The result
/// always sums to 1 (within rounding).
std::vector<double> compute_weights(const std::vector<double>& condition_deltas,
                                    const std::vector<double>& generated_deltas,
                                    const WeightParams& params);

enum class TrajectoryMode { kSingleTarget, kSpin };

/// Ordered waypoints (offsets from the reference view) visited by one
/// auto-regressive run.
struct Trajectory {
    TrajectoryMode mode = TrajectoryMode::kSingleTarget;
    std::vector<PoseOffset> waypoints;
    bool identity_target = false;  // single-target request that was already at the reference
};

/// Uniform march to the target: S = max(ceil(|da|/delta_max), ceil(|de|/delta_max))
/// waypoints at n/S of the full offset, ending exactly at the target. A target
/// that only moves in distance still takes one step. The identity target
/// yields an empty, flagged trajectory.
Trajectory plan_single_target(const PoseOffset& target, double delta_max);

/// Azimuth-only skip ordering {+d, -d, +2d, -2d, ...} covering a full turn in
/// n_views views (the reference view plus n_views - 1 generated ones, ending
/// opposite the reference when n_views is even). Requires n_views * delta == 2*pi.
Trajectory plan_spin(double delta, int n_views);

}  // namespace viewfusion

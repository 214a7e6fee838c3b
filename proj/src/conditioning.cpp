#include "viewfusion/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace viewfusion {

namespace {

/// Normalized exponential shares exp(-d_n/tau) / sum_m exp(-d_m/tau),
/// computed with a min-shift so extreme distances stay finite.
std::vector<double> exp_shares(const std::vector<double>& deltas, double tau) {
    const double d_min = *std::min_element(deltas.begin(), deltas.end());
    std::vector<double> shares(deltas.size());
    double total = 0.0;
    for (size_t i = 0; i < deltas.size(); ++i) {
        shares[i] = std::exp(-(deltas[i] - d_min) / tau);
        total += shares[i];
    }
    for (double& s : shares) s /= total;
    return shares;
}

}  // namespace

std::vector<double> compute_weights(const std::vector<double>& condition_deltas,
                                    const std::vector<double>& generated_deltas,
                                    const WeightParams& params) {
    if (condition_deltas.empty()) {
        throw std::invalid_argument("compute_weights: need at least one condition view");
    }
    if (!(params.tau_c > 0.0) || !(params.tau_g > 0.0)) {
        throw std::invalid_argument("compute_weights: temperatures must be positive");
    }
    for (double d : condition_deltas) {
        if (!(d >= 0.0)) throw std::invalid_argument("compute_weights: negative condition delta");
    }
    for (double d : generated_deltas) {
        if (!(d >= 0.0)) throw std::invalid_argument("compute_weights: negative generated delta");
    }

    std::vector<double> weights;
    weights.reserve(condition_deltas.size() + generated_deltas.size());

    // Given views: raw exponential decay times their normalized share. The sum
    // is bounded by the largest decay factor, so it never exceeds 1.
    const std::vector<double> shares = exp_shares(condition_deltas, params.tau_c);
    double given_mass = 0.0;
    for (size_t i = 0; i < condition_deltas.size(); ++i) {
        const double w = std::exp(-condition_deltas[i] / params.tau_c) * shares[i];
        weights.push_back(w);
        given_mass += w;
    }

    if (generated_deltas.empty()) {
        for (double& w : weights) w /= given_mass;
        return weights;
    }

    const double generated_mass = 1.0 - given_mass;
    const std::vector<double> gen_shares = exp_shares(generated_deltas, params.tau_g);
    for (double q : gen_shares) weights.push_back(generated_mass * q);
    return weights;
}

Trajectory plan_single_target(const PoseOffset& target, double delta_max) {
    if (!(delta_max > 0.0)) {
        throw std::invalid_argument("plan_single_target: delta_max must be positive");
    }
    Trajectory traj;
    traj.mode = TrajectoryMode::kSingleTarget;
    if (target.is_identity()) {
        traj.identity_target = true;
        return traj;
    }
    int steps = static_cast<int>(std::max(std::ceil(std::abs(target.d_azimuth) / delta_max),
                                          std::ceil(std::abs(target.d_elevation) / delta_max)));
    // Pure-distance moves fall outside the angular step formula; take one step.
    steps = std::max(steps, 1);
    traj.waypoints.reserve(steps);
    for (int n = 1; n <= steps; ++n) {
        if (n == steps) {
            traj.waypoints.push_back(target);
        } else {
            const double f = static_cast<double>(n) / static_cast<double>(steps);
            traj.waypoints.push_back({target.d_azimuth * f, target.d_elevation * f, target.d_distance * f});
        }
    }
    return traj;
}

Trajectory plan_spin(double delta, int n_views) {
    if (!(delta > 0.0)) throw std::invalid_argument("plan_spin: delta must be positive");
    if (n_views < 2) throw std::invalid_argument("plan_spin: need at least 2 views");
    if (std::abs(n_views * delta - 2.0 * kPi) > 1e-6) {
        throw std::invalid_argument("plan_spin: n_views * delta must equal a full turn, got " +
                                    std::to_string(n_views * delta));
    }
    Trajectory traj;
    traj.mode = TrajectoryMode::kSpin;
    traj.waypoints.reserve(n_views - 1);
    for (int m = 1; m <= (n_views - 1) / 2; ++m) {
        traj.waypoints.push_back(make_offset(m * delta, 0.0, 0.0));
        traj.waypoints.push_back(make_offset(-m * delta, 0.0, 0.0));
    }
    if (n_views % 2 == 0) {
        // Opposite view, azimuth offset of exactly half a turn.
        traj.waypoints.push_back(make_offset(kPi, 0.0, 0.0));
    }
    return traj;
}

}  // namespace viewfusion

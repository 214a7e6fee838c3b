#pragma once

#include <vector>

#include "viewfusion/grid.hpp"

namespace viewfusion {

/// Per-timestep diffusion constants. Timesteps are 1-indexed: beta[t-1] is
/// beta_t for t in {1..T}. sigma holds the DDPM posterior noise scale
/// sigma_t^2 = beta_t * (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t).
struct NoiseSchedule {
    int timesteps = 0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;
    std::vector<double> sigma;

    double beta_at(int t) const { return beta[t - 1]; }
    double alpha_at(int t) const { return alpha[t - 1]; }
    /// alpha_bar with the t = 0 extension alpha_bar_0 = 1.
    double alpha_bar_at(int t) const { return t == 0 ? 1.0 : alpha_bar[t - 1]; }
    double sigma_at(int t) const { return sigma[t - 1]; }
};

/// Linearly spaced beta schedule. Requires T >= 2 and 0 < beta_start <= beta_end < 1.
NoiseSchedule linear_schedule(int timesteps, double beta_start, double beta_end);

/// Descending subsequence of {1..T} ending at 1, plus the eta knob that scales
/// the per-transition noise (eta = 0 is fully deterministic).
struct DdimSubSchedule {
    std::vector<int> steps;  // strictly decreasing, last element 1
    double eta = 0.0;
};

/// Evenly spaced n-step sub-schedule from T down to 1.
DdimSubSchedule make_ddim_subschedule(int timesteps, int n_steps, double eta);

/// Noise scale for the DDIM transition t -> t_prev:
/// eta * sqrt((1-abar_prev)/(1-abar_t)) * sqrt(1 - abar_t/abar_prev).
double ddim_sigma(const NoiseSchedule& sched, int t, int t_prev, double eta);

/// sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps, for t in {1..T}.
ImageGrid forward_diffuse(const ImageGrid& x0, int t, const ImageGrid& eps, const NoiseSchedule& sched);

}  // namespace viewfusion

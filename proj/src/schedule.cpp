#include "viewfusion/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace viewfusion {

NoiseSchedule linear_schedule(int timesteps, double beta_start, double beta_end) {
    if (timesteps < 2) {
        throw std::invalid_argument("linear_schedule: need at least 2 timesteps, got " +
                                    std::to_string(timesteps));
    }
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw std::invalid_argument("linear_schedule: need 0 < beta_start <= beta_end < 1");
    }
    NoiseSchedule s;
    s.timesteps = timesteps;
    s.beta.resize(timesteps);
    s.alpha.resize(timesteps);
    s.alpha_bar.resize(timesteps);
    s.sigma.resize(timesteps);
    double abar = 1.0;
    for (int i = 0; i < timesteps; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(timesteps - 1);
        const double beta = beta_start + (beta_end - beta_start) * frac;
        const double abar_prev = abar;
        s.beta[i] = beta;
        s.alpha[i] = 1.0 - beta;
        abar *= s.alpha[i];
        s.alpha_bar[i] = abar;
        // DDPM posterior scale; zero at t = 1 where abar_prev = 1.
        s.sigma[i] = std::sqrt(beta * (1.0 - abar_prev) / (1.0 - abar));
    }
    return s;
}

DdimSubSchedule make_ddim_subschedule(int timesteps, int n_steps, double eta) {
    if (n_steps < 1 || n_steps > timesteps) {
        throw std::invalid_argument("make_ddim_subschedule: n_steps must be in [1, T]");
    }
    if (!(eta >= 0.0) || !(eta <= 1.0)) {
        throw std::invalid_argument("make_ddim_subschedule: eta must be in [0, 1]");
    }
    DdimSubSchedule sub;
    sub.eta = eta;
    if (n_steps == 1) {
        sub.steps = {1};
        return sub;
    }
    sub.steps.reserve(n_steps);
    for (int i = 0; i < n_steps; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n_steps - 1);
        const int t = static_cast<int>(std::lround(timesteps - frac * (timesteps - 1)));
        if (sub.steps.empty() || t < sub.steps.back()) sub.steps.push_back(t);
    }
    if (sub.steps.back() != 1) sub.steps.push_back(1);
    return sub;
}

double ddim_sigma(const NoiseSchedule& sched, int t, int t_prev, double eta) {
    if (t_prev < 0 || t_prev >= t || t > sched.timesteps) {
        throw std::invalid_argument("ddim_sigma: need 0 <= t_prev < t <= T");
    }
    if (eta == 0.0) return 0.0;
    const double abar_t = sched.alpha_bar_at(t);
    const double abar_prev = sched.alpha_bar_at(t_prev);
    return eta * std::sqrt((1.0 - abar_prev) / (1.0 - abar_t)) * std::sqrt(1.0 - abar_t / abar_prev);
}

ImageGrid forward_diffuse(const ImageGrid& x0, int t, const ImageGrid& eps, const NoiseSchedule& sched) {
    if (t < 1 || t > sched.timesteps) {
        throw std::invalid_argument("forward_diffuse: t = " + std::to_string(t) +
                                    " outside [1, " + std::to_string(sched.timesteps) + "]");
    }
    if (!x0.same_shape(eps)) {
        throw std::invalid_argument("forward_diffuse: x0 shape " + x0.shape_str() +
                                    " vs eps shape " + eps.shape_str());
    }
    const double abar = sched.alpha_bar_at(t);
    return axpy_grids({std::sqrt(abar), std::sqrt(1.0 - abar)},
                      std::vector<const ImageGrid*>{&x0, &eps});
}

}  // namespace viewfusion

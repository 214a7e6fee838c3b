#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// here deliberately re-derive quantities from first principles (sums of
// Gaussians, literal weight formulas, finite differences) instead of calling
// the library paths they are used to check.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "viewfusion/conditioning.hpp"
#include "viewfusion/grid.hpp"
#include "viewfusion/pose.hpp"
#include "viewfusion/schedule.hpp"
#include "viewfusion/toyworld.hpp"

namespace vftest {

using namespace viewfusion;

inline ToyWorld default_world() { return ToyWorld::make_default(); }

inline ToyWorld single_mode_world(double sigma_data) {
    ToyWorld w;
    w.n_modes = 1;
    w.prior = {1.0};
    w.sigma_data = sigma_data;
    return w;
}

inline bool grids_equal(const ImageGrid& a, const ImageGrid& b) {
    return a.same_shape(b) && a.data == b.data;
}

/// A condition described by an absolute pose, for the density oracle below.
struct OracleCondition {
    ImageGrid image;
    Pose abs_pose;
};

/// Independent mixture density: posterior over modes from the conditions, each
/// component pushed through the forward kernel at timestep t.
inline double oracle_log_qt(const ToyWorld& world, const std::vector<OracleCondition>& conds,
                            const Pose& target_abs, const ImageGrid& x_t, int t,
                            const NoiseSchedule& sched) {
    const int m_count = world.n_modes;
    std::vector<double> logw(m_count);
    for (int m = 0; m < m_count; ++m) logw[m] = std::log(world.prior[m]);
    for (const OracleCondition& c : conds) {
        for (int m = 0; m < m_count; ++m) {
            const ImageGrid mu = render(world, m, c.abs_pose);
            double d2 = 0.0;
            for (size_t k = 0; k < mu.data.size(); ++k) {
                const double d = c.image.data[k] - mu.data[k];
                d2 += d * d;
            }
            logw[m] -= d2 / (2.0 * world.sigma_data * world.sigma_data);
        }
    }
    double max_logw = logw[0];
    for (double v : logw) max_logw = std::max(max_logw, v);
    double norm = 0.0;
    for (double v : logw) norm += std::exp(v - max_logw);
    const double log_norm_w = max_logw + std::log(norm);

    const double abar = sched.alpha_bar_at(t);
    const double s2 = abar * world.sigma_data * world.sigma_data + (1.0 - abar);
    const double dim = static_cast<double>(x_t.size());
    std::vector<double> terms(m_count);
    for (int m = 0; m < m_count; ++m) {
        const ImageGrid mu = render(world, m, target_abs);
        double d2 = 0.0;
        for (size_t k = 0; k < mu.data.size(); ++k) {
            const double d = x_t.data[k] - std::sqrt(abar) * mu.data[k];
            d2 += d * d;
        }
        terms[m] = (logw[m] - log_norm_w) - d2 / (2.0 * s2) - 0.5 * dim * std::log(2.0 * kPi * s2);
    }
    double max_term = terms[0];
    for (double v : terms) max_term = std::max(max_term, v);
    double acc = 0.0;
    for (double v : terms) acc += std::exp(v - max_term);
    return max_term + std::log(acc);
}

/// Central-difference gradient of the oracle density.
inline ImageGrid fd_grad_log_qt(const ToyWorld& world, const std::vector<OracleCondition>& conds,
                                const Pose& target_abs, const ImageGrid& x_t, int t,
                                const NoiseSchedule& sched, double h = 1e-4) {
    ImageGrid grad(x_t.height, x_t.width, x_t.channels);
    ImageGrid probe = x_t;
    for (size_t k = 0; k < x_t.data.size(); ++k) {
        const double x0 = x_t.data[k];
        probe.data[k] = x0 + h;
        const double up = oracle_log_qt(world, conds, target_abs, probe, t, sched);
        probe.data[k] = x0 - h;
        const double down = oracle_log_qt(world, conds, target_abs, probe, t, sched);
        probe.data[k] = x0;
        grad.data[k] = (up - down) / (2.0 * h);
    }
    return grad;
}

/// Literal single-given-view weight rule: w_1 = exp(-d_1/tau_c), the generated
/// views share 1 - w_1 by normalized exponentials.
inline std::vector<double> literal_single_view_weights(double d1, const std::vector<double>& gen,
                                                       double tau_c, double tau_g) {
    std::vector<double> w;
    const double w1 = std::exp(-d1 / tau_c);
    w.push_back(w1);
    double denom = 0.0;
    for (double d : gen) denom += std::exp(-d / tau_g);
    for (double d : gen) w.push_back((1.0 - w1) * std::exp(-d / tau_g) / denom);
    if (gen.empty()) w[0] = 1.0;
    return w;
}

/// Literal k-view rule: given views get exp(-d/tau_c) times their normalized
/// exponential share; generated views split the leftover mass.
inline std::vector<double> literal_general_weights(const std::vector<double>& given,
                                                   const std::vector<double>& gen, double tau_c,
                                                   double tau_g) {
    std::vector<double> w;
    double given_denom = 0.0;
    for (double d : given) given_denom += std::exp(-d / tau_c);
    double given_mass = 0.0;
    for (double d : given) {
        const double wi = std::exp(-d / tau_c) * (std::exp(-d / tau_c) / given_denom);
        w.push_back(wi);
        given_mass += wi;
    }
    if (gen.empty()) {
        for (double& wi : w) wi /= given_mass;
        return w;
    }
    double gen_denom = 0.0;
    for (double d : gen) gen_denom += std::exp(-d / tau_g);
    for (double d : gen) w.push_back((1.0 - given_mass) * std::exp(-d / tau_g) / gen_denom);
    return w;
}

}  // namespace vftest

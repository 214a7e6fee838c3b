#pragma once

#include <vector>

#include "viewfusion/grid.hpp"
#include "viewfusion/pose.hpp"
#include "viewfusion/rng.hpp"
#include "viewfusion/schedule.hpp"

namespace viewfusion {

enum class ViewOrigin { kGiven, kGenerated };

/// One conditioning view: an image plus its pose relative to the current
/// target (condition_abs = apply_offset(target_abs, pose)).
struct ConditionView {
    ImageGrid image;
    PoseOffset pose;
    ViewOrigin origin = ViewOrigin::kGiven;
};

/// Analytic multi-view scene family: M latent object variants ("modes"), each
/// a deterministic rendering function of pose, observed with isotropic
/// Gaussian pixel noise sigma_data. Every posterior quantity is closed-form,
/// which is what makes this world usable as a ground-truth noise predictor.
///
/// The renderer draws a Gaussian body blob whose image position tracks
/// azimuth/elevation and whose apparent size tracks 1/distance, plus a
/// concentric marking whose amplitude identifies the mode. The marking sits on
/// the far side of the object: its visibility |sin(azimuth/2)| vanishes at the
/// head-on view, so a single front view genuinely underdetermines the mode
/// while off-axis views reveal it.
struct ToyWorld {
    int height = 16;
    int width = 16;
    int channels = 1;
    int n_modes = 2;
    std::vector<double> prior;  // length n_modes, sums to 1
    double sigma_data = 0.05;
    Pose reference_pose{0.0, 0.0, 1.5};

    static ToyWorld make_default();
};

/// Deterministic rendering of one mode (0-based) at an absolute pose.
ImageGrid render(const ToyWorld& world, int mode, const Pose& pose);

struct ModeResponsibilities {
    std::vector<double> values;      // sums to 1
    bool degenerate_fallback = false;  // all likelihoods vanished; prior returned
};

/// Bayes posterior over modes given condition views (non-empty):
/// r_m proportional to prior_m * prod_j N(y_j; render(m, pose_j), sigma_data^2 I).
ModeResponsibilities posterior_responsibilities(const ToyWorld& world,
                                                const std::vector<ConditionView>& conditions,
                                                const Pose& target_abs);

/// Bayes-optimal noise predictor for the mixture at the target pose:
/// eps*(x_t) = (x_t - sqrt(abar_t) * E[x0 | x_t, conditions]) / sqrt(1 - abar_t).
/// An empty condition list gives the unconditional predictor (prior-weighted),
/// which is what classifier-free guidance extrapolates against.
ImageGrid optimal_eps(const ToyWorld& world, const ImageGrid& x_t, int t,
                      const NoiseSchedule& sched,
                      const std::vector<ConditionView>& conditions,
                      const Pose& target_abs);

/// log q_t(x_t | conditions): the condition-posterior mixture pushed through
/// the forward kernel, N(sqrt(abar_t) mu_m, (abar_t sigma_data^2 + 1 - abar_t) I).
double log_marginal_density(const ToyWorld& world, const ImageGrid& x_t, int t,
                            const NoiseSchedule& sched,
                            const std::vector<ConditionView>& conditions,
                            const Pose& target_abs);

/// Ground-truth sampler: draw mode ~ responsibilities, render it at the target
/// pose, add sigma_data Gaussian noise. The reference all samplers are
/// compared against.
ImageGrid oracle_sample_view(const ToyWorld& world,
                             const std::vector<ConditionView>& conditions,
                             const Pose& target_abs, SeededRng& rng);

/// Per-stage cache of everything that does not change across diffusion steps:
/// mode renderings at the target pose and per-condition mode log-likelihoods.
/// cond_index -1 = unconditional, kAllConditions = joint, i >= 0 = view i only.
class OptimalPredictor {
public:
    static constexpr int kAllConditions = -2;
    static constexpr int kUnconditional = -1;

    OptimalPredictor(const ToyWorld& world, const NoiseSchedule& sched,
                     const Pose& target_abs,
                     const std::vector<ConditionView>& conditions);

    ImageGrid eps(const ImageGrid& x_t, int t, int cond_index) const;
    ImageGrid posterior_mean_x0(const ImageGrid& x_t, int t, int cond_index) const;
    double log_density(const ImageGrid& x_t, int t, int cond_index) const;
    /// Responsibilities before the x_t update (prior or condition posterior).
    ModeResponsibilities base_responsibilities(int cond_index) const;

    int n_conditions() const { return static_cast<int>(cond_logliks_.size()); }
    const ImageGrid& mode_mean(int mode) const { return mode_means_[mode]; }

private:
    std::vector<double> base_logits(int cond_index) const;

    const ToyWorld* world_;
    const NoiseSchedule* sched_;
    std::vector<ImageGrid> mode_means_;
    std::vector<double> log_prior_;
    std::vector<std::vector<double>> cond_logliks_;  // [condition][mode]
};

}  // namespace viewfusion

#include "viewfusion/toyworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace viewfusion {

namespace {

// Renderer geometry, in normalized coordinates where the image spans [-1, 1].
constexpr double kBackground = -0.85;
constexpr double kBodyAmplitude = 1.15;
constexpr double kBodySigma = 0.21;       // at the reference distance
constexpr double kFeatureSigmaRatio = 0.70;
constexpr double kFeatureAmplitude = 0.55;
constexpr double kSwing = 0.45;           // how far the blob center moves
constexpr double kReferenceDistance = 1.5;
constexpr double kVanishScale = 0.04;     // apparent scale below which nothing is drawn
// Per-channel tint of the mode marking for color worlds.
constexpr double kTint[3] = {1.0, -0.6, 0.3};

double mode_level(int mode, int n_modes) {
    if (n_modes == 1) return 1.0;
    return 2.0 * static_cast<double>(mode) / static_cast<double>(n_modes - 1) - 1.0;
}

double logsumexp(const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - m);
    return m + std::log(sum);
}

std::vector<double> normalize_logits(const std::vector<double>& logits, bool* degenerate) {
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    if (!std::isfinite(m)) {
        if (degenerate) *degenerate = true;
        return out;  // caller substitutes a fallback
    }
    double total = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        total += out[i];
    }
    for (double& x : out) x /= total;
    return out;
}

}  // namespace

ToyWorld ToyWorld::make_default() {
    ToyWorld w;
    w.prior = {0.5, 0.5};
    return w;
}

ImageGrid render(const ToyWorld& world, int mode, const Pose& pose) {
    if (mode < 0 || mode >= world.n_modes) {
        throw std::invalid_argument("render: mode " + std::to_string(mode) + " outside [0, " +
                                    std::to_string(world.n_modes) + ")");
    }
    if (!(pose.distance > 0.0)) throw std::invalid_argument("render: distance must be positive");

    ImageGrid g(world.height, world.width, world.channels, kBackground);
    const double scale = kReferenceDistance / pose.distance;
    if (scale < kVanishScale) return g;  // beyond visibility: every mode renders the same

    const double u0 = kSwing * std::sin(pose.azimuth);
    const double v0 = -kSwing * std::sin(pose.elevation);
    const double body_sigma = kBodySigma * scale;
    const double feat_sigma = body_sigma * kFeatureSigmaRatio;
    // The marking sits on the far side of the object: hidden head-on, fully
    // exposed at the opposite azimuth.
    const double visibility = std::abs(std::sin(pose.azimuth * 0.5));
    const double feat_amp = kFeatureAmplitude * mode_level(mode, world.n_modes) * visibility;

    const double half_w = (world.width - 1) * 0.5;
    const double half_h = (world.height - 1) * 0.5;
    for (int y = 0; y < world.height; ++y) {
        const double v = (y - half_h) / half_h;
        for (int x = 0; x < world.width; ++x) {
            const double u = (x - half_w) / half_w;
            const double r2 = (u - u0) * (u - u0) + (v - v0) * (v - v0);
            const double body = kBodyAmplitude * std::exp(-r2 / (2.0 * body_sigma * body_sigma));
            const double feat = std::exp(-r2 / (2.0 * feat_sigma * feat_sigma));
            for (int c = 0; c < world.channels; ++c) {
                const double tint = world.channels == 1 ? 1.0 : kTint[c];
                g.at(y, x, c) = kBackground + body + feat_amp * tint * feat;
            }
        }
    }
    return g;
}

OptimalPredictor::OptimalPredictor(const ToyWorld& world, const NoiseSchedule& sched,
                                   const Pose& target_abs,
                                   const std::vector<ConditionView>& conditions)
    : world_(&world), sched_(&sched) {
    if (static_cast<int>(world.prior.size()) != world.n_modes) {
        throw std::invalid_argument("OptimalPredictor: prior size != n_modes");
    }
    double prior_sum = 0.0;
    for (double p : world.prior) prior_sum += p;
    if (std::abs(prior_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("OptimalPredictor: prior must sum to 1");
    }

    mode_means_.reserve(world.n_modes);
    log_prior_.reserve(world.n_modes);
    for (int m = 0; m < world.n_modes; ++m) {
        mode_means_.push_back(render(world, m, target_abs));
        log_prior_.push_back(world.prior[m] > 0.0 ? std::log(world.prior[m])
                                                  : -std::numeric_limits<double>::infinity());
    }

    const double inv_two_var = 1.0 / (2.0 * world.sigma_data * world.sigma_data);
    cond_logliks_.reserve(conditions.size());
    for (const ConditionView& cond : conditions) {
        const Pose cond_abs = apply_offset(target_abs, cond.pose);
        std::vector<double> logliks(world.n_modes);
        for (int m = 0; m < world.n_modes; ++m) {
            const ImageGrid mean = render(world, m, cond_abs);
            const double d2 = l2_diff(cond.image, mean);
            // Exact matches stay finite even when sigma_data underflows the scale.
            logliks[m] = d2 == 0.0 ? 0.0 : -(d2 * d2) * inv_two_var;
        }
        cond_logliks_.push_back(std::move(logliks));
    }
}

std::vector<double> OptimalPredictor::base_logits(int cond_index) const {
    std::vector<double> logits = log_prior_;
    if (cond_index == kUnconditional) return logits;
    if (cond_index == kAllConditions) {
        for (const std::vector<double>& ll : cond_logliks_) {
            for (size_t m = 0; m < logits.size(); ++m) logits[m] += ll[m];
        }
        return logits;
    }
    if (cond_index < 0 || cond_index >= static_cast<int>(cond_logliks_.size())) {
        throw std::invalid_argument("OptimalPredictor: condition index out of range");
    }
    for (size_t m = 0; m < logits.size(); ++m) logits[m] += cond_logliks_[cond_index][m];
    return logits;
}

ModeResponsibilities OptimalPredictor::base_responsibilities(int cond_index) const {
    ModeResponsibilities result;
    bool degenerate = false;
    result.values = normalize_logits(base_logits(cond_index), &degenerate);
    if (degenerate) {
        result.values = world_->prior;
        result.degenerate_fallback = true;
    }
    return result;
}

ImageGrid OptimalPredictor::posterior_mean_x0(const ImageGrid& x_t, int t, int cond_index) const {
    const double abar = sched_->alpha_bar_at(t);
    const double sqrt_abar = std::sqrt(abar);
    const double var_data = world_->sigma_data * world_->sigma_data;
    const double s2 = abar * var_data + (1.0 - abar);  // marginal variance of x_t given the mode
    const double shrink = sqrt_abar * var_data / s2;

    // Responsibilities updated with the x_t likelihood against the
    // forward-scaled mode means.
    std::vector<double> logits = base_logits(cond_index);
    for (size_t m = 0; m < logits.size(); ++m) {
        double d2 = 0.0;
        const std::vector<double>& mu = mode_means_[m].data;
        for (size_t k = 0; k < x_t.data.size(); ++k) {
            const double d = x_t.data[k] - sqrt_abar * mu[k];
            d2 += d * d;
        }
        logits[m] += -d2 / (2.0 * s2);
    }
    bool degenerate = false;
    std::vector<double> resp = normalize_logits(logits, &degenerate);
    if (degenerate) resp = world_->prior;

    // E[x0 | x_t] = sum_m r_m * (mu_m + shrink * (x_t - sqrt(abar) mu_m))
    ImageGrid out(x_t.height, x_t.width, x_t.channels, 0.0);
    for (size_t m = 0; m < resp.size(); ++m) {
        const double r = resp[m];
        if (r == 0.0) continue;
        const std::vector<double>& mu = mode_means_[m].data;
        for (size_t k = 0; k < out.data.size(); ++k) {
            out.data[k] += r * (mu[k] + shrink * (x_t.data[k] - sqrt_abar * mu[k]));
        }
    }
    return out;
}

ImageGrid OptimalPredictor::eps(const ImageGrid& x_t, int t, int cond_index) const {
    const double abar = sched_->alpha_bar_at(t);
    const ImageGrid x0_mean = posterior_mean_x0(x_t, t, cond_index);
    const double inv_sqrt_one_minus = 1.0 / std::sqrt(1.0 - abar);
    const double sqrt_abar = std::sqrt(abar);
    ImageGrid out(x_t.height, x_t.width, x_t.channels, 0.0);
    for (size_t k = 0; k < out.data.size(); ++k) {
        out.data[k] = (x_t.data[k] - sqrt_abar * x0_mean.data[k]) * inv_sqrt_one_minus;
    }
    return out;
}

double OptimalPredictor::log_density(const ImageGrid& x_t, int t, int cond_index) const {
    const double abar = sched_->alpha_bar_at(t);
    const double var_data = world_->sigma_data * world_->sigma_data;
    const double s2 = abar * var_data + (1.0 - abar);
    const double dim = static_cast<double>(x_t.size());
    const double log_norm = -0.5 * dim * std::log(2.0 * kPi * s2);

    bool degenerate = false;
    std::vector<double> base = normalize_logits(base_logits(cond_index), &degenerate);
    if (degenerate) base = world_->prior;

    std::vector<double> terms(base.size());
    const double sqrt_abar = std::sqrt(abar);
    for (size_t m = 0; m < base.size(); ++m) {
        double d2 = 0.0;
        const std::vector<double>& mu = mode_means_[m].data;
        for (size_t k = 0; k < x_t.data.size(); ++k) {
            const double d = x_t.data[k] - sqrt_abar * mu[k];
            d2 += d * d;
        }
        terms[m] = (base[m] > 0.0 ? std::log(base[m]) : -std::numeric_limits<double>::infinity()) -
                   d2 / (2.0 * s2) + log_norm;
    }
    return logsumexp(terms);
}

ModeResponsibilities posterior_responsibilities(const ToyWorld& world,
                                                const std::vector<ConditionView>& conditions,
                                                const Pose& target_abs) {
    if (conditions.empty()) {
        throw std::invalid_argument("posterior_responsibilities: need at least one condition");
    }
    const double inv_two_var = 1.0 / (2.0 * world.sigma_data * world.sigma_data);
    std::vector<double> logits(world.n_modes);
    for (int m = 0; m < world.n_modes; ++m) {
        logits[m] = world.prior[m] > 0.0 ? std::log(world.prior[m])
                                         : -std::numeric_limits<double>::infinity();
    }
    for (const ConditionView& cond : conditions) {
        const Pose cond_abs = apply_offset(target_abs, cond.pose);
        for (int m = 0; m < world.n_modes; ++m) {
            const double d2 = l2_diff(cond.image, render(world, m, cond_abs));
            if (d2 != 0.0) logits[m] += -(d2 * d2) * inv_two_var;
        }
    }
    ModeResponsibilities result;
    bool degenerate = false;
    result.values = normalize_logits(logits, &degenerate);
    if (degenerate) {
        result.values = world.prior;
        result.degenerate_fallback = true;
    }
    return result;
}

ImageGrid optimal_eps(const ToyWorld& world, const ImageGrid& x_t, int t,
                      const NoiseSchedule& sched,
                      const std::vector<ConditionView>& conditions,
                      const Pose& target_abs) {
    if (t < 1 || t > sched.timesteps) {
        throw std::invalid_argument("optimal_eps: t outside [1, T]");
    }
    OptimalPredictor pred(world, sched, target_abs, conditions);
    const int index = conditions.empty() ? OptimalPredictor::kUnconditional
                                         : OptimalPredictor::kAllConditions;
    return pred.eps(x_t, t, index);
}

double log_marginal_density(const ToyWorld& world, const ImageGrid& x_t, int t,
                            const NoiseSchedule& sched,
                            const std::vector<ConditionView>& conditions,
                            const Pose& target_abs) {
    OptimalPredictor pred(world, sched, target_abs, conditions);
    const int index = conditions.empty() ? OptimalPredictor::kUnconditional
                                         : OptimalPredictor::kAllConditions;
    return pred.log_density(x_t, t, index);
}

ImageGrid oracle_sample_view(const ToyWorld& world,
                             const std::vector<ConditionView>& conditions,
                             const Pose& target_abs, SeededRng& rng) {
    ModeResponsibilities resp = posterior_responsibilities(world, conditions, target_abs);
    const double draw = rng.uniform();
    int mode = world.n_modes - 1;
    double cum = 0.0;
    for (int m = 0; m < world.n_modes; ++m) {
        cum += resp.values[m];
        if (draw < cum) {
            mode = m;
            break;
        }
    }
    ImageGrid sample = render(world, mode, target_abs);
    for (double& v : sample.data) v += world.sigma_data * rng.normal();
    return sample;
}

}  // namespace viewfusion

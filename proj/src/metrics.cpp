#include "viewfusion/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace viewfusion {

namespace {

/// Channel-averaged luminance plane.
std::vector<double> luminance(const ImageGrid& g) {
    std::vector<double> out(static_cast<size_t>(g.height) * g.width);
    if (g.channels == 1) {
        out.assign(g.data.begin(), g.data.end());
        return out;
    }
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            double sum = 0.0;
            for (int c = 0; c < g.channels; ++c) sum += g.at(y, x, c);
            out[static_cast<size_t>(y) * g.width + x] = sum / g.channels;
        }
    }
    return out;
}

}  // namespace

double ssim(const ImageGrid& a, const ImageGrid& b, int window, double k1, double k2) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("ssim: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
    if (window < 1 || window % 2 == 0 || window > std::min(a.height, a.width)) {
        throw std::invalid_argument("ssim: window must be odd and fit inside the image");
    }
    const double dynamic_range = 2.0;  // values in [-1, 1]
    const double c1 = (k1 * dynamic_range) * (k1 * dynamic_range);
    const double c2 = (k2 * dynamic_range) * (k2 * dynamic_range);

    const std::vector<double> la = luminance(a);
    const std::vector<double> lb = luminance(b);
    const int w = a.width;
    const double n = static_cast<double>(window) * window;

    double total = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + window <= a.height; ++y0) {
        for (int x0 = 0; x0 + window <= a.width; ++x0) {
            double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
            for (int dy = 0; dy < window; ++dy) {
                for (int dx = 0; dx < window; ++dx) {
                    const double va = la[static_cast<size_t>(y0 + dy) * w + (x0 + dx)];
                    const double vb = lb[static_cast<size_t>(y0 + dy) * w + (x0 + dx)];
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            }
            const double mu_a = sa / n;
            const double mu_b = sb / n;
            const double var_a = saa / n - mu_a * mu_a;
            const double var_b = sbb / n - mu_b * mu_b;
            const double cov = sab / n - mu_a * mu_b;
            const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            ++count;
        }
    }
    return total / count;
}

int decode_mode(const ToyWorld& world, const ImageGrid& frame, const Pose& pose_abs) {
    if (frame.height != world.height || frame.width != world.width ||
        frame.channels != world.channels) {
        throw std::invalid_argument("decode_mode: frame shape " + frame.shape_str() +
                                    " does not match the world");
    }
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int m = 0; m < world.n_modes; ++m) {
        const double d = l2_diff(frame, render(world, m, pose_abs));
        if (d < best_dist) {  // strict: ties keep the lowest index
            best_dist = d;
            best = m;
        }
    }
    return best;
}

ConsistencyReport adjacent_consistency(const std::vector<ImageGrid>& frames, bool cyclic,
                                       const ToyWorld* world, const std::vector<Pose>* poses) {
    if (frames.size() < 2) {
        throw std::invalid_argument("adjacent_consistency: need at least 2 frames");
    }
    if (world && (!poses || poses->size() != frames.size())) {
        throw std::invalid_argument("adjacent_consistency: mode decoding needs one pose per frame");
    }

    ConsistencyReport report;
    report.cyclic = cyclic;
    if (world) {
        report.decoded_modes.reserve(frames.size());
        for (size_t i = 0; i < frames.size(); ++i) {
            report.decoded_modes.push_back(decode_mode(*world, frames[i], (*poses)[i]));
        }
    }

    const size_t n_pairs = cyclic ? frames.size() : frames.size() - 1;
    double sum_psnr = 0.0, sum_ssim = 0.0, sum_l1 = 0.0;
    double min_psnr = std::numeric_limits<double>::infinity();
    double min_ssim = std::numeric_limits<double>::infinity();
    int agreements = 0;
    for (size_t i = 0; i < n_pairs; ++i) {
        const size_t j = (i + 1) % frames.size();
        PairMetrics pm;
        pm.a = static_cast<int>(i);
        pm.b = static_cast<int>(j);
        pm.psnr = psnr(frames[i], frames[j]);
        pm.ssim = ssim(frames[i], frames[j]);
        pm.l1 = l1_mean(frames[i], frames[j]);
        if (world) {
            pm.mode_agree = report.decoded_modes[i] == report.decoded_modes[j];
            agreements += *pm.mode_agree ? 1 : 0;
        }
        sum_psnr += pm.psnr;
        sum_ssim += pm.ssim;
        sum_l1 += pm.l1;
        min_psnr = std::min(min_psnr, pm.psnr);
        min_ssim = std::min(min_ssim, pm.ssim);
        report.pairs.push_back(pm);
    }
    const double denom = static_cast<double>(n_pairs);
    report.mean_psnr = sum_psnr / denom;
    report.mean_ssim = sum_ssim / denom;
    report.mean_l1 = sum_l1 / denom;
    report.min_psnr = min_psnr;
    report.min_ssim = min_ssim;
    if (world) report.mode_agreement_rate = agreements / denom;
    return report;
}

ImageGrid spacetime_slice(const std::vector<ImageGrid>& frames, int scanline) {
    if (frames.empty()) throw std::invalid_argument("spacetime_slice: no frames");
    const ImageGrid& first = frames[0];
    if (scanline < 0 || scanline >= first.height) {
        throw std::invalid_argument("spacetime_slice: scanline " + std::to_string(scanline) +
                                    " outside [0, " + std::to_string(first.height) + ")");
    }
    for (size_t i = 1; i < frames.size(); ++i) {
        if (!frames[i].same_shape(first)) {
            throw std::invalid_argument("spacetime_slice: frame " + std::to_string(i) +
                                        " has shape " + frames[i].shape_str() + ", expected " +
                                        first.shape_str());
        }
    }
    ImageGrid slice(static_cast<int>(frames.size()), first.width, first.channels);
    for (size_t f = 0; f < frames.size(); ++f) {
        for (int x = 0; x < first.width; ++x) {
            for (int c = 0; c < first.channels; ++c) {
                slice.at(static_cast<int>(f), x, c) = frames[f].at(scanline, x, c);
            }
        }
    }
    return slice;
}

}  // namespace viewfusion

#pragma once

#include <optional>
#include <vector>

#include "viewfusion/grid.hpp"
#include "viewfusion/pose.hpp"
#include "viewfusion/toyworld.hpp"

namespace viewfusion {

/// Mean local SSIM over luminance with a uniform window. Dynamic range 2
/// (images in [-1, 1]); population moments inside each window.
double ssim(const ImageGrid& a, const ImageGrid& b, int window = 7,
            double k1 = 0.01, double k2 = 0.03);

/// Nearest-rendering classifier: argmin_m ||frame - render(m, pose)||_2,
/// ties broken toward the lowest mode index.
int decode_mode(const ToyWorld& world, const ImageGrid& frame, const Pose& pose_abs);

struct PairMetrics {
    int a = 0;
    int b = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    double l1 = 0.0;
    std::optional<bool> mode_agree;
};

struct ConsistencyReport {
    bool cyclic = false;
    std::vector<PairMetrics> pairs;
    std::vector<int> decoded_modes;  // per frame, empty without a world
    double mean_psnr = 0.0;
    double min_psnr = 0.0;
    double mean_ssim = 0.0;
    double min_ssim = 0.0;
    double mean_l1 = 0.0;
    double mode_agreement_rate = -1.0;  // -1 when modes were not decoded
};

/// Pairwise metrics over consecutive frames (wrapping when cyclic). Modes are
/// decoded when a world and per-frame poses are supplied. Needs >= 2 frames.
ConsistencyReport adjacent_consistency(const std::vector<ImageGrid>& frames, bool cyclic,
                                       const ToyWorld* world = nullptr,
                                       const std::vector<Pose>* poses = nullptr);

/// Stack one scanline from each frame into a (frame-count x width) image.
ImageGrid spacetime_slice(const std::vector<ImageGrid>& frames, int scanline);

}  // namespace viewfusion

#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "viewfusion/metrics.hpp"
#include "viewfusion/rng.hpp"

using namespace viewfusion;

namespace {

Pose pose_deg(double az, double el = 0.0, double dist = 1.5) {
    return {deg_to_rad(az), deg_to_rad(el), dist};
}

/// Period-7 stripes: every 7x7 window sums to zero, so a sign flip leaves the
/// luminance term at 1 and drives the structure term negative.
ImageGrid sine_grid(int n) {
    ImageGrid g(n, n, 1);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            g.at(y, x, 0) = 0.5 * std::sin(2.0 * kPi * (x + 3 * y) / 7.0);
        }
    }
    return g;
}

}  // namespace

TEST_CASE("ssim identities") {
    const ToyWorld world = vftest::default_world();
    const ImageGrid a = render(world, 0, pose_deg(50.0));

    SUBCASE("self similarity is exactly 1") {
        CHECK(ssim(a, a) == 1.0);
        const ImageGrid s = sine_grid(16);
        CHECK(ssim(s, s) == 1.0);
    }
    SUBCASE("symmetry is exact") {
        SeededRng rng(12);
        ImageGrid b = a;
        for (double& v : b.data) v += 0.1 * rng.normal();
        CHECK(ssim(a, b) == ssim(b, a));
    }
    SUBCASE("sign flip of a zero-mean pattern is negative") {
        const ImageGrid s = sine_grid(16);
        const ImageGrid neg = axpy_grids({-1.0}, {s});
        CHECK(ssim(s, neg) < 0.0);
    }
    SUBCASE("small noise keeps ssim high") {
        SeededRng rng(13);
        ImageGrid b = a;
        for (double& v : b.data) v += 0.01 * rng.normal();
        CHECK(ssim(a, b) > 0.95);
    }
    SUBCASE("window validation") {
        CHECK_THROWS_AS(ssim(a, a, 4), std::invalid_argument);
        CHECK_THROWS_AS(ssim(a, a, 17), std::invalid_argument);
        ImageGrid b(8, 8, 1);
        CHECK_THROWS_AS(ssim(a, b), std::invalid_argument);
    }
}

TEST_CASE("decode_mode") {
    const ToyWorld world = vftest::default_world();
    const Pose pose = pose_deg(90.0);

    SUBCASE("exact renderings decode to their mode") {
        CHECK(decode_mode(world, render(world, 0, pose), pose) == 0);
        CHECK(decode_mode(world, render(world, 1, pose), pose) == 1);
    }
    SUBCASE("noise at sigma_data rarely flips a well-separated pose") {
        SeededRng rng(3);
        int correct = 0;
        const int n = 3000;
        const ImageGrid clean = render(world, 1, pose);
        for (int i = 0; i < n; ++i) {
            ImageGrid noisy = clean;
            for (double& v : noisy.data) v += world.sigma_data * rng.normal();
            correct += decode_mode(world, noisy, pose) == 1 ? 1 : 0;
        }
        CHECK(correct >= static_cast<int>(n * 0.999));
    }
    SUBCASE("exact midpoint resolves to the lowest index") {
        const ImageGrid mid =
            axpy_grids({0.5, 0.5}, {render(world, 0, pose), render(world, 1, pose)});
        CHECK(decode_mode(world, mid, pose) == 0);
    }
}

TEST_CASE("adjacent consistency") {
    const ToyWorld world = vftest::default_world();
    const Pose pose = pose_deg(90.0);
    const ImageGrid f0 = render(world, 0, pose);
    const ImageGrid f1 = render(world, 1, pose);

    SUBCASE("identical frames") {
        const std::vector<ImageGrid> frames{f0, f0, f0};
        const std::vector<Pose> poses{pose, pose, pose};
        const ConsistencyReport rep = adjacent_consistency(frames, true, &world, &poses);
        CHECK(rep.pairs.size() == 3);
        CHECK(rep.mean_psnr == kPsnrCap);
        CHECK(rep.mean_ssim == 1.0);
        CHECK(rep.mode_agreement_rate == 1.0);
    }
    SUBCASE("alternating modes never agree") {
        const std::vector<ImageGrid> frames{f0, f1, f0, f1};
        const std::vector<Pose> poses{pose, pose, pose, pose};
        const ConsistencyReport rep = adjacent_consistency(frames, true, &world, &poses);
        CHECK(rep.mode_agreement_rate == 0.0);
    }
    SUBCASE("pair counts: cyclic N, linear N-1") {
        const std::vector<ImageGrid> frames{f0, f0, f0, f0, f0};
        CHECK(adjacent_consistency(frames, true).pairs.size() == 5);
        CHECK(adjacent_consistency(frames, false).pairs.size() == 4);
    }
    SUBCASE("fewer than two frames is an error") {
        CHECK_THROWS_AS(adjacent_consistency({f0}, false), std::invalid_argument);
    }
    SUBCASE("agreement depends only on the equality pattern of the labels") {
        const std::vector<ImageGrid> frames{f0, f0, f1, f1};
        const std::vector<Pose> poses{pose, pose, pose, pose};
        const ConsistencyReport rep = adjacent_consistency(frames, true, &world, &poses);
        CHECK(rep.decoded_modes == std::vector<int>{0, 0, 1, 1});
        CHECK(rep.mode_agreement_rate == 0.5);
        // Relabeled modes keep the same pairwise-equality pattern.
        int agree = 0;
        for (size_t i = 0; i < rep.decoded_modes.size(); ++i) {
            const size_t j = (i + 1) % rep.decoded_modes.size();
            agree += (1 - rep.decoded_modes[i]) == (1 - rep.decoded_modes[j]) ? 1 : 0;
        }
        CHECK(agree / 4.0 == rep.mode_agreement_rate);
    }
}

TEST_CASE("independent oracle draws under an uninformative condition agree half the time") {
    const ToyWorld world = vftest::default_world();
    const Pose target = pose_deg(90.0);
    const ConditionView neutral{render(world, 0, pose_deg(0.0)),
                                offset_between(target, pose_deg(0.0)), ViewOrigin::kGiven};
    SeededRng rng(8);
    std::vector<ImageGrid> frames;
    std::vector<Pose> poses;
    for (int i = 0; i < 200; ++i) {
        frames.push_back(oracle_sample_view(world, {neutral}, target, rng));
        poses.push_back(target);
    }
    const ConsistencyReport rep = adjacent_consistency(frames, false, &world, &poses);
    CHECK(rep.mode_agreement_rate > 0.38);
    CHECK(rep.mode_agreement_rate < 0.62);
}

TEST_CASE("spacetime slice") {
    const ToyWorld world = vftest::default_world();

    SUBCASE("single frame returns its row") {
        const ImageGrid f = render(world, 0, pose_deg(45.0));
        const ImageGrid slice = spacetime_slice({f}, 7);
        CHECK(slice.height == 1);
        CHECK(slice.width == f.width);
        for (int x = 0; x < f.width; ++x) CHECK(slice.at(0, x, 0) == f.at(7, x, 0));
    }
    SUBCASE("constant frames give a constant slice") {
        const ImageGrid f(8, 8, 1, 0.3);
        const ImageGrid slice = spacetime_slice({f, f, f}, 2);
        for (double v : slice.data) CHECK(v == 0.3);
    }
    SUBCASE("a smooth spin leaves a continuous band") {
        std::vector<ImageGrid> frames;
        for (int az = 0; az < 360; az += 10) {
            frames.push_back(render(world, 0, pose_deg(az)));
        }
        const int row = world.height / 2;
        const ImageGrid slice = spacetime_slice(frames, row);
        int prev_peak = -1;
        for (int f = 0; f < slice.height; ++f) {
            int peak = 0;
            for (int x = 1; x < slice.width; ++x) {
                if (slice.at(f, x, 0) > slice.at(f, peak, 0)) peak = x;
            }
            if (prev_peak >= 0) CHECK(std::abs(peak - prev_peak) <= 2);
            prev_peak = peak;
        }
    }
    SUBCASE("scanline bounds") {
        const ImageGrid f(8, 8, 1, 0.0);
        CHECK_THROWS_AS(spacetime_slice({f}, 8), std::invalid_argument);
        CHECK_THROWS_AS(spacetime_slice({f}, -1), std::invalid_argument);
        CHECK_THROWS_AS(spacetime_slice({}, 0), std::invalid_argument);
    }
}

#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "viewfusion/toyworld.hpp"

using namespace viewfusion;
using vftest::OracleCondition;

namespace {

Pose pose_deg(double az, double el = 0.0, double dist = 1.5) {
    return {deg_to_rad(az), deg_to_rad(el), dist};
}

ConditionView make_condition(const ToyWorld& world, int mode, const Pose& target_abs,
                             const Pose& cond_abs) {
    return {render(world, mode, cond_abs), offset_between(target_abs, cond_abs), ViewOrigin::kGiven};
}

}  // namespace

TEST_CASE("render is deterministic and validates the mode") {
    const ToyWorld world = vftest::default_world();
    const ImageGrid a = render(world, 0, pose_deg(40.0));
    const ImageGrid b = render(world, 0, pose_deg(40.0));
    CHECK(vftest::grids_equal(a, b));
    CHECK_THROWS_AS(render(world, 2, pose_deg(0.0)), std::invalid_argument);
    CHECK_THROWS_AS(render(world, -1, pose_deg(0.0)), std::invalid_argument);
}

TEST_CASE("renders stay inside [-1, 1]") {
    const ToyWorld world = vftest::default_world();
    for (double az = -180.0; az <= 180.0; az += 15.0) {
        for (double d : {1.0, 1.5, 2.0}) {
            for (int m = 0; m < 2; ++m) {
                const ImageGrid g = render(world, m, pose_deg(az, 10.0, d));
                for (double v : g.data) {
                    CHECK(v >= -1.0);
                    CHECK(v <= 1.0);
                }
            }
        }
    }
}

TEST_CASE("modes are separable away from the head-on view") {
    const ToyWorld world = vftest::default_world();
    const double min_sep = 4.0 * world.sigma_data;
    for (double az = 15.0; az <= 345.0; az += 15.0) {
        for (double el : {-30.0, 0.0, 30.0}) {
            for (double d : {1.2, 1.5, 2.0}) {
                const double sep =
                    l2_diff(render(world, 0, pose_deg(az, el, d)), render(world, 1, pose_deg(az, el, d)));
                INFO("az=", az, " el=", el, " d=", d, " sep=", sep);
                CHECK(sep >= min_sep);
            }
        }
    }
}

TEST_CASE("the head-on view hides the mode, the opposite view exposes it") {
    const ToyWorld world = vftest::default_world();
    // Head-on: bit-identical across modes (the ambiguity the sampler faces).
    CHECK(vftest::grids_equal(render(world, 0, pose_deg(0.0)), render(world, 1, pose_deg(0.0))));
    // Opposite: the marking is fully exposed.
    const double sep_back = l2_diff(render(world, 0, pose_deg(180.0)), render(world, 1, pose_deg(180.0)));
    CHECK(sep_back > 1.0);
    // For one mode, front and back differ only by the marking.
    const double front_back = l2_diff(render(world, 1, pose_deg(0.0)), render(world, 1, pose_deg(180.0)));
    CHECK(front_back > 0.5);
}

TEST_CASE("far-away poses render identically for every mode") {
    const ToyWorld world = vftest::default_world();
    const Pose far = pose_deg(60.0, 0.0, 60.0);
    CHECK(vftest::grids_equal(render(world, 0, far), render(world, 1, far)));
}

TEST_CASE("posterior responsibilities") {
    const ToyWorld world = vftest::default_world();
    const Pose target = pose_deg(90.0);

    SUBCASE("an exact rendering pins its mode") {
        const auto r = posterior_responsibilities(
            world, {make_condition(world, 1, target, pose_deg(120.0))}, target);
        CHECK(r.values[1] > 0.999);
        CHECK_FALSE(r.degenerate_fallback);
    }
    SUBCASE("the synthetic midpoint condition splits evenly") {
        const Pose cond_pose = pose_deg(120.0);
        const ImageGrid mid =
            axpy_grids({0.5, 0.5}, {render(world, 0, cond_pose), render(world, 1, cond_pose)});
        const ConditionView cond{mid, offset_between(target, cond_pose), ViewOrigin::kGiven};
        const auto r = posterior_responsibilities(world, {cond}, target);
        CHECK(r.values[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(r.values[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("a head-on condition carries no mode information") {
        const auto r = posterior_responsibilities(
            world, {make_condition(world, 0, target, pose_deg(0.0))}, target);
        CHECK(r.values[0] == doctest::Approx(world.prior[0]).epsilon(1e-9));
        CHECK(r.values[1] == doctest::Approx(world.prior[1]).epsilon(1e-9));
    }
    SUBCASE("empty condition list is an error") {
        CHECK_THROWS_AS(posterior_responsibilities(world, {}, target), std::invalid_argument);
    }
    SUBCASE("vanished likelihoods fall back to the prior, flagged") {
        ToyWorld collapsed = world;
        collapsed.sigma_data = 1e-300;  // any mismatch underflows every mode
        ImageGrid off = render(collapsed, 0, pose_deg(120.0));
        off.data[0] += 0.5;
        const ConditionView cond{off, offset_between(target, pose_deg(120.0)), ViewOrigin::kGiven};
        const auto r = posterior_responsibilities(collapsed, {cond}, target);
        CHECK(r.degenerate_fallback);
        CHECK(r.values == collapsed.prior);
    }
    SUBCASE("normalization holds for random condition sets") {
        SeededRng rng(3);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<ConditionView> conds;
            const int n = 1 + rng.uniform_int(3);
            for (int i = 0; i < n; ++i) {
                const Pose p = pose_deg(360.0 * rng.uniform() - 180.0, 20.0 * rng.uniform() - 10.0,
                                        1.2 + 0.6 * rng.uniform());
                conds.push_back(make_condition(world, rng.uniform_int(2), target, p));
            }
            const auto r = posterior_responsibilities(world, conds, target);
            double sum = 0.0;
            for (double v : r.values) sum += v;
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("adding a view of mode m never decreases its responsibility") {
    const ToyWorld world = vftest::default_world();
    const Pose target = pose_deg(45.0);
    SeededRng rng(9);
    for (int trial = 0; trial < 40; ++trial) {
        const int m = rng.uniform_int(2);
        std::vector<ConditionView> conds{
            make_condition(world, rng.uniform_int(2), target,
                           pose_deg(15.0 + 330.0 * rng.uniform()))};
        const double before = posterior_responsibilities(world, conds, target).values[m];
        conds.push_back(make_condition(world, m, target, pose_deg(15.0 + 330.0 * rng.uniform())));
        const double after = posterior_responsibilities(world, conds, target).values[m];
        CHECK(after >= before - 1e-12);
    }
}

TEST_CASE("single tight mode gives the plain Gaussian noise estimate") {
    ToyWorld world = vftest::single_mode_world(1e-8);
    const NoiseSchedule sched = linear_schedule(100, 1e-3, 0.05);
    const Pose target = pose_deg(70.0);
    const ImageGrid mu = render(world, 0, target);
    SeededRng rng(21);
    const int t = 40;
    const ImageGrid x_t = forward_diffuse(mu, t, rng.normal_grid(16, 16, 1), sched);

    const ImageGrid eps = optimal_eps(world, x_t, t, sched, {}, target);
    const double abar = sched.alpha_bar_at(t);
    ImageGrid want(16, 16, 1);
    for (size_t k = 0; k < want.size(); ++k) {
        want.data[k] = (x_t.data[k] - std::sqrt(abar) * mu.data[k]) / std::sqrt(1.0 - abar);
    }
    CHECK(linf_diff(eps, want) < 1e-6);
}

TEST_CASE("optimal eps matches the finite-difference score") {
    const ToyWorld world = vftest::default_world();
    const NoiseSchedule sched = linear_schedule(1000, 1e-4, 0.02);
    const Pose target = pose_deg(60.0);
    SeededRng rng(33);

    for (int trial = 0; trial < 20; ++trial) {
        const int t = 1 + rng.uniform_int(1000);
        const int mode = rng.uniform_int(2);
        ImageGrid x0 = render(world, mode, target);
        for (double& v : x0.data) v += world.sigma_data * rng.normal();
        const ImageGrid x_t = forward_diffuse(x0, t, rng.normal_grid(16, 16, 1), sched);

        std::vector<ConditionView> conds;
        std::vector<OracleCondition> oracle_conds;
        if (trial % 2 == 1) {
            const Pose cond_pose = pose_deg(30.0 + 300.0 * rng.uniform());
            conds.push_back(make_condition(world, mode, target, cond_pose));
            oracle_conds.push_back({conds[0].image, cond_pose});
        }

        const ImageGrid eps = optimal_eps(world, x_t, t, sched, conds, target);
        const ImageGrid grad = vftest::fd_grad_log_qt(world, oracle_conds, target, x_t, t, sched);
        const double scale = -std::sqrt(1.0 - sched.alpha_bar_at(t));
        const ImageGrid eps_fd = axpy_grids({scale}, {grad});
        const double rel = l2_diff(eps, eps_fd) / l2_norm(eps_fd);
        INFO("t=", t, " rel=", rel);
        CHECK(rel < 1e-3);
    }
}

TEST_CASE("noise estimate shrinks when x_t sits on a mode mean") {
    const ToyWorld world = vftest::default_world();
    const NoiseSchedule sched = linear_schedule(1000, 1e-4, 0.02);
    const Pose target = pose_deg(90.0);
    const int t = 300;  // abar around 0.5: modes well separated under the forward kernel
    ImageGrid zero(16, 16, 1, 0.0);
    const ImageGrid x_t = forward_diffuse(render(world, 1, target), t, zero, sched);
    const ImageGrid eps =
        optimal_eps(world, x_t, t, sched, {make_condition(world, 1, target, pose_deg(120.0))}, target);
    CHECK(l2_norm(eps) / std::sqrt(static_cast<double>(eps.size())) < 0.05);
}

TEST_CASE("log marginal density agrees with the independent oracle") {
    const ToyWorld world = vftest::default_world();
    const NoiseSchedule sched = linear_schedule(1000, 1e-4, 0.02);
    const Pose target = pose_deg(45.0);
    SeededRng rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        const int t = 1 + rng.uniform_int(1000);
        const ImageGrid x_t = rng.normal_grid(16, 16, 1);
        const double got = log_marginal_density(world, x_t, t, sched, {}, target);
        const double want = vftest::oracle_log_qt(world, {}, target, x_t, t, sched);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("oracle sampler") {
    const ToyWorld world = vftest::default_world();
    const Pose target = pose_deg(90.0);

    SUBCASE("deterministic under a fixed seed") {
        const std::vector<ConditionView> conds{make_condition(world, 0, target, pose_deg(45.0))};
        SeededRng r1(5), r2(5);
        CHECK(vftest::grids_equal(oracle_sample_view(world, conds, target, r1),
                                  oracle_sample_view(world, conds, target, r2)));
    }
    SUBCASE("peaked responsibilities return the MAP rendering") {
        ToyWorld tight = world;
        tight.sigma_data = 1e-9;
        const std::vector<ConditionView> conds{make_condition(tight, 1, target, pose_deg(90.0))};
        SeededRng rng(6);
        const ImageGrid s = oracle_sample_view(tight, conds, target, rng);
        CHECK(linf_diff(s, render(tight, 1, target)) < 1e-6);
    }
    SUBCASE("a head-on condition leaves a fair coin over modes") {
        const std::vector<ConditionView> conds{make_condition(world, 0, target, pose_deg(0.0))};
        SeededRng rng(7);
        int mode1 = 0;
        for (int i = 0; i < 1000; ++i) {
            const ImageGrid s = oracle_sample_view(world, conds, target, rng);
            const double d0 = l2_diff(s, render(world, 0, target));
            const double d1 = l2_diff(s, render(world, 1, target));
            mode1 += d1 < d0 ? 1 : 0;
        }
        CHECK(mode1 > 450);
        CHECK(mode1 < 550);
    }
}

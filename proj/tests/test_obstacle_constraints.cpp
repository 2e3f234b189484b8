#include <cmath>
#include <random>

#include "adsb/obstacles.hpp"
#include "doctest.h"

using namespace adsb;

TEST_CASE("circle centers") {
    VehicleGeometry g;
    g.C = 1.0;
    g.D = 1.4;
    auto p = circle_centers(Pose2d{0, 0, 0}, g);
    CHECK(p.p1(0) == doctest::Approx(2.4));
    CHECK(p.p1(1) == doctest::Approx(0.0));
    CHECK(p.p2(0) == doctest::Approx(-0.4));
    CHECK(p.p2(1) == doctest::Approx(0.0));

    auto q = circle_centers(Pose2d{0, 0, M_PI / 2}, g);
    CHECK(q.p1(0) == doctest::Approx(0.0));
    CHECK(q.p1(1) == doctest::Approx(2.4));
    CHECK(q.p2(0) == doctest::Approx(0.0));
    CHECK(q.p2(1) == doctest::Approx(-0.4));
}

TEST_CASE("kernel value boundary, decay, and coincidence") {
    const double r = 1.35, l = 1.18935;
    // at exactly the inflated distance the kernel is 1
    CHECK(kernel_value(Vec2(0, 0), Vec2(2.7, 0), r, r, 0.0, l) == doctest::Approx(1.0));
    // far away it vanishes
    CHECK(kernel_value(Vec2(0, 0), Vec2(1e3, 0), r, r, 0.0, l) == doctest::Approx(0.0));
    // coincident points
    CHECK(kernel_value(Vec2(0, 0), Vec2(0, 0), r, r, 0.0, l) ==
          doctest::Approx(std::exp(2.7 * 2.7 / (2.0 * l * l))).epsilon(1e-9));
    CHECK(kernel_value(Vec2(0, 0), Vec2(0, 0), r, r, 0.0, l) == doctest::Approx(13.16).epsilon(1e-3));
}

TEST_CASE("kernel symmetry") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 100; ++i) {
        Vec2 a(u(rng), u(rng)), b(u(rng), u(rng));
        CHECK(kernel_value(a, b, 1.3, 1.2, 0.1, 1.2) ==
              doctest::Approx(kernel_value(b, a, 1.3, 1.2, 0.1, 1.2)));
    }
}

TEST_CASE("collision constraint residuals") {
    VehicleGeometry g;  // merge geometry: C=1, D=1.4, r=1.35
    const double l = g.length_scale();
    auto ego_far = circle_centers(Pose2d{100, 0, 0}, g);
    auto tv = circle_centers(Pose2d{0, 0, 0}, g);
    auto res = collision_constraints(ego_far, tv, g.r, g.r, 0.0, l);
    CHECK(res[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(res[1] == doctest::Approx(-1.0).epsilon(1e-9));

    // one ego circle exactly at distance r_a + r_b from one target circle and
    // far from the other (synthetic wide pair; the far kernel is negligible)
    CirclePair wide{Vec2(0, 0), Vec2(20, 0)};
    CirclePair ego;
    ego.p1 = Vec2(0.0, 2.7);
    ego.p2 = Vec2(-50.0, 2.7);
    auto res2 = collision_constraints(ego, wide, g.r, g.r, 0.0, l);
    CHECK(std::abs(res2[0]) < 1e-4);

    // full slack removes the radius inflation: residual at coincidence is
    // 2 exp(0) - 1 = 1 for a degenerate pair
    CirclePair degenerate{Vec2(1, 1), Vec2(1, 1)};
    CirclePair at{Vec2(1, 1), Vec2(-40, 1)};
    auto res3 = collision_constraints(at, degenerate, g.r, g.r, 2.7, l);
    CHECK(res3[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("collision residual decreases monotonically with distance") {
    VehicleGeometry g;
    const double l = g.length_scale();
    // kernel itself is strictly decreasing in the pair distance
    double prev_k = 1e100;
    for (double d = 0.0; d <= 10.0; d += 0.25) {
        const double k = kernel_value(Vec2(0, 0), Vec2(d, 0), g.r, g.r, 0.0, l);
        CHECK(k < prev_k);
        prev_k = k;
    }
    // receding laterally grows every pair distance: residual strictly drops
    auto tv = circle_centers(Pose2d{0, 0, 0}, g);
    double prev = 1e100;
    for (double y = 2.8; y <= 8.0; y += 0.2) {
        auto ego = circle_centers(Pose2d{0.0, y, 0}, g);
        auto res = collision_constraints(ego, tv, g.r, g.r, 0.0, l);
        CHECK(res[1] < prev);
        prev = res[1];
    }
}

TEST_CASE("residuals are non-increasing in slack") {
    VehicleGeometry g;
    const double l = g.length_scale();
    auto tv = circle_centers(Pose2d{0, 0, 0}, g);
    auto ego = circle_centers(Pose2d{4.0, 1.0, 0.1}, g);
    double prev0 = 1e100, prev1 = 1e100;
    for (double s = 0.0; s <= 2.7; s += 0.1) {
        auto res = collision_constraints(ego, tv, g.r, g.r, s, l);
        CHECK(res[0] <= prev0 + 1e-12);
        CHECK(res[1] <= prev1 + 1e-12);
        prev0 = res[0];
        prev1 = res[1];
    }
}

TEST_CASE("length scale keeps the boundary at least r_a+r_b from the centerline") {
    VehicleGeometry g;  // D = 1.4
    const double l = g.length_scale();
    const double R = 2.0 * g.r;
    auto tv = circle_centers(Pose2d{0, 0, 0.3}, g);
    const Vec2 mid = 0.5 * (tv.p1 + tv.p2);

    auto constraint = [&](const Vec2& p) {
        return kernel_value(tv.p1, p, g.r, g.r, 0.0, l) +
               kernel_value(tv.p2, p, g.r, g.r, 0.0, l) - 1.0;
    };
    auto seg_dist = [&](const Vec2& p) {
        const Vec2 d = tv.p2 - tv.p1;
        const double t = std::clamp((p - tv.p1).dot(d) / d.squaredNorm(), 0.0, 1.0);
        return (p - (tv.p1 + t * d)).norm();
    };

    std::mt19937 rng(17);
    std::uniform_real_distribution<double> uang(0.0, 2.0 * M_PI), upos(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        // boundary point along a ray from a random point on the segment
        const Vec2 origin = tv.p1 + upos(rng) * (tv.p2 - tv.p1);
        const double ang = uang(rng);
        const Vec2 dir(std::cos(ang), std::sin(ang));
        double lo = 0.0, hi = 25.0;
        REQUIRE(constraint(origin + hi * dir) < 0.0);
        for (int it = 0; it < 80; ++it) {
            const double mid_t = 0.5 * (lo + hi);
            (constraint(origin + mid_t * dir) > 0.0 ? lo : hi) = mid_t;
        }
        const Vec2 boundary = origin + 0.5 * (lo + hi) * dir;
        CHECK(seg_dist(boundary) >= R - 1e-6);
    }
    (void)mid;
}

TEST_CASE("lane constraints") {
    LaneProfile lanes(0.0, 3.0);
    VehicleGeometry g;
    g.r = 1.35;
    auto mid = circle_centers(Pose2d{0, 1.5, 0}, g);
    auto res = lane_constraints(mid, g.r, 0.0, lanes);
    for (double v : res) CHECK(v < 0.0);

    // circle center exactly at y_min + r: lower residual = 0
    auto low = circle_centers(Pose2d{0, 1.35, 0}, g);
    auto res2 = lane_constraints(low, g.r, 0.0, lanes);
    CHECK(res2[0] == doctest::Approx(0.0));

    // residual flips sign as the circle passes a merge taper
    LaneProfile merge = LaneProfile::merge_profile(-3.0, 0.0, 3.0, 50.0, 20.0);
    auto before = circle_centers(Pose2d{30.0, -1.5, 0}, g);
    auto after = circle_centers(Pose2d{90.0, -1.5, 0}, g);
    CHECK(lane_constraints(before, g.r, 0.0, merge)[0] < 0.0);
    CHECK(lane_constraints(after, g.r, 0.0, merge)[0] > 0.0);
}

TEST_CASE("merge profile is continuous and C1") {
    LaneProfile merge = LaneProfile::merge_profile(-3.0, 0.0, 3.0, 50.0, 20.0);
    double prev = merge.y_min(30.0);
    for (double x = 30.0; x <= 90.0; x += 0.01) {
        const double y = merge.y_min(x);
        CHECK(std::abs(y - prev) < 0.01);  // no jumps
        prev = y;
    }
    // finite-difference slope check
    for (double x : {47.9, 49.0, 51.3, 60.0, 68.5, 71.0}) {
        const double h = 1e-6;
        const double fd = (merge.y_min(x + h) - merge.y_min(x - h)) / (2 * h);
        CHECK(merge.y_min_slope(x) == doctest::Approx(fd).epsilon(1e-5));
    }
    CHECK(merge.y_min(0.0) == doctest::Approx(-3.0));
    CHECK(merge.y_min(100.0) == doctest::Approx(0.0));
}

TEST_CASE("is_colliding ground truth") {
    VehicleGeometry g;
    CHECK(is_colliding(Pose2d{0, 0, 0}, Pose2d{0, 0, 0}, g, g));
    CHECK(!is_colliding(Pose2d{0, 0, 0}, Pose2d{100, 0, 0}, g, g));
    // centers at exactly r_a + r_b: strict inequality, no collision
    // (power-of-two-friendly geometry so the touching distance is exact)
    VehicleGeometry ge;
    ge.r = 1.5;
    ge.D = 1.5;
    ge.C = 1.0;
    Pose2d ego{0, 0, 0};
    Pose2d tv{0, 0, 0};
    tv.X = 2.0 * ge.D + 2.0 * ge.r;  // ego front at 2.5, tv rear at 5.5: gap 3.0 = 2r
    CHECK(!is_colliding(ego, tv, ge, ge));
    tv.X -= 1e-9;
    CHECK(is_colliding(ego, tv, ge, ge));
}

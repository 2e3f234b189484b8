#include "adsb/obstacles.hpp"

namespace adsb {

namespace {

// C^1 blend of two linear pieces meeting at x_k, over [x_k - b, x_k + b].
double blend_eval(double x, double x_k, double b, double f_at_kink, double m1, double m2,
                  bool want_slope) {
    const double xl = x_k - b;
    const double fl = f_at_kink - m1 * b;
    const double curv = (m2 - m1) / (4.0 * b);
    if (want_slope) return m1 + 2.0 * curv * (x - xl);
    return fl + m1 * (x - xl) + curv * (x - xl) * (x - xl);
}

}  // namespace

LaneProfile LaneProfile::merge_profile(double y_low, double y_high, double y_top, double x_start,
                                       double taper_length, double blend) {
    LaneProfile p;
    p.y_min_const_ = y_low;
    p.y_max_const_ = y_top;
    p.has_ramp_ = true;
    p.ramp_x0_ = x_start;
    p.ramp_x1_ = x_start + taper_length;
    p.ramp_y0_ = y_low;
    p.ramp_y1_ = y_high;
    p.blend_ = std::min(blend, 0.45 * taper_length);
    return p;
}

double LaneProfile::y_min(double X) const {
    if (!has_ramp_) return y_min_const_;
    const double m = (ramp_y1_ - ramp_y0_) / (ramp_x1_ - ramp_x0_);
    const double b = blend_;
    if (X <= ramp_x0_ - b) return ramp_y0_;
    if (X < ramp_x0_ + b) return blend_eval(X, ramp_x0_, b, ramp_y0_, 0.0, m, false);
    if (X <= ramp_x1_ - b) return ramp_y0_ + m * (X - ramp_x0_);
    if (X < ramp_x1_ + b) return blend_eval(X, ramp_x1_, b, ramp_y1_, m, 0.0, false);
    return ramp_y1_;
}

double LaneProfile::y_min_slope(double X) const {
    if (!has_ramp_) return 0.0;
    const double m = (ramp_y1_ - ramp_y0_) / (ramp_x1_ - ramp_x0_);
    const double b = blend_;
    if (X <= ramp_x0_ - b || X >= ramp_x1_ + b) return 0.0;
    if (X < ramp_x0_ + b) return blend_eval(X, ramp_x0_, b, ramp_y0_, 0.0, m, true);
    if (X <= ramp_x1_ - b) return m;
    return blend_eval(X, ramp_x1_, b, ramp_y1_, m, 0.0, true);
}

double LaneProfile::y_max(double /*X*/) const { return y_max_const_; }

double LaneProfile::y_max_slope(double /*X*/) const { return 0.0; }

CirclePair circle_centers(const Pose2d& pose, const VehicleGeometry& geom) {
    const double c = std::cos(pose.psi), s = std::sin(pose.psi);
    CirclePair p;
    p.p1 = Vec2(pose.X + (geom.C + geom.D) * c, pose.Y + (geom.C + geom.D) * s);
    p.p2 = Vec2(pose.X + (geom.C - geom.D) * c, pose.Y + (geom.C - geom.D) * s);
    return p;
}

double kernel_value(const Vec2& a, const Vec2& b, double r_a, double r_b, double slack, double l) {
    const double d_sq = (a - b).squaredNorm();
    const double inflate = r_a + r_b - slack;
    return std::exp(-(d_sq - inflate * inflate) / (2.0 * l * l));
}

std::array<double, 2> collision_constraints(const CirclePair& ego, const CirclePair& target,
                                            double r_ego, double r_tv, double slack, double l) {
    std::array<double, 2> res;
    const Vec2* ego_pts[2] = {&ego.p1, &ego.p2};
    for (int j = 0; j < 2; ++j) {
        double sum = kernel_value(target.p1, *ego_pts[j], r_tv, r_ego, slack, l) +
                     kernel_value(target.p2, *ego_pts[j], r_tv, r_ego, slack, l);
        res[j] = sum - 1.0;
    }
    return res;
}

std::array<double, 4> lane_constraints(const CirclePair& circles, double r, double slack,
                                       const LaneProfile& lanes) {
    std::array<double, 4> res;
    const Vec2* pts[2] = {&circles.p1, &circles.p2};
    for (int j = 0; j < 2; ++j) {
        const double X = (*pts[j])(0), Y = (*pts[j])(1);
        res[2 * j] = r - (Y - lanes.y_min(X) + slack);
        res[2 * j + 1] = r - (lanes.y_max(X) - Y + slack);
    }
    return res;
}

bool is_colliding(const Pose2d& ego_pose, const Pose2d& tv_pose, const VehicleGeometry& geom_ego,
                  const VehicleGeometry& geom_tv) {
    const CirclePair e = circle_centers(ego_pose, geom_ego);
    const CirclePair t = circle_centers(tv_pose, geom_tv);
    const double rr = geom_ego.r + geom_tv.r;
    const Vec2* ep[2] = {&e.p1, &e.p2};
    const Vec2* tp[2] = {&t.p1, &t.p2};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if ((*ep[i] - *tp[j]).norm() < rr) return true;
    return false;
}

}  // namespace adsb

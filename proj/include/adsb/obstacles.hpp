#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "adsb/types.hpp"

namespace adsb {

/// Two-circle vehicle footprint parameters. The kernel length scale
/// l = D / sqrt(2 ln 2) guarantees the combined constraint boundary stays
/// at least r_a + r_b away from the centerline segment.
struct VehicleGeometry {
    double r = 1.35;      // collision-circle radius (m)
    double D = 1.4;       // half separation between the circle centers (m)
    double C = 1.0;       // rear axle -> body center (m)
    double L = 2.0;       // wheelbase (m)
    double w_lane = 3.0;  // lane width (m)

    double length_scale() const { return D / std::sqrt(2.0 * std::log(2.0)); }
};

struct CirclePair {
    Vec2 p1;  // front circle center
    Vec2 p2;  // rear circle center
};

struct Pose2d {
    double X = 0.0;
    double Y = 0.0;
    double psi = 0.0;
};

/// Piecewise-linear lane boundaries with X breakpoints. Kinks are blended
/// over a short window so the boundary stays C^1 for the solver.
class LaneProfile {
  public:
    struct Segment {
        double x0, x1;  // breakpoint interval
        double y0, y1;  // boundary values at the interval ends
    };

    LaneProfile() = default;
    LaneProfile(double y_min_const, double y_max_const)
        : y_min_const_(y_min_const), y_max_const_(y_max_const) {}

    /// Entry-lane floor ramping from y_low to y_high over [x_start, x_start+taper].
    static LaneProfile merge_profile(double y_low, double y_high, double y_top, double x_start,
                                     double taper_length, double blend = 2.0);

    double y_min(double X) const;
    double y_max(double X) const;
    double y_min_slope(double X) const;
    double y_max_slope(double X) const;

  private:
    double y_min_const_ = 0.0;
    double y_max_const_ = 4.0;
    bool has_ramp_ = false;
    double ramp_x0_ = 0.0, ramp_x1_ = 0.0;
    double ramp_y0_ = 0.0, ramp_y1_ = 0.0;
    double blend_ = 2.0;
};

/// Circle centers for a vehicle pose, p_i = (X + (C +- D) cos psi, Y + (C +- D) sin psi).
CirclePair circle_centers(const Pose2d& pose, const VehicleGeometry& geom);

/// Squared-exponential kernel k(a, b) = exp(-(||a-b||^2 - (r_a+r_b-s)^2) / (2 l^2)).
double kernel_value(const Vec2& a, const Vec2& b, double r_a, double r_b, double slack, double l);

/// One residual per ego circle center: sum over target circles of k(.) - 1.
/// Feasible iff residual <= 0.
std::array<double, 2> collision_constraints(const CirclePair& ego, const CirclePair& target,
                                            double r_ego, double r_tv, double slack, double l);

/// Residuals r - (Y_j - y_min(X_j) + s) and r - (y_max(X_j) - Y_j + s) per circle.
std::array<double, 4> lane_constraints(const CirclePair& circles, double r, double slack,
                                       const LaneProfile& lanes);

/// Ground-truth crash predicate: strict overlap of any circle pair.
bool is_colliding(const Pose2d& ego_pose, const Pose2d& tv_pose, const VehicleGeometry& geom_ego,
                  const VehicleGeometry& geom_tv);

}  // namespace adsb

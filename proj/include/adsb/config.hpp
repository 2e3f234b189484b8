#pragma once

#include <string>

#include "adsb/lattice.hpp"
#include "adsb/obstacles.hpp"
#include "adsb/ocp.hpp"

namespace adsb {

struct IdmParams {
    double accel_max = 3.0;
    double decel_comfort = 3.0;
    double time_headway = 1.2;
    double min_gap = 4.0;
    double exponent = 4.0;
    double brake_max = 7.0;
};

struct MobilParams {
    double politeness = 0.3;
    double gain_threshold = 0.2;
    double safe_decel = 3.0;
    double evaluation_period = 1.0;
    double lateral_rate = 2.0;  // m/s while executing a change
};

struct RewardParams {
    double b_c = 1.0;
    double b_l = 0.1;
    double b_v = 0.4;
    double v_r_min = 20.0;
    double v_r_max = 30.0;
    int n_lanes = 4;
};

/// Full scenario description: vehicle and cost parameters, disturbance
/// search tuning, simulation cadence, and per-scenario geometry.
struct ScenarioConfig {
    std::string kind = "merge";  // merge | highway

    // vehicle / OCP parameters
    double w_lane = 3.0;
    double wheelbase = 2.0;
    double r_circle = 1.35;
    double d_circle = 1.4;
    double c_center = 1.0;
    double v_max = 30.0;
    double v_min = 0.0;
    double psi_max = 1.5707963267948966;
    double delta_max = 0.5235987755982988;
    double a_max = 3.0;
    double v_ref = 25.0;
    double q_Y = 3.0;
    double q_psi = 1.5707963267948966;
    double q_v = 10.0;
    double q_delta = 0.1;
    double q_deltadot = 0.1;  // infinity() switches to the direct-steer model
    double q_a = 6.0;
    double q_s = 0.001;
    int N = 25;
    double dt = 0.2;
    double steer_rate_max = 1.5;

    // disturbance search
    double lattice_dX = 5.0;
    double lattice_dt_cell = 0.01;
    double gamma_d = 0.5;
    double eta = 0.25;
    double a_dist = 3.0;
    double k_y = 0.0;
    int prune_n = -1;  // < 0 keeps every sequence
    bool respect_merged = true;

    // simulation
    double physics_dt = 0.05;
    double episode_length = 12.0;
    double road_departure_tol = 0.05;
    unsigned long long seed = 1;
    double density = 1.0;

    // merge scenario geometry
    double merge_taper_start = 110.0;
    double merge_taper_length = 20.0;
    double merge_ego_v0 = 20.0;
    double merge_white_x0 = -3.0;
    double merge_white_v0 = 20.0;
    double merge_gray_x0 = 70.0;
    double merge_gray_v0 = 20.0;
    bool merge_disturbance = false;
    double dist_accel = 3.0;
    double dist_t_on = 0.5;
    double dist_t_off = 3.5;

    // highway generation
    int hw_lanes = 4;
    int hw_base_count = 24;
    double hw_span_back = -100.0;
    double hw_span_fwd = 550.0;
    double hw_spawn_v_lo = 18.0;
    double hw_spawn_v_hi = 27.0;
    double hw_min_gap = 14.0;
    double hw_ego_v0 = 25.0;
    int hw_ego_lane = 2;
    double hw_episode_length = 20.0;

    IdmParams idm;
    MobilParams mobil;
    RewardParams reward;

    bool direct_steer() const { return std::isinf(q_deltadot); }
    int n_lanes() const { return kind == "merge" ? 2 : hw_lanes; }
    double road_y_min() const { return kind == "merge" ? -w_lane : 0.0; }
    double road_y_max() const { return kind == "merge" ? w_lane : hw_lanes * w_lane; }
    /// lane centers indexed 0 (leftmost) .. n-1 (rightmost)
    double lane_center(int i) const;
    int lane_of(double Y) const;

    VehicleGeometry geometry() const;
    LaneProfile lane_profile() const;
    RoadBounds road_bounds() const;
    OcpParams ocp_params() const;
    DisturbanceParams disturbance_params() const;
    GuessParams guess_params() const;
};

ScenarioConfig merge_config();
ScenarioConfig highway_config();

/// Reads an INI-style config (sections, key = value). Unknown sections or
/// keys are rejected.
ScenarioConfig load_config(const std::string& path);

}  // namespace adsb

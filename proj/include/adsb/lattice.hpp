#pragma once

#include <optional>
#include <vector>

#include "adsb/obstacles.hpp"
#include "adsb/types.hpp"
#include "adsb/vehicle_model.hpp"

namespace adsb {

/// Tuning of the adversarial disturbance search.
struct DisturbanceParams {
    double a_dist = 3.0;    // disturbance acceleration magnitude (m/s^2)
    double k_y = 0.0;       // lateral disturbance fraction
    double eta = 0.25;      // adversarial trade-off weight in [0, 1)
    double v_min = 0.0;     // targets never slow down below this
    double v_max = 30.0;    // targets never speed up beyond this
    double dX = 5.0;        // lattice longitudinal step (m)
    double dt_cell = 0.01;  // lattice time-cell size (s)
    // Stop considering disturbance actions for an agent once the ego has
    // merged into its lane, |Y_tv - Y_ego| <= w_lane / 2.
    bool respect_merged = true;
    // Use the printed form of the extension-law guard instead of the
    // minimum-time reading (kept selectable; the two differ).
    bool literal_extension_guard = false;
};

/// One agent's timed deviation from the constant-velocity prediction.
/// accel/lateral cover samples k_start..N; accel values are in
/// {-a_dist, 0, +a_dist} before t_inf and follow the extension law after.
struct DisturbanceSequence {
    int agent_id = 0;
    int k_start = 0;
    std::vector<double> accel;
    std::vector<double> lateral;
    double t_dist = 0.0;
    double t_inf = 0.0;
    // Search-level objective value (lattice semantics), kept for diagnostics
    // and optimality checks.
    double lattice_cost = 0.0;

    double cost(double eta) const { return t_inf - eta * t_dist; }
};

/// Previously planned ego motion replayed from the current state; the
/// trajectory the adversary tries to make infeasible.
struct NominalPrediction {
    std::vector<EgoState> states;  // k = 0..N+1
    std::vector<EgoInput> inputs;  // k = 0..N
};

struct AgentState {
    int id = 0;
    double X = 0.0;
    double Y = 0.0;
    double v = 0.0;
};

/// Global lateral extent of the drivable area (used to clamp disturbed
/// target motion) plus the lane width for the merged-vehicle condition.
struct RoadBounds {
    double y_min = 0.0;
    double y_max = 3.0;
    double w_lane = 3.0;
};

/// Lateral disturbance law: u_y = k_y sign(y_ego - y_tv), sign(0) = 0.
double lateral_disturbance(double y_ego, double y_tv, double k_y);

/// Post-t_inf extension law: bang-bang acceleration that brings the target
/// to the ego in minimum time, with a speed floor guard.
double extension_accel(double x_tv, double x_ego, double v_tv, double v_ego,
                       const DisturbanceParams& p, double dt);

/// Target-state rollout of a disturbance sequence on the MPC grid,
/// k = 0..N+1. Before k_start the agent keeps its constant-velocity
/// prediction. Speeds are clamped to [0, v_max]; Y is clamped to the road.
std::vector<Pose2d> replay_sequence(const AgentState& agent, const DisturbanceSequence& seq,
                                    const DisturbanceParams& p, const RoadBounds& road, int N,
                                    double dt);

/// Constant-velocity prediction of an agent, k = 0..N+1.
std::vector<Pose2d> constant_velocity_rollout(const AgentState& agent, int N, double dt);

/// Dijkstra search for the minimum t_inf - eta t_dist open-loop adversarial
/// sequence acting on one agent. Returns nothing when no lattice sequence
/// makes the ego plan infeasible within the horizon.
std::optional<DisturbanceSequence> find_adversarial_sequence(
    const AgentState& agent, const NominalPrediction& nominal, const DisturbanceParams& p,
    const VehicleGeometry& geom_ego, const VehicleGeometry& geom_tv, const RoadBounds& road,
    int N, double dt);

/// Parameters of the initial-guess search lattice.
struct GuessParams {
    double a_max = 3.0;
    double v_min = 2.0;        // lattice speed floor (the NLP may brake further)
    double v_max = 30.0;
    double v_ref = 25.0;
    double y_ref = 1.5;        // target lane center
    double q_Y = 3.0;
    double q_v = 10.0;
    double dX = 5.0;
    double dt_cell = 0.01;
    double y_step = 1.5;       // lateral action step (half lane by default)
    double margin = 0.0;       // extra clearance added on top of the hard kernel check
};

/// Per-sample target positions for one prediction branch, k = 0..N+1,
/// outer index = agent.
using BranchPrediction = std::vector<std::vector<Pose2d>>;

struct LatticeGuess {
    std::vector<EgoState> states;  // k = 0..N+1
    std::vector<EgoInput> inputs;  // k = 0..N
    double cost = 0.0;
};

/// A* (zero heuristic) search on the (X, Y, v^2, t) lattice with the five
/// actions keep / accelerate / brake / lateral up / lateral down, used to
/// warm-start the OCP. Returns nothing when no feasible lattice path covers
/// the horizon.
std::optional<LatticeGuess> initial_guess_search(const EgoState& start, const GuessParams& gp,
                                                 const LaneProfile& lanes,
                                                 const VehicleGeometry& geom_ego,
                                                 const VehicleGeometry& geom_tv,
                                                 const BranchPrediction& obstacles, int N,
                                                 double dt,
                                                 VehicleModel::Kind kind);

}  // namespace adsb

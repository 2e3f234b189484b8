#pragma once

#include <cstdint>
#include <vector>

#include "adsb/config.hpp"
#include "adsb/types.hpp"

namespace adsb {

enum class BehaviorKind { kConstantVelocity, kScripted, kIdmMobil };

struct TargetVehicle {
    int id = 0;
    double X = 0.0;
    double Y = 0.0;
    double v = 0.0;
    int lane = 0;
    int target_lane = 0;
    double v_desired = 25.0;
    double v_initial = 25.0;
    BehaviorKind behavior = BehaviorKind::kConstantVelocity;
    double change_cooldown = 0.0;
};

struct WorldState {
    double t = 0.0;
    EgoState ego;
    std::vector<TargetVehicle> targets;
    bool crashed = false;
    double crash_time = -1.0;
};

/// Scripted disturbance: +accel during [t_on, t_off), then -accel until the
/// speed is back at its initial value, then zero.
double scripted_accel(double t, double v, double v_initial, double accel, double t_on,
                      double t_off);

/// Canonical IDM acceleration. `gap` is bumper-to-bumper, `dv` the closing
/// speed v - v_lead. Pass a non-positive leader gap flag via gap = +inf when
/// the road ahead is free.
double idm_accel(double gap, double v, double dv, double v_desired, const IdmParams& p);

struct MobilDecision {
    bool change = false;
    int to_lane = 0;
};

class TrafficSim {
  public:
    explicit TrafficSim(const ScenarioConfig& cfg);

    const ScenarioConfig& config() const { return cfg_; }

    WorldState make_merge_world() const;
    WorldState make_highway_world(std::uint64_t seed, double density) const;
    WorldState make_world() const;

    /// Advances everything by one physics step with the ego input held.
    /// Returns true if a crash or road departure occurred during the step.
    bool step(WorldState& world, const EgoInput& input, double dt) const;

    /// MOBIL check for one vehicle against its current neighborhood.
    MobilDecision mobil_lane_change(const WorldState& world, int target_index) const;

    /// Reward per Eq.-style linear combination; i_lane indexed 0..n-1 left
    /// to right.
    static double reward(bool crashed, int i_lane, double v, const RewardParams& p);
    double step_reward(const WorldState& world) const;

  private:
    struct Neighbor {
        bool found = false;
        double gap = 0.0;
        double v = 0.0;
    };
    Neighbor leader_in_lane(const WorldState& world, int lane, double X, int skip_index) const;
    Neighbor follower_in_lane(const WorldState& world, int lane, double X, int skip_index) const;
    double idm_accel_for(const WorldState& world, int target_index, int lane) const;
    bool ego_departed(const EgoState& ego) const;

    ScenarioConfig cfg_;
    VehicleGeometry geom_;
    LaneProfile lanes_;
};

}  // namespace adsb

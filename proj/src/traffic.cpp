#include "adsb/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "adsb/obstacles.hpp"
#include "adsb/vehicle_model.hpp"

namespace adsb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace

double scripted_accel(double t, double v, double v_initial, double accel, double t_on,
                      double t_off) {
    if (t < t_on) return 0.0;
    if (t < t_off) return accel;
    if (v > v_initial + 1e-9) return -accel;
    return 0.0;
}

double idm_accel(double gap, double v, double dv, double v_desired, const IdmParams& p) {
    const double vr = std::max(v_desired, 1e-3);
    double a = p.accel_max * (1.0 - std::pow(std::max(v, 0.0) / vr, p.exponent));
    if (std::isfinite(gap)) {
        const double g = std::max(gap, 0.1);
        const double s_star = p.min_gap + std::max(0.0, v * p.time_headway +
                                                            v * dv / (2.0 * std::sqrt(p.accel_max *
                                                                                      p.decel_comfort)));
        a -= p.accel_max * (s_star / g) * (s_star / g);
    }
    return std::clamp(a, -p.brake_max, p.accel_max);
}

TrafficSim::TrafficSim(const ScenarioConfig& cfg)
    : cfg_(cfg), geom_(cfg.geometry()), lanes_(cfg.lane_profile()) {}

WorldState TrafficSim::make_merge_world() const {
    WorldState w;
    w.ego.X = 0.0;
    w.ego.Y = -0.5 * cfg_.w_lane;
    w.ego.v = cfg_.merge_ego_v0;

    TargetVehicle white;
    white.id = 1;
    white.X = cfg_.merge_white_x0;
    white.Y = 0.5 * cfg_.w_lane;
    white.v = cfg_.merge_white_v0;
    white.v_initial = cfg_.merge_white_v0;
    white.v_desired = cfg_.merge_white_v0;
    white.lane = white.target_lane = 1;
    white.behavior =
        cfg_.merge_disturbance ? BehaviorKind::kScripted : BehaviorKind::kConstantVelocity;

    TargetVehicle gray;
    gray.id = 2;
    gray.X = cfg_.merge_gray_x0;
    gray.Y = 0.5 * cfg_.w_lane;
    gray.v = cfg_.merge_gray_v0;
    gray.v_initial = cfg_.merge_gray_v0;
    gray.v_desired = cfg_.merge_gray_v0;
    gray.lane = gray.target_lane = 1;
    gray.behavior = BehaviorKind::kConstantVelocity;

    w.targets = {white, gray};
    return w;
}

WorldState TrafficSim::make_highway_world(std::uint64_t seed, double density) const {
    WorldState w;
    w.ego.X = 0.0;
    w.ego.Y = cfg_.lane_center(cfg_.hw_ego_lane);
    w.ego.v = cfg_.hw_ego_v0;

    std::mt19937_64 rng(seed);
    const int count = static_cast<int>(std::ceil(cfg_.hw_base_count * density));
    const double vehicle_len = 2.0 * (geom_.D + geom_.r);
    int id = 1;
    for (int i = 0; i < count; ++i) {
        for (int attempt = 0; attempt < 60; ++attempt) {
            const int lane = std::min(static_cast<int>(uniform01(rng) * cfg_.hw_lanes),
                                      cfg_.hw_lanes - 1);
            const double X =
                cfg_.hw_span_back + uniform01(rng) * (cfg_.hw_span_fwd - cfg_.hw_span_back);
            const double v =
                cfg_.hw_spawn_v_lo + uniform01(rng) * (cfg_.hw_spawn_v_hi - cfg_.hw_spawn_v_lo);
            bool ok = true;
            const double need = cfg_.hw_min_gap + vehicle_len;
            if (lane == cfg_.hw_ego_lane && std::abs(X - w.ego.X) < 1.5 * need) ok = false;
            for (const auto& t : w.targets)
                if (t.lane == lane && std::abs(t.X - X) < need) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            TargetVehicle t;
            t.id = id;
            t.X = X;
            t.Y = cfg_.lane_center(lane);
            t.v = v;
            t.v_initial = v;
            t.v_desired = v;
            t.lane = t.target_lane = lane;
            t.behavior = BehaviorKind::kIdmMobil;
            w.targets.push_back(t);
            ++id;
            break;
        }
    }
    return w;
}

WorldState TrafficSim::make_world() const {
    return cfg_.kind == "merge" ? make_merge_world()
                                : make_highway_world(cfg_.seed, cfg_.density);
}

TrafficSim::Neighbor TrafficSim::leader_in_lane(const WorldState& world, int lane, double X,
                                                int skip_index) const {
    Neighbor n;
    const double vehicle_len = 2.0 * (geom_.D + geom_.r);
    double best = kInf;
    for (std::size_t i = 0; i < world.targets.size(); ++i) {
        if (static_cast<int>(i) == skip_index) continue;
        const auto& t = world.targets[i];
        if (cfg_.lane_of(t.Y) != lane) continue;
        const double dx = t.X - X;
        if (dx > 0.0 && dx < best) {
            best = dx;
            n.found = true;
            n.gap = dx - vehicle_len;
            n.v = t.v;
        }
    }
    if (skip_index != -1) {  // the ego participates in the traffic
        if (cfg_.lane_of(world.ego.Y) == lane) {
            const double dx = world.ego.X - X;
            if (dx > 0.0 && dx < best) {
                n.found = true;
                n.gap = dx - vehicle_len;
                n.v = world.ego.v;
            }
        }
    }
    return n;
}

TrafficSim::Neighbor TrafficSim::follower_in_lane(const WorldState& world, int lane, double X,
                                                  int skip_index) const {
    Neighbor n;
    const double vehicle_len = 2.0 * (geom_.D + geom_.r);
    double best = kInf;
    for (std::size_t i = 0; i < world.targets.size(); ++i) {
        if (static_cast<int>(i) == skip_index) continue;
        const auto& t = world.targets[i];
        if (cfg_.lane_of(t.Y) != lane) continue;
        const double dx = X - t.X;
        if (dx > 0.0 && dx < best) {
            best = dx;
            n.found = true;
            n.gap = dx - vehicle_len;
            n.v = t.v;
        }
    }
    if (cfg_.lane_of(world.ego.Y) == lane) {
        const double dx = X - world.ego.X;
        if (dx > 0.0 && dx < best) {
            n.found = true;
            n.gap = dx - vehicle_len;
            n.v = world.ego.v;
        }
    }
    return n;
}

double TrafficSim::idm_accel_for(const WorldState& world, int target_index, int lane) const {
    const auto& self = world.targets[target_index];
    const Neighbor lead = leader_in_lane(world, lane, self.X, target_index);
    return idm_accel(lead.found ? lead.gap : kInf, self.v, self.v - lead.v, self.v_desired,
                     cfg_.idm);
}

MobilDecision TrafficSim::mobil_lane_change(const WorldState& world, int target_index) const {
    const auto& self = world.targets[target_index];
    const int lane = self.lane;
    const double a_self = idm_accel_for(world, target_index, lane);

    MobilDecision best;
    double best_incentive = cfg_.mobil.gain_threshold;
    for (int dir : {+1, -1}) {
        const int cand = lane + dir;
        if (cand < 0 || cand >= cfg_.n_lanes()) continue;

        const double a_self_new = idm_accel_for(world, target_index, cand);
        if (a_self_new < -cfg_.mobil.safe_decel) continue;

        // new follower in the candidate lane
        const Neighbor nf = follower_in_lane(world, cand, self.X, target_index);
        double a_nf = 0.0, a_nf_new = 0.0;
        if (nf.found) {
            const Neighbor nf_lead_now = leader_in_lane(world, cand, self.X - nf.gap -
                                                                         2.0 * (geom_.D + geom_.r),
                                                        target_index);
            a_nf = idm_accel(nf_lead_now.found ? nf_lead_now.gap + nf.gap +
                                                     2.0 * (geom_.D + geom_.r)
                                               : kInf,
                             nf.v, nf.v - nf_lead_now.v, cfg_.hw_spawn_v_hi, cfg_.idm);
            a_nf_new = idm_accel(nf.gap, nf.v, nf.v - self.v, cfg_.hw_spawn_v_hi, cfg_.idm);
            if (a_nf_new < -cfg_.mobil.safe_decel) continue;  // safety criterion
        }

        // old follower gains our current leader after we leave
        const Neighbor of = follower_in_lane(world, lane, self.X, target_index);
        double a_of = 0.0, a_of_new = 0.0;
        if (of.found) {
            a_of = idm_accel(of.gap, of.v, of.v - self.v, cfg_.hw_spawn_v_hi, cfg_.idm);
            const Neighbor my_lead = leader_in_lane(world, lane, self.X, target_index);
            const double gap_after = my_lead.found
                                         ? of.gap + my_lead.gap + 2.0 * (geom_.D + geom_.r)
                                         : kInf;
            a_of_new = idm_accel(gap_after, of.v, of.v - my_lead.v, cfg_.hw_spawn_v_hi, cfg_.idm);
        }

        const double incentive = a_self_new - a_self +
                                 cfg_.mobil.politeness * ((a_nf_new - a_nf) + (a_of_new - a_of));
        if (incentive > best_incentive) {
            best_incentive = incentive;
            best.change = true;
            best.to_lane = cand;
        }
    }
    return best;
}

bool TrafficSim::ego_departed(const EgoState& ego) const {
    const CirclePair c = circle_centers(Pose2d{ego.X, ego.Y, ego.psi}, geom_);
    const auto res = lane_constraints(c, geom_.r, 0.0, lanes_);
    for (double r : res)
        if (r > cfg_.road_departure_tol) return true;
    return false;
}

bool TrafficSim::step(WorldState& world, const EgoInput& input, double dt) const {
    const VehicleModel model(cfg_.direct_steer() ? VehicleModel::Kind::kDirectSteer
                                                 : VehicleModel::Kind::kKinematic,
                             cfg_.wheelbase);
    const Vec u = model.input_vec(input);
    world.ego = model.to_state(model.step(model.to_vec(world.ego), u, dt), u);

    for (std::size_t i = 0; i < world.targets.size(); ++i) {
        auto& t = world.targets[i];
        switch (t.behavior) {
            case BehaviorKind::kConstantVelocity:
                t.X += t.v * dt;
                break;
            case BehaviorKind::kScripted: {
                const double a = scripted_accel(world.t, t.v, t.v_initial, cfg_.dist_accel,
                                                cfg_.dist_t_on, cfg_.dist_t_off);
                const double v_new = std::max(t.v + a * dt, 0.0);
                t.X += 0.5 * (t.v + v_new) * dt;
                t.v = v_new;
                break;
            }
            case BehaviorKind::kIdmMobil: {
                t.change_cooldown -= dt;
                if (t.lane == t.target_lane && t.change_cooldown <= 0.0) {
                    const MobilDecision d = mobil_lane_change(world, static_cast<int>(i));
                    if (d.change) t.target_lane = d.to_lane;
                    t.change_cooldown = cfg_.mobil.evaluation_period;
                }
                double a = idm_accel_for(world, static_cast<int>(i), t.lane);
                if (t.target_lane != t.lane)
                    a = std::min(a, idm_accel_for(world, static_cast<int>(i), t.target_lane));
                const double v_new = std::clamp(t.v + a * dt, 0.0, cfg_.v_max);
                t.X += 0.5 * (t.v + v_new) * dt;
                t.v = v_new;
                if (t.target_lane != t.lane) {
                    const double yc = cfg_.lane_center(t.target_lane);
                    const double step = cfg_.mobil.lateral_rate * dt;
                    if (std::abs(yc - t.Y) <= step) {
                        t.Y = yc;
                        t.lane = t.target_lane;
                    } else {
                        t.Y += (yc > t.Y ? step : -step);
                    }
                }
                break;
            }
        }
    }
    world.t += dt;

    if (!world.crashed) {
        bool crash = ego_departed(world.ego);
        if (!crash) {
            const Pose2d ego_pose{world.ego.X, world.ego.Y, world.ego.psi};
            for (const auto& t : world.targets) {
                if (is_colliding(ego_pose, Pose2d{t.X, t.Y, 0.0}, geom_, geom_)) {
                    crash = true;
                    break;
                }
            }
        }
        if (crash) {
            world.crashed = true;
            world.crash_time = world.t;
        }
    }
    return world.crashed;
}

double TrafficSim::reward(bool crashed, int i_lane, double v, const RewardParams& p) {
    const double r_crash = crashed ? 1.0 : 0.0;
    const double r_lane = static_cast<double>(i_lane) / (p.n_lanes - 1);
    double r_speed;
    if (v < p.v_r_min)
        r_speed = 0.0;
    else if (v > p.v_r_max)
        r_speed = 1.0;
    else
        r_speed = (v - p.v_r_min) / (p.v_r_max - p.v_r_min);
    return (p.b_c * (1.0 - r_crash) + p.b_l * r_lane + p.b_v * r_speed) /
           (p.b_c + p.b_l + p.b_v);
}

double TrafficSim::step_reward(const WorldState& world) const {
    return reward(world.crashed, cfg_.lane_of(world.ego.Y), world.ego.v, cfg_.reward);
}

}  // namespace adsb

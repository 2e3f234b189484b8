#include "adsb/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace adsb {

double ScenarioConfig::lane_center(int i) const {
    if (kind == "merge") return i == 0 ? -0.5 * w_lane : 0.5 * w_lane;
    return (hw_lanes - 1 - i) * w_lane + 0.5 * w_lane;
}

int ScenarioConfig::lane_of(double Y) const {
    if (kind == "merge") return Y < 0.0 ? 0 : 1;
    const int from_bottom = static_cast<int>(std::floor(Y / w_lane));
    return std::clamp(hw_lanes - 1 - from_bottom, 0, hw_lanes - 1);
}

VehicleGeometry ScenarioConfig::geometry() const {
    VehicleGeometry g;
    g.r = r_circle;
    g.D = d_circle;
    g.C = c_center;
    g.L = wheelbase;
    g.w_lane = w_lane;
    return g;
}

LaneProfile ScenarioConfig::lane_profile() const {
    if (kind == "merge")
        return LaneProfile::merge_profile(-w_lane, 0.0, w_lane, merge_taper_start,
                                          merge_taper_length);
    return LaneProfile(0.0, hw_lanes * w_lane);
}

RoadBounds ScenarioConfig::road_bounds() const {
    return RoadBounds{road_y_min(), road_y_max(), w_lane};
}

OcpParams ScenarioConfig::ocp_params() const {
    OcpParams p;
    p.N = N;
    p.dt = dt;
    p.kind = direct_steer() ? VehicleModel::Kind::kDirectSteer : VehicleModel::Kind::kKinematic;
    p.wheelbase = wheelbase;
    p.q_Y = q_Y;
    p.q_psi = q_psi;
    p.q_v = q_v;
    p.q_delta = q_delta;
    p.q_deltadot = q_deltadot;
    p.q_a = q_a;
    p.q_s = q_s;
    p.v_ref = v_ref;
    p.y_ref = kind == "merge" ? 0.5 * w_lane : lane_center(hw_lanes - 1);
    p.v_min = v_min;
    p.v_max = v_max;
    p.psi_max = psi_max;
    p.delta_max = delta_max;
    p.a_max = a_max;
    p.steer_rate_max = steer_rate_max;
    p.geom_ego = geometry();
    p.geom_tv = geometry();
    p.lanes = lane_profile();
    return p;
}

DisturbanceParams ScenarioConfig::disturbance_params() const {
    DisturbanceParams p;
    p.a_dist = a_dist;
    p.k_y = k_y;
    p.eta = eta;
    p.v_min = v_min;
    p.v_max = v_max;
    p.dX = lattice_dX;
    p.dt_cell = lattice_dt_cell;
    p.respect_merged = respect_merged;
    return p;
}

GuessParams ScenarioConfig::guess_params() const {
    GuessParams g;
    g.a_max = a_max;
    g.v_min = std::max(v_min, 2.0);
    g.v_max = v_max;
    g.v_ref = v_ref;
    g.y_ref = ocp_params().y_ref;
    g.q_Y = q_Y;
    g.q_v = q_v;
    g.dX = lattice_dX;
    g.dt_cell = lattice_dt_cell;
    g.y_step = 0.5 * w_lane;
    return g;
}

ScenarioConfig merge_config() {
    ScenarioConfig c;
    c.kind = "merge";
    c.episode_length = 12.0;
    c.respect_merged = true;
    c.prune_n = -1;
    return c;
}

ScenarioConfig highway_config() {
    ScenarioConfig c;
    c.kind = "highway";
    c.w_lane = 4.0;
    c.wheelbase = 5.0;
    c.r_circle = 1.4;
    c.d_circle = 1.4;
    c.c_center = 2.5;
    c.delta_max = M_PI / 4.0;
    c.a_max = 5.0;
    c.v_ref = 30.0;
    c.q_Y = 12.0;
    c.q_v = 20.0;
    c.q_deltadot = std::numeric_limits<double>::infinity();
    c.q_a = 10.0;
    c.N = 15;
    c.a_dist = 1.0;
    c.k_y = 0.1;
    c.prune_n = 2;
    c.respect_merged = false;
    c.episode_length = 20.0;
    return c;
}

namespace {

double parse_double(const std::string& v) {
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::runtime_error("bad numeric value '" + v + "'");
    return x;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("bad boolean value '" + v + "'");
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);

    // first pass: find scenario.kind so defaults come from the right preset
    std::string kind = "merge";
    {
        std::string line, section;
        std::ifstream probe(path);
        while (std::getline(probe, line)) {
            line = trim(line.substr(0, line.find_first_of("#;")));
            if (line.empty()) continue;
            if (line.front() == '[') section = trim(line.substr(1, line.find(']') - 1));
            else if (section == "scenario") {
                const auto eq = line.find('=');
                if (eq != std::string::npos && trim(line.substr(0, eq)) == "kind")
                    kind = trim(line.substr(eq + 1));
            }
        }
    }
    ScenarioConfig c = kind == "highway" ? highway_config() : merge_config();

    using Setter = std::function<void(ScenarioConfig&, const std::string&)>;
    std::map<std::string, Setter> schema;
    auto d = [](double ScenarioConfig::*f) {
        return [f](ScenarioConfig& c, const std::string& v) { c.*f = parse_double(v); };
    };
    auto i = [](int ScenarioConfig::*f) {
        return [f](ScenarioConfig& c, const std::string& v) { c.*f = static_cast<int>(parse_double(v)); };
    };
    auto b = [](bool ScenarioConfig::*f) {
        return [f](ScenarioConfig& c, const std::string& v) { c.*f = parse_bool(v); };
    };

    schema["scenario.kind"] = [](ScenarioConfig& c, const std::string& v) { c.kind = v; };
    schema["scenario.seed"] = [](ScenarioConfig& c, const std::string& v) {
        c.seed = std::stoull(v);
    };
    schema["scenario.density"] = d(&ScenarioConfig::density);
    schema["scenario.episode_length"] = d(&ScenarioConfig::episode_length);

    schema["vehicle.w_lane"] = d(&ScenarioConfig::w_lane);
    schema["vehicle.wheelbase"] = d(&ScenarioConfig::wheelbase);
    schema["vehicle.r_circle"] = d(&ScenarioConfig::r_circle);
    schema["vehicle.d_circle"] = d(&ScenarioConfig::d_circle);
    schema["vehicle.c_center"] = d(&ScenarioConfig::c_center);
    schema["vehicle.v_max"] = d(&ScenarioConfig::v_max);
    schema["vehicle.v_min"] = d(&ScenarioConfig::v_min);
    schema["vehicle.psi_max"] = d(&ScenarioConfig::psi_max);
    schema["vehicle.delta_max"] = d(&ScenarioConfig::delta_max);
    schema["vehicle.a_max"] = d(&ScenarioConfig::a_max);
    schema["vehicle.v_ref"] = d(&ScenarioConfig::v_ref);
    schema["vehicle.steer_rate_max"] = d(&ScenarioConfig::steer_rate_max);

    schema["cost.q_Y"] = d(&ScenarioConfig::q_Y);
    schema["cost.q_psi"] = d(&ScenarioConfig::q_psi);
    schema["cost.q_v"] = d(&ScenarioConfig::q_v);
    schema["cost.q_delta"] = d(&ScenarioConfig::q_delta);
    schema["cost.q_deltadot"] = d(&ScenarioConfig::q_deltadot);
    schema["cost.q_a"] = d(&ScenarioConfig::q_a);
    schema["cost.q_s"] = d(&ScenarioConfig::q_s);

    schema["mpc.N"] = i(&ScenarioConfig::N);
    schema["mpc.dt"] = d(&ScenarioConfig::dt);

    schema["disturbance.lattice_dX"] = d(&ScenarioConfig::lattice_dX);
    schema["disturbance.lattice_dt_cell"] = d(&ScenarioConfig::lattice_dt_cell);
    schema["disturbance.gamma_d"] = d(&ScenarioConfig::gamma_d);
    schema["disturbance.eta"] = d(&ScenarioConfig::eta);
    schema["disturbance.a_dist"] = d(&ScenarioConfig::a_dist);
    schema["disturbance.k_y"] = d(&ScenarioConfig::k_y);
    schema["disturbance.prune_n"] = i(&ScenarioConfig::prune_n);
    schema["disturbance.respect_merged"] = b(&ScenarioConfig::respect_merged);

    schema["sim.physics_dt"] = d(&ScenarioConfig::physics_dt);
    schema["sim.road_departure_tol"] = d(&ScenarioConfig::road_departure_tol);

    schema["merge.taper_start"] = d(&ScenarioConfig::merge_taper_start);
    schema["merge.taper_length"] = d(&ScenarioConfig::merge_taper_length);
    schema["merge.ego_v0"] = d(&ScenarioConfig::merge_ego_v0);
    schema["merge.white_x0"] = d(&ScenarioConfig::merge_white_x0);
    schema["merge.white_v0"] = d(&ScenarioConfig::merge_white_v0);
    schema["merge.gray_x0"] = d(&ScenarioConfig::merge_gray_x0);
    schema["merge.gray_v0"] = d(&ScenarioConfig::merge_gray_v0);
    schema["merge.disturbance"] = b(&ScenarioConfig::merge_disturbance);
    schema["merge.dist_accel"] = d(&ScenarioConfig::dist_accel);
    schema["merge.dist_t_on"] = d(&ScenarioConfig::dist_t_on);
    schema["merge.dist_t_off"] = d(&ScenarioConfig::dist_t_off);

    schema["highway.lanes"] = i(&ScenarioConfig::hw_lanes);
    schema["highway.base_count"] = i(&ScenarioConfig::hw_base_count);
    schema["highway.span_back"] = d(&ScenarioConfig::hw_span_back);
    schema["highway.span_fwd"] = d(&ScenarioConfig::hw_span_fwd);
    schema["highway.spawn_v_lo"] = d(&ScenarioConfig::hw_spawn_v_lo);
    schema["highway.spawn_v_hi"] = d(&ScenarioConfig::hw_spawn_v_hi);
    schema["highway.min_gap"] = d(&ScenarioConfig::hw_min_gap);
    schema["highway.ego_v0"] = d(&ScenarioConfig::hw_ego_v0);
    schema["highway.ego_lane"] = i(&ScenarioConfig::hw_ego_lane);
    schema["highway.episode_length"] = d(&ScenarioConfig::hw_episode_length);

    auto idm = [](double IdmParams::*f) {
        return [f](ScenarioConfig& c, const std::string& v) { c.idm.*f = parse_double(v); };
    };
    schema["idm.accel_max"] = idm(&IdmParams::accel_max);
    schema["idm.decel_comfort"] = idm(&IdmParams::decel_comfort);
    schema["idm.time_headway"] = idm(&IdmParams::time_headway);
    schema["idm.min_gap"] = idm(&IdmParams::min_gap);
    schema["idm.exponent"] = idm(&IdmParams::exponent);
    schema["idm.brake_max"] = idm(&IdmParams::brake_max);

    auto mob = [](double MobilParams::*f) {
        return [f](ScenarioConfig& c, const std::string& v) { c.mobil.*f = parse_double(v); };
    };
    schema["mobil.politeness"] = mob(&MobilParams::politeness);
    schema["mobil.gain_threshold"] = mob(&MobilParams::gain_threshold);
    schema["mobil.safe_decel"] = mob(&MobilParams::safe_decel);
    schema["mobil.evaluation_period"] = mob(&MobilParams::evaluation_period);
    schema["mobil.lateral_rate"] = mob(&MobilParams::lateral_rate);

    auto rew = [](double RewardParams::*f) {
        return [f](ScenarioConfig& c, const std::string& v) { c.reward.*f = parse_double(v); };
    };
    schema["reward.b_c"] = rew(&RewardParams::b_c);
    schema["reward.b_l"] = rew(&RewardParams::b_l);
    schema["reward.b_v"] = rew(&RewardParams::b_v);
    schema["reward.v_r_min"] = rew(&RewardParams::v_r_min);
    schema["reward.v_r_max"] = rew(&RewardParams::v_r_max);
    schema["reward.n_lanes"] = [](ScenarioConfig& c, const std::string& v) {
        c.reward.n_lanes = static_cast<int>(parse_double(v));
    };

    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line.substr(0, line.find_first_of("#;")));
        if (line.empty()) continue;
        if (line.front() == '[') {
            const auto close = line.find(']');
            if (close == std::string::npos)
                throw std::runtime_error("config line " + std::to_string(lineno) +
                                         ": unterminated section");
            section = trim(line.substr(1, close - 1));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected key = value");
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = schema.find(key);
        if (it == schema.end())
            throw std::runtime_error("config line " + std::to_string(lineno) + ": unknown key '" +
                                     key + "'");
        it->second(c, value);
    }
    if (c.kind != "merge" && c.kind != "highway")
        throw std::runtime_error("scenario.kind must be merge or highway");
    return c;
}

}  // namespace adsb

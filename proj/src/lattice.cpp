#include "adsb/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <tuple>
#include <unordered_map>

namespace adsb {

namespace {

constexpr double kEps = 1e-9;

double interp_plan_y(const std::vector<EgoState>& plan, double t, double dt) {
    const double s = t / dt;
    const int k = std::clamp(static_cast<int>(std::floor(s)), 0, static_cast<int>(plan.size()) - 2);
    const double a = s - k;
    return (1.0 - a) * plan[k].Y + a * plan[k + 1].Y;
}

// Slack-free collision residual of the ego plan state against a target pose.
bool violates(const EgoState& ego, const Pose2d& tv, const VehicleGeometry& ge,
              const VehicleGeometry& gt) {
    const CirclePair e = circle_centers(Pose2d{ego.X, ego.Y, ego.psi}, ge);
    const CirclePair t = circle_centers(tv, gt);
    const auto res = collision_constraints(e, t, ge.r, gt.r, 0.0, gt.length_scale());
    return res[0] > 1e-12 || res[1] > 1e-12;
}

// Time to cover dx starting from squared speed v_sq under constant accel.
double step_time(double v_sq, double u_a, double dx) {
    const double v0 = std::sqrt(v_sq);
    if (u_a == 0.0) return dx / v0;
    if (u_a > 0.0) return -v0 / u_a + std::sqrt(v_sq / (u_a * u_a) + 2.0 * dx / u_a);
    return -v0 / u_a - std::sqrt(v_sq / (u_a * u_a) + 2.0 * dx / u_a);
}

struct AdvNode {
    double X, Y, v_sq, t;
    int seed;        // branch sample index (t_dist = seed * dt)
    int parent;      // node index, -1 for seed roots
    int action;      // -1, 0, +1 times a_dist (action taken to REACH this node)
    double u_y;      // lateral input on the incoming edge
};

// seed(6) | xi(8) | vi(10) | yi(8) | cell(32)
uint64_t adv_key(int seed, int xi, int vi, int yi, int cell) {
    return (uint64_t(seed & 0x3f) << 58) | (uint64_t(xi & 0xff) << 50) |
           (uint64_t((vi + 512) & 0x3ff) << 40) | (uint64_t((yi + 128) & 0xff) << 32) |
           uint64_t(uint32_t(cell));
}

}  // namespace

double lateral_disturbance(double y_ego, double y_tv, double k_y) {
    const double d = y_ego - y_tv;
    if (d > 0.0) return k_y;
    if (d < 0.0) return -k_y;
    return 0.0;
}

double extension_accel(double x_tv, double x_ego, double v_tv, double v_ego,
                       const DisturbanceParams& p, double dt) {
    const double dv = v_tv - v_ego;
    const double x = -std::abs(dv) * dv / (2.0 * p.a_dist);
    if (p.literal_extension_guard) {
        const bool accel = (x_tv - x_ego < x) && (v_tv + p.a_dist * dt * dt / 2.0 < p.v_min);
        return accel ? p.a_dist : -p.a_dist;
    }
    double a = (x_tv - x_ego < x) ? p.a_dist : -p.a_dist;
    if (a < 0.0 && v_tv - p.a_dist * dt < p.v_min) a = p.a_dist;
    return a;
}

std::vector<Pose2d> constant_velocity_rollout(const AgentState& agent, int N, double dt) {
    std::vector<Pose2d> out(N + 2);
    for (int k = 0; k <= N + 1; ++k) out[k] = Pose2d{agent.X + agent.v * k * dt, agent.Y, 0.0};
    return out;
}

std::vector<Pose2d> replay_sequence(const AgentState& agent, const DisturbanceSequence& seq,
                                    const DisturbanceParams& p, const RoadBounds& road, int N,
                                    double dt) {
    std::vector<Pose2d> out(N + 2);
    double X = agent.X, Y = agent.Y, v = agent.v;
    out[0] = Pose2d{X, Y, 0.0};
    for (int k = 0; k <= N; ++k) {
        double a = 0.0, uy = 0.0;
        if (k >= seq.k_start && k - seq.k_start < static_cast<int>(seq.accel.size())) {
            a = seq.accel[k - seq.k_start];
            uy = seq.lateral[k - seq.k_start];
        }
        const double v_next = std::clamp(v + a * dt, 0.0, p.v_max);
        const double a_eff = (v_next - v) / dt;
        const double dX = v * dt + 0.5 * a_eff * dt * dt;
        X += dX;
        Y = std::clamp(Y + uy * dX, road.y_min, road.y_max);
        v = v_next;
        out[k + 1] = Pose2d{X, Y, 0.0};
    }
    return out;
}

namespace {

// Builds the on-grid sequence for a reconstructed lattice path, replays it,
// and keeps it only if the replay still makes the ego plan infeasible.
std::optional<DisturbanceSequence> snap_and_validate(
    const std::vector<std::tuple<double, double, double, double>>& pieces,  // t0, t1, u_a, u_y
    int seed, int agent_id, double search_cost, const AgentState& agent,
    const NominalPrediction& nominal, const DisturbanceParams& p, const VehicleGeometry& ge,
    const VehicleGeometry& gt, const RoadBounds& road, int N, double dt, int k_cut) {
    DisturbanceSequence seq;
    seq.agent_id = agent_id;
    seq.k_start = seed;
    seq.t_dist = seed * dt;
    seq.lattice_cost = search_cost;
    const int n_samples = N - seed + 1;
    seq.accel.assign(n_samples, 0.0);
    seq.lateral.assign(n_samples, 0.0);

    for (int k = seed; k <= N; ++k) {
        const double t0 = k * dt, t1 = (k + 1) * dt;
        double best_overlap = 0.0, a_best = 0.0, y_best = 0.0;
        for (const auto& [p0, p1, ua, uy] : pieces) {
            const double ov = std::min(t1, p1) - std::max(t0, p0);
            if (ov > best_overlap + 1e-12 ||
                (ov > best_overlap - 1e-12 && std::abs(ua) > std::abs(a_best))) {
                best_overlap = ov;
                a_best = ua;
                y_best = uy;
            }
        }
        if (best_overlap > 1e-9) {
            seq.accel[k - seed] = a_best;
            seq.lateral[k - seed] = y_best;
        }
    }
    if (std::abs(seq.accel[0]) < 1e-12 && std::abs(seq.lateral[0]) < 1e-12)
        return std::nullopt;  // snapped away the branch-time deviation

    // replay and locate the first on-grid violation
    auto poses = replay_sequence(agent, seq, p, road, N, dt);
    int k_viol = -1;
    for (int k = seed + 1; k <= N; ++k) {
        if (p.respect_merged && k >= k_cut) break;
        if (violates(nominal.states[k], poses[k], ge, gt)) {
            k_viol = k;
            break;
        }
    }
    if (k_viol < 0) return std::nullopt;

    // after t_inf: minimum-time extension law, stepped on the replayed states
    seq.t_inf = k_viol * dt;
    {
        double X = poses[k_viol].X, Y = poses[k_viol].Y;
        double v = agent.v;
        for (int k = seed; k < k_viol; ++k) v = std::clamp(v + seq.accel[k - seed] * dt, 0.0, p.v_max);
        for (int k = k_viol; k <= N; ++k) {
            const EgoState& ego = nominal.states[k];
            const double a = extension_accel(X, ego.X, v, ego.v, p, dt);
            const double uy = lateral_disturbance(ego.Y, Y, p.k_y);
            seq.accel[k - seed] = a;
            seq.lateral[k - seed] = uy;
            const double v_next = std::clamp(v + a * dt, 0.0, p.v_max);
            const double dX = v * dt + 0.5 * (v_next - v) * dt;
            X += dX;
            Y = std::clamp(Y + uy * dX, road.y_min, road.y_max);
            v = v_next;
        }
    }
    return seq;
}

}  // namespace

std::optional<DisturbanceSequence> find_adversarial_sequence(
    const AgentState& agent, const NominalPrediction& nominal, const DisturbanceParams& p,
    const VehicleGeometry& geom_ego, const VehicleGeometry& geom_tv, const RoadBounds& road,
    int N, double dt) {
    const double t_end = N * dt;
    const double v2_quant = 2.0 * p.a_dist * p.dX;

    // First sample at which the ego plan has merged into the agent's lane;
    // disturbance branches are cut from there on.
    int k_cut = N + 1;
    if (p.respect_merged) {
        for (int k = 0; k <= N; ++k) {
            if (std::abs(agent.Y - nominal.states[k].Y) <= 0.5 * road.w_lane) {
                k_cut = k;
                break;
            }
        }
    }

    // Quick reachability cull: even closing at full tilt the agent cannot
    // touch the ego within the horizon.
    {
        const double reach_margin =
            geom_ego.C + geom_ego.D + geom_ego.r + geom_tv.C + geom_tv.D + geom_tv.r + 5.0;
        double min_gap = 1e100;
        for (int k = 0; k <= N; ++k) {
            const double t = k * dt;
            const double fwd = agent.X + agent.v * t + 0.5 * p.a_dist * t * t;
            const double bwd = agent.X + agent.v * t - 0.5 * p.a_dist * t * t;
            const double ex = nominal.states[k].X;
            const double gap = (ex > fwd) ? ex - fwd : (bwd > ex ? bwd - ex : 0.0);
            min_gap = std::min(min_gap, gap);
        }
        if (min_gap > reach_margin) return std::nullopt;
    }

    std::vector<AdvNode> nodes;
    std::unordered_map<uint64_t, double> best_cost_at;
    using QItem = std::tuple<double, int, int64_t>;  // cost, -seed, node index
    std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> queue;

    auto cost_of = [&](const AdvNode& n) { return n.t - p.eta * (n.seed * dt); };

    for (int ks = 1; ks < N; ++ks) {
        if (p.respect_merged && ks >= k_cut) break;
        AdvNode n;
        n.X = agent.X + agent.v * ks * dt;
        n.Y = agent.Y;
        n.v_sq = agent.v * agent.v;
        n.t = ks * dt;
        n.seed = ks;
        n.parent = -1;
        n.action = 0;
        n.u_y = 0.0;
        nodes.push_back(n);
        queue.emplace(cost_of(n), -ks, static_cast<int64_t>(nodes.size()) - 1);
    }

    struct Candidate {
        double cost;
        int node;    // node the final action departs from
        int action;  // -1/0/+1
        double u_y;
        int k_viol;
    };
    std::vector<Candidate> candidates;
    double best_cand = 1e100;

    while (!queue.empty()) {
        const auto [cost, negseed, idx] = queue.top();
        queue.pop();
        if (cost > best_cand + 2.0 * dt + kEps) break;
        const AdvNode node = nodes[idx];
        if (cost > cost_of(node) + kEps) continue;  // stale entry

        const bool at_seed = node.parent < 0;
        for (int action : {+1, -1, 0}) {
            if (at_seed && action == 0) continue;
            const double u_a = action * p.a_dist;
            const double v2n = node.v_sq + 2.0 * u_a * p.dX;
            if (action != 0) {
                if (v2n < p.v_min * p.v_min - kEps || v2n < 1e-6) continue;
                if (v2n > p.v_max * p.v_max + kEps) continue;
            } else if (node.v_sq < 1e-6) {
                continue;
            }
            const double u_y =
                action != 0
                    ? lateral_disturbance(interp_plan_y(nominal.states, node.t, dt), node.Y, p.k_y)
                    : 0.0;
            const double dtau = step_time(node.v_sq, u_a, p.dX);
            const double t_next = node.t + dtau;

            // check the MPC grid times inside this edge
            bool dead = false;
            const double v0 = std::sqrt(node.v_sq);
            int j = static_cast<int>(std::floor(node.t / dt + kEps)) + 1;
            for (; j <= N && j * dt <= t_next + kEps; ++j) {
                const double tau = j * dt - node.t;
                const double X_t = node.X + v0 * tau + 0.5 * u_a * tau * tau;
                const double Y_t =
                    std::clamp(node.Y + u_y * (X_t - node.X), road.y_min, road.y_max);
                if (p.respect_merged && j >= k_cut) {
                    dead = true;
                    break;
                }
                if (violates(nominal.states[j], Pose2d{X_t, Y_t, 0.0}, geom_ego, geom_tv)) {
                    const double c = j * dt - p.eta * (node.seed * dt);
                    candidates.push_back({c, static_cast<int>(idx), action, u_y, j});
                    best_cand = std::min(best_cand, c);
                    dead = true;
                    break;
                }
            }
            if (dead || t_next > t_end + kEps) continue;

            AdvNode nxt;
            nxt.X = node.X + p.dX;
            nxt.Y = std::clamp(node.Y + u_y * p.dX, road.y_min, road.y_max);
            nxt.v_sq = v2n;
            nxt.t = t_next;
            nxt.seed = node.seed;
            nxt.parent = static_cast<int>(idx);
            nxt.action = action;
            nxt.u_y = u_y;
            const int xi = static_cast<int>(std::lround((nxt.X - agent.X) / p.dX));
            const int vi = static_cast<int>(std::lround((nxt.v_sq - agent.v * agent.v) / v2_quant));
            const int yi = p.k_y > 0.0
                               ? static_cast<int>(std::lround((nxt.Y - agent.Y) / (p.k_y * p.dX)))
                               : 0;
            const int cell = static_cast<int>(std::floor(nxt.t / p.dt_cell));
            const uint64_t key = adv_key(nxt.seed, xi, vi, yi, cell);
            const double c = cost_of(nxt);
            auto it = best_cost_at.find(key);
            if (it != best_cost_at.end() && it->second <= c + 1e-12) continue;
            best_cost_at[key] = c;
            nodes.push_back(nxt);
            queue.emplace(c, -nxt.seed, static_cast<int64_t>(nodes.size()) - 1);
        }
    }

    std::stable_sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        return nodes[a.node].seed > nodes[b.node].seed;
    });

    for (const auto& cand : candidates) {
        // reconstruct the piecewise-constant disturbance profile
        std::vector<std::tuple<double, double, double, double>> pieces;
        const AdvNode& last = nodes[cand.node];
        pieces.emplace_back(last.t, cand.k_viol * dt + dt, cand.action * p.a_dist, cand.u_y);
        for (int i = cand.node; nodes[i].parent >= 0; i = nodes[i].parent) {
            const AdvNode& n = nodes[i];
            pieces.emplace_back(nodes[n.parent].t, n.t, n.action * p.a_dist, n.u_y);
        }
        std::reverse(pieces.begin(), pieces.end());
        const int seed = last.seed;
        auto seq = snap_and_validate(pieces, seed, agent.id, cand.cost, agent, nominal, p,
                                     geom_ego, geom_tv, road, N, dt, k_cut);
        if (seq) return seq;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Initial-guess search
// ---------------------------------------------------------------------------

namespace {

struct GuessNode {
    double X, Y, v_sq, t, g;
    int parent;
    int action;
};

// xi(9) | yi(9) | vi(10) | cell(32)
uint64_t guess_key(int xi, int yi, int vi, int cell) {
    return (uint64_t(xi & 0x1ff) << 51) | (uint64_t((yi + 256) & 0x1ff) << 42) |
           (uint64_t((vi + 512) & 0x3ff) << 32) | uint64_t(uint32_t(cell));
}

double stage_integrand(double y, double v, const GuessParams& gp) {
    const double ey = (y - gp.y_ref) / gp.q_Y;
    const double ev = (v - gp.v_ref) / gp.q_v;
    return ey * ey + ev * ev;
}

}  // namespace

std::optional<LatticeGuess> initial_guess_search(const EgoState& start, const GuessParams& gp,
                                                 const LaneProfile& lanes,
                                                 const VehicleGeometry& geom_ego,
                                                 const VehicleGeometry& geom_tv,
                                                 const BranchPrediction& obstacles, int N,
                                                 double dt, VehicleModel::Kind kind) {
    const double T_h = (N + 1) * dt;
    const double v2_quant = 2.0 * gp.a_max * gp.dX;
    const double l = geom_tv.length_scale();

    std::vector<GuessNode> nodes;
    std::unordered_map<uint64_t, double> best_at;
    using QItem = std::tuple<double, int64_t>;
    std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> queue;

    nodes.push_back({start.X, start.Y, start.v * start.v, 0.0, 0.0, -1, 0});
    queue.emplace(0.0, 0);

    // action table: u_a, u_y
    const double uy_step = gp.y_step / gp.dX;
    const double acts[5][2] = {
        {0.0, 0.0}, {gp.a_max, 0.0}, {-gp.a_max, 0.0}, {0.0, uy_step}, {0.0, -uy_step}};

    double best_total = 1e100;
    int best_node = -1;
    double best_final_t = 0.0;

    auto feasible_at = [&](double X, double Y, double t) {
        const CirclePair ego = circle_centers(Pose2d{X, Y, 0.0}, geom_ego);
        const auto lr = lane_constraints(ego, geom_ego.r, -gp.margin, lanes);
        for (double r : lr)
            if (r > 1e-12) return false;
        const int j = static_cast<int>(std::lround(t / dt));
        for (const auto& agent_path : obstacles) {
            const int jj = std::clamp(j, 0, static_cast<int>(agent_path.size()) - 1);
            const CirclePair tv = circle_centers(agent_path[jj], geom_tv);
            const auto cr = collision_constraints(ego, tv, geom_ego.r, geom_tv.r, -gp.margin, l);
            if (cr[0] > 1e-12 || cr[1] > 1e-12) return false;
        }
        return true;
    };

    while (!queue.empty()) {
        const auto [g, idx] = queue.top();
        queue.pop();
        if (g >= best_total - 1e-12) break;
        const GuessNode node = nodes[idx];
        if (g > node.g + 1e-12) continue;

        for (int a = 0; a < 5; ++a) {
            const double u_a = acts[a][0], u_y = acts[a][1];
            const double v2n = node.v_sq + 2.0 * u_a * gp.dX;
            if (u_a > 0.0 && v2n > gp.v_max * gp.v_max + kEps) continue;
            if (u_a < 0.0 && v2n < gp.v_min * gp.v_min - kEps) continue;
            if (node.v_sq < 1e-6) continue;
            const double dtau = step_time(node.v_sq, u_a, gp.dX);
            const double t_next = node.t + dtau;
            const double span = std::min(t_next, T_h) - node.t;
            const double Y_next = node.Y + u_y * gp.dX;

            // feasibility at the MPC grid times covered by this edge
            const double v0 = std::sqrt(node.v_sq);
            bool ok = true;
            int j = static_cast<int>(std::floor(node.t / dt + kEps)) + 1;
            for (; j * dt <= std::min(t_next, T_h) + kEps; ++j) {
                const double tau = j * dt - node.t;
                const double X_t = node.X + v0 * tau + 0.5 * u_a * tau * tau;
                const double Y_t = node.Y + u_y * (X_t - node.X);
                if (!feasible_at(X_t, Y_t, j * dt)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;

            // Simpson rule on the quadratic tracking error over the edge
            const double v_mid = v0 + u_a * 0.5 * span;
            const double x_mid = v0 * 0.5 * span + 0.5 * u_a * 0.25 * span * span;
            const double v_end = v0 + u_a * span;
            const double x_end = v0 * span + 0.5 * u_a * span * span;
            const double c0 = stage_integrand(node.Y, v0, gp);
            const double cm = stage_integrand(node.Y + u_y * x_mid, v_mid, gp);
            const double ce = stage_integrand(node.Y + u_y * x_end, v_end, gp);
            const double edge_cost = span / 6.0 * (c0 + 4.0 * cm + ce);
            const double g_next = node.g + edge_cost;

            if (t_next >= T_h - kEps) {
                if (g_next < best_total - 1e-12) {
                    nodes.push_back({node.X + x_end, Y_next, v2n, t_next, g_next,
                                     static_cast<int>(idx), a});
                    best_total = g_next;
                    best_node = static_cast<int>(nodes.size()) - 1;
                    best_final_t = t_next;
                }
                continue;
            }

            GuessNode nxt{node.X + gp.dX, Y_next, v2n, t_next, g_next, static_cast<int>(idx), a};
            const int xi = static_cast<int>(std::lround((nxt.X - start.X) / gp.dX));
            const int yi = static_cast<int>(std::lround((nxt.Y - start.Y) / gp.y_step));
            const int vi =
                static_cast<int>(std::lround((nxt.v_sq - start.v * start.v) / v2_quant));
            const int cell = static_cast<int>(std::floor(nxt.t / gp.dt_cell));
            const uint64_t key = guess_key(xi, yi, vi, cell);
            auto it = best_at.find(key);
            if (it != best_at.end() && it->second <= g_next + 1e-12) continue;
            best_at[key] = g_next;
            nodes.push_back(nxt);
            queue.emplace(g_next, static_cast<int64_t>(nodes.size()) - 1);
        }
    }

    if (best_node < 0) return std::nullopt;
    (void)best_final_t;

    // walk back the edge list
    struct Edge {
        double t0, t1, X0, Y0, v0, u_a, u_y;
    };
    std::vector<Edge> edges;
    for (int i = best_node; nodes[i].parent >= 0; i = nodes[i].parent) {
        const GuessNode& n = nodes[i];
        const GuessNode& pnode = nodes[n.parent];
        const double ua = acts[n.action][0], uy = acts[n.action][1];
        edges.push_back({pnode.t, n.t, pnode.X, pnode.Y, std::sqrt(pnode.v_sq), ua, uy});
    }
    std::reverse(edges.begin(), edges.end());

    // resample on the MPC grid
    LatticeGuess guess;
    guess.cost = best_total;
    std::vector<double> Xs(N + 2), Ys(N + 2), Vs(N + 2);
    for (int k = 0; k <= N + 1; ++k) {
        const double t = std::min(k * dt, edges.back().t1 - 1e-12);
        const Edge* e = &edges.back();
        for (const auto& cand : edges)
            if (t >= cand.t0 - kEps && t <= cand.t1 + kEps) {
                e = &cand;
                break;
            }
        const double tau = std::clamp(t - e->t0, 0.0, e->t1 - e->t0);
        const double x_off = e->v0 * tau + 0.5 * e->u_a * tau * tau;
        Xs[k] = e->X0 + x_off;
        Ys[k] = e->Y0 + e->u_y * x_off;
        Vs[k] = e->v0 + e->u_a * tau;
    }

    const double delta_max = M_PI / 3.0;
    std::vector<double> psis(N + 2), deltas(N + 2);
    for (int k = 0; k <= N; ++k) psis[k] = std::atan2(Ys[k + 1] - Ys[k], Xs[k + 1] - Xs[k]);
    psis[N + 1] = psis[N];
    for (int k = 0; k <= N; ++k) {
        const double psid = (psis[k + 1] - psis[k]) / dt;
        deltas[k] = std::clamp(std::atan(geom_ego.L * psid / std::max(Vs[k], 1.0)), -delta_max,
                               delta_max);
    }
    deltas[N + 1] = deltas[N];

    guess.states.resize(N + 2);
    guess.inputs.resize(N + 1);
    for (int k = 0; k <= N + 1; ++k) {
        EgoState s;
        s.X = Xs[k];
        s.Y = Ys[k];
        s.psi = psis[k];
        s.v = Vs[k];
        s.delta = deltas[k];
        guess.states[k] = s;
    }
    for (int k = 0; k <= N; ++k) {
        EgoInput u;
        u.accel = (Vs[k + 1] - Vs[k]) / dt;
        u.steer_rate = kind == VehicleModel::Kind::kKinematic
                           ? (deltas[k + 1] - deltas[k]) / dt
                           : deltas[k];
        guess.inputs[k] = u;
    }
    return guess;
}

}  // namespace adsb

#include <cmath>
#include <random>

#include "adsb/ocp.hpp"
#include "adsb/qp.hpp"
#include "adsb/sqp.hpp"
#include "doctest.h"

using namespace adsb;

namespace {

OcpParams merge_params(int N = 25) {
    OcpParams p;
    p.N = N;
    p.dt = 0.2;
    p.kind = VehicleModel::Kind::kKinematic;
    p.wheelbase = 2.0;
    p.q_Y = 3.0;
    p.q_psi = M_PI / 2.0;
    p.q_v = 10.0;
    p.q_delta = 0.1;
    p.q_deltadot = 0.1;
    p.q_a = 6.0;
    p.q_s = 0.001;
    p.v_ref = 25.0;
    p.y_ref = 1.5;
    p.v_min = 0.0;
    p.v_max = 30.0;
    p.psi_max = M_PI / 2.0;
    p.delta_max = M_PI / 6.0;
    p.a_max = 3.0;
    p.steer_rate_max = 1.5;
    p.geom_ego = VehicleGeometry{1.35, 1.4, 1.0, 2.0, 3.0};
    p.geom_tv = p.geom_ego;
    p.lanes = LaneProfile(0.0, 3.0);
    return p;
}

TrajectoryTree chain_tree(const OcpParams& p, const EgoState& x0,
                          const std::vector<AgentState>& agents) {
    std::vector<EgoState> states(p.N + 2, x0);
    std::vector<EgoInput> inputs(p.N + 1, EgoInput{});
    DisturbanceParams dp;
    RoadBounds road{-1e9, 1e9, 3.0};
    return assemble_scenario_tree(states, inputs, DisturbanceTree{}, agents, dp, road, p.N, p.dt);
}

}  // namespace

TEST_CASE("nominal problem dimensions") {
    auto p = merge_params(25);
    EgoState x0;
    x0.Y = 1.5;
    x0.v = 25.0;
    std::vector<AgentState> agents{{1, 40.0, 1.5, 20.0}, {2, 80.0, 1.5, 20.0}};
    auto ocp = OcpProblem::build_nominal(p, x0, agents);
    // 26 state nodes (k = 1..26), 26 inputs (root + 25), 26 slacks
    CHECK(ocp.nodes().size() == 26);
    int n_inputs = 1;  // root
    for (const auto& n : ocp.nodes())
        if (n.iu >= 0) ++n_inputs;
    CHECK(n_inputs == 26);
    CHECK(ocp.n_eq() == 26 * 5);
    CHECK(ocp.n_var() == 26 * (5 + 1) + 26 * 2);
    // obstacle rows present for near targets plus four lane rows per node
    CHECK(ocp.n_ineq() >= 26 * 4);
}

TEST_CASE("stage cost normalization") {
    auto p = merge_params();
    Vec x = p.x_ref();
    Vec u = Vec::Zero(2);
    CHECK(stage_cost(x, u, 0.0, 1.0, p) == doctest::Approx(0.0));

    Vec xy = x;
    xy(1) += p.q_Y;
    CHECK(stage_cost(xy, u, 0.0, 0.7, p) == doctest::Approx(0.7));
    CHECK(stage_cost(x, u, p.q_s, 0.7, p) == doctest::Approx(0.7));
    Vec ua = u;
    ua(1) = p.q_a;
    CHECK(stage_cost(x, ua, 0.0, 1.0, p) == doctest::Approx(1.0));
}

TEST_CASE("analytic derivatives match central differences") {
    auto p = merge_params(6);
    EgoState x0;
    x0.Y = 1.2;
    x0.v = 21.0;
    std::vector<AgentState> agents{{1, 14.0, 1.5, 18.0}, {2, 30.0, 1.5, 22.0}};
    auto ocp = OcpProblem::build_nominal(p, x0, agents);

    std::mt19937 rng(77);
    std::uniform_real_distribution<double> un(-0.4, 0.4);
    const double h = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
        Vec z = ocp.default_start();
        for (int i = 0; i < z.size(); ++i) {
            z(i) += un(rng);
            z(i) = std::clamp(z(i), ocp.lb()(i) + 1e-3, ocp.ub()(i) - 1e-3);
        }
        Vec g(z.size());
        ocp.eval_grad(z, g);
        std::vector<Eigen::Triplet<double>> eq_t, in_t;
        ocp.eval_jac(z, eq_t, in_t);
        SpMat Je(ocp.n_eq(), ocp.n_var()), Ji(ocp.n_ineq(), ocp.n_var());
        Je.setFromTriplets(eq_t.begin(), eq_t.end());
        Ji.setFromTriplets(in_t.begin(), in_t.end());

        // probe a subset of coordinates
        for (int i = 0; i < z.size(); i += 5) {
            Vec zp = z, zm = z;
            zp(i) += h;
            zm(i) -= h;
            const double fd = (ocp.eval_f(zp) - ocp.eval_f(zm)) / (2.0 * h);
            CHECK(g(i) == doctest::Approx(fd).epsilon(1e-5));

            Vec cep(ocp.n_eq()), cip(ocp.n_ineq()), cem(ocp.n_eq()), cim(ocp.n_ineq());
            ocp.eval_c(zp, cep, cip);
            ocp.eval_c(zm, cem, cim);
            const Vec col_e = (cep - cem) / (2.0 * h);
            const Vec col_i = (cip - cim) / (2.0 * h);
            const Vec ae = Je.col(i);
            const Vec ai = Ji.col(i);
            const double scale_e = std::max(1.0, col_e.lpNorm<Eigen::Infinity>());
            const double scale_i = std::max(1.0, col_i.lpNorm<Eigen::Infinity>());
            CHECK((ae - col_e).lpNorm<Eigen::Infinity>() / scale_e < 1e-5);
            CHECK((ai - col_i).lpNorm<Eigen::Infinity>() / scale_i < 1e-5);
        }
    }
}

TEST_CASE("empty road at the reference solves to zero") {
    auto p = merge_params(15);
    EgoState x0;
    x0.Y = 1.5;
    x0.v = 25.0;
    auto ocp = OcpProblem::build_nominal(p, x0, {});
    auto r = solve_sqp(ocp, ocp.default_start());
    CHECK(r.solved());
    CHECK(r.objective == doctest::Approx(0.0).epsilon(1e-5));
    const EgoInput u0 = ocp.root_input(r.z);
    CHECK(std::abs(u0.accel) < 1e-4);
    CHECK(std::abs(u0.steer_rate) < 1e-4);
    // slack complementarity away from obstacles
    for (const auto& n : ocp.nodes()) CHECK(r.z(n.is) <= 1e-6);
}

TEST_CASE("static obstacle forces the analytic minimum-braking stop") {
    auto p = merge_params(26);
    p.v_ref = 25.0;
    p.lanes = LaneProfile(0.0, 3.0);
    EgoState x0;
    x0.Y = 1.5;
    x0.v = 15.0;

    // oracle: max feasible ego X against a static obstacle by bisection
    const AgentState obstacle{1, 43.11, 1.5, 0.0};
    const double l = p.geom_tv.length_scale();
    auto residual_front = [&](double X) {
        const CirclePair ego = circle_centers(Pose2d{X, 1.5, 0.0}, p.geom_ego);
        const CirclePair tv = circle_centers(Pose2d{obstacle.X, 1.5, 0.0}, p.geom_tv);
        const auto res = collision_constraints(ego, tv, p.geom_ego.r, p.geom_tv.r, 0.0, l);
        return std::max(res[0], res[1]);
    };
    double lo = 0.0, hi = obstacle.X;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (residual_front(mid) <= 0.0 ? lo : hi) = mid;
    }
    const double gap = lo;  // max reachable X
    // choose the obstacle so the gap is 2 percent beyond the stopping distance
    const double stop_dist = x0.v * x0.v / (2.0 * p.a_max);
    REQUIRE(gap > stop_dist);
    REQUIRE(gap < stop_dist * 1.05);

    auto ocp = OcpProblem::build_nominal(p, x0, {obstacle});
    // warm start the way the planner does: a rollout that does not end up
    // inside the obstacle (full braking until rest)
    Vec warm = ocp.default_start();
    {
        VehicleModel model(p.kind, p.wheelbase);
        Vec xs = model.to_vec(x0);
        Vec u = Vec::Zero(2);
        for (std::size_t i = 0; i < ocp.nodes().size(); ++i) {
            u(1) = xs(3) > 0.5 ? -p.a_max : 0.0;
            xs = model.step(xs, u, p.dt);
            xs(3) = std::max(xs(3), 0.0);
            EgoState s;
            s.X = xs(0);
            s.Y = xs(1);
            s.psi = xs(2);
            s.v = xs(3);
            ocp.set_node_state(warm, static_cast<int>(i), s);
            if (i > 0) ocp.set_node_input(warm, static_cast<int>(i) - 1, EgoInput{0.0, u(1)});
        }
    }
    auto r = solve_sqp(ocp, warm);
    CHECK(r.solved());
    const EgoState final_state = ocp.node_state(r.z, static_cast<int>(ocp.nodes().size()) - 1);
    CHECK(final_state.v < 0.02 * x0.v + 0.3);
    CHECK(final_state.X > 0.95 * gap);
    CHECK(final_state.X < gap + 1e-3);
}

TEST_CASE("branch with identical predictions collapses onto the nominal solution") {
    auto p = merge_params(10);
    EgoState x0;
    x0.Y = 1.1;
    x0.v = 22.0;
    std::vector<AgentState> agents{{1, 30.0, 1.5, 20.0}};

    auto nominal_tree = chain_tree(p, x0, agents);
    auto ocp_nom = OcpProblem::build_branching(p, x0, nominal_tree);
    auto r_nom = solve_sqp(ocp_nom, ocp_nom.default_start());
    REQUIRE(r_nom.solved());

    // one branch whose disturbance is all-zero: identical obstacle paths
    DisturbanceTree w;
    DisturbanceSequence s;
    s.agent_id = 1;
    s.k_start = 3;
    s.accel.assign(10 - 3 + 1, 0.0);
    s.lateral.assign(10 - 3 + 1, 0.0);
    s.t_dist = 0.6;
    s.t_inf = 1.0;
    w.sequences.push_back(s);
    DisturbanceParams dp;
    RoadBounds road{-1e9, 1e9, 3.0};
    auto tree = assemble_scenario_tree(std::vector<EgoState>(p.N + 2, x0),
                                       std::vector<EgoInput>(p.N + 1, EgoInput{}), w, agents, dp,
                                       road, p.N, p.dt);
    auto ocp_br = OcpProblem::build_branching(p, x0, tree);
    auto r_br = solve_sqp(ocp_br, ocp_br.default_start());
    REQUIRE(r_br.solved());

    // compare stage-by-stage states on the nominal chain and on the branch
    for (std::size_t i = 0; i < ocp_nom.nodes().size(); ++i) {
        const auto& n = ocp_nom.nodes()[i];
        const EgoState sn = ocp_nom.node_state(r_nom.z, static_cast<int>(i));
        for (std::size_t jj = 0; jj < ocp_br.nodes().size(); ++jj) {
            const auto& m = ocp_br.nodes()[jj];
            if (m.stage != n.stage) continue;
            const EgoState sb = ocp_br.node_state(r_br.z, static_cast<int>(jj));
            CHECK(sb.X == doctest::Approx(sn.X).epsilon(1e-6));
            CHECK(sb.Y == doctest::Approx(sn.Y).epsilon(1e-6));
            CHECK(sb.v == doctest::Approx(sn.v).epsilon(1e-6));
        }
    }
}

TEST_CASE("scaling every weight leaves the argmin unchanged") {
    auto p = merge_params(8);
    EgoState x0;
    x0.Y = 0.8;
    x0.v = 20.0;
    std::vector<AgentState> agents{{1, 25.0, 1.5, 18.0}};
    auto tree = chain_tree(p, x0, agents);
    auto ocp1 = OcpProblem::build_branching(p, x0, tree);
    auto r1 = solve_sqp(ocp1, ocp1.default_start());

    auto tree2 = tree;
    for (auto& n : tree2.nodes) n.beta *= 3.7;
    auto ocp2 = OcpProblem::build_branching(p, x0, tree2);
    auto r2 = solve_sqp(ocp2, ocp2.default_start());

    REQUIRE(r1.solved());
    REQUIRE(r2.solved());
    CHECK((r1.z - r2.z).lpNorm<Eigen::Infinity>() < 1e-4);
    CHECK(r2.objective == doctest::Approx(3.7 * r1.objective).epsilon(1e-4));
}

TEST_CASE("receding-horizon consistency in a static world") {
    // the transient has to settle inside the horizon for shift-consistency
    auto p = merge_params(45);
    EgoState x0;
    x0.Y = 1.45;
    x0.v = 24.8;
    SqpOptions tight;
    tight.tol = 1e-8;
    auto ocp0 = OcpProblem::build_nominal(p, x0, {});
    auto r0 = solve_sqp(ocp0, ocp0.default_start(), tight);
    REQUIRE(r0.solved());

    // apply the first input exactly and re-solve from the successor state
    VehicleModel model(p.kind, p.wheelbase);
    const Vec x1 = model.step(model.to_vec(x0), model.input_vec(ocp0.root_input(r0.z)), p.dt);
    EgoState s1 = model.to_state(x1, model.input_vec(ocp0.node_input(r0.z, 0)));
    auto ocp1 = OcpProblem::build_nominal(p, s1, {});
    Vec warm = ocp1.default_start();
    auto r1 = solve_sqp(ocp1, warm, tight);
    REQUIRE(r1.solved());

    for (std::size_t i = 0; i + 1 < ocp1.nodes().size(); ++i) {
        const EgoState a = ocp0.node_state(r0.z, static_cast<int>(i + 1));
        const EgoState b = ocp1.node_state(r1.z, static_cast<int>(i));
        CHECK(std::abs(a.X - b.X) < 1e-3);
        CHECK(std::abs(a.Y - b.Y) < 1e-3);
        CHECK(std::abs(a.psi - b.psi) < 1e-3);
        CHECK(std::abs(a.v - b.v) < 1e-3);
    }
}

TEST_CASE("hard bounds hold exactly at the solution") {
    auto p = merge_params(12);
    p.v_ref = 45.0;  // unattainable: rides the speed bound
    EgoState x0;
    x0.Y = 1.5;
    x0.v = 28.0;
    auto ocp = OcpProblem::build_nominal(p, x0, {});
    auto r = solve_sqp(ocp, ocp.default_start());
    REQUIRE(r.solved());
    for (int i = 0; i < ocp.n_var(); ++i) {
        CHECK(r.z(i) >= ocp.lb()(i) - 1e-9);
        CHECK(r.z(i) <= ocp.ub()(i) + 1e-9);
    }
    const EgoState last = ocp.node_state(r.z, static_cast<int>(ocp.nodes().size()) - 1);
    CHECK(last.v == doctest::Approx(p.v_max).epsilon(1e-4));
}

TEST_CASE("problem dump lists dimensions") {
    auto p = merge_params(4);
    EgoState x0;
    x0.v = 20.0;
    auto ocp = OcpProblem::build_nominal(p, x0, {});
    auto text = ocp.dump();
    CHECK(text.find("variables=") != std::string::npos);
    CHECK(text.find("bounds:") != std::string::npos);
}

#include "adsb/ocp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace adsb {

namespace {

double weight_of(double q) { return std::isinf(q) ? 0.0 : 1.0 / (q * q); }
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Vec OcpParams::state_weights() const {
    Vec w(nx());
    if (kind == VehicleModel::Kind::kKinematic)
        w << 0.0, weight_of(q_Y), weight_of(q_psi), weight_of(q_v), weight_of(q_delta);
    else
        w << 0.0, weight_of(q_Y), weight_of(q_psi), weight_of(q_v);
    return w;
}

Vec OcpParams::input_weights() const {
    Vec w(nu());
    if (kind == VehicleModel::Kind::kKinematic)
        w << weight_of(q_deltadot), weight_of(q_a);
    else
        w << weight_of(q_delta), weight_of(q_a);
    return w;
}

Vec OcpParams::x_ref() const {
    Vec r = Vec::Zero(nx());
    r(1) = y_ref;
    r(3) = v_ref;
    return r;
}

double stage_cost(const Vec& x, const Vec& u_parent, double s, double beta, const OcpParams& p) {
    const Vec wx = p.state_weights();
    const Vec wu = p.input_weights();
    const Vec dx = x - p.x_ref();
    double c = 0.0;
    for (int i = 0; i < x.size(); ++i) c += wx(i) * dx(i) * dx(i);
    for (int i = 0; i < u_parent.size(); ++i) c += wu(i) * u_parent(i) * u_parent(i);
    c += p.slack_penalty() * s;
    return beta * c;
}

OcpProblem::OcpProblem(const OcpParams& params, const EgoState& x0)
    : params_(params), model_(params.kind, params.wheelbase) {
    x0_ = model_.to_vec(x0);
}

OcpProblem OcpProblem::build_nominal(const OcpParams& params, const EgoState& x0,
                                     const std::vector<AgentState>& agents) {
    // a single-chain tree makes the nominal problem the degenerate case of
    // the branching one
    std::vector<EgoState> states(params.N + 2, x0);
    std::vector<EgoInput> inputs(params.N + 1, EgoInput{});
    DisturbanceTree empty;
    DisturbanceParams dp;
    RoadBounds road{-1e9, 1e9, 3.0};
    auto tree = assemble_scenario_tree(states, inputs, empty, agents, dp, road, params.N,
                                       params.dt);
    return build_branching(params, x0, tree);
}

OcpProblem OcpProblem::build_branching(const OcpParams& params, const EgoState& x0,
                                       const TrajectoryTree& tree) {
    OcpProblem p(params, x0);
    const int nx = params.nx(), nu = params.nu();
    const int N = tree.horizon;

    // decision nodes: every non-root tree node, then one terminal per leaf
    std::vector<int> tree_to_ocp(tree.nodes.size(), -1);
    int offset = nu;  // root input first
    for (std::size_t j = 1; j < tree.nodes.size(); ++j) {
        const TreeNode& tn = tree.nodes[j];
        Node n;
        n.stage = tn.k;
        n.parent = tn.parent_id == 0 ? -1 : tree_to_ocp[tn.parent_id];
        n.beta = tn.beta;
        n.tree_node = tn.id;
        n.branch = tn.branch_id;
        n.ix = offset;
        n.is = offset + nx;
        n.iu = offset + nx + 1;
        offset += nx + 1 + nu;
        tree_to_ocp[j] = static_cast<int>(p.nodes_.size());
        p.nodes_.push_back(n);
    }
    std::vector<bool> has_child(tree.nodes.size(), false);
    for (const auto& tn : tree.nodes)
        if (tn.parent_id >= 0) has_child[tn.parent_id] = true;
    for (std::size_t j = 1; j < tree.nodes.size(); ++j) {
        if (has_child[j]) continue;
        const TreeNode& leaf = tree.nodes[j];
        Node n;
        n.stage = leaf.k + 1;
        n.parent = tree_to_ocp[j];
        n.beta = leaf.beta;
        n.tree_node = -1;
        n.branch = leaf.branch_id;
        n.ix = offset;
        n.is = offset + nx;
        n.iu = -1;
        offset += nx + 1;
        p.nodes_.push_back(n);
    }
    p.n_var_ = offset;

    // per-node target predictions, culled by longitudinal reachability
    for (auto& n : p.nodes_) {
        const auto& preds = tree.branch_preds[n.branch];
        const double t_k = n.stage * params.dt;
        const double lo = x0.X - 35.0;
        const double hi = x0.X + params.v_max * t_k + 35.0;
        for (const auto& agent_path : preds) {
            const Pose2d& pose = agent_path[std::min<std::size_t>(n.stage, agent_path.size() - 1)];
            if (pose.X >= lo && pose.X <= hi) n.targets.push_back(pose);
        }
    }

    p.n_eq_ = nx * static_cast<int>(p.nodes_.size());
    int n_in = 0;
    for (const auto& n : p.nodes_) n_in += 2 * static_cast<int>(n.targets.size()) + 4;
    p.n_ineq_ = n_in;

    // bounds
    p.lb_ = Vec::Constant(p.n_var_, -kInf);
    p.ub_ = Vec::Constant(p.n_var_, kInf);
    auto set_input_bounds = [&](int iu) {
        if (params.kind == VehicleModel::Kind::kKinematic) {
            p.lb_(iu) = -params.steer_rate_max;
            p.ub_(iu) = params.steer_rate_max;
        } else {
            p.lb_(iu) = -params.delta_max;
            p.ub_(iu) = params.delta_max;
        }
        p.lb_(iu + 1) = -params.a_max;
        p.ub_(iu + 1) = params.a_max;
    };
    set_input_bounds(0);
    for (const auto& n : p.nodes_) {
        p.lb_(n.ix + 2) = -params.psi_max;
        p.ub_(n.ix + 2) = params.psi_max;
        p.lb_(n.ix + 3) = params.v_min;
        p.ub_(n.ix + 3) = params.v_max;
        if (nx == 5) {
            p.lb_(n.ix + 4) = -params.delta_max;
            p.ub_(n.ix + 4) = params.delta_max;
        }
        p.lb_(n.is) = 0.0;
        p.ub_(n.is) = params.slack_max();
        if (n.iu >= 0) set_input_bounds(n.iu);
    }
    (void)N;
    return p;
}

double OcpProblem::eval_f(const Vec& z) const {
    const int nx = params_.nx(), nu = params_.nu();
    const Vec wx = params_.state_weights();
    const Vec wu = params_.input_weights();
    const Vec xref = params_.x_ref();
    const double b = params_.slack_penalty();
    double f = 0.0;
    for (const auto& n : nodes_) {
        const int ipu = n.parent < 0 ? 0 : nodes_[n.parent].iu;
        for (int i = 0; i < nx; ++i) {
            const double d = z(n.ix + i) - xref(i);
            f += n.beta * wx(i) * d * d;
        }
        for (int i = 0; i < nu; ++i) {
            const double u = z(ipu + i);
            f += n.beta * wu(i) * u * u;
        }
        f += n.beta * b * z(n.is);
    }
    return f;
}

void OcpProblem::eval_grad(const Vec& z, Vec& grad) const {
    const int nx = params_.nx(), nu = params_.nu();
    const Vec wx = params_.state_weights();
    const Vec wu = params_.input_weights();
    const Vec xref = params_.x_ref();
    const double b = params_.slack_penalty();
    grad = Vec::Zero(n_var_);
    for (const auto& n : nodes_) {
        const int ipu = n.parent < 0 ? 0 : nodes_[n.parent].iu;
        for (int i = 0; i < nx; ++i)
            grad(n.ix + i) += 2.0 * n.beta * wx(i) * (z(n.ix + i) - xref(i));
        for (int i = 0; i < nu; ++i) grad(ipu + i) += 2.0 * n.beta * wu(i) * z(ipu + i);
        grad(n.is) += n.beta * b;
    }
}

Vec OcpProblem::hess_diag() const {
    const int nx = params_.nx(), nu = params_.nu();
    const Vec wx = params_.state_weights();
    const Vec wu = params_.input_weights();
    Vec h = Vec::Zero(n_var_);
    for (const auto& n : nodes_) {
        const int ipu = n.parent < 0 ? 0 : nodes_[n.parent].iu;
        for (int i = 0; i < nx; ++i) h(n.ix + i) += 2.0 * n.beta * wx(i);
        for (int i = 0; i < nu; ++i) h(ipu + i) += 2.0 * n.beta * wu(i);
    }
    return h;
}

void OcpProblem::eval_c(const Vec& z, Vec& c_eq, Vec& c_in) const {
    const int nx = params_.nx();
    c_eq.resize(n_eq_);
    c_in.resize(n_ineq_);
    const double l = params_.geom_tv.length_scale();
    const double rr = params_.geom_ego.r + params_.geom_tv.r;

    int e = 0, q = 0;
    for (const auto& n : nodes_) {
        const Vec xp = n.parent < 0 ? x0_ : z.segment(nodes_[n.parent].ix, nx);
        const int ipu = n.parent < 0 ? 0 : nodes_[n.parent].iu;
        const Vec up = z.segment(ipu, params_.nu());
        const Vec pred = model_.step(xp, up, params_.dt);
        c_eq.segment(e, nx) = z.segment(n.ix, nx) - pred;
        e += nx;

        const double X = z(n.ix), Y = z(n.ix + 1), psi = z(n.ix + 2), s = z(n.is);
        const CirclePair ego = circle_centers(Pose2d{X, Y, psi}, params_.geom_ego);
        for (const auto& tv_pose : n.targets) {
            const CirclePair tv = circle_centers(tv_pose, params_.geom_tv);
            const Vec2* b[2] = {&ego.p1, &ego.p2};
            for (int j = 0; j < 2; ++j) {
                double sum = 0.0;
                sum += kernel_value(tv.p1, *b[j], params_.geom_tv.r, params_.geom_ego.r, s, l);
                sum += kernel_value(tv.p2, *b[j], params_.geom_tv.r, params_.geom_ego.r, s, l);
                c_in(q++) = sum - 1.0;
            }
        }
        const Vec2* pts[2] = {&ego.p1, &ego.p2};
        for (int j = 0; j < 2; ++j) {
            const double Xj = (*pts[j])(0), Yj = (*pts[j])(1);
            c_in(q++) = params_.geom_ego.r - (Yj - params_.lanes.y_min(Xj) + s);
            c_in(q++) = params_.geom_ego.r - (params_.lanes.y_max(Xj) - Yj + s);
        }
    }
    (void)rr;
}

void OcpProblem::eval_jac(const Vec& z, std::vector<Eigen::Triplet<double>>& eq_trips,
                          std::vector<Eigen::Triplet<double>>& in_trips) const {
    const int nx = params_.nx(), nu = params_.nu();
    eq_trips.clear();
    in_trips.clear();
    const double l = params_.geom_tv.length_scale();
    const double l2 = l * l;
    const double rr = params_.geom_ego.r + params_.geom_tv.r;

    Mat A(nx, nx), B(nx, nu);
    int e = 0, q = 0;
    for (const auto& n : nodes_) {
        const Vec xp = n.parent < 0 ? x0_ : z.segment(nodes_[n.parent].ix, nx);
        const int ipu = n.parent < 0 ? 0 : nodes_[n.parent].iu;
        const Vec up = z.segment(ipu, nu);
        model_.step_jacobians(xp, up, params_.dt, A, B);
        for (int r = 0; r < nx; ++r) {
            eq_trips.emplace_back(e + r, n.ix + r, 1.0);
            if (n.parent >= 0)
                for (int ccol = 0; ccol < nx; ++ccol)
                    eq_trips.emplace_back(e + r, nodes_[n.parent].ix + ccol, -A(r, ccol));
            for (int ccol = 0; ccol < nu; ++ccol)
                eq_trips.emplace_back(e + r, ipu + ccol, -B(r, ccol));
        }
        e += nx;

        const double X = z(n.ix), Y = z(n.ix + 1), psi = z(n.ix + 2), s = z(n.is);
        const double cp = std::cos(psi), sp = std::sin(psi);
        const double d1 = params_.geom_ego.C + params_.geom_ego.D;
        const double d2 = params_.geom_ego.C - params_.geom_ego.D;
        const CirclePair ego = circle_centers(Pose2d{X, Y, psi}, params_.geom_ego);
        const Vec2* b[2] = {&ego.p1, &ego.p2};
        const double dj[2] = {d1, d2};

        for (const auto& tv_pose : n.targets) {
            const CirclePair tv = circle_centers(tv_pose, params_.geom_tv);
            const Vec2* a[2] = {&tv.p1, &tv.p2};
            for (int j = 0; j < 2; ++j) {
                Vec2 db(0.0, 0.0);
                double ds = 0.0;
                for (int i = 0; i < 2; ++i) {
                    const double kv = kernel_value(*a[i], *b[j], params_.geom_tv.r,
                                                   params_.geom_ego.r, s, l);
                    db += -kv / l2 * (*b[j] - *a[i]);
                    ds += -kv * (rr - s) / l2;
                }
                // chain through the circle center b_j(X, Y, psi)
                in_trips.emplace_back(q, n.ix + 0, db(0));
                in_trips.emplace_back(q, n.ix + 1, db(1));
                in_trips.emplace_back(q, n.ix + 2, db(0) * (-dj[j] * sp) + db(1) * (dj[j] * cp));
                in_trips.emplace_back(q, n.is, ds);
                ++q;
            }
        }
        for (int j = 0; j < 2; ++j) {
            const double Xj = (*b[j])(0);
            const double slope_min = params_.lanes.y_min_slope(Xj);
            const double slope_max = params_.lanes.y_max_slope(Xj);
            // r - (Y_j - y_min(X_j) + s) <= 0
            {
                const double gX = slope_min, gY = -1.0;
                in_trips.emplace_back(q, n.ix + 0, gX);
                in_trips.emplace_back(q, n.ix + 1, gY);
                in_trips.emplace_back(q, n.ix + 2, gX * (-dj[j] * sp) + gY * (dj[j] * cp));
                in_trips.emplace_back(q, n.is, -1.0);
                ++q;
            }
            // r - (y_max(X_j) - Y_j + s) <= 0
            {
                const double gX = -slope_max, gY = 1.0;
                in_trips.emplace_back(q, n.ix + 0, gX);
                in_trips.emplace_back(q, n.ix + 1, gY);
                in_trips.emplace_back(q, n.ix + 2, gX * (-dj[j] * sp) + gY * (dj[j] * cp));
                in_trips.emplace_back(q, n.is, -1.0);
                ++q;
            }
        }
    }
}

Vec OcpProblem::default_start() const {
    // straight constant-speed guess: robust even when the current state
    // carries steering (a curving rollout can leave the road entirely)
    Vec z = Vec::Zero(n_var_);
    const int nx = params_.nx();
    for (const auto& n : nodes_) {
        Vec s = x0_;
        s(0) += x0_(3) * n.stage * params_.dt;
        s(2) = std::clamp(s(2), -params_.psi_max, params_.psi_max);
        if (nx == 5) s(4) = 0.0;
        z.segment(n.ix, nx) = s;
        z(n.is) = 0.0;
    }
    return z;
}

void OcpProblem::set_node_state(Vec& z, int node_index, const EgoState& s) const {
    z.segment(nodes_[node_index].ix, params_.nx()) = model_.to_vec(s);
}

void OcpProblem::set_node_input(Vec& z, int node_index, const EgoInput& u) const {
    if (nodes_[node_index].iu >= 0)
        z.segment(nodes_[node_index].iu, params_.nu()) = model_.input_vec(u);
}

void OcpProblem::set_root_input(Vec& z, const EgoInput& u) const {
    z.segment(0, params_.nu()) = model_.input_vec(u);
}

EgoState OcpProblem::node_state(const Vec& z, int node_index) const {
    const Node& n = nodes_[node_index];
    const int iu = n.iu >= 0 ? n.iu : (n.parent >= 0 ? nodes_[n.parent].iu : 0);
    return model_.to_state(z.segment(n.ix, params_.nx()), z.segment(iu, params_.nu()));
}

EgoInput OcpProblem::node_input(const Vec& z, int node_index) const {
    const Node& n = nodes_[node_index];
    const int iu = n.iu >= 0 ? n.iu : 0;
    return model_.to_input(z.segment(iu, params_.nu()));
}

EgoInput OcpProblem::root_input(const Vec& z) const {
    return model_.to_input(z.segment(0, params_.nu()));
}

void OcpProblem::write_solution(const Vec& z, TrajectoryTree& tree) const {
    tree.inputs[0] = root_input(z);
    tree.leaf_terminals.clear();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.tree_node >= 0) {
            tree.states[n.tree_node] = node_state(z, static_cast<int>(i));
            tree.inputs[n.tree_node] = node_input(z, static_cast<int>(i));
        } else {
            tree.leaf_terminals.emplace_back(nodes_[n.parent].tree_node,
                                             node_state(z, static_cast<int>(i)));
        }
    }
}

std::string OcpProblem::dump() const {
    std::ostringstream os;
    os << "variables=" << n_var_ << " equalities=" << n_eq_ << " inequalities=" << n_ineq_
       << " nodes=" << nodes_.size() << "\n";
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        os << "node " << i << ": stage=" << n.stage << " branch=" << n.branch
           << " beta=" << n.beta << " parent=" << n.parent << " targets=" << n.targets.size()
           << "\n";
    }
    os << "bounds:\n";
    for (int i = 0; i < n_var_; ++i) os << "  z" << i << " in [" << lb_(i) << ", " << ub_(i) << "]\n";
    return os.str();
}

}  // namespace adsb

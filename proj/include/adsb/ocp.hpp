#pragma once

#include <Eigen/Sparse>

#include <string>
#include <vector>

#include "adsb/obstacles.hpp"
#include "adsb/scenario_tree.hpp"
#include "adsb/types.hpp"
#include "adsb/vehicle_model.hpp"

namespace adsb {

/// Cost normalizations, references, and hard bounds of the optimal control
/// problems. An infinite normalization turns the corresponding weight off.
struct OcpParams {
    int N = 25;
    double dt = 0.2;
    VehicleModel::Kind kind = VehicleModel::Kind::kKinematic;
    double wheelbase = 2.0;

    double q_Y = 3.0;
    double q_psi = 1.5707963267948966;
    double q_v = 10.0;
    double q_delta = 0.1;
    double q_deltadot = 0.1;
    double q_a = 6.0;
    double q_s = 0.001;

    double v_ref = 25.0;
    double y_ref = 1.5;

    double v_min = 0.0;
    double v_max = 30.0;
    double psi_max = 1.5707963267948966;
    double delta_max = 0.5235987755982988;
    double a_max = 3.0;
    double steer_rate_max = 1.5;

    VehicleGeometry geom_ego;
    VehicleGeometry geom_tv;
    LaneProfile lanes{0.0, 3.0};

    int nx() const { return kind == VehicleModel::Kind::kKinematic ? 5 : 4; }
    int nu() const { return 2; }
    double slack_max() const { return geom_ego.r + geom_tv.r; }
    double slack_penalty() const { return 1.0 / q_s; }
    Vec state_weights() const;
    Vec input_weights() const;
    Vec x_ref() const;
};

/// Quadratic stage cost of one node: beta ((x - x_ref, u)' Q (x - x_ref, u) + b s).
double stage_cost(const Vec& x, const Vec& u_parent, double s, double beta, const OcpParams& p);

/// Tree-structured NLP with flattened node arrays. Decision variables are
/// the states/slacks of every non-root stage (plus one terminal stage per
/// leaf) and the inputs of every tree node.
class OcpProblem {
  public:
    struct Node {
        int stage = 0;       // time index 1..N+1
        int parent = -1;     // index into nodes(), -1 when the parent is the root
        double beta = 1.0;
        int ix = -1;         // state variable offset
        int is = -1;         // slack variable offset
        int iu = -1;         // input variable offset (-1 on terminal stages)
        int tree_node = -1;  // originating tree node id (-1 for terminal stages)
        int branch = 0;
        std::vector<Pose2d> targets;  // included target predictions at this stage
    };

    static OcpProblem build_nominal(const OcpParams& params, const EgoState& x0,
                                    const std::vector<AgentState>& agents);
    static OcpProblem build_branching(const OcpParams& params, const EgoState& x0,
                                      const TrajectoryTree& tree);

    const OcpParams& params() const { return params_; }
    const VehicleModel& model() const { return model_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    int root_input_offset() const { return 0; }
    int n_var() const { return n_var_; }
    int n_eq() const { return n_eq_; }
    int n_ineq() const { return n_ineq_; }
    const Vec& lb() const { return lb_; }
    const Vec& ub() const { return ub_; }
    const Vec& x0() const { return x0_; }

    double eval_f(const Vec& z) const;
    void eval_grad(const Vec& z, Vec& grad) const;
    void eval_c(const Vec& z, Vec& c_eq, Vec& c_in) const;
    void eval_jac(const Vec& z, std::vector<Eigen::Triplet<double>>& eq_trips,
                  std::vector<Eigen::Triplet<double>>& in_trips) const;
    /// Constant diagonal of the (Gauss-Newton exact) objective Hessian.
    Vec hess_diag() const;

    /// Straight constant-speed rollout used when no better start is known.
    Vec default_start() const;
    /// Pack per-stage states/inputs into the flat variable vector.
    void set_node_state(Vec& z, int node_index, const EgoState& s) const;
    void set_node_input(Vec& z, int node_index, const EgoInput& u) const;
    void set_root_input(Vec& z, const EgoInput& u) const;
    EgoState node_state(const Vec& z, int node_index) const;
    EgoInput node_input(const Vec& z, int node_index) const;
    EgoInput root_input(const Vec& z) const;

    /// Copies a solution back onto a trajectory tree (states/inputs per tree
    /// node; terminal stages are reported separately as leaf extensions).
    void write_solution(const Vec& z, TrajectoryTree& tree) const;

    /// Plain-text dump of dimensions, bounds, and sparsity for debugging.
    std::string dump() const;

  private:
    OcpProblem(const OcpParams& params, const EgoState& x0);

    OcpParams params_;
    VehicleModel model_;
    Vec x0_;
    std::vector<Node> nodes_;
    int n_var_ = 0, n_eq_ = 0, n_ineq_ = 0;
    Vec lb_, ub_;
};

}  // namespace adsb

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "adsb/lattice.hpp"
#include "adsb/obstacles.hpp"
#include "adsb/types.hpp"

namespace adsb {

struct MalformedTree : std::runtime_error {
    explicit MalformedTree(const std::string& what) : std::runtime_error(what) {}
};

/// One node of the trajectory tree. Node k carries the ego state at sample k
/// and the input applied over [t_k, t_{k+1}); the input of a leaf drives the
/// extra terminal state appended when the tree is transcribed into an OCP.
struct TreeNode {
    int id = 0;
    int parent_id = -1;  // -1 for the root
    int k = 0;           // time index
    int branch_id = 0;   // 0 = nominal branch
    double beta = 1.0;   // importance weight
    double gamma = 1.0;  // odds parameter of the incoming edge
};

/// Disturbance sequences collected per agent, all branching off the nominal
/// (zero-disturbance) prediction.
struct DisturbanceTree {
    std::vector<DisturbanceSequence> sequences;
};

/// Scenario tree with per-node ego states/inputs and per-branch obstacle
/// predictions (branch_preds[branch][agent][k], k = 0..N+1).
struct TrajectoryTree {
    std::vector<TreeNode> nodes;
    std::vector<EgoState> states;   // per node
    std::vector<EgoInput> inputs;   // per node
    std::vector<BranchPrediction> branch_preds;
    std::vector<int> branch_start;  // k_start per branch (0 for nominal)
    int horizon = 0;                // N
    // terminal (stage N+1) states per leaf, filled in by the OCP solve
    std::vector<std::pair<int, EgoState>> leaf_terminals;

    int node_count() const { return static_cast<int>(nodes.size()); }
    std::vector<int> children_of(int node_id) const;
    bool is_nominal_child(int node_id) const;
};

/// Inputs along the zero-disturbance path from the root, u_0..u_N.
std::vector<EgoInput> extract_nominal(const TrajectoryTree& tree);

/// Runs the per-agent adversarial search and collects at most one sequence
/// per agent.
DisturbanceTree generate_disturbance_tree(const std::vector<AgentState>& agents,
                                          const NominalPrediction& nominal,
                                          const DisturbanceParams& params,
                                          const VehicleGeometry& geom_ego,
                                          const VehicleGeometry& geom_tv, const RoadBounds& road,
                                          int N, double dt);

/// Keeps the n most critical sequences by t_inf - eta t_dist (stable order).
DisturbanceTree prune(const DisturbanceTree& w_in, std::size_t n, double eta);

/// Top-down importance weights: beta_child = beta_parent * gamma_child / sum.
void assign_weights(TrajectoryTree& tree, double gamma_d, double gamma_nominal = 1.0);

/// Builds the tree skeleton: nominal chain 0..N plus one branch per sequence
/// (sharing nodes 0..k_start), with per-branch obstacle predictions.
TrajectoryTree assemble_scenario_tree(const std::vector<EgoState>& nominal_states,
                                      const std::vector<EgoInput>& nominal_inputs,
                                      const DisturbanceTree& w,
                                      const std::vector<AgentState>& agents,
                                      const DisturbanceParams& params, const RoadBounds& road,
                                      int N, double dt);

/// Indented per-node text dump (k, branch, beta, state) for trace files.
std::string tree_debug_dump(const TrajectoryTree& tree);

}  // namespace adsb

#include "adsb/scenario_tree.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace adsb {

std::vector<int> TrajectoryTree::children_of(int node_id) const {
    std::vector<int> out;
    for (const auto& n : nodes)
        if (n.parent_id == node_id) out.push_back(n.id);
    return out;
}

bool TrajectoryTree::is_nominal_child(int node_id) const {
    const TreeNode& n = nodes[node_id];
    if (n.parent_id < 0) return true;
    return n.branch_id == nodes[n.parent_id].branch_id;
}

std::vector<EgoInput> extract_nominal(const TrajectoryTree& tree) {
    std::vector<EgoInput> out;
    int cur = 0;
    if (tree.nodes.empty() || tree.nodes[0].k != 0)
        throw MalformedTree("tree has no root at k = 0");
    out.push_back(tree.inputs[0]);
    for (int k = 1; k <= tree.horizon; ++k) {
        int next = -1;
        for (const auto& n : tree.nodes)
            if (n.parent_id == cur && n.branch_id == 0) {
                next = n.id;
                break;
            }
        if (next < 0) throw MalformedTree("nominal branch ends early at k = " + std::to_string(k));
        out.push_back(tree.inputs[next]);
        cur = next;
    }
    return out;
}

DisturbanceTree generate_disturbance_tree(const std::vector<AgentState>& agents,
                                          const NominalPrediction& nominal,
                                          const DisturbanceParams& params,
                                          const VehicleGeometry& geom_ego,
                                          const VehicleGeometry& geom_tv, const RoadBounds& road,
                                          int N, double dt) {
    DisturbanceTree w;
    for (const auto& agent : agents) {
        auto seq =
            find_adversarial_sequence(agent, nominal, params, geom_ego, geom_tv, road, N, dt);
        if (seq) w.sequences.push_back(std::move(*seq));
    }
    return w;
}

DisturbanceTree prune(const DisturbanceTree& w_in, std::size_t n, double eta) {
    DisturbanceTree out = w_in;
    std::stable_sort(out.sequences.begin(), out.sequences.end(),
                     [eta](const DisturbanceSequence& a, const DisturbanceSequence& b) {
                         return a.cost(eta) < b.cost(eta);
                     });
    if (out.sequences.size() > n) out.sequences.resize(n);
    return out;
}

void assign_weights(TrajectoryTree& tree, double gamma_d, double gamma_nominal) {
    for (auto& n : tree.nodes)
        n.gamma = tree.is_nominal_child(n.id) ? gamma_nominal : gamma_d;
    tree.nodes[0].beta = 1.0;

    // group children by parent, then split the parent weight by the odds
    std::map<int, std::vector<int>> children;
    for (const auto& n : tree.nodes)
        if (n.parent_id >= 0) children[n.parent_id].push_back(n.id);

    // nodes are stored parent-before-child, so one forward pass suffices
    for (const auto& n : tree.nodes) {
        auto it = children.find(n.id);
        if (it == children.end()) continue;
        double sum = 0.0;
        for (int c : it->second) sum += tree.nodes[c].gamma;
        for (int c : it->second) tree.nodes[c].beta = n.beta * tree.nodes[c].gamma / sum;
    }
}

TrajectoryTree assemble_scenario_tree(const std::vector<EgoState>& nominal_states,
                                      const std::vector<EgoInput>& nominal_inputs,
                                      const DisturbanceTree& w,
                                      const std::vector<AgentState>& agents,
                                      const DisturbanceParams& params, const RoadBounds& road,
                                      int N, double dt) {
    TrajectoryTree tree;
    tree.horizon = N;

    // nominal branch: nodes 0..N
    for (int k = 0; k <= N; ++k) {
        TreeNode n;
        n.id = k;
        n.parent_id = k - 1;
        n.k = k;
        n.branch_id = 0;
        tree.nodes.push_back(n);
        tree.states.push_back(nominal_states[k]);
        tree.inputs.push_back(k < static_cast<int>(nominal_inputs.size()) ? nominal_inputs[k]
                                                                          : EgoInput{});
    }

    // branch 0 predictions: constant velocity for every agent
    BranchPrediction nominal_pred;
    for (const auto& a : agents) nominal_pred.push_back(constant_velocity_rollout(a, N, dt));
    tree.branch_preds.push_back(nominal_pred);
    tree.branch_start.push_back(0);

    int branch = 1;
    for (const auto& seq : w.sequences) {
        const int ks = seq.k_start;
        int parent = ks;  // node id on the nominal chain equals its k
        for (int k = ks + 1; k <= N; ++k) {
            TreeNode n;
            n.id = tree.node_count();
            n.parent_id = parent;
            n.k = k;
            n.branch_id = branch;
            tree.nodes.push_back(n);
            tree.states.push_back(nominal_states[k]);
            tree.inputs.push_back(k < static_cast<int>(nominal_inputs.size()) ? nominal_inputs[k]
                                                                              : EgoInput{});
            parent = n.id;
        }
        BranchPrediction pred = nominal_pred;
        for (std::size_t i = 0; i < agents.size(); ++i)
            if (agents[i].id == seq.agent_id)
                pred[i] = replay_sequence(agents[i], seq, params, road, N, dt);
        tree.branch_preds.push_back(std::move(pred));
        tree.branch_start.push_back(ks);
        ++branch;
    }
    assign_weights(tree, 0.5, 1.0);
    return tree;
}

std::string tree_debug_dump(const TrajectoryTree& tree) {
    std::ostringstream os;
    os << "nodes=" << tree.node_count() << " horizon=" << tree.horizon << "\n";
    for (const auto& n : tree.nodes) {
        for (int i = 0; i < n.branch_id; ++i) os << "  ";
        const EgoState& s = tree.states[n.id];
        os << "k=" << n.k << " branch=" << n.branch_id << " beta=" << n.beta << " X=" << s.X
           << " Y=" << s.Y << " psi=" << s.psi << " v=" << s.v << " delta=" << s.delta << "\n";
    }
    return os.str();
}

}  // namespace adsb

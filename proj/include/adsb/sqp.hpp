#pragma once

#include "adsb/ocp.hpp"
#include "adsb/types.hpp"

namespace adsb {

enum class SolveStatus { kSolved, kMaxIter, kInfeasibleDetected };

struct SqpOptions {
    int max_iter = 100;
    double tol = 1e-6;
    double trust_init = 4.0;
    double trust_max = 50.0;
    double rho_init = 2e3;
    double rho_max = 1e8;
};

struct SolveResult {
    SolveStatus status = SolveStatus::kMaxIter;
    Vec z;
    double objective = 0.0;
    double kkt_stat = 1e100;
    double kkt_feas = 1e100;
    double kkt_comp = 1e100;
    int iterations = 0;
    Vec lambda_eq;
    Vec lambda_in;

    double kkt_residual() const { return std::max({kkt_stat, kkt_feas, kkt_comp}); }
    bool solved() const { return status == SolveStatus::kSolved; }
};

/// Sequential quadratic programming with an exact l1 penalty line search.
/// Subproblems carry elastic relaxations of all linearized constraints so
/// they stay feasible; hard variable bounds are never relaxed.
SolveResult solve_sqp(const OcpProblem& ocp, const Vec& z_start, const SqpOptions& opts = {});

}  // namespace adsb

#pragma once

#include <Eigen/Sparse>

#include "adsb/types.hpp"

namespace adsb {

using SpMat = Eigen::SparseMatrix<double>;

/// Convex quadratic program
///   min 1/2 y'Qy + c'y   s.t.  A y = b,  lb <= y <= ub
/// with +-inf bounds allowed. Q must be positive semi-definite.
struct QpProblem {
    SpMat Q;  // n x n, symmetric (full matrix stored)
    Vec c;
    SpMat A;  // m x n
    Vec b;
    Vec lb, ub;
};

struct QpOptions {
    double tol = 1e-9;
    int max_iter = 60;
};

struct QpResult {
    Vec y;
    Vec lambda;       // equality multipliers
    Vec z_lb, z_ub;   // bound multipliers (>= 0)
    bool ok = false;
    int iters = 0;
    double mu = 0.0;
    double res_primal = 0.0;
    double res_dual = 0.0;
};

/// Primal-dual interior-point solve (Mehrotra predictor-corrector) using a
/// regularized sparse LDL' factorization of the augmented KKT system. The
/// sparsity pattern is analyzed once per call.
QpResult solve_qp(const QpProblem& qp, const QpOptions& opts = {});

}  // namespace adsb

#include "adsb/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adsb/qp.hpp"

namespace adsb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double l1_violation(const Vec& c_eq, const Vec& c_in) {
    double v = 0.0;
    for (int i = 0; i < c_eq.size(); ++i) v += std::abs(c_eq(i));
    for (int i = 0; i < c_in.size(); ++i) v += std::max(c_in(i), 0.0);
    return v;
}

double inf_violation(const Vec& c_eq, const Vec& c_in) {
    double v = 0.0;
    for (int i = 0; i < c_eq.size(); ++i) v = std::max(v, std::abs(c_eq(i)));
    for (int i = 0; i < c_in.size(); ++i) v = std::max(v, c_in(i));
    return v;
}

}  // namespace

SolveResult solve_sqp(const OcpProblem& ocp, const Vec& z_start, const SqpOptions& opts) {
    const int nz = ocp.n_var();
    const int ne = ocp.n_eq();
    const int ni = ocp.n_ineq();

    SolveResult res;
    Vec z = z_start;
    for (int i = 0; i < nz; ++i) z(i) = std::clamp(z(i), ocp.lb()(i), ocp.ub()(i));

    double rho = opts.rho_init;
    double trust = opts.trust_init;
    Vec lam_eq = Vec::Zero(ne), lam_in = Vec::Zero(ni);
    Vec zlb = Vec::Zero(nz), zub = Vec::Zero(nz);

    Vec grad(nz), c_eq(ne), c_in(ni);
    std::vector<Eigen::Triplet<double>> eq_t, in_t;
    const Vec hdiag = ocp.hess_diag();

    // QP layout: [dz; p; q; t; w] with A = [J_eq -I +I 0 0; J_in 0 0 -I +I]
    const int nq = nz + 2 * ne + 2 * ni;
    QpProblem qp;
    qp.c = Vec::Zero(nq);
    qp.lb = Vec::Constant(nq, 0.0);
    qp.ub = Vec::Constant(nq, kInf);
    {
        SpMat Q(nq, nq);
        std::vector<Eigen::Triplet<double>> qt;
        for (int i = 0; i < nz; ++i)
            if (hdiag(i) != 0.0) qt.emplace_back(i, i, hdiag(i));
        Q.setFromTriplets(qt.begin(), qt.end());
        qp.Q = Q;
    }
    qp.b = Vec::Zero(ne + ni);

    auto kkt_residuals = [&](const Vec& le, const Vec& li, const Vec& bl, const Vec& bu,
                             double& stat_out, double& feas_out, double& comp_out) {
        Vec stat = grad;
        for (const auto& t : eq_t) stat(t.col()) += t.value() * le(t.row());
        for (const auto& t : in_t) stat(t.col()) += t.value() * li(t.row());
        stat -= bl;
        stat += bu;
        const double suml = le.lpNorm<1>() + li.lpNorm<1>() + bl.lpNorm<1>() + bu.lpNorm<1>();
        const int cnt = ne + ni + 2 * nz;
        const double s_scale = std::max(1.0, suml / std::max(cnt, 1) / 100.0);
        stat_out = stat.lpNorm<Eigen::Infinity>() / s_scale;
        feas_out = inf_violation(c_eq, c_in);
        double comp = 0.0;
        for (int i = 0; i < ni; ++i) comp = std::max(comp, std::abs(li(i) * c_in(i)));
        comp_out = comp / s_scale;
    };

    bool evaluated = false;
    double f = 0.0;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        if (!evaluated) {
            f = ocp.eval_f(z);
            ocp.eval_grad(z, grad);
            ocp.eval_c(z, c_eq, c_in);
            ocp.eval_jac(z, eq_t, in_t);
            evaluated = true;
        }

        // KKT residuals with the current multiplier estimates
        kkt_residuals(lam_eq, lam_in, zlb, zub, res.kkt_stat, res.kkt_feas, res.kkt_comp);
        res.objective = f;
        res.z = z;
        res.lambda_eq = lam_eq;
        res.lambda_in = lam_in;
        res.iterations = it;
        if (res.kkt_stat <= opts.tol && res.kkt_feas <= opts.tol &&
            res.kkt_comp <= 10.0 * opts.tol) {
            res.status = SolveStatus::kSolved;
            return res;
        }

        // assemble the elastic QP around the current iterate
        std::vector<Eigen::Triplet<double>> at;
        at.reserve(eq_t.size() + in_t.size() + 2 * ne + 2 * ni);
        for (const auto& t : eq_t) at.emplace_back(t.row(), t.col(), t.value());
        for (const auto& t : in_t) at.emplace_back(ne + t.row(), t.col(), t.value());
        for (int i = 0; i < ne; ++i) {
            at.emplace_back(i, nz + i, -1.0);
            at.emplace_back(i, nz + ne + i, 1.0);
        }
        for (int i = 0; i < ni; ++i) {
            at.emplace_back(ne + i, nz + 2 * ne + i, -1.0);
            at.emplace_back(ne + i, nz + 2 * ne + ni + i, 1.0);
        }
        qp.A = SpMat(ne + ni, nq);
        qp.A.setFromTriplets(at.begin(), at.end());
        qp.b.head(ne) = -c_eq;
        qp.b.tail(ni) = -c_in;
        qp.c.head(nz) = grad;
        for (int i = 0; i < nz; ++i) {
            qp.lb(i) = std::max(ocp.lb()(i) - z(i), -trust);
            qp.ub(i) = std::min(ocp.ub()(i) - z(i), trust);
            if (qp.lb(i) > qp.ub(i)) qp.lb(i) = qp.ub(i);
        }
        // elastics: p, q penalized; t penalized; w free slack
        for (int i = 0; i < 2 * ne; ++i) qp.c(nz + i) = rho;
        for (int i = 0; i < ni; ++i) qp.c(nz + 2 * ne + i) = rho;
        for (int i = 0; i < ni; ++i) qp.c(nz + 2 * ne + ni + i) = 0.0;

        QpOptions qopts;
        qopts.tol = 1e-9;
        QpResult qr = solve_qp(qp, qopts);

        // exact-penalty consistency: rho must dominate the multipliers
        double lam_max = 0.0;
        for (int i = 0; i < ne + ni; ++i) lam_max = std::max(lam_max, std::abs(qr.lambda(i)));
        int bumps = 0;
        while (lam_max > 0.9 * rho && rho < opts.rho_max && bumps < 3) {
            rho = std::min(std::max(10.0 * rho, 2.0 * lam_max), opts.rho_max);
            for (int i = 0; i < 2 * ne; ++i) qp.c(nz + i) = rho;
            for (int i = 0; i < ni; ++i) qp.c(nz + 2 * ne + i) = rho;
            qr = solve_qp(qp, qopts);
            lam_max = 0.0;
            for (int i = 0; i < ne + ni; ++i) lam_max = std::max(lam_max, std::abs(qr.lambda(i)));
            ++bumps;
        }

        const Vec dz = qr.y.head(nz);

        // the fresh QP multipliers may already certify this iterate
        {
            double stat2, feas2, comp2;
            kkt_residuals(qr.lambda.head(ne), qr.lambda.tail(ni), qr.z_lb.head(nz),
                          qr.z_ub.head(nz), stat2, feas2, comp2);
            if (stat2 <= opts.tol && feas2 <= opts.tol && comp2 <= 10.0 * opts.tol) {
                res.kkt_stat = stat2;
                res.kkt_feas = feas2;
                res.kkt_comp = comp2;
                res.lambda_eq = qr.lambda.head(ne);
                res.lambda_in = qr.lambda.tail(ni);
                res.status = SolveStatus::kSolved;
                return res;
            }
        }

        const double viol0 = l1_violation(c_eq, c_in);
        const double phi0 = f + rho * viol0;
        // predicted merit from the QP objective value
        double elastic_sum = 0.0;
        for (int i = 0; i < 2 * ne + ni; ++i) elastic_sum += qr.y(nz + i);
        const double model_obj = f + grad.dot(dz) +
                                 0.5 * dz.dot(hdiag.cwiseProduct(dz)) + rho * elastic_sum;
        const double pred_red = phi0 - model_obj;

        const double step_norm = dz.lpNorm<Eigen::Infinity>();
        if (step_norm < 1e-12 && res.kkt_feas > opts.tol) {
            // no predicted progress on an infeasible point
            if (rho >= opts.rho_max) {
                res.status = SolveStatus::kInfeasibleDetected;
                return res;
            }
            rho = std::min(rho * 100.0, opts.rho_max);
            continue;
        }

        // l1 merit line search
        double alpha = 1.0;
        bool accepted = false;
        Vec z_new;
        double f_new = 0.0;
        Vec ce_new(ne), ci_new(ni);
        for (int ls = 0; ls < 12; ++ls) {
            z_new = z + alpha * dz;
            f_new = ocp.eval_f(z_new);
            ocp.eval_c(z_new, ce_new, ci_new);
            const double phi_new = f_new + rho * l1_violation(ce_new, ci_new);
            const double noise = 1e-10 * (1.0 + std::abs(phi0));
            if (phi_new <= phi0 - 1e-4 * alpha * std::max(pred_red, 0.0) + noise) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }

        if (!accepted) {
            trust *= 0.25;
            if (trust < 1e-7) {
                res.status =
                    res.kkt_feas > opts.tol ? SolveStatus::kInfeasibleDetected : SolveStatus::kMaxIter;
                return res;
            }
            continue;
        }

        z = z_new;
        f = f_new;
        c_eq = ce_new;
        c_in = ci_new;
        ocp.eval_grad(z, grad);
        ocp.eval_jac(z, eq_t, in_t);
        lam_eq = qr.lambda.head(ne);
        lam_in = qr.lambda.tail(ni);
        zlb = qr.z_lb.head(nz);
        zub = qr.z_ub.head(nz);

        if (alpha >= 1.0 - 1e-12) trust = std::min(trust * 1.6, opts.trust_max);
        else if (alpha < 0.25) trust = std::max(trust * 0.5, 1e-6);
    }

    res.iterations = it;
    res.status = res.kkt_feas > opts.tol ? SolveStatus::kInfeasibleDetected : SolveStatus::kMaxIter;
    return res;
}

}  // namespace adsb

#include "adsb/qp.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace adsb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

QpResult solve_qp(const QpProblem& qp, const QpOptions& opts) {
    const int n = static_cast<int>(qp.c.size());
    const int m = static_cast<int>(qp.b.size());
    QpResult res;

    const double delta_p = 1e-8;
    double delta_d = 1e-8;

    // primal start strictly inside the bounds
    Vec y(n);
    for (int i = 0; i < n; ++i) {
        const double lo = qp.lb(i), hi = qp.ub(i);
        double v = 0.0;
        if (std::isfinite(lo) && std::isfinite(hi))
            v = 0.5 * (lo + hi);
        else if (std::isfinite(lo))
            v = lo + 1.0;
        else if (std::isfinite(hi))
            v = hi - 1.0;
        y(i) = v;
    }
    Vec lambda = Vec::Zero(m);
    Vec zl = Vec::Zero(n), zu = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (std::isfinite(qp.lb(i))) zl(i) = 1.0;
        if (std::isfinite(qp.ub(i))) zu(i) = 1.0;
    }

    // KKT matrix pattern: lower triangle of [[Q + D, A'], [A, -delta_d I]]
    std::vector<Eigen::Triplet<double>> tricache;
    tricache.reserve(qp.Q.nonZeros() + qp.A.nonZeros() + n + m);
    SpMat K(n + m, n + m);
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt;

    auto assemble = [&](const Vec& diag_sigma, double dd) {
        tricache.clear();
        for (int k = 0; k < qp.Q.outerSize(); ++k)
            for (SpMat::InnerIterator it(qp.Q, k); it; ++it)
                if (it.row() >= it.col()) tricache.emplace_back(it.row(), it.col(), it.value());
        for (int i = 0; i < n; ++i) tricache.emplace_back(i, i, diag_sigma(i) + delta_p);
        for (int k = 0; k < qp.A.outerSize(); ++k)
            for (SpMat::InnerIterator it(qp.A, k); it; ++it)
                tricache.emplace_back(n + it.row(), it.col(), it.value());
        for (int r = 0; r < m; ++r) tricache.emplace_back(n + r, n + r, -dd);
        K.setFromTriplets(tricache.begin(), tricache.end());
    };

    bool analyzed = false;
    const double tau = 0.995;
    int active = 0;
    for (int i = 0; i < n; ++i) {
        if (std::isfinite(qp.lb(i))) ++active;
        if (std::isfinite(qp.ub(i))) ++active;
    }
    const int n_active = std::max(active, 1);

    Vec rd(n), rp(m), sl(n), su(n);
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        for (int i = 0; i < n; ++i) {
            sl(i) = std::isfinite(qp.lb(i)) ? y(i) - qp.lb(i) : 1.0;
            su(i) = std::isfinite(qp.ub(i)) ? qp.ub(i) - y(i) : 1.0;
        }
        rd = qp.Q * y + qp.c + qp.A.transpose() * lambda - zl + zu;
        rp = qp.A * y - qp.b;
        double mu = 0.0;
        for (int i = 0; i < n; ++i) {
            if (std::isfinite(qp.lb(i))) mu += sl(i) * zl(i);
            if (std::isfinite(qp.ub(i))) mu += su(i) * zu(i);
        }
        mu /= n_active;

        res.res_primal = m ? rp.lpNorm<Eigen::Infinity>() : 0.0;
        res.res_dual = rd.lpNorm<Eigen::Infinity>();
        res.mu = mu;
        res.iters = iter;
        const double btol = opts.tol * (1.0 + (m ? qp.b.lpNorm<Eigen::Infinity>() : 0.0));
        const double ctol = opts.tol * (1.0 + qp.c.lpNorm<Eigen::Infinity>());
        if (res.res_primal <= btol && res.res_dual <= ctol && mu <= opts.tol) {
            res.ok = true;
            break;
        }

        Vec sigma_diag = Vec::Zero(n);
        for (int i = 0; i < n; ++i) {
            if (std::isfinite(qp.lb(i))) sigma_diag(i) += zl(i) / sl(i);
            if (std::isfinite(qp.ub(i))) sigma_diag(i) += zu(i) / su(i);
        }
        assemble(sigma_diag, delta_d);
        if (!analyzed) {
            ldlt.analyzePattern(K);
            analyzed = true;
        }
        ldlt.factorize(K);
        int bumps = 0;
        while (ldlt.info() != Eigen::Success && bumps < 5) {
            delta_d *= 100.0;
            assemble(sigma_diag.array() + std::pow(10.0, bumps), delta_d);
            ldlt.factorize(K);
            ++bumps;
        }
        if (ldlt.info() != Eigen::Success) break;

        auto solve_dir = [&](const Vec& rhs_y, const Vec& rhs_l, Vec& dy, Vec& dl) {
            Vec rhs(n + m);
            rhs.head(n) = rhs_y;
            rhs.tail(m) = rhs_l;
            Vec sol = ldlt.solve(rhs);
            // one step of iterative refinement
            Vec resid = rhs;
            resid.head(n) -= (qp.Q * sol.head(n) + sigma_diag.cwiseProduct(sol.head(n)) +
                              delta_p * sol.head(n) + qp.A.transpose() * sol.tail(m));
            resid.tail(m) -= (qp.A * sol.head(n) - delta_d * sol.tail(m));
            sol += ldlt.solve(resid);
            dy = sol.head(n);
            dl = sol.tail(m);
        };

        // affine predictor
        Vec rhs_y = -rd - zl + zu;  // = -(Qy + c + A'lambda)
        Vec dy_a(n), dl_a(m);
        solve_dir(rhs_y, -rp, dy_a, dl_a);
        Vec dzl_a(n), dzu_a(n);
        for (int i = 0; i < n; ++i) {
            dzl_a(i) = std::isfinite(qp.lb(i)) ? -zl(i) - zl(i) / sl(i) * dy_a(i) : 0.0;
            dzu_a(i) = std::isfinite(qp.ub(i)) ? -zu(i) + zu(i) / su(i) * dy_a(i) : 0.0;
        }
        auto step_len = [&](const Vec& dy, const Vec& dzl, const Vec& dzu, double& ap,
                            double& ad) {
            ap = 1.0;
            ad = 1.0;
            for (int i = 0; i < n; ++i) {
                if (std::isfinite(qp.lb(i))) {
                    if (dy(i) < 0.0) ap = std::min(ap, -tau * sl(i) / dy(i));
                    if (dzl(i) < 0.0) ad = std::min(ad, -tau * zl(i) / dzl(i));
                }
                if (std::isfinite(qp.ub(i))) {
                    if (dy(i) > 0.0) ap = std::min(ap, tau * su(i) / dy(i));
                    if (dzu(i) < 0.0) ad = std::min(ad, -tau * zu(i) / dzu(i));
                }
            }
        };
        double ap_a, ad_a;
        step_len(dy_a, dzl_a, dzu_a, ap_a, ad_a);
        double mu_aff = 0.0;
        for (int i = 0; i < n; ++i) {
            if (std::isfinite(qp.lb(i)))
                mu_aff += (sl(i) + ap_a * dy_a(i)) * (zl(i) + ad_a * dzl_a(i));
            if (std::isfinite(qp.ub(i)))
                mu_aff += (su(i) - ap_a * dy_a(i)) * (zu(i) + ad_a * dzu_a(i));
        }
        mu_aff /= n_active;
        const double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3.0) : 0.0;

        // corrector
        for (int i = 0; i < n; ++i) {
            double add = 0.0;
            if (std::isfinite(qp.lb(i)))
                add += (sigma * mu - dy_a(i) * dzl_a(i)) / sl(i) - zl(i);
            if (std::isfinite(qp.ub(i)))
                add -= (sigma * mu - (-dy_a(i)) * dzu_a(i)) / su(i) - zu(i);
            rhs_y(i) = -rd(i) + add;
        }
        Vec dy(n), dl(m);
        solve_dir(rhs_y, -rp, dy, dl);
        Vec dzl(n), dzu(n);
        for (int i = 0; i < n; ++i) {
            dzl(i) = std::isfinite(qp.lb(i))
                         ? (sigma * mu - dy_a(i) * dzl_a(i)) / sl(i) - zl(i) -
                               zl(i) / sl(i) * dy(i)
                         : 0.0;
            dzu(i) = std::isfinite(qp.ub(i))
                         ? (sigma * mu - (-dy_a(i)) * dzu_a(i)) / su(i) - zu(i) +
                               zu(i) / su(i) * dy(i)
                         : 0.0;
        }
        double ap, ad;
        step_len(dy, dzl, dzu, ap, ad);

        y += ap * dy;
        lambda += ad * dl;
        zl += ad * dzl;
        zu += ad * dzu;
        for (int i = 0; i < n; ++i) {
            if (std::isfinite(qp.lb(i))) zl(i) = std::max(zl(i), 1e-14);
            if (std::isfinite(qp.ub(i))) zu(i) = std::max(zu(i), 1e-14);
        }
    }

    res.y = y;
    res.lambda = lambda;
    res.z_lb = zl;
    res.z_ub = zu;
    return res;
}

}  // namespace adsb

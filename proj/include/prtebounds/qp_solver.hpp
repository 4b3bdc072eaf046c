#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "lp_solver.hpp"
#include "model.hpp"

namespace prte {

struct QpOptions {
    double feasibility_tol = 1e-9;
    double multiplier_tol = 1e-11;
    long max_iterations = 0;  // 0 picks a size-based limit
};

/// Primal active-set method for
///   min 1/2 x' diag(h) x + c'x  over the system's polytope,
/// with h > 0, started from a feasible point x0.
inline SolveOutcome solve_qp_diag(const ConstraintSystem& sys, const Eigen::VectorXd& h,
                                  const Eigen::VectorXd& c, const Eigen::VectorXd& x0,
                                  const QpOptions& opts = {}) {
    SolveOutcome out;
    const Eigen::Index n = sys.cols();
    const Eigen::Index me = sys.A_eq.rows(), mi = sys.A_in.rows();
    if (h.size() != n || c.size() != n || x0.size() != n) throw ValidationError("QP dimension mismatch");
    if (h.minCoeff() <= 0.0) throw ValidationError("QP Hessian must be positive definite");

    // constraint list: equalities, inequalities, then bounds as rows
    struct Con {
        Eigen::RowVectorXd a;
        double b;
        bool eq;
        int kind;  // 0 eq row, 1 inequality row, 2 lower bound, 3 upper bound
        Eigen::Index src;
    };
    std::vector<Con> cons;
    auto scaled = [](Eigen::RowVectorXd a, double b) {
        const double s = a.cwiseAbs().maxCoeff();
        if (s > 0) {
            a /= s;
            b /= s;
        }
        return std::pair<Eigen::RowVectorXd, double>(a, b);
    };
    std::vector<double> row_scale;
    for (Eigen::Index i = 0; i < me; ++i) {
        auto [a, b] = scaled(sys.A_eq.row(i), sys.b_eq(i));
        cons.push_back({a, b, true, 0, i});
        row_scale.push_back(sys.A_eq.row(i).cwiseAbs().maxCoeff());
    }
    for (Eigen::Index i = 0; i < mi; ++i) {
        if (sys.A_in.row(i).cwiseAbs().maxCoeff() == 0.0) continue;
        auto [a, b] = scaled(sys.A_in.row(i), sys.b_in(i));
        cons.push_back({a, b, false, 1, i});
        row_scale.push_back(sys.A_in.row(i).cwiseAbs().maxCoeff());
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
        if (sys.lower(j) == sys.upper(j)) {
            e(j) = 1.0;
            cons.push_back({e, sys.upper(j), true, 3, j});
            row_scale.push_back(1.0);
            continue;
        }
        if (std::isfinite(sys.lower(j))) {
            e(j) = -1.0;
            cons.push_back({e, -sys.lower(j), false, 2, j});
            row_scale.push_back(1.0);
        }
        if (std::isfinite(sys.upper(j))) {
            e.setZero();
            e(j) = 1.0;
            cons.push_back({e, sys.upper(j), false, 3, j});
            row_scale.push_back(1.0);
        }
    }
    const std::size_t nc = cons.size();
    const Eigen::VectorXd hinv = h.cwiseInverse();

    Eigen::VectorXd x = x0;
    std::vector<std::size_t> work;

    auto independent = [&](const std::vector<std::size_t>& set, std::size_t cand) {
        Eigen::MatrixXd At(n, static_cast<Eigen::Index>(set.size() + 1));
        for (std::size_t k = 0; k < set.size(); ++k) At.col(static_cast<Eigen::Index>(k)) = cons[set[k]].a.transpose();
        At.col(static_cast<Eigen::Index>(set.size())) = cons[cand].a.transpose();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(At);
        qr.setThreshold(1e-10);
        return qr.rank() == At.cols();
    };

    // eq-type constraints first, then constraints tight at x0
    for (std::size_t k = 0; k < nc; ++k) {
        if (cons[k].eq && independent(work, k)) work.push_back(k);
    }
    for (std::size_t k = 0; k < nc; ++k) {
        if (cons[k].eq) continue;
        if (std::abs(cons[k].a.dot(x) - cons[k].b) <= opts.feasibility_tol && independent(work, k)) work.push_back(k);
    }

    // solve the equality-constrained step; returns p and multipliers
    auto eqp = [&](const Eigen::VectorXd& g, Eigen::VectorXd& p, Eigen::VectorXd& lam) {
        const Eigen::Index w = static_cast<Eigen::Index>(work.size());
        Eigen::MatrixXd Aw(w, n);
        for (Eigen::Index k = 0; k < w; ++k) Aw.row(k) = cons[work[static_cast<std::size_t>(k)]].a;
        if (w == 0) {
            lam.resize(0);
            p = -hinv.cwiseProduct(g);
            return;
        }
        const Eigen::MatrixXd AH = Aw * hinv.asDiagonal();
        const Eigen::MatrixXd S = AH * Aw.transpose();
        lam = S.ldlt().solve(-AH * g);
        p = -hinv.cwiseProduct(g + Aw.transpose() * lam);
    };

    const long max_iter = opts.max_iterations > 0 ? opts.max_iterations : 50 * static_cast<long>(nc + n) + 200;
    long it = 0;
    Eigen::VectorXd lam;
    bool converged = false;
    while (it++ < max_iter) {
        const Eigen::VectorXd g = h.cwiseProduct(x) + c;
        Eigen::VectorXd p;
        eqp(g, p, lam);
        // with a small Hessian, rounding in g is magnified by 1/h, so judge the
        // step by the decrease it buys rather than by its length
        const double pnorm = p.cwiseAbs().maxCoeff();
        const double decrease = 0.5 * p.dot(h.cwiseProduct(p));
        const double fval = 0.5 * x.dot(h.cwiseProduct(x)) + c.dot(x);
        if (pnorm <= 1e-12 * (1.0 + x.cwiseAbs().maxCoeff()) || decrease <= 1e-15 * (1.0 + std::abs(fval))) {
            // drop the most negative inequality multiplier
            double most = -opts.multiplier_tol * (1.0 + g.cwiseAbs().maxCoeff());
            std::size_t drop = work.size();
            for (std::size_t k = 0; k < work.size(); ++k) {
                if (cons[work[k]].eq) continue;
                if (lam(static_cast<Eigen::Index>(k)) < most) {
                    most = lam(static_cast<Eigen::Index>(k));
                    drop = k;
                }
            }
            if (drop == work.size()) {
                converged = true;
                break;
            }
            work.erase(work.begin() + static_cast<std::ptrdiff_t>(drop));
            continue;
        }
        // step length
        double alpha = 1.0;
        std::size_t block = nc;
        for (std::size_t k = 0; k < nc; ++k) {
            if (cons[k].eq || std::find(work.begin(), work.end(), k) != work.end()) continue;
            const double ap = cons[k].a.dot(p);
            if (ap <= 1e-14) continue;
            const double t = std::max(0.0, (cons[k].b - cons[k].a.dot(x)) / ap);
            if (t < alpha) {
                alpha = t;
                block = k;
            }
        }
        x += alpha * p;
        if (block < nc) work.push_back(block);
    }
    out.iterations = it;
    if (!converged) {
        out.status = SolveStatus::NumericalFailure;
        out.message = "active-set iteration limit";
        return out;
    }

    // polish: exact minimizer on the final working set
    {
        const Eigen::Index w = static_cast<Eigen::Index>(work.size());
        if (w > 0) {
            Eigen::MatrixXd Aw(w, n);
            Eigen::VectorXd bw(w);
            for (Eigen::Index k = 0; k < w; ++k) {
                Aw.row(k) = cons[work[static_cast<std::size_t>(k)]].a;
                bw(k) = cons[work[static_cast<std::size_t>(k)]].b;
            }
            const Eigen::MatrixXd AH = Aw * hinv.asDiagonal();
            const Eigen::MatrixXd S = AH * Aw.transpose();
            lam = S.ldlt().solve(-bw - AH * c);
            const Eigen::VectorXd xp = -hinv.cwiseProduct(c + Aw.transpose() * lam);
            bool ok = true;
            for (std::size_t k = 0; k < nc && ok; ++k) {
                const double v = cons[k].a.dot(xp) - cons[k].b;
                if (cons[k].eq ? std::abs(v) > 1e-9 : v > 1e-9) ok = false;
            }
            if (ok) x = xp;
            else {
                const Eigen::VectorXd g = h.cwiseProduct(x) + c;
                Eigen::VectorXd p;
                eqp(g, p, lam);
            }
        } else {
            lam.resize(0);
            x = -hinv.cwiseProduct(c);
        }
    }

    out.solution = x;
    out.lambda_eq = Eigen::VectorXd::Zero(me);
    out.lambda_in = Eigen::VectorXd::Zero(mi);
    out.nu_lower = Eigen::VectorXd::Zero(n);
    out.nu_upper = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < work.size(); ++k) {
        const Con& cn = cons[work[k]];
        double l = lam(static_cast<Eigen::Index>(k));
        const double unscaled = l / row_scale[work[k]];
        switch (cn.kind) {
            case 0: out.lambda_eq(cn.src) = unscaled; break;
            case 1: out.lambda_in(cn.src) = std::max(unscaled, 0.0); break;
            case 2: out.nu_lower(cn.src) = std::max(l, 0.0); break;
            case 3:
                if (cn.eq) {
                    if (l >= 0) out.nu_upper(cn.src) = l;
                    else out.nu_lower(cn.src) = -l;
                } else {
                    out.nu_upper(cn.src) = std::max(l, 0.0);
                }
                break;
        }
    }
    out.value = 0.5 * x.dot(h.cwiseProduct(x)) + c.dot(x);
    out.status = SolveStatus::Optimal;

    // KKT residuals
    Eigen::VectorXd stat = h.cwiseProduct(x) + c - out.nu_lower + out.nu_upper;
    if (me > 0) stat += sys.A_eq.transpose() * out.lambda_eq;
    if (mi > 0) stat += sys.A_in.transpose() * out.lambda_in;
    out.dual_residual = stat.cwiseAbs().maxCoeff();
    double pr = 0.0, comp = 0.0;
    for (std::size_t k = 0; k < nc; ++k) {
        const double v = cons[k].a.dot(x) - cons[k].b;
        pr = std::max(pr, cons[k].eq ? std::abs(v) : v);
    }
    for (Eigen::Index i = 0; i < mi; ++i) {
        const double s = sys.A_in.row(i).cwiseAbs().maxCoeff();
        if (s == 0.0) continue;
        comp = std::max(comp, std::abs(out.lambda_in(i) * (sys.A_in.row(i).dot(x) - sys.b_in(i))));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (out.nu_lower(j) > 0) comp = std::max(comp, std::abs(out.nu_lower(j) * (x(j) - sys.lower(j))));
        if (out.nu_upper(j) > 0) comp = std::max(comp, std::abs(out.nu_upper(j) * (sys.upper(j) - x(j))));
    }
    out.primal_residual = std::max(pr, 0.0);
    out.complementarity_residual = comp;
    const double tol = 1e-8 * (1.0 + c.cwiseAbs().maxCoeff());
    if (out.primal_residual > 1e-8 || out.dual_residual > tol || comp > tol) {
        out.status = SolveStatus::NumericalFailure;
        out.message = "KKT residuals above tolerance";
    }
    return out;
}

}  // namespace prte

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"

namespace prte {

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

inline const char* solve_status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
        case SolveStatus::NumericalFailure: return "NumericalFailure";
    }
    return "?";
}

/// Result of an LP or QP solve. Multipliers follow
///   grad f(x) + A_eq' lambda_eq + A_in' lambda_in - nu_lower + nu_upper = 0
/// with lambda_in, nu_lower, nu_upper >= 0.
struct SolveOutcome {
    SolveStatus status = SolveStatus::NumericalFailure;
    double value = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd solution;
    Eigen::VectorXd lambda_eq;
    Eigen::VectorXd lambda_in;
    Eigen::VectorXd nu_lower;
    Eigen::VectorXd nu_upper;
    long iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double complementarity_residual = 0.0;
    std::optional<Eigen::VectorXd> certificate;  // eq multipliers then inequality multipliers
    std::string message;

    bool optimal() const { return status == SolveStatus::Optimal; }

    /// Multipliers stacked in system row order (equalities first).
    Eigen::VectorXd multipliers() const {
        Eigen::VectorXd m(lambda_eq.size() + lambda_in.size());
        m << lambda_eq, lambda_in;
        return m;
    }
};

struct LpOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-9;
    int refactor_every = 50;
    long max_iterations = 0;  // 0 picks a size-based limit
};

/// Row scale factors: each row divided by its largest absolute entry.
inline Eigen::VectorXd row_scales(const Eigen::MatrixXd& A) {
    Eigen::VectorXd s(A.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double m = A.row(i).cwiseAbs().maxCoeff();
        s(i) = m > 0.0 ? m : 1.0;
    }
    return s;
}

/// Checks a Farkas-type certificate mu (eq part free, inequality part >= 0):
/// min over the box of mu'A x must exceed mu'b. Returns the margin, or -inf.
inline double certificate_margin(const ConstraintSystem& sys, const Eigen::VectorXd& mu) {
    const Eigen::Index me = sys.A_eq.rows();
    const Eigen::VectorXd mu_eq = mu.head(me);
    const Eigen::VectorXd mu_in = mu.tail(sys.A_in.rows());
    if (mu_in.size() > 0 && mu_in.minCoeff() < 0.0) return -kInf;
    const double scale = mu.size() > 0 ? mu.cwiseAbs().maxCoeff() : 0.0;
    if (!(scale > 0.0)) return -kInf;
    Eigen::VectorXd agg = Eigen::VectorXd::Zero(sys.cols());
    if (me > 0) agg += sys.A_eq.transpose() * mu_eq;
    if (mu_in.size() > 0) agg += sys.A_in.transpose() * mu_in;
    double rhs = 0.0;
    if (me > 0) rhs += mu_eq.dot(sys.b_eq);
    if (mu_in.size() > 0) rhs += mu_in.dot(sys.b_in);
    double amax = 1.0;
    if (sys.A_eq.size() > 0) amax = std::max(amax, sys.A_eq.cwiseAbs().maxCoeff());
    if (sys.A_in.size() > 0) amax = std::max(amax, sys.A_in.cwiseAbs().maxCoeff());
    const double zero_tol = 1e-13 * scale * amax;
    double lhs_min = 0.0;
    for (Eigen::Index j = 0; j < agg.size(); ++j) {
        const double c = agg(j);
        if (std::abs(c) <= zero_tol) continue;
        const double bound = c > 0 ? sys.lower(j) : sys.upper(j);
        if (std::isinf(bound)) return -kInf;
        lhs_min += c * bound;
    }
    return (lhs_min - rhs) / scale;
}

namespace detail {

/// Dense bounded-variable primal simplex on
///   min c'x  s.t.  M x = b,  lo <= x <= hi
/// where M already contains slack and artificial columns.
class BoundedSimplex {
public:
    enum class Where { Basic, Lower, Upper, Zero };

    BoundedSimplex(Eigen::MatrixXd M, Eigen::VectorXd b, Eigen::VectorXd lo, Eigen::VectorXd hi,
                   const LpOptions& opts)
        : M_(std::move(M)), b_(std::move(b)), lo_(std::move(lo)), hi_(std::move(hi)), opts_(opts) {
        m_ = M_.rows();
        n_ = M_.cols();
        x_ = Eigen::VectorXd::Zero(n_);
        where_.assign(static_cast<std::size_t>(n_), Where::Zero);
        max_iter_ = opts.max_iterations > 0 ? opts.max_iterations : 200 * (m_ + n_) + 1000;
    }

    Eigen::Index rows() const { return m_; }
    const Eigen::VectorXd& x() const { return x_; }
    const std::vector<Eigen::Index>& basis() const { return basis_; }
    long iterations() const { return iterations_; }
    Eigen::VectorXd& lo() { return lo_; }
    Eigen::VectorXd& hi() { return hi_; }
    const Eigen::VectorXd& reduced_costs() const { return d_; }
    std::vector<char>& blocked() { return blocked_; }

    /// Installs a basis; nonbasic variables are placed according to `where`.
    void set_basis(std::vector<Eigen::Index> basis, std::vector<Where> where) {
        basis_ = std::move(basis);
        where_ = std::move(where);
        blocked_.assign(static_cast<std::size_t>(n_), 0);
    }

    enum class Result { Optimal, Unbounded, IterationLimit, Singular };

    Result run(const Eigen::VectorXd& c) {
        c_ = c;
        if (!refactor()) return Result::Singular;
        long since_refactor = 0;
        long stall = 0;
        double best = objective();
        bool bland = false;
        while (true) {
            if (iterations_ >= max_iter_) return Result::IterationLimit;
            Eigen::Index enter = -1;
            int dir = 0;
            choose_entering(bland, enter, dir);
            if (enter < 0) {
                // confirm with a fresh factorization before declaring optimality
                if (since_refactor == 0) return Result::Optimal;
                if (!refactor()) return Result::Singular;
                since_refactor = 0;
                choose_entering(bland, enter, dir);
                if (enter < 0) return Result::Optimal;
            }
            const Eigen::VectorXd alpha = T_.col(enter);
            // ratio test
            double theta = kInf;
            Eigen::Index leave = -1;
            bool leave_to_upper = false;
            if (std::isfinite(lo_(enter)) && std::isfinite(hi_(enter))) theta = hi_(enter) - lo_(enter);
            double best_piv = 0.0;
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double a = alpha(i) * dir;
                const Eigen::Index bi = basis_[static_cast<std::size_t>(i)];
                double t;
                bool up;
                if (a > opts_.pivot_tol && std::isfinite(lo_(bi))) {
                    t = (x_(bi) - lo_(bi)) / a;
                    up = false;
                } else if (a < -opts_.pivot_tol && std::isfinite(hi_(bi))) {
                    t = (hi_(bi) - x_(bi)) / (-a);
                    up = true;
                } else {
                    continue;
                }
                t = std::max(t, 0.0);
                bool take = false;
                if (t < theta - 1e-12) {
                    take = true;
                } else if (t <= theta + 1e-12 && leave >= 0) {
                    take = bland ? bi < basis_[static_cast<std::size_t>(leave)] : std::abs(a) > best_piv;
                }
                if (take) {
                    theta = t;
                    leave = i;
                    leave_to_upper = up;
                    best_piv = std::abs(a);
                }
            }
            if (std::isinf(theta)) return Result::Unbounded;
            ++iterations_;
            // move
            x_(enter) += dir * theta;
            for (Eigen::Index i = 0; i < m_; ++i) {
                x_(basis_[static_cast<std::size_t>(i)]) -= theta * dir * alpha(i);
            }
            if (leave < 0) {
                where_[static_cast<std::size_t>(enter)] = dir > 0 ? Where::Upper : Where::Lower;
                x_(enter) = dir > 0 ? hi_(enter) : lo_(enter);
            } else {
                const Eigen::Index out = basis_[static_cast<std::size_t>(leave)];
                where_[static_cast<std::size_t>(out)] = leave_to_upper ? Where::Upper : Where::Lower;
                x_(out) = leave_to_upper ? hi_(out) : lo_(out);
                basis_[static_cast<std::size_t>(leave)] = enter;
                where_[static_cast<std::size_t>(enter)] = Where::Basic;
                pivot(leave, enter);
                if (++since_refactor >= opts_.refactor_every) {
                    if (!refactor()) return Result::Singular;
                    since_refactor = 0;
                }
            }
            const double obj = objective();
            if (obj < best - 1e-12 * (1.0 + std::abs(best))) {
                best = obj;
                stall = 0;
                bland = false;
            } else if (++stall > 30) {
                bland = true;
            }
        }
    }

    double objective() const { return c_.dot(x_); }

    /// Dual vector y with B'y = c_B.
    Eigen::VectorXd duals() const {
        Eigen::VectorXd cb(m_);
        for (Eigen::Index i = 0; i < m_; ++i) cb(i) = c_(basis_[static_cast<std::size_t>(i)]);
        return lu_.transpose().solve(cb);
    }

    bool refactor() {
        Eigen::MatrixXd B(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i) B.col(i) = M_.col(basis_[static_cast<std::size_t>(i)]);
        lu_.compute(B);
        if (!(std::abs(lu_.determinant()) > 0.0) || lu_.rcond() < 1e-14) return false;
        T_ = lu_.solve(M_);
        // nonbasic values then basic values
        Eigen::VectorXd rhs = b_;
        for (Eigen::Index j = 0; j < n_; ++j) {
            const Where w = where_[static_cast<std::size_t>(j)];
            if (w == Where::Basic) continue;
            x_(j) = w == Where::Lower ? lo_(j) : w == Where::Upper ? hi_(j) : 0.0;
            if (x_(j) != 0.0) rhs -= M_.col(j) * x_(j);
        }
        const Eigen::VectorXd xb = lu_.solve(rhs);
        for (Eigen::Index i = 0; i < m_; ++i) x_(basis_[static_cast<std::size_t>(i)]) = xb(i);
        const Eigen::VectorXd y = duals();
        d_ = c_ - M_.transpose() * y;
        for (Eigen::Index i = 0; i < m_; ++i) d_(basis_[static_cast<std::size_t>(i)]) = 0.0;
        return true;
    }

private:
    void choose_entering(bool bland, Eigen::Index& enter, int& dir) const {
        double best = 0.0;
        enter = -1;
        for (Eigen::Index j = 0; j < n_; ++j) {
            const Where w = where_[static_cast<std::size_t>(j)];
            if (w == Where::Basic || blocked_[static_cast<std::size_t>(j)]) continue;
            if (lo_(j) == hi_(j)) continue;
            const double dj = d_(j);
            int cand = 0;
            if (dj < -opts_.optimality_tol && (w == Where::Lower || w == Where::Zero) && hi_(j) > x_(j)) cand = 1;
            else if (dj > opts_.optimality_tol && (w == Where::Upper || w == Where::Zero) && lo_(j) < x_(j)) cand = -1;
            if (cand == 0) continue;
            if (bland) {
                enter = j;
                dir = cand;
                return;
            }
            if (std::abs(dj) > best) {
                best = std::abs(dj);
                enter = j;
                dir = cand;
            }
        }
    }

    void pivot(Eigen::Index r, Eigen::Index enter) {
        const double piv = T_(r, enter);
        T_.row(r) /= piv;
        const Eigen::RowVectorXd pr = T_.row(r);
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (i == r) continue;
            const double f = T_(i, enter);
            if (f != 0.0) T_.row(i) -= f * pr;
        }
        const double fd = d_(enter);
        if (fd != 0.0) d_ -= fd * pr.transpose();
        d_(enter) = 0.0;
    }

    Eigen::MatrixXd M_;
    Eigen::VectorXd b_, lo_, hi_, c_, x_, d_;
    Eigen::MatrixXd T_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    std::vector<Eigen::Index> basis_;
    std::vector<Where> where_;
    std::vector<char> blocked_;
    Eigen::Index m_ = 0, n_ = 0;
    long iterations_ = 0;
    long max_iter_ = 0;
    LpOptions opts_;
};

}  // namespace detail

/// min c'x over the system (rows scaled internally to unit max-norm).
inline SolveOutcome solve_lp_objective(const ConstraintSystem& sys, const Eigen::VectorXd& c,
                                       const LpOptions& opts = {}) {
    SolveOutcome out;
    const auto bad = sys.violations();
    if (!bad.empty()) throw ValidationError("invalid constraint system: " + bad.front());
    if (c.size() != sys.cols()) throw ValidationError("objective length mismatch");

    const Eigen::Index n = sys.cols();
    const Eigen::Index me = sys.A_eq.rows(), mi = sys.A_in.rows();
    const Eigen::Index m = me + mi;
    Eigen::MatrixXd A(m, n);
    Eigen::VectorXd b(m);
    if (me > 0) {
        A.topRows(me) = sys.A_eq;
        b.head(me) = sys.b_eq;
    }
    if (mi > 0) {
        A.bottomRows(mi) = sys.A_in;
        b.tail(mi) = sys.b_in;
    }
    const Eigen::VectorXd scale = row_scales(A);
    for (Eigen::Index i = 0; i < m; ++i) {
        A.row(i) /= scale(i);
        b(i) /= scale(i);
    }

    // initial nonbasic point
    Eigen::VectorXd x0(n);
    std::vector<detail::BoundedSimplex::Where> where;
    using W = detail::BoundedSimplex::Where;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isfinite(sys.lower(j))) {
            x0(j) = sys.lower(j);
            where.push_back(W::Lower);
        } else if (std::isfinite(sys.upper(j))) {
            x0(j) = sys.upper(j);
            where.push_back(W::Upper);
        } else {
            x0(j) = 0.0;
            where.push_back(W::Zero);
        }
    }
    const Eigen::VectorXd res = b - A * x0;

    // columns: structural | slacks | artificials
    std::vector<Eigen::Index> art_rows;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (i < me || res(i) < 0.0) art_rows.push_back(i);
    }
    const Eigen::Index na = static_cast<Eigen::Index>(art_rows.size());
    const Eigen::Index N = n + mi + na;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, N);
    M.leftCols(n) = A;
    Eigen::VectorXd lo(N), hi(N);
    lo.head(n) = sys.lower;
    hi.head(n) = sys.upper;
    for (Eigen::Index i = 0; i < mi; ++i) {
        M(me + i, n + i) = 1.0;
        lo(n + i) = 0.0;
        hi(n + i) = kInf;
    }
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m), -1);
    for (Eigen::Index i = 0; i < mi; ++i) {
        if (res(me + i) >= 0.0) {
            basis[static_cast<std::size_t>(me + i)] = n + i;
            where.push_back(W::Basic);
        } else {
            where.push_back(W::Lower);
        }
    }
    for (Eigen::Index a = 0; a < na; ++a) {
        const Eigen::Index i = art_rows[static_cast<std::size_t>(a)];
        M(i, n + mi + a) = res(i) >= 0.0 ? 1.0 : -1.0;
        lo(n + mi + a) = 0.0;
        hi(n + mi + a) = kInf;
        basis[static_cast<std::size_t>(i)] = n + mi + a;
        where.push_back(W::Basic);
    }

    detail::BoundedSimplex simplex(M, b, lo, hi, opts);
    simplex.set_basis(basis, where);

    auto fail = [&](SolveStatus s, std::string msg) {
        out.status = s;
        out.message = std::move(msg);
        out.iterations = simplex.iterations();
        return out;
    };

    if (na > 0) {
        Eigen::VectorXd c1 = Eigen::VectorXd::Zero(N);
        c1.tail(na).setOnes();
        const auto r1 = simplex.run(c1);
        if (r1 != detail::BoundedSimplex::Result::Optimal) {
            return fail(SolveStatus::NumericalFailure, "phase one did not converge");
        }
        if (simplex.objective() > opts.feasibility_tol) {
            // phase-one duals give the Farkas direction
            const Eigen::VectorXd y = simplex.duals();
            for (double sgn : {-1.0, 1.0}) {
                Eigen::VectorXd mu(m);
                for (Eigen::Index i = 0; i < m; ++i) mu(i) = sgn * y(i) / scale(i);
                for (Eigen::Index i = me; i < m; ++i) {
                    if (mu(i) < 0.0 && mu(i) > -1e-9 * mu.cwiseAbs().maxCoeff()) mu(i) = 0.0;
                }
                if (certificate_margin(sys, mu) > 1e-9) {
                    out.certificate = mu;
                    return fail(SolveStatus::Infeasible, "certified infeasible");
                }
            }
            return fail(SolveStatus::NumericalFailure, "infeasible but no valid certificate");
        }
        // retire artificials: pinned at zero and never re-enter
        for (Eigen::Index a = 0; a < na; ++a) {
            simplex.hi()(n + mi + a) = 0.0;
            simplex.blocked()[static_cast<std::size_t>(n + mi + a)] = 1;
        }
    }

    Eigen::VectorXd c2 = Eigen::VectorXd::Zero(N);
    c2.head(n) = c;
    const auto r2 = simplex.run(c2);
    if (r2 == detail::BoundedSimplex::Result::Unbounded) return fail(SolveStatus::Unbounded, "objective unbounded");
    if (r2 != detail::BoundedSimplex::Result::Optimal) return fail(SolveStatus::NumericalFailure, "phase two did not converge");

    const Eigen::VectorXd& xf = simplex.x();
    out.status = SolveStatus::Optimal;
    out.iterations = simplex.iterations();
    out.solution = xf.head(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out.solution(j) = std::clamp(out.solution(j), sys.lower(j), sys.upper(j));
    }
    out.value = c.dot(out.solution);

    const Eigen::VectorXd y = simplex.duals();
    Eigen::VectorXd lam_scaled = -y;
    for (Eigen::Index i = me; i < m; ++i) lam_scaled(i) = std::max(lam_scaled(i), 0.0);
    Eigen::VectorXd d = c + A.transpose() * lam_scaled;
    out.nu_lower = Eigen::VectorXd::Zero(n);
    out.nu_upper = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (d(j) > 0.0 && std::isfinite(sys.lower(j))) out.nu_lower(j) = d(j);
        else if (d(j) < 0.0 && std::isfinite(sys.upper(j))) out.nu_upper(j) = -d(j);
    }
    Eigen::VectorXd lam(m);
    for (Eigen::Index i = 0; i < m; ++i) lam(i) = lam_scaled(i) / scale(i);
    out.lambda_eq = lam.head(me);
    out.lambda_in = lam.tail(mi);

    // residuals on the scaled rows
    const Eigen::VectorXd r = A * out.solution - b;
    double pr = me > 0 ? r.head(me).cwiseAbs().maxCoeff() : 0.0;
    if (mi > 0) pr = std::max(pr, r.tail(mi).maxCoeff());
    out.primal_residual = std::max(pr, 0.0);
    out.dual_residual = (d - out.nu_lower + out.nu_upper).cwiseAbs().maxCoeff();
    double comp = 0.0;
    for (Eigen::Index i = me; i < m; ++i) comp = std::max(comp, std::abs(lam_scaled(i) * r(i)));
    for (Eigen::Index j = 0; j < n; ++j) {
        if (out.nu_lower(j) > 0) comp = std::max(comp, std::abs(out.nu_lower(j) * (out.solution(j) - sys.lower(j))));
        if (out.nu_upper(j) > 0) comp = std::max(comp, std::abs(out.nu_upper(j) * (sys.upper(j) - out.solution(j))));
    }
    out.complementarity_residual = comp;
    const double tol = 1e-8 * (1.0 + c.cwiseAbs().maxCoeff());
    if (out.primal_residual > 1e-8 || out.dual_residual > tol || comp > tol) {
        out.status = SolveStatus::NumericalFailure;
        out.message = "KKT residuals above tolerance";
    }
    return out;
}

/// Dual objective for min c'x with the multiplier convention above.
inline double lp_dual_value(const ConstraintSystem& sys, const SolveOutcome& s) {
    double v = 0.0;
    if (s.lambda_eq.size() > 0) v -= s.lambda_eq.dot(sys.b_eq);
    if (s.lambda_in.size() > 0) v -= s.lambda_in.dot(sys.b_in);
    for (Eigen::Index j = 0; j < sys.cols(); ++j) {
        if (s.nu_lower(j) > 0) v += s.nu_lower(j) * sys.lower(j);
        if (s.nu_upper(j) > 0) v -= s.nu_upper(j) * sys.upper(j);
    }
    return v;
}

}  // namespace prte

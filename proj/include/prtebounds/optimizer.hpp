#pragma once

#include <iomanip>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "lp_solver.hpp"
#include "model.hpp"
#include "qp_solver.hpp"

namespace prte {

enum class Direction { Min, Max };

inline const char* direction_name(Direction d) { return d == Direction::Min ? "min" : "max"; }

/// Raised by the bound estimators when a solve ends in NumericalFailure.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline Eigen::VectorXd unit_vector(Eigen::Index n, Eigen::Index k, double scale = 1.0) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(k) = scale;
    return e;
}

/// Optimizes eta_k (default eta_1, index 0). Max minimizes -eta_k and negates
/// the value; multipliers are those of the minimization actually solved.
inline SolveOutcome solve_lp(const ConstraintSystem& sys, Direction dir, Eigen::Index k = 0,
                             const LpOptions& opts = {}) {
    if (k < 0 || k >= sys.cols()) throw ValidationError("objective coordinate out of range");
    const double sgn = dir == Direction::Min ? 1.0 : -1.0;
    SolveOutcome out = solve_lp_objective(sys, unit_vector(sys.cols(), k, sgn), opts);
    if (out.optimal()) out.value *= sgn;
    return out;
}

/// Same as solve_lp over the polytope cut by one extra half-space a'eta <= b.
inline SolveOutcome solve_lp_with_extra_row(const ConstraintSystem& sys,
                                            const std::optional<std::pair<Eigen::RowVectorXd, double>>& extra,
                                            Eigen::Index k, Direction dir, const LpOptions& opts = {}) {
    if (!extra || std::isinf(extra->second)) return solve_lp(sys, dir, k, opts);
    ConstraintSystem cut = sys;
    cut.add_in(extra->first, extra->second, "extra");
    return solve_lp(cut, dir, k, opts);
}

/// min c'x + 1/2 x' diag(h) x. The start point is the LP vertex minimizing c'x
/// unless one is supplied.
inline SolveOutcome solve_qp(const ConstraintSystem& sys, const Eigen::VectorXd& c, const Eigen::VectorXd& h,
                             const std::optional<Eigen::VectorXd>& start = std::nullopt,
                             const LpOptions& lp_opts = {}) {
    Eigen::VectorXd x0;
    if (start) {
        if (sys.max_violation(*start) > 1e-9) throw ValidationError("QP start point is infeasible");
        x0 = *start;
    } else {
        SolveOutcome lp = solve_lp_objective(sys, c, lp_opts);
        if (lp.status == SolveStatus::Unbounded) lp = solve_lp_objective(sys, Eigen::VectorXd::Zero(sys.cols()), lp_opts);
        if (!lp.optimal()) return lp;
        x0 = lp.solution;
    }
    return solve_qp_diag(sys, h, c, x0);
}

/// Regularized support function: Min solves min e1'eta + mu |eta|^2, Max
/// reports -min(-e1'eta + mu |eta|^2).
inline SolveOutcome solve_regularized(const ConstraintSystem& sys, Direction dir, double mu,
                                      const std::optional<Eigen::VectorXd>& start = std::nullopt,
                                      const LpOptions& lp_opts = {}) {
    if (!(mu > 0.0)) throw ValidationError("regularization weight must be positive");
    const double sgn = dir == Direction::Min ? 1.0 : -1.0;
    const Eigen::Index n = sys.cols();
    SolveOutcome out = solve_qp(sys, unit_vector(n, 0, sgn), Eigen::VectorXd::Constant(n, 2.0 * mu), start, lp_opts);
    if (out.optimal()) out.value *= sgn;
    return out;
}

/// Plain-text KKT summary of one solve.
inline void write_kkt_report(std::ostream& os, const SolveOutcome& s, const std::string& label) {
    const auto old = os.precision(6);
    os << label << ": status=" << solve_status_name(s.status) << " iterations=" << s.iterations;
    if (s.optimal()) {
        os << std::scientific << " value=" << s.value << " primal=" << s.primal_residual
           << " dual=" << s.dual_residual << " complementarity=" << s.complementarity_residual
           << std::defaultfloat;
    }
    if (s.certificate) os << " certificate_rows=" << s.certificate->size();
    if (!s.message.empty()) os << " (" << s.message << ")";
    os << '\n';
    os.precision(old);
}

}  // namespace prte

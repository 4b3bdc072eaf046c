#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "assembler.hpp"
#include "dgp.hpp"
#include "model.hpp"
#include "optimizer.hpp"

namespace prte {

namespace detail {
inline std::vector<std::size_t> tight_rows(const ConstraintSystem& sys, const Eigen::VectorXd& x) {
    std::vector<std::size_t> out;
    for (Eigen::Index i = 0; i < sys.A_in.rows(); ++i) {
        if (std::abs(sys.A_in.row(i).dot(x) - sys.b_in(i)) <= 1e-9) out.push_back(static_cast<std::size_t>(i));
    }
    return out;
}
}  // namespace detail

/// Min and max of eta_1 over the system. A certified infeasible side makes the
/// result Empty; NumericalFailure throws SolverError.
inline BoundsResult bounds_from_system(const ConstraintSystem& sys, const LpOptions& opts = {}) {
    BoundsResult r;
    r.diagnostics.variables = static_cast<std::size_t>(sys.cols());
    r.diagnostics.eq_rows = static_cast<std::size_t>(sys.A_eq.rows());
    r.diagnostics.in_rows = static_cast<std::size_t>(sys.A_in.rows());
    const SolveOutcome lo = solve_lp(sys, Direction::Min, 0, opts);
    r.diagnostics.iterations += lo.iterations;
    if (lo.status == SolveStatus::Infeasible) {
        r.status = BoundsStatus::Empty;
        r.certificate = lo.certificate;
        return r;
    }
    if (lo.status == SolveStatus::NumericalFailure) throw SolverError("lower bound: " + lo.message);
    const SolveOutcome hi = solve_lp(sys, Direction::Max, 0, opts);
    r.diagnostics.iterations += hi.iterations;
    if (hi.status == SolveStatus::Infeasible) {
        r.status = BoundsStatus::Empty;
        r.certificate = hi.certificate;
        return r;
    }
    if (hi.status == SolveStatus::NumericalFailure) throw SolverError("upper bound: " + hi.message);
    if (lo.status == SolveStatus::Unbounded || hi.status == SolveStatus::Unbounded) {
        r.status = BoundsStatus::Unbounded;
        r.lower = lo.status == SolveStatus::Unbounded ? -kInf : lo.value;
        r.upper = hi.status == SolveStatus::Unbounded ? kInf : hi.value;
        return r;
    }
    r.status = BoundsStatus::Bounded;
    r.lower = lo.value;
    r.upper = hi.value;
    r.argmin_eta = lo.solution;
    r.argmax_eta = hi.solution;
    r.diagnostics.active_lower = detail::tight_rows(sys, lo.solution);
    r.diagnostics.active_upper = detail::tight_rows(sys, hi.solution);
    return r;
}

/// Convex-relaxation bounds from moments (population or sample).
inline BoundsResult cvr_bounds(const InstrumentSpace& instruments, const MomentSet& moments,
                               const ProblemOptions& opts, Problem* problem = nullptr) {
    Problem p = build_problem(instruments, moments, opts);
    const ConstraintSystem sys = assemble_system(p);
    BoundsResult r = bounds_from_system(sys);
    if (problem) *problem = std::move(p);
    return r;
}

inline BoundsResult cvr_bounds(const DgpSpec& g, const ProblemOptions& opts) {
    return cvr_bounds(g.instruments, population_moments(g), opts);
}

inline BoundsResult cvr_bounds(const Dataset& data, const InstrumentSpace& instruments,
                               const ProblemOptions& opts) {
    return cvr_bounds(instruments, sample_moments(data, instruments.size()), opts);
}

/// Threshold-model bounds: one-dimensional V, propensity-refined partition and
/// m_D pinned to the threshold indicator. Empty signals misspecification.
inline BoundsResult mst_bounds(const InstrumentSpace& instruments, const MomentSet& moments,
                               ProblemOptions opts) {
    opts.restrictions.deterministic_monotone = true;
    opts.v_dim_assumed = 1;
    opts.propensity_bounds.reset();
    opts.envelope.reset();
    return cvr_bounds(instruments, moments, opts);
}

inline BoundsResult mst_bounds(const DgpSpec& g, const ProblemOptions& opts) {
    return mst_bounds(g.instruments, population_moments(g), opts);
}

namespace detail {
struct ConditionalMoments {
    double yd, y0, p;
};

inline std::vector<ConditionalMoments> conditional_moments(const MomentSet& m) {
    std::vector<ConditionalMoments> out;
    for (std::size_t z = 0; z < m.size(); ++z) {
        if (!(m.mass[z] > 0.0)) continue;
        out.push_back({m.yd[z] / m.mass[z], m.y0[z] / m.mass[z], m.d[z] / m.mass[z]});
    }
    if (out.empty()) throw ValidationError("no instrument value with positive mass");
    return out;
}

inline BoundsResult ate_interval(double l1, double u1, double l0, double u0) {
    BoundsResult r;
    if (l1 > u1 + 1e-12 || l0 > u0 + 1e-12) {
        r.status = BoundsStatus::Empty;
        return r;
    }
    r.status = BoundsStatus::Bounded;
    r.lower = l1 - u0;
    r.upper = u1 - l0;
    return r;
}
}  // namespace detail

/// Intersection bounds on the ATE over all instrument values.
inline BoundsResult manski_bounds(const MomentSet& moments, const OutcomeRange& y = {}) {
    const auto cm = detail::conditional_moments(moments);
    double l1 = -kInf, u1 = kInf, l0 = -kInf, u0 = kInf;
    for (const auto& c : cm) {
        l1 = std::max(l1, c.yd + y.lower * (1 - c.p));
        u1 = std::min(u1, c.yd + y.upper * (1 - c.p));
        l0 = std::max(l0, c.y0 + y.lower * c.p);
        u0 = std::min(u0, c.y0 + y.upper * c.p);
    }
    return detail::ate_interval(l1, u1, l0, u0);
}

/// Threshold-model ATE bounds: Y1 from the largest propensity, Y0 from the
/// smallest.
inline BoundsResult hv_bounds(const MomentSet& moments, const OutcomeRange& y = {}) {
    const auto cm = detail::conditional_moments(moments);
    auto hi = std::max_element(cm.begin(), cm.end(), [](const auto& a, const auto& b) { return a.p < b.p; });
    auto lo = std::min_element(cm.begin(), cm.end(), [](const auto& a, const auto& b) { return a.p < b.p; });
    return detail::ate_interval(hi->yd + y.lower * (1 - hi->p), hi->yd + y.upper * (1 - hi->p),
                                lo->y0 + y.lower * lo->p, lo->y0 + y.upper * lo->p);
}

namespace detail {
// Min and max of c'm + c0 over {A m = b, G m <= h} by vertex enumeration.
// The caller guarantees the set is bounded. Returns false when it is empty.
inline bool vertex_range(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::MatrixXd& G,
                         const Eigen::VectorXd& h, const Eigen::VectorXd& c, double c0, double& lo, double& hi,
                         long& work) {
    const Eigen::Index n = c.size();
    constexpr double tol = 1e-9;
    // independent equality rows
    std::vector<Eigen::Index> eq_rows;
    if (A.rows() > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.transpose());
        qr.setThreshold(1e-10);
        for (Eigen::Index i = 0; i < qr.rank(); ++i) eq_rows.push_back(qr.colsPermutation().indices()(i));
    }
    const Eigen::Index need = n - static_cast<Eigen::Index>(eq_rows.size());
    if (need > G.rows()) return false;
    std::vector<Eigen::Index> pick(static_cast<std::size_t>(need));
    for (Eigen::Index i = 0; i < need; ++i) pick[static_cast<std::size_t>(i)] = i;
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < eq_rows.size(); ++i) {
        M.row(static_cast<Eigen::Index>(i)) = A.row(eq_rows[i]);
        r(static_cast<Eigen::Index>(i)) = b(eq_rows[i]);
    }
    bool found = false;
    while (true) {
        for (Eigen::Index i = 0; i < need; ++i) {
            M.row(n - need + i) = G.row(pick[static_cast<std::size_t>(i)]);
            r(n - need + i) = h(pick[static_cast<std::size_t>(i)]);
        }
        ++work;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        lu.setThreshold(1e-10);
        if (lu.isInvertible()) {
            const Eigen::VectorXd m = lu.solve(r);
            const bool ok = (A.rows() == 0 || ((A * m - b).cwiseAbs().maxCoeff() <= tol)) &&
                            (G.rows() == 0 || ((G * m - h).maxCoeff() <= tol));
            if (ok) {
                const double v = c.dot(m) + c0;
                lo = found ? std::min(lo, v) : v;
                hi = found ? std::max(hi, v) : v;
                found = true;
            }
        }
        // next combination of `need` rows out of G.rows()
        Eigen::Index i = need - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == G.rows() - need + i) --i;
        if (i < 0) break;
        ++pick[static_cast<std::size_t>(i)];
        for (Eigen::Index j = i + 1; j < need; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    return found;
}
}  // namespace detail

/// Reference for the bilinear program on small problems. m_D is put on a grid
/// of `resolution` points per cell, except that one free cell per instrument
/// value is solved from its treatment moment. For each grid point the
/// products are exact and the program is linear in (m0, m1), so its range is
/// found exactly by enumerating vertices. Every point visited is feasible for
/// the bilinear program, hence the result lies inside its identified set.
/// IV-like functions must be point indicators. Empty means no grid point was
/// feasible; there is no certificate.
inline BoundsResult brute_force_bilinear(const Problem& p, int resolution, long max_work = 50'000'000) {
    if (resolution < 2 || resolution > 41) throw ValidationError("grid resolution must lie in [2, 41]");
    const auto& L = p.layout;
    const std::size_t cells = L.cells(), kx = L.kx(), kz = L.kz();
    if (2 * cells * kx + cells * kz > 12) throw ValidationError("brute force limited to 12 coefficients");
    for (const auto& s : p.iv.members) {
        if (s.size() != 1) throw ValidationError("brute force needs point-indicator IV-like functions");
    }
    const auto& env = p.env;
    const auto& mo = p.moments;
    const auto nm = static_cast<Eigen::Index>(2 * cells * kx);
    auto mpos = [&](Block b, std::size_t k, std::size_t x) {
        return static_cast<Eigen::Index>((b == Block::M0 ? 0 : cells * kx) + k * kx + x);
    };

    // per z: the dependent cell (or none) and the grids of the others
    struct ZGrid {
        std::vector<std::vector<double>> values;  // per cell; empty for the dependent one
        std::optional<std::size_t> dependent;
        std::size_t points = 1;
    };
    std::vector<ZGrid> zg(kz);
    for (std::size_t z = 0; z < kz; ++z) {
        ZGrid& g = zg[z];
        g.values.resize(cells);
        if (mo.mass[z] > 0.0) {
            for (std::size_t k = 0; k < cells; ++k) {
                const std::size_t i = k * kz + z;
                if (env.mD_upper[i] - env.mD_lower[i] <= 1e-15) continue;
                if (!g.dependent || p.partition.cell_volume(k) > p.partition.cell_volume(*g.dependent)) g.dependent = k;
            }
        }
        for (std::size_t k = 0; k < cells; ++k) {
            if (g.dependent && *g.dependent == k) continue;
            const double lo = env.mD_lower[k * kz + z], hi = env.mD_upper[k * kz + z];
            if (hi - lo <= 1e-15) g.values[k] = {lo};
            else {
                for (int i = 0; i < resolution; ++i) g.values[k].push_back(lo + (hi - lo) * i / (resolution - 1));
            }
            g.points *= g.values[k].size();
        }
    }

    // rows of the exact system, to be rewritten in terms of m = (m0, m1)
    const RowBlock eq = assemble_equalities(L, p.partition, p.iv, mo, p.t_star, p.offset);
    const RowBlock shape = assemble_shape(p.options.restrictions, L, p.partition, p.instruments, mo);
    const auto n = static_cast<Eigen::Index>(L.size());

    // eta = E m + e0 for a fixed m_D
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, nm);
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < cells; ++k) {
        for (std::size_t x = 0; x < kx; ++x) {
            E(L.index(Block::M0, k, x), mpos(Block::M0, k, x)) = 1.0;
            E(L.index(Block::M1, k, x), mpos(Block::M1, k, x)) = 1.0;
        }
    }
    std::vector<double> mD(cells * kz);
    auto fill_products = [&] {
        for (std::size_t k = 0; k < cells; ++k) {
            for (std::size_t z = 0; z < kz; ++z) {
                const auto x = static_cast<std::size_t>(p.instruments.covariate_of(z));
                const double d = mD[k * kz + z];
                e0(L.index(Block::MD, k, z)) = d;
                E(L.index(Block::M1D, k, z), mpos(Block::M1, k, x)) = d;
                E(L.index(Block::M0D, k, z), mpos(Block::M0, k, x)) = 1.0 - d;
            }
        }
    };

    double best_lo = kInf, best_hi = -kInf;
    long work = 0, grid_points = 0;
    std::vector<std::vector<std::size_t>> cell_idx(kz);
    for (std::size_t z = 0; z < kz; ++z) cell_idx[z].assign(cells, 0);
    auto advance = [&]() {
        for (std::size_t z = 0; z < kz; ++z) {
            for (std::size_t k = 0; k < cells; ++k) {
                if (zg[z].values[k].empty()) continue;
                if (++cell_idx[z][k] < zg[z].values[k].size()) return true;
                cell_idx[z][k] = 0;
            }
        }
        return false;
    };

    do {
        ++grid_points;
        bool ok = true;
        for (std::size_t z = 0; z < kz && ok; ++z) {
            double rest = 0.0;
            for (std::size_t k = 0; k < cells; ++k) {
                if (zg[z].values[k].empty()) continue;
                mD[k * kz + z] = zg[z].values[k][cell_idx[z][k]];
                rest += p.partition.cell_volume(k) * mD[k * kz + z];
            }
            if (zg[z].dependent) {
                const std::size_t k = *zg[z].dependent;
                const double d = (mo.d[z] / mo.mass[z] - rest) / p.partition.cell_volume(k);
                const std::size_t i = k * kz + z;
                if (d < env.mD_lower[i] - 1e-12 || d > env.mD_upper[i] + 1e-12) ok = false;
                mD[i] = std::clamp(d, env.mD_lower[i], env.mD_upper[i]);
            }
        }
        if (!ok) continue;
        fill_products();

        // equality rows (skip eta1) and shape rows in m-space; rows without m
        // terms are checked directly
        Eigen::MatrixXd A(0, nm), G(0, nm);
        Eigen::VectorXd b(0), h(0);
        auto push = [](Eigen::MatrixXd& M, Eigen::VectorXd& v, const Eigen::RowVectorXd& row, double rhs) {
            M.conservativeResize(M.rows() + 1, Eigen::NoChange);
            v.conservativeResize(v.size() + 1);
            M.row(M.rows() - 1) = row;
            v(v.size() - 1) = rhs;
        };
        for (std::size_t i = 1; i < eq.size() && ok; ++i) {
            const Eigen::RowVectorXd a = eq.rows[i] * E;
            const double rhs = eq.rhs[i] - eq.rows[i].dot(e0);
            if (a.cwiseAbs().maxCoeff() <= 1e-14) ok = std::abs(rhs) <= 1e-9;
            else push(A, b, a, rhs);
        }
        for (std::size_t i = 0; i < shape.size() && ok; ++i) {
            const Eigen::RowVectorXd a = shape.rows[i] * E;
            const double rhs = shape.rhs[i] - shape.rows[i].dot(e0);
            if (a.cwiseAbs().maxCoeff() <= 1e-14) ok = rhs >= -1e-9;
            else push(G, h, a, rhs);
        }
        if (!ok) continue;
        for (std::size_t k = 0; k < cells; ++k) {
            for (std::size_t x = 0; x < kx; ++x) {
                const std::size_t i = k * kx + x;
                for (Block blk : {Block::M0, Block::M1}) {
                    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nm);
                    row(mpos(blk, k, x)) = 1.0;
                    push(G, h, row, blk == Block::M0 ? env.m0_upper[i] : env.m1_upper[i]);
                    push(G, h, -row, blk == Block::M0 ? -env.m0_lower[i] : -env.m1_lower[i]);
                }
            }
        }
        const Eigen::VectorXd c = E.transpose() * p.t_star;
        const double c0 = p.t_star.dot(e0) + p.offset;
        double lo = 0.0, hi = 0.0;
        if (detail::vertex_range(A, b, G, h, c, c0, lo, hi, work)) {
            best_lo = std::min(best_lo, lo);
            best_hi = std::max(best_hi, hi);
        }
        if (work > max_work) throw ValidationError("brute force exceeded its work limit; lower the resolution");
    } while (advance());

    BoundsResult res;
    res.diagnostics.iterations = grid_points;
    res.diagnostics.variables = static_cast<std::size_t>(L.size());
    if (best_lo > best_hi) {
        res.status = BoundsStatus::Empty;
        return res;
    }
    res.status = BoundsStatus::Bounded;
    res.lower = best_lo;
    res.upper = best_hi;
    return res;
}

}  // namespace prte

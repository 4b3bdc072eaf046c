#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dgp.hpp"
#include "model.hpp"
#include "targets.hpp"

namespace prte {

struct RestrictionSet {
    bool mtr = false;                     // m1 >= m0 pointwise
    bool mtr_mean = false;                // integral of m1 - m0 >= 0
    bool mts = false;                     // E[Y_d | D=1] >= E[Y_d | D=0]
    bool stochastic_monotone = false;     // m_D increasing in z
    bool deterministic_monotone = false;  // threshold selection on V1

    static RestrictionSet none() { return {}; }
    static RestrictionSet r1() { return {true, false, false, false, false}; }
    static RestrictionSet r2() { return {false, false, true, false, false}; }
    static RestrictionSet r3() { return {true, false, true, false, false}; }

    std::string name() const {
        if (!mtr_mean && !stochastic_monotone && !deterministic_monotone) {
            if (mtr && mts) return "r3";
            if (mtr) return "r1";
            if (mts) return "r2";
            return "none";
        }
        std::string s;
        auto add = [&s](bool on, const char* n) {
            if (!on) return;
            if (!s.empty()) s += ',';
            s += n;
        };
        add(mtr, "mtr");
        add(mtr_mean, "mtr-mean");
        add(mts, "mts");
        add(stochastic_monotone, "stochastic");
        add(deterministic_monotone, "deterministic");
        return s;
    }

    /// Accepts none, r1, r2, r3 or a comma list of mtr, mtr-mean, mts,
    /// stochastic, deterministic.
    static RestrictionSet parse(const std::string& text) {
        RestrictionSet r;
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty() || tok == "none") continue;
            if (tok == "r1") r.mtr = true;
            else if (tok == "r2") r.mts = true;
            else if (tok == "r3") r.mtr = r.mts = true;
            else if (tok == "mtr") r.mtr = true;
            else if (tok == "mtr-mean") r.mtr_mean = true;
            else if (tok == "mts") r.mts = true;
            else if (tok == "stochastic") r.stochastic_monotone = true;
            else if (tok == "deterministic") r.deterministic_monotone = true;
            else throw ValidationError("unknown restriction '" + tok + "'");
        }
        return r;
    }
};

/// Rows a x <= b (or = b) with labels, before they are placed in a system.
struct RowBlock {
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    std::vector<std::string> labels;

    void add(Eigen::RowVectorXd r, double b, std::string label) {
        rows.push_back(std::move(r));
        rhs.push_back(b);
        labels.push_back(std::move(label));
    }
    std::size_t size() const { return rows.size(); }
};

namespace detail {
inline void merge_knots(std::vector<double>& k) {
    std::sort(k.begin(), k.end());
    std::vector<double> out;
    for (double x : k) {
        if (x < 0.0 || x > 1.0) continue;
        if (out.empty() || x - out.back() > 1e-12) out.push_back(x);
    }
    out.front() = 0.0;
    if (out.back() < 1.0 - 1e-12) out.push_back(1.0);
    out.back() = 1.0;
    k = std::move(out);
}
}  // namespace detail

/// Knots {0,1} plus weight jump points, propensities (when given) and any
/// requested refinement; the same knots are used on every axis.
inline VPartition build_partition(int dim, const WeightSpec& weights,
                                  const std::vector<double>* propensities = nullptr,
                                  const std::vector<double>& refinement = {}) {
    std::vector<double> k{0.0, 1.0};
    k.insert(k.end(), weights.v_discontinuities.begin(), weights.v_discontinuities.end());
    if (propensities) k.insert(k.end(), propensities->begin(), propensities->end());
    k.insert(k.end(), refinement.begin(), refinement.end());
    detail::merge_knots(k);
    return VPartition(dim, k);
}

/// Threshold envelope: m_D(cell, z) = 1[p(z) >= sup of the cell's first-axis
/// interval]. The partition must already be refined at every p(z).
inline EnvelopeBounds mst_envelope(const VPartition& partition, const BlockLayout& layout,
                                   const std::vector<double>& propensities, const OutcomeRange& y) {
    EnvelopeBounds e = EnvelopeBounds::uniform(layout, y);
    for (std::size_t k = 0; k < partition.cell_count(); ++k) {
        const auto [lo, hi] = partition.cell_interval(k, 0);
        for (std::size_t z = 0; z < layout.kz(); ++z) {
            const double p = propensities.at(z);
            double v;
            if (p >= hi - 1e-12) v = 1.0;
            else if (p <= lo + 1e-12) v = 0.0;
            else throw ValidationError("propensity interior to a cell; refine the partition");
            e.mD_lower[k * layout.kz() + z] = v;
            e.mD_upper[k * layout.kz() + z] = v;
        }
    }
    return e;
}

/// Row 0: eta1 - T*'eta2 = offset. Then, for each s = 1[Z in S] with positive
/// mass, the YD, Y(1-D) and D moment rows.
inline RowBlock assemble_equalities(const BlockLayout& layout, const VPartition& partition,
                                    const IvLikeSet& iv, const MomentSet& moments,
                                    const Eigen::VectorXd& t_star, double offset,
                                    std::vector<std::string>* warnings = nullptr) {
    const auto n = static_cast<Eigen::Index>(layout.size());
    RowBlock out;
    Eigen::RowVectorXd r0 = -t_star.transpose();
    r0(0) = 1.0;
    out.add(r0, offset, "eta1");
    for (std::size_t s = 0; s < iv.size(); ++s) {
        const auto& members = iv.members[s];
        if (!(moments.set_mass(members) > 0.0)) {
            if (warnings) warnings->push_back("IV-like function " + std::to_string(s) + " has zero mass; rows dropped");
            continue;
        }
        const auto m = moments.for_set(members);
        const std::pair<Block, double> comps[3] = {{Block::M1D, m.yd}, {Block::M0D, m.y0}, {Block::MD, m.d}};
        const char* names[3] = {"yd", "y0", "d"};
        for (int c = 0; c < 3; ++c) {
            Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
            for (std::size_t z : members) {
                for (std::size_t k = 0; k < layout.cells(); ++k) {
                    r(layout.index(comps[c].first, k, z)) += moments.mass.at(z) * partition.cell_volume(k);
                }
            }
            out.add(r, comps[c].second, std::string(names[c]) + "[s" + std::to_string(s) + "]");
        }
    }
    return out;
}

/// McCormick envelopes of m1D = m1 mD and m0D = m0 (1 - mD) per (cell, z),
/// using w = 1 - mD in [1 - mD_U, 1 - mD_L] for the untreated product.
inline RowBlock assemble_mccormick(const BlockLayout& layout, const InstrumentSpace& instruments,
                                   const EnvelopeBounds& env) {
    const auto n = static_cast<Eigen::Index>(layout.size());
    RowBlock out;
    for (std::size_t k = 0; k < layout.cells(); ++k) {
        for (std::size_t z = 0; z < layout.kz(); ++z) {
            const std::size_t x = static_cast<std::size_t>(instruments.covariate_of(z));
            const std::size_t ix = k * layout.kx() + x;
            const std::size_t iz = k * layout.kz() + z;
            const Eigen::Index jD = static_cast<Eigen::Index>(layout.index(Block::MD, k, z));
            const std::string tag = "[" + std::to_string(k) + "," + std::to_string(z) + "]";
            const double DL = env.mD_lower[iz], DU = env.mD_upper[iz];
            {
                const double L = env.m1_lower[ix], U = env.m1_upper[ix];
                const Eigen::Index jm = static_cast<Eigen::Index>(layout.index(Block::M1, k, x));
                const Eigen::Index jp = static_cast<Eigen::Index>(layout.index(Block::M1D, k, z));
                auto row = [&](double cD, double cm, double cp) {
                    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
                    r(jD) += cD;
                    r(jm) += cm;
                    r(jp) += cp;
                    return r;
                };
                // m1D >= L mD + DL m1 - L DL and m1D >= U mD + DU m1 - U DU
                out.add(row(L, DL, -1), L * DL, "mc1_lo_a" + tag);
                out.add(row(U, DU, -1), U * DU, "mc1_lo_b" + tag);
                // m1D <= U mD + DL m1 - U DL and m1D <= L mD + DU m1 - L DU
                out.add(row(-U, -DL, 1), -U * DL, "mc1_up_a" + tag);
                out.add(row(-L, -DU, 1), -L * DU, "mc1_up_b" + tag);
            }
            {
                const double L = env.m0_lower[ix], U = env.m0_upper[ix];
                const double WL = 1 - DU, WU = 1 - DL;
                const Eigen::Index jm = static_cast<Eigen::Index>(layout.index(Block::M0, k, x));
                const Eigen::Index jp = static_cast<Eigen::Index>(layout.index(Block::M0D, k, z));
                auto row = [&](double cD, double cm, double cp) {
                    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
                    r(jD) += cD;
                    r(jm) += cm;
                    r(jp) += cp;
                    return r;
                };
                // with w = 1 - mD: m0D >= L w + WL m0 - L WL, m0D >= U w + WU m0 - U WU
                out.add(row(-L, WL, -1), L * WL - L, "mc0_lo_a" + tag);
                out.add(row(-U, WU, -1), U * WU - U, "mc0_lo_b" + tag);
                // m0D <= U w + WL m0 - U WL, m0D <= L w + WU m0 - L WU
                out.add(row(U, -WL, 1), U - U * WL, "mc0_up_a" + tag);
                out.add(row(L, -WU, 1), L - L * WU, "mc0_up_b" + tag);
            }
        }
    }
    return out;
}

/// Shape restriction rows, all in the form a x <= b.
inline RowBlock assemble_shape(const RestrictionSet& r, const BlockLayout& layout,
                               const VPartition& partition, const InstrumentSpace& instruments,
                               const MomentSet& moments) {
    const auto n = static_cast<Eigen::Index>(layout.size());
    RowBlock out;
    auto zero = [n] { return Eigen::RowVectorXd::Zero(n).eval(); };
    if (r.mtr) {
        for (std::size_t k = 0; k < layout.cells(); ++k) {
            for (std::size_t x = 0; x < layout.kx(); ++x) {
                Eigen::RowVectorXd row = zero();
                row(layout.index(Block::M0, k, x)) = 1;
                row(layout.index(Block::M1, k, x)) = -1;
                out.add(row, 0.0, "mtr[" + std::to_string(k) + "," + std::to_string(x) + "]");
            }
            // treated part: m1D >= m0 mD = m0 - m0D
            for (std::size_t z = 0; z < layout.kz(); ++z) {
                const auto x = static_cast<std::size_t>(instruments.covariate_of(z));
                Eigen::RowVectorXd row = zero();
                row(layout.index(Block::M0, k, x)) = 1;
                row(layout.index(Block::M0D, k, z)) = -1;
                row(layout.index(Block::M1D, k, z)) = -1;
                out.add(row, 0.0, "mtr_d[" + std::to_string(k) + "," + std::to_string(z) + "]");
            }
        }
    }
    if (r.mtr_mean) {
        for (std::size_t x = 0; x < layout.kx(); ++x) {
            Eigen::RowVectorXd row = zero();
            for (std::size_t k = 0; k < layout.cells(); ++k) {
                row(layout.index(Block::M0, k, x)) = partition.cell_volume(k);
                row(layout.index(Block::M1, k, x)) = -partition.cell_volume(k);
            }
            out.add(row, 0.0, "mtr_mean[" + std::to_string(x) + "]");
        }
    }
    if (r.mts) {
        const double p1 = moments.p_treated();
        if (!(p1 > 0.0 && p1 < 1.0)) throw ValidationError("MTS needs 0 < P(D=1) < 1");
        // E[Y1 | D=0] <= E[Y1 | D=1] and E[Y0 | D=0] <= E[Y0 | D=1]
        Eigen::RowVectorXd a = zero(), b = zero();
        for (std::size_t z = 0; z < layout.kz(); ++z) {
            const auto x = static_cast<std::size_t>(instruments.covariate_of(z));
            const double f = moments.mass.at(z);
            for (std::size_t k = 0; k < layout.cells(); ++k) {
                const double fv = f * partition.cell_volume(k);
                a(layout.index(Block::M1, k, x)) += fv;
                a(layout.index(Block::M1D, k, z)) -= fv;
                b(layout.index(Block::M0, k, x)) -= fv;
                b(layout.index(Block::M0D, k, z)) += fv;
            }
        }
        out.add(a, moments.e_yd() * (1 - p1) / p1, "mts_treated");
        out.add(b, -moments.e_y0() * p1 / (1 - p1), "mts_untreated");
    }
    if (r.stochastic_monotone && !r.deterministic_monotone) {
        const auto& vals = instruments.values;
        auto leq = [&](std::size_t a, std::size_t b) {
            if (vals[a].size() != vals[b].size()) return false;
            for (std::size_t c = 0; c < vals[a].size(); ++c) {
                if (vals[a][c] > vals[b][c]) return false;
            }
            return vals[a] != vals[b];
        };
        for (std::size_t lo = 0; lo < vals.size(); ++lo) {
            for (std::size_t hi = 0; hi < vals.size(); ++hi) {
                if (!leq(lo, hi) || instruments.covariate_of(lo) != instruments.covariate_of(hi)) continue;
                bool covering = true;
                for (std::size_t mid = 0; mid < vals.size() && covering; ++mid) {
                    if (leq(lo, mid) && leq(mid, hi)) covering = false;
                }
                if (!covering) continue;
                for (std::size_t k = 0; k < layout.cells(); ++k) {
                    Eigen::RowVectorXd row = zero();
                    row(layout.index(Block::MD, k, lo)) = 1;
                    row(layout.index(Block::MD, k, hi)) = -1;
                    out.add(row, 0.0, "mono[" + std::to_string(k) + "," + std::to_string(lo) + "<" +
                                          std::to_string(hi) + "]");
                }
            }
        }
    }
    return out;
}

struct ProblemOptions {
    TargetSpec target;
    RestrictionSet restrictions;
    int v_dim_assumed = 1;
    std::vector<double> refinement;  // extra knots
    OutcomeRange y;
    IvLikeSet iv;  // empty means indicators of every support point
    std::optional<std::vector<std::pair<double, double>>> propensity_bounds;  // per z
    std::optional<EnvelopeBounds> envelope;  // full override; must match the layout
};

/// Everything needed to write down the constraint system.
struct Problem {
    ProblemOptions options;
    InstrumentSpace instruments;  // probabilities replaced by the moment masses
    MomentSet moments;
    IvLikeSet iv;
    VPartition partition;
    BlockLayout layout;
    WeightSpec weights;
    Eigen::VectorXd t_star;
    double offset = 0.0;
    EnvelopeBounds env;
    std::vector<std::string> warnings;
};

inline Problem build_problem(const InstrumentSpace& instruments, const MomentSet& moments,
                             const ProblemOptions& opts) {
    if (moments.size() != instruments.size()) throw ValidationError("moments do not match the instrument support");
    if (opts.v_dim_assumed < 1) throw ValidationError("assumed V dimension must be at least 1");
    Problem p;
    p.options = opts;
    p.instruments = instruments;
    p.instruments.probabilities = moments.mass;
    p.moments = moments;
    p.iv = opts.iv.members.empty() ? IvLikeSet::indicators(instruments.size()) : opts.iv;
    p.weights = weights_for(opts.target, moments, p.instruments);

    std::vector<double> props;
    if (opts.restrictions.deterministic_monotone) {
        for (std::size_t z = 0; z < moments.size(); ++z) {
            if (moments.mass[z] > 0.0) props.push_back(moments.propensity(z));
            else {
                props.push_back(0.0);
                p.warnings.push_back("instrument " + std::to_string(z) + " unobserved; threshold set to 0");
            }
        }
    }
    p.partition = build_partition(opts.v_dim_assumed, p.weights,
                                  opts.restrictions.deterministic_monotone ? &props : nullptr, opts.refinement);
    p.layout = BlockLayout(p.partition.cell_count(), instruments.covariate_count(), instruments.size());
    p.t_star = target_coefficients(p.weights, p.partition, p.layout, p.instruments);
    p.offset = target_offset(opts.target, moments);
    if (opts.envelope) {
        p.env = *opts.envelope;
        const auto bad = p.env.violations(p.layout, opts.y);
        if (!bad.empty()) throw ValidationError("envelope: " + bad.front());
    } else if (opts.restrictions.deterministic_monotone) {
        p.env = mst_envelope(p.partition, p.layout, props, opts.y);
    } else {
        p.env = EnvelopeBounds::uniform(p.layout, opts.y);
        if (opts.propensity_bounds) {
            const auto& pb = *opts.propensity_bounds;
            if (pb.size() != instruments.size()) throw ValidationError("propensity bounds need one pair per z");
            for (std::size_t k = 0; k < p.layout.cells(); ++k) {
                for (std::size_t z = 0; z < p.layout.kz(); ++z) {
                    p.env.mD_lower[k * p.layout.kz() + z] = pb[z].first;
                    p.env.mD_upper[k * p.layout.kz() + z] = pb[z].second;
                }
            }
        }
    }
    return p;
}

/// Box on eta: envelope bounds for m0, m1, mD; the product range for m0D,
/// m1D; an implied finite range for eta1.
inline void apply_box(ConstraintSystem& sys, const Problem& p) {
    const auto& L = p.layout;
    const auto& e = p.env;
    const auto& y = p.options.y;
    for (std::size_t k = 0; k < L.cells(); ++k) {
        for (std::size_t x = 0; x < L.kx(); ++x) {
            const std::size_t i = k * L.kx() + x;
            sys.lower(L.index(Block::M0, k, x)) = e.m0_lower[i];
            sys.upper(L.index(Block::M0, k, x)) = e.m0_upper[i];
            sys.lower(L.index(Block::M1, k, x)) = e.m1_lower[i];
            sys.upper(L.index(Block::M1, k, x)) = e.m1_upper[i];
        }
        for (std::size_t z = 0; z < L.kz(); ++z) {
            const std::size_t i = k * L.kz() + z;
            sys.lower(L.index(Block::MD, k, z)) = e.mD_lower[i];
            sys.upper(L.index(Block::MD, k, z)) = e.mD_upper[i];
            for (Block b : {Block::M0D, Block::M1D}) {
                sys.lower(L.index(b, k, z)) = std::min(0.0, y.lower);
                sys.upper(L.index(b, k, z)) = std::max(0.0, y.upper);
            }
        }
    }
    double reach = 0.0;
    for (Eigen::Index j = 1; j < sys.cols(); ++j) {
        reach += std::abs(p.t_star(j)) * std::max(std::abs(sys.lower(j)), std::abs(sys.upper(j)));
    }
    sys.lower(0) = p.offset - reach - 1.0;
    sys.upper(0) = p.offset + reach + 1.0;
}

inline ConstraintSystem assemble_system(Problem& p) {
    ConstraintSystem sys(static_cast<Eigen::Index>(p.layout.size()));
    const RowBlock eq = assemble_equalities(p.layout, p.partition, p.iv, p.moments, p.t_star, p.offset, &p.warnings);
    for (std::size_t i = 0; i < eq.size(); ++i) sys.add_eq(eq.rows[i], eq.rhs[i], eq.labels[i]);
    for (const RowBlock& blk : {assemble_mccormick(p.layout, p.instruments, p.env),
                                assemble_shape(p.options.restrictions, p.layout, p.partition, p.instruments,
                                               p.moments)}) {
        for (std::size_t i = 0; i < blk.size(); ++i) sys.add_in(blk.rows[i], blk.rhs[i], blk.labels[i]);
    }
    apply_box(sys, p);
    return sys;
}

inline ConstraintSystem assemble_population(const DgpSpec& g, const ProblemOptions& opts, Problem* out = nullptr) {
    Problem p = build_problem(g.instruments, population_moments(g), opts);
    ConstraintSystem sys = assemble_system(p);
    if (out) *out = std::move(p);
    return sys;
}

/// Sample system plus the per-observation matrices W_i = [A_i | b_i] whose
/// average is [A | b]. Only the moment rows and the eta1 row's right-hand
/// side (for PRTE) vary across observations.
class SampleSystem {
public:
    SampleSystem(const Dataset& data, const InstrumentSpace& instruments, const ProblemOptions& opts)
        : data_(data) {
        if (data.n() == 0) throw ValidationError("empty dataset");
        problem_ = build_problem(instruments, sample_moments(data, instruments.size()), opts);
        system_ = assemble_system(problem_);
        for (std::size_t s = 0; s < problem_.iv.size(); ++s) {
            if (problem_.moments.set_mass(problem_.iv.members[s]) > 0.0) kept_sets_.push_back(s);
        }
        per_obs_offset_ = opts.target.kind == TargetKind::PRTE;
    }

    const ConstraintSystem& system() const { return system_; }
    const Problem& problem() const { return problem_; }
    const Dataset& data() const { return data_; }
    std::size_t n() const { return data_.n(); }
    Eigen::Index rows() const { return system_.A_eq.rows() + system_.A_in.rows(); }

    /// W_i with eq rows first, then inequality rows; last column is the rhs.
    Eigen::MatrixXd W(std::size_t i) const {
        const auto& s = system_;
        const Eigen::Index d = s.cols();
        Eigen::MatrixXd w(rows(), d + 1);
        w.topLeftCorner(s.A_eq.rows(), d) = s.A_eq;
        w.topRightCorner(s.A_eq.rows(), 1) = s.b_eq;
        w.bottomLeftCorner(s.A_in.rows(), d) = s.A_in;
        w.bottomRightCorner(s.A_in.rows(), 1) = s.b_in;
        if (per_obs_offset_) w(0, d) = -static_cast<double>(data_.y[i]);
        const auto& L = problem_.layout;
        const std::size_t zi = data_.z[i];
        const double yi = data_.y[i], di = data_.d[i];
        Eigen::Index r = 1;
        for (std::size_t s_idx : kept_sets_) {
            const auto& members = problem_.iv.members[s_idx];
            const bool in = std::find(members.begin(), members.end(), zi) != members.end();
            const Block blocks[3] = {Block::M1D, Block::M0D, Block::MD};
            const double vals[3] = {yi * di, yi * (1 - di), di};
            for (int c = 0; c < 3; ++c, ++r) {
                w.row(r).head(d).setZero();
                if (in) {
                    for (std::size_t k = 0; k < L.cells(); ++k) {
                        w(r, static_cast<Eigen::Index>(L.index(blocks[c], k, zi))) = problem_.partition.cell_volume(k);
                    }
                }
                w(r, d) = in ? vals[c] : 0.0;
            }
        }
        return w;
    }

    /// g(W_i, eta) = A_i eta - b_i.
    Eigen::VectorXd g(std::size_t i, const Eigen::VectorXd& eta) const {
        const Eigen::MatrixXd w = W(i);
        return w.leftCols(w.cols() - 1) * eta - w.col(w.cols() - 1);
    }

private:
    Dataset data_;
    Problem problem_;
    ConstraintSystem system_;
    std::vector<std::size_t> kept_sets_;
    bool per_obs_offset_ = false;
};

/// Plain-text LP dump in CPLEX LP syntax.
inline void write_lp(std::ostream& os, const ConstraintSystem& s, bool maximize = false) {
    auto term = [&os](double c, Eigen::Index j, bool& first) {
        if (c == 0.0) return;
        os << (c < 0 ? " - " : (first ? " " : " + ")) << std::abs(c) << " x" << j;
        first = false;
    };
    os.precision(17);
    os << (maximize ? "Maximize" : "Minimize") << "\n obj: x0\nSubject To\n";
    for (Eigen::Index i = 0; i < s.A_eq.rows(); ++i) {
        os << " e" << i << ":";
        bool first = true;
        for (Eigen::Index j = 0; j < s.cols(); ++j) term(s.A_eq(i, j), j, first);
        if (first) os << " 0 x0";
        os << " = " << s.b_eq(i) << '\n';
    }
    for (Eigen::Index i = 0; i < s.A_in.rows(); ++i) {
        os << " i" << i << ":";
        bool first = true;
        for (Eigen::Index j = 0; j < s.cols(); ++j) term(s.A_in(i, j), j, first);
        if (first) os << " 0 x0";
        os << " <= " << s.b_in(i) << '\n';
    }
    os << "Bounds\n";
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        const double lo = s.lower(j), hi = s.upper(j);
        if (std::isinf(lo) && std::isinf(hi)) os << " x" << j << " free\n";
        else {
            os << ' ';
            if (std::isinf(lo)) os << "-inf";
            else os << lo;
            os << " <= x" << j << " <= ";
            if (std::isinf(hi)) os << "+inf";
            else os << hi;
            os << '\n';
        }
    }
    os << "End\n";
}

}  // namespace prte

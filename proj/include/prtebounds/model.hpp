#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace prte {

/// Thrown when an input violates a type invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct OutcomeRange {
    double lower = 0.0;
    double upper = 1.0;
};

/// Product partition of [0,1]^K. Every axis interval is half-open on the
/// right except the first one, which is closed.
class VPartition {
public:
    VPartition() : VPartition(1, {0.0, 1.0}) {}

    /// Same knots on every axis.
    VPartition(int dim, std::vector<double> knots)
        : VPartition(std::vector<std::vector<double>>(static_cast<std::size_t>(std::max(dim, 0)),
                                                      std::move(knots))) {}

    explicit VPartition(std::vector<std::vector<double>> knots_per_axis)
        : knots_(std::move(knots_per_axis)) {
        if (knots_.empty()) throw ValidationError("partition dimension must be at least 1");
        for (const auto& k : knots_) {
            if (k.size() < 2 || k.front() != 0.0 || k.back() != 1.0) {
                throw ValidationError("partition knots must start at 0 and end at 1");
            }
            for (std::size_t i = 1; i < k.size(); ++i) {
                if (!(k[i] > k[i - 1])) throw ValidationError("partition knots not increasing");
            }
        }
        strides_.assign(knots_.size(), 1);
        for (std::size_t a = knots_.size(); a-- > 1;) {
            strides_[a - 1] = strides_[a] * intervals(a);
        }
    }

    int dim() const { return static_cast<int>(knots_.size()); }
    const std::vector<double>& knots(std::size_t axis) const { return knots_.at(axis); }
    const std::vector<std::vector<double>>& knots_per_axis() const { return knots_; }
    std::size_t intervals(std::size_t axis) const { return knots_.at(axis).size() - 1; }

    std::size_t cell_count() const {
        std::size_t n = 1;
        for (std::size_t a = 0; a < knots_.size(); ++a) n *= intervals(a);
        return n;
    }

    /// Per-axis interval index of a cell; the last axis varies fastest.
    std::vector<std::size_t> multi_index(std::size_t cell) const {
        std::vector<std::size_t> idx(knots_.size());
        for (std::size_t a = 0; a < knots_.size(); ++a) {
            idx[a] = cell / strides_[a];
            cell %= strides_[a];
        }
        return idx;
    }

    std::pair<double, double> cell_interval(std::size_t cell, std::size_t axis) const {
        const std::size_t i = multi_index(cell)[axis];
        return {knots_[axis][i], knots_[axis][i + 1]};
    }

    double cell_volume(std::size_t cell) const {
        const auto idx = multi_index(cell);
        double v = 1.0;
        for (std::size_t a = 0; a < knots_.size(); ++a) {
            v *= knots_[a][idx[a] + 1] - knots_[a][idx[a]];
        }
        return v;
    }

    std::vector<double> cell_midpoint(std::size_t cell) const {
        const auto idx = multi_index(cell);
        std::vector<double> mid(knots_.size());
        for (std::size_t a = 0; a < knots_.size(); ++a) {
            mid[a] = 0.5 * (knots_[a][idx[a]] + knots_[a][idx[a] + 1]);
        }
        return mid;
    }

    /// Cell containing v.
    std::size_t locate(const std::vector<double>& v) const {
        if (v.size() != knots_.size()) throw ValidationError("point dimension mismatch");
        std::size_t cell = 0;
        for (std::size_t a = 0; a < knots_.size(); ++a) {
            const auto& k = knots_[a];
            if (v[a] < 0.0 || v[a] > 1.0) throw ValidationError("point outside [0,1]");
            // first interval closed, later ones (lo, hi]
            auto it = std::lower_bound(k.begin() + 1, k.end(), v[a]);
            std::size_t i = static_cast<std::size_t>(it - k.begin()) - 1;
            i = std::min(i, k.size() - 2);
            cell += i * strides_[a];
        }
        return cell;
    }

    double total_volume() const {
        double s = 0.0;
        for (std::size_t c = 0; c < cell_count(); ++c) s += cell_volume(c);
        return s;
    }

private:
    std::vector<std::vector<double>> knots_;
    std::vector<std::size_t> strides_;
};

/// Finite instrument support with its law F_Z and an optional policy law.
/// Each support point may carry a discrete covariate index x.
struct InstrumentSpace {
    std::vector<std::vector<double>> values;
    std::vector<double> probabilities;
    std::optional<std::vector<double>> policy_probabilities;
    std::vector<int> covariate;  // empty means a single covariate value

    std::size_t size() const { return values.size(); }

    int covariate_of(std::size_t z) const {
        return covariate.empty() ? 0 : covariate.at(z);
    }

    std::size_t covariate_count() const {
        if (covariate.empty()) return 1;
        return static_cast<std::size_t>(*std::max_element(covariate.begin(), covariate.end())) + 1;
    }

    std::size_t index_of(const std::vector<double>& z) const {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i] == z) return i;
        }
        throw ValidationError("instrument value not in support");
    }
};

/// Indicators s = 1[Z in S], each S a set of support indices.
struct IvLikeSet {
    std::vector<std::vector<std::size_t>> members;

    static IvLikeSet indicators(std::size_t support_size) {
        IvLikeSet s;
        for (std::size_t z = 0; z < support_size; ++z) s.members.push_back({z});
        return s;
    }
    std::size_t size() const { return members.size(); }
};

/// Per-support-point moments. Entries are unconditional: yd[z] = E[YD 1[Z=z]].
struct MomentSet {
    std::vector<double> mass;  // F_Z(z)
    std::vector<double> yd;
    std::vector<double> y0;    // E[Y(1-D) 1[Z=z]]
    std::vector<double> d;

    std::size_t size() const { return mass.size(); }

    struct Triple {
        double yd = 0.0, y0 = 0.0, d = 0.0;
    };

    Triple for_set(const std::vector<std::size_t>& s) const {
        Triple t;
        for (std::size_t z : s) {
            t.yd += yd.at(z);
            t.y0 += y0.at(z);
            t.d += d.at(z);
        }
        return t;
    }

    double set_mass(const std::vector<std::size_t>& s) const {
        double m = 0.0;
        for (std::size_t z : s) m += mass.at(z);
        return m;
    }

    double p_treated() const { return std::accumulate(d.begin(), d.end(), 0.0); }
    double e_yd() const { return std::accumulate(yd.begin(), yd.end(), 0.0); }
    double e_y0() const { return std::accumulate(y0.begin(), y0.end(), 0.0); }
    double e_y() const { return e_yd() + e_y0(); }

    /// P(D=1 | Z=z).
    double propensity(std::size_t z) const {
        if (!(mass.at(z) > 0.0)) throw ValidationError("propensity undefined at zero-mass instrument");
        return d[z] / mass[z];
    }
};

enum class Block { M0, M1, MD, M0D, M1D };

inline const char* block_name(Block b) {
    switch (b) {
        case Block::M0: return "m0";
        case Block::M1: return "m1";
        case Block::MD: return "mD";
        case Block::M0D: return "m0D";
        case Block::M1D: return "m1D";
    }
    return "?";
}

/// Coefficient index map. Position 0 is eta1; then m0 and m1 by (cell, x),
/// then mD, m0D, m1D by (cell, z).
class BlockLayout {
public:
    BlockLayout() = default;
    BlockLayout(std::size_t cells, std::size_t kx, std::size_t kz) : cells_(cells), kx_(kx), kz_(kz) {}

    std::size_t cells() const { return cells_; }
    std::size_t kx() const { return kx_; }
    std::size_t kz() const { return kz_; }
    std::size_t size() const { return 1 + 2 * cells_ * kx_ + 3 * cells_ * kz_; }

    std::size_t block_offset(Block b) const {
        const std::size_t ax = cells_ * kx_;
        const std::size_t az = cells_ * kz_;
        switch (b) {
            case Block::M0: return 1;
            case Block::M1: return 1 + ax;
            case Block::MD: return 1 + 2 * ax;
            case Block::M0D: return 1 + 2 * ax + az;
            case Block::M1D: return 1 + 2 * ax + 2 * az;
        }
        return 0;
    }

    static bool by_covariate(Block b) { return b == Block::M0 || b == Block::M1; }

    std::size_t index(Block b, std::size_t cell, std::size_t value) const {
        const std::size_t width = by_covariate(b) ? kx_ : kz_;
        if (cell >= cells_ || value >= width) throw std::out_of_range("block index out of range");
        return block_offset(b) + cell * width + value;
    }

    struct Entry {
        Block block;
        std::size_t cell;
        std::size_t value;
    };

    /// Inverse of index() for positions >= 1.
    Entry locate(std::size_t pos) const {
        if (pos == 0 || pos >= size()) throw std::out_of_range("not an eta2 position");
        for (Block b : {Block::M1D, Block::M0D, Block::MD, Block::M1, Block::M0}) {
            const std::size_t off = block_offset(b);
            if (pos >= off) {
                const std::size_t width = by_covariate(b) ? kx_ : kz_;
                return {b, (pos - off) / width, (pos - off) % width};
            }
        }
        throw std::logic_error("unreachable");
    }

    std::string label(std::size_t pos) const {
        if (pos == 0) return "eta1";
        const Entry e = locate(pos);
        return std::string(block_name(e.block)) + "[" + std::to_string(e.cell) + "," +
               std::to_string(e.value) + "]";
    }

private:
    std::size_t cells_ = 0, kx_ = 1, kz_ = 0;
};

struct MtrCoefficients {
    double eta1 = 0.0;
    Eigen::VectorXd eta2;
    BlockLayout layout;

    Eigen::VectorXd full() const {
        Eigen::VectorXd eta(1 + eta2.size());
        eta(0) = eta1;
        eta.tail(eta2.size()) = eta2;
        return eta;
    }

    double at(Block b, std::size_t cell, std::size_t value) const {
        return eta2(static_cast<Eigen::Index>(layout.index(b, cell, value) - 1));
    }
};

/// Known bounds on the MTR functions used by the McCormick envelopes.
struct EnvelopeBounds {
    std::vector<double> m0_lower, m0_upper, m1_lower, m1_upper;  // (cell, x)
    std::vector<double> mD_lower, mD_upper;                      // (cell, z)

    static EnvelopeBounds uniform(const BlockLayout& layout, const OutcomeRange& y) {
        EnvelopeBounds e;
        const std::size_t nx = layout.cells() * layout.kx();
        const std::size_t nz = layout.cells() * layout.kz();
        e.m0_lower.assign(nx, y.lower);
        e.m0_upper.assign(nx, y.upper);
        e.m1_lower.assign(nx, y.lower);
        e.m1_upper.assign(nx, y.upper);
        e.mD_lower.assign(nz, 0.0);
        e.mD_upper.assign(nz, 1.0);
        return e;
    }

    std::vector<std::string> violations(const BlockLayout& layout, const OutcomeRange& y) const {
        std::vector<std::string> out;
        const std::size_t nx = layout.cells() * layout.kx();
        const std::size_t nz = layout.cells() * layout.kz();
        auto check = [&](const std::vector<double>& lo, const std::vector<double>& hi, std::size_t n,
                         double floor, double ceil, const char* name) {
            if (lo.size() != n || hi.size() != n) {
                out.push_back(std::string(name) + " envelope has wrong length");
                return;
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (!(lo[i] <= hi[i])) out.push_back(std::string(name) + " envelope lower exceeds upper");
                if (lo[i] < floor - 1e-12 || hi[i] > ceil + 1e-12) {
                    out.push_back(std::string(name) + " envelope outside admissible range");
                }
            }
        };
        check(m0_lower, m0_upper, nx, y.lower, y.upper, "m0");
        check(m1_lower, m1_upper, nx, y.lower, y.upper, "m1");
        check(mD_lower, mD_upper, nz, 0.0, 1.0, "mD");
        return out;
    }
};

/// A_eq x = b_eq, A_in x <= b_in, lower <= x <= upper.
struct ConstraintSystem {
    Eigen::MatrixXd A_eq;
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd A_in;
    Eigen::VectorXd b_in;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<std::string> eq_labels;
    std::vector<std::string> in_labels;

    Eigen::Index cols() const { return lower.size(); }

    explicit ConstraintSystem(Eigen::Index n = 0)
        : A_eq(0, n), b_eq(0), A_in(0, n), b_in(0),
          lower(Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity())),
          upper(Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity())) {}

    void add_eq(const Eigen::RowVectorXd& row, double rhs, std::string label = {}) {
        A_eq.conservativeResize(A_eq.rows() + 1, cols());
        A_eq.row(A_eq.rows() - 1) = row;
        b_eq.conservativeResize(b_eq.size() + 1);
        b_eq(b_eq.size() - 1) = rhs;
        eq_labels.push_back(std::move(label));
    }

    void add_in(const Eigen::RowVectorXd& row, double rhs, std::string label = {}) {
        A_in.conservativeResize(A_in.rows() + 1, cols());
        A_in.row(A_in.rows() - 1) = row;
        b_in.conservativeResize(b_in.size() + 1);
        b_in(b_in.size() - 1) = rhs;
        in_labels.push_back(std::move(label));
    }

    void append_in(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                   const std::vector<std::string>& labels) {
        const Eigen::Index r0 = A_in.rows();
        A_in.conservativeResize(r0 + A.rows(), cols());
        A_in.bottomRows(A.rows()) = A;
        b_in.conservativeResize(r0 + b.size());
        b_in.tail(b.size()) = b;
        in_labels.insert(in_labels.end(), labels.begin(), labels.end());
    }

    std::vector<std::string> violations() const {
        std::vector<std::string> out;
        const Eigen::Index n = cols();
        if (A_eq.cols() != n || A_in.cols() != n) out.push_back("row width differs from column count");
        if (A_eq.rows() != b_eq.size() || A_in.rows() != b_in.size()) out.push_back("rhs length mismatch");
        if (upper.size() != n) out.push_back("box length mismatch");
        if (!A_eq.allFinite() || !b_eq.allFinite() || !A_in.allFinite() || !b_in.allFinite()) {
            out.push_back("non-finite row entry");
        }
        for (Eigen::Index j = 0; j < std::min(n, upper.size()); ++j) {
            if (std::isnan(lower(j)) || std::isnan(upper(j)) || lower(j) > upper(j)) {
                out.push_back("box bounds inverted at column " + std::to_string(j));
            }
        }
        return out;
    }

    /// Largest violation of any row or bound at x.
    double max_violation(const Eigen::VectorXd& x) const {
        double v = 0.0;
        if (A_eq.rows() > 0) v = std::max(v, (A_eq * x - b_eq).cwiseAbs().maxCoeff());
        if (A_in.rows() > 0) v = std::max(v, (A_in * x - b_in).maxCoeff());
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            v = std::max({v, lower(j) - x(j), x(j) - upper(j)});
        }
        return v;
    }
};

enum class BoundsStatus { Bounded, Empty, Unbounded };

inline const char* status_name(BoundsStatus s) {
    switch (s) {
        case BoundsStatus::Bounded: return "Bounded";
        case BoundsStatus::Empty: return "Empty";
        case BoundsStatus::Unbounded: return "Unbounded";
    }
    return "?";
}

struct BoundsDiagnostics {
    long iterations = 0;
    std::vector<std::size_t> active_lower;  // inequality rows tight at the argmin
    std::vector<std::size_t> active_upper;
    std::size_t variables = 0;
    std::size_t eq_rows = 0;
    std::size_t in_rows = 0;
};

struct BoundsResult {
    BoundsStatus status = BoundsStatus::Empty;
    double lower = std::numeric_limits<double>::quiet_NaN();
    double upper = std::numeric_limits<double>::quiet_NaN();
    std::optional<Eigen::VectorXd> argmin_eta;
    std::optional<Eigen::VectorXd> argmax_eta;
    std::optional<Eigen::VectorXd> certificate;  // eq multipliers then inequality multipliers
    BoundsDiagnostics diagnostics;

    bool bounded() const { return status == BoundsStatus::Bounded; }
    double width() const { return upper - lower; }
};

}  // namespace prte

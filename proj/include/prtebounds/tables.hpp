#pragma once

#include <cmath>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "bounds.hpp"
#include "dgp.hpp"
#include "inference.hpp"
#include <prtebounds/reference_data.hpp>  // generated at configure time

namespace prte {

inline constexpr double kTableTolerance = 5e-3;
inline constexpr double kPointWidthTolerance = 1e-6;

/// One expected cell. `expected` is empty for an empty bound.
struct ReferenceCell {
    int table = 0;
    char panel = 'a';
    double sigma = 0.0;
    std::string row;
    std::optional<std::pair<double, double>> expected;
};

/// Parses the whitespace-separated reference format; '#' starts a comment.
inline std::vector<ReferenceCell> parse_reference(const std::string& text) {
    std::vector<ReferenceCell> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first == "format") continue;
        ReferenceCell c;
        std::string panel, lo;
        try {
            c.table = std::stoi(first);
        } catch (const std::exception&) {
            throw ValidationError("reference line " + std::to_string(lineno) + ": bad table id");
        }
        if (!(ls >> panel >> c.sigma >> c.row >> lo) || panel.size() != 1) {
            throw ValidationError("reference line " + std::to_string(lineno) + ": malformed");
        }
        c.panel = panel[0];
        if (lo != "empty") {
            double hi = 0.0;
            if (!(ls >> hi)) throw ValidationError("reference line " + std::to_string(lineno) + ": missing upper");
            c.expected = std::make_pair(std::stod(lo), hi);
        }
        out.push_back(std::move(c));
    }
    return out;
}

inline const std::vector<ReferenceCell>& reference_cells() {
    static const std::vector<ReferenceCell> cells = parse_reference(kReferenceTables);
    return cells;
}

struct TableLayout {
    TreatmentModel model;
    TargetKind target;
    std::string title;
};

inline bool valid_table_id(int id) { return id >= 3 && id <= 10; }

inline TableLayout table_layout(int id) {
    switch (id) {
        case 3: return {TreatmentModel::LocalDeparture, TargetKind::ATE, "ATE bounds, local departure model"};
        case 4: return {TreatmentModel::RandomCoefficient, TargetKind::ATE, "ATE bounds, random coefficient model"};
        case 5: return {TreatmentModel::LocalDeparture, TargetKind::PRTE, "PRTE bounds, local departure model"};
        case 6: return {TreatmentModel::RandomCoefficient, TargetKind::PRTE, "PRTE bounds, random coefficient model"};
        case 7:
            return {TreatmentModel::LocalDeparture, TargetKind::ATE, "ATE bounds with shape restrictions, local departure"};
        case 8:
            return {TreatmentModel::RandomCoefficient, TargetKind::ATE,
                    "ATE bounds with shape restrictions, random coefficient"};
        case 9:
            return {TreatmentModel::LocalDeparture, TargetKind::PRTE,
                    "PRTE bounds with shape restrictions, local departure"};
        case 10:
            return {TreatmentModel::RandomCoefficient, TargetKind::PRTE,
                    "PRTE bounds with shape restrictions, random coefficient"};
        default: throw ValidationError("table id must be in 3..10, got " + std::to_string(id));
    }
}

inline int panel_v_dim(char panel) { return panel == 'a' ? 1 : 2; }

/// Population moments shared across rows and tables. Each design is
/// integrated once even when many threads ask for it together.
class MomentCache {
public:
    const MomentSet& get(const DgpSpec& g) {
        Entry* e = nullptr;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto& slot = cache_[Key{static_cast<int>(g.treatment_model), g.v_dim, g.sigma}];
            if (!slot) slot = std::make_unique<Entry>();
            e = slot.get();
        }
        std::call_once(e->once, [&] { e->moments = population_moments(g); });
        return e->moments;
    }

private:
    struct Entry {
        std::once_flag once;
        MomentSet moments;
    };
    using Key = std::tuple<int, int, double>;
    std::mutex mutex_;
    std::map<Key, std::unique_ptr<Entry>> cache_;
};

/// Bounds for one named row: manski, hv, mst, cvr, cvr-r1/r2/r3, or true (a
/// degenerate interval at the population value).
inline BoundsResult compute_row(const std::string& row, const DgpSpec& g, const MomentSet& moments,
                                const TargetSpec& target) {
    ProblemOptions opts;
    opts.target = target;
    opts.v_dim_assumed = g.v_dim;
    if (row == "manski" || row == "hv") {
        if (target.kind != TargetKind::ATE) throw ValidationError(row + " bounds are only defined for the ATE");
        return row == "manski" ? manski_bounds(moments) : hv_bounds(moments);
    }
    if (row == "mst") return mst_bounds(g.instruments, moments, opts);
    if (row == "true") {
        BoundsResult r;
        r.status = BoundsStatus::Bounded;
        r.lower = r.upper = true_target(g, target);
        return r;
    }
    if (row == "cvr") return cvr_bounds(g.instruments, moments, opts);
    if (row.rfind("cvr-", 0) == 0) {
        opts.restrictions = RestrictionSet::parse(row.substr(4));
        return cvr_bounds(g.instruments, moments, opts);
    }
    throw ValidationError("unknown table row '" + row + "'");
}

struct TableCell {
    ReferenceCell ref;
    BoundsResult got;
    bool pass = false;
    std::string note;
};

inline bool check_cell(TableCell& c, TargetKind target) {
    const auto& ref = c.ref;
    if (!ref.expected) {
        c.pass = c.got.status == BoundsStatus::Empty && c.got.certificate.has_value();
        if (!c.pass) c.note = c.got.status == BoundsStatus::Empty ? "empty without certificate" : "expected empty";
        return c.pass;
    }
    if (!c.got.bounded()) {
        c.pass = false;
        c.note = std::string("status ") + status_name(c.got.status);
        return false;
    }
    const double dl = std::abs(c.got.lower - ref.expected->first);
    const double du = std::abs(c.got.upper - ref.expected->second);
    c.pass = dl <= kTableTolerance && du <= kTableTolerance;
    if (!c.pass) {
        std::ostringstream os;
        os << "off by " << std::max(dl, du);
        c.note = os.str();
    }
    if (target == TargetKind::PRTE && ref.row.rfind("cvr", 0) == 0 && c.got.width() > kPointWidthTolerance) {
        c.pass = false;
        std::ostringstream os;
        os << "width " << c.got.width() << " exceeds " << kPointWidthTolerance;
        c.note = c.note.empty() ? os.str() : c.note + "; " + os.str();
    }
    return c.pass;
}

/// Computes and checks every reference cell of a table. Cells are ordered as
/// in the reference data, independently of `jobs`.
inline std::vector<TableCell> compute_table(int id, unsigned jobs = 1, MomentCache* cache = nullptr) {
    const TableLayout layout = table_layout(id);
    MomentCache local;
    MomentCache& mc = cache ? *cache : local;
    std::vector<TableCell> cells;
    for (const auto& ref : reference_cells()) {
        if (ref.table == id) cells.push_back({ref, {}, false, {}});
    }
    TargetSpec target;
    target.kind = layout.target;
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        TableCell& c = cells[i];
        const DgpSpec g = make_design(layout.model, panel_v_dim(c.ref.panel), c.ref.sigma);
        try {
            c.got = compute_row(c.ref.row, g, mc.get(g), target);
            check_cell(c, layout.target);
        } catch (const SolverError& e) {
            c.pass = false;
            c.note = std::string("solver failure: ") + e.what();
        }
    });
    return cells;
}

inline bool all_pass(const std::vector<TableCell>& cells) {
    for (const auto& c : cells) {
        if (!c.pass) return false;
    }
    return !cells.empty();
}

namespace detail {
inline std::string interval_text(const std::optional<std::pair<double, double>>& iv) {
    if (!iv) return "empty";
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << '[' << iv->first << ", " << iv->second << ']';
    return os.str();
}

inline std::string result_text(const BoundsResult& r) {
    if (r.status == BoundsStatus::Empty) return "empty";
    if (r.status == BoundsStatus::Unbounded) return "unbounded";
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << '[' << r.lower << ", " << r.upper << ']';
    return os.str();
}
}  // namespace detail

/// Plain-text diff report; one line per cell plus a summary.
inline void write_table_report(std::ostream& os, int id, const std::vector<TableCell>& cells) {
    os << "table " << id << ": " << table_layout(id).title << '\n';
    std::size_t passed = 0;
    for (const auto& c : cells) {
        os << "  " << c.ref.panel << " v_dim=" << panel_v_dim(c.ref.panel) << " sigma=" << c.ref.sigma << "  "
           << std::left << std::setw(7) << c.ref.row << std::right << "  expected " << std::setw(16)
           << detail::interval_text(c.ref.expected) << "  got " << std::setw(22) << detail::result_text(c.got) << "  "
           << (c.pass ? "ok" : "MISMATCH");
        if (!c.note.empty()) os << " (" << c.note << ')';
        os << '\n';
        passed += c.pass ? 1 : 0;
    }
    os << "table " << id << ": " << passed << '/' << cells.size() << " cells match within " << kTableTolerance
       << '\n';
}

}  // namespace prte

// Acceptance run: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the numbered ones. Exit status is nonzero when
// any selected criterion fails.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <prtebounds/prtebounds.hpp>
#include <prtebounds/tables.hpp>

#include "support/solver_checks.hpp"
#include "support/tiny_instances.hpp"

using namespace prte;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "; failed: ";
            else detail << ", ";
            detail << what;
            pass = false;
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

MomentCache& moments() {
    static MomentCache cache;
    return cache;
}

std::map<int, std::vector<TableCell>>& table_store() {
    static std::map<int, std::vector<TableCell>> store;
    return store;
}

const std::vector<TableCell>& table(int id) {
    auto& store = table_store();
    auto it = store.find(id);
    if (it == store.end()) it = store.emplace(id, compute_table(id, worker_count(), &moments())).first;
    return it->second;
}

std::size_t passed(const std::vector<TableCell>& cells) {
    std::size_t n = 0;
    for (const auto& c : cells) n += c.pass ? 1 : 0;
    return n;
}

std::string failing_cells(const std::vector<TableCell>& cells) {
    std::ostringstream os;
    for (const auto& c : cells) {
        if (!c.pass) os << ' ' << c.ref.table << c.ref.panel << '/' << c.ref.sigma << '/' << c.ref.row;
    }
    return os.str();
}

// Recomputes the threshold system for a design and checks the Farkas vector.
bool certified_empty(const DgpSpec& g, const TargetSpec& target, const BoundsResult& r) {
    if (r.status != BoundsStatus::Empty || !r.certificate) return false;
    ProblemOptions o;
    o.target = target;
    o.restrictions.deterministic_monotone = true;
    Problem p = build_problem(g.instruments, moments().get(g), o);
    return certificate_margin(assemble_system(p), *r.certificate) > 0.0;
}

const std::vector<TreatmentModel> kModels{TreatmentModel::LocalDeparture, TreatmentModel::RandomCoefficient};
const std::vector<double> kSigmas{0.1, 0.5, 0.9};

Verdict table3() {
    Verdict v;
    const auto t0 = Clock::now();
    const auto& cells = table(3);
    const double secs = seconds_since(t0);
    v.detail << passed(cells) << '/' << cells.size() << " cells within " << kTableTolerance << " in " << std::fixed
             << std::setprecision(1) << secs << " s on " << worker_count() << " thread(s)";
    v.require(all_pass(cells), "cells" + failing_cells(cells));
    v.require(secs <= 60.0, "runtime above 60 s");
    return v;
}

Verdict table4() {
    Verdict v;
    const auto& cells = table(4);
    v.require(all_pass(cells), "cells" + failing_cells(cells));
    std::size_t empties = 0;
    double cvr_vs_manski = 0.0;
    for (int k : {1, 2}) {
        for (double s : kSigmas) {
            const DgpSpec g = random_coefficient_design(k, s);
            const MomentSet& m = moments().get(g);
            ProblemOptions o;
            o.target = TargetSpec::ate();
            o.v_dim_assumed = k;
            const BoundsResult mst = mst_bounds(g.instruments, m, o);
            empties += certified_empty(g, o.target, mst) ? 1 : 0;
            const BoundsResult cvr = cvr_bounds(g.instruments, m, o), man = manski_bounds(m);
            if (cvr.bounded() && man.bounded()) {
                cvr_vs_manski = std::max({cvr_vs_manski, std::abs(cvr.lower - man.lower), std::abs(cvr.upper - man.upper)});
            } else {
                cvr_vs_manski = kInf;
            }
        }
    }
    v.detail << passed(cells) << '/' << cells.size() << " cells; threshold model certified empty in " << empties
             << "/6 designs; max |CvR - Manski| " << std::scientific << std::setprecision(2) << cvr_vs_manski;
    v.require(empties == 6, "threshold model not certified empty everywhere");
    v.require(cvr_vs_manski <= kTableTolerance, "CvR differs from Manski");
    return v;
}

Verdict tables56() {
    Verdict v;
    std::size_t total = 0, ok = 0;
    double worst_width = 0.0, worst_truth = 0.0, worst_mst = 0.0;
    std::size_t empties = 0;
    for (int id : {5, 6}) {
        const auto& cells = table(id);
        total += cells.size();
        ok += passed(cells);
        v.require(all_pass(cells), "cells" + failing_cells(cells));
        for (int k : {1, 2}) {
            for (double s : kSigmas) {
                const DgpSpec g = make_design(table_layout(id).model, k, s);
                const MomentSet& m = moments().get(g);
                ProblemOptions o;
                o.target = TargetSpec::prte();
                o.v_dim_assumed = k;
                const BoundsResult cvr = cvr_bounds(g.instruments, m, o);
                const BoundsResult mst = mst_bounds(g.instruments, m, o);
                if (!cvr.bounded()) {
                    worst_width = kInf;
                    continue;
                }
                worst_width = std::max(worst_width, cvr.width());
                const double truth = true_target(g, o.target);
                worst_truth = std::max({worst_truth, std::abs(cvr.lower - truth), std::abs(cvr.upper - truth)});
                if (id == 5) {
                    worst_mst = mst.bounded() ? std::max({worst_mst, std::abs(mst.lower - cvr.lower),
                                                          std::abs(mst.upper - cvr.upper)})
                                              : kInf;
                } else {
                    empties += certified_empty(g, o.target, mst) ? 1 : 0;
                }
            }
        }
    }
    v.detail << ok << '/' << total << " cells; max CvR width " << std::scientific << std::setprecision(2)
             << worst_width << "; max |CvR - true| " << worst_truth << "; max |MST - CvR| (local) " << worst_mst
             << "; MST empty in " << empties << "/6 random designs";
    v.require(worst_width <= kPointWidthTolerance, "CvR interval wider than 1e-6");
    v.require(worst_truth <= kTableTolerance, "CvR away from the true PRTE");
    v.require(worst_mst <= kTableTolerance, "MST differs from CvR in the local model");
    v.require(empties == 6, "MST not certified empty in the random model");
    return v;
}

Verdict tables7to10() {
    Verdict v;
    std::size_t total = 0, ok = 0, nest_checked = 0, nest_failed = 0;
    for (int id : {7, 8, 9, 10}) {
        const auto& cells = table(id);
        total += cells.size();
        ok += passed(cells);
        v.require(all_pass(cells), "cells" + failing_cells(cells));
        // group the restricted rows of each design
        std::map<std::pair<char, double>, std::map<std::string, BoundsResult>> by_design;
        for (const auto& c : cells) by_design[{c.ref.panel, c.ref.sigma}][c.ref.row] = c.got;
        for (const auto& [key, rows] : by_design) {
            auto get = [&](const char* name) -> const BoundsResult* {
                auto it = rows.find(name);
                return it == rows.end() ? nullptr : &it->second;
            };
            const BoundsResult *r1 = get("cvr-r1"), *r2 = get("cvr-r2"), *r3 = get("cvr-r3");
            if (!r1 || !r2 || !r3) continue;
            ++nest_checked;
            auto inside = [](const BoundsResult& a, const BoundsResult& b) {
                if (a.status == BoundsStatus::Empty) return true;
                return a.bounded() && b.bounded() && a.lower >= b.lower - 1e-9 && a.upper <= b.upper + 1e-9;
            };
            if (!inside(*r3, *r1) || !inside(*r3, *r2)) ++nest_failed;
        }
    }
    v.detail << ok << '/' << total << " cells; nesting holds in " << (nest_checked - nest_failed) << '/'
             << nest_checked << " designs";
    v.require(nest_failed == 0, "nesting violated");
    v.require(nest_checked == 24, "expected 24 restricted designs");
    return v;
}

Verdict true_values() {
    Verdict v;
    double worst_mean = 0.0;
    for (int k : {1, 2}) {
        double m1 = 0.0, m0 = 0.0;
        for (double c : theta1_default(k)) m1 += c / static_cast<double>(theta1_default(k).size());
        for (double c : theta0_default(k)) m0 += c / static_cast<double>(theta0_default(k).size());
        const double published = k == 1 ? 0.083 : 0.139;
        v.require(std::abs(m1 - m0 - published) <= 1e-3, "Bernstein mean ATE for v_dim " + std::to_string(k));
        for (auto model : kModels) {
            for (double s : kSigmas) {
                const double q = true_target(make_design(model, k, s), TargetSpec::ate());
                worst_mean = std::max(worst_mean, std::abs(q - (m1 - m0)));
            }
        }
    }
    std::size_t rows = 0, ok = 0;
    double worst = 0.0;
    for (const auto& ref : reference_cells()) {
        if (ref.row != "true" || !ref.expected) continue;
        ++rows;
        TargetSpec t;
        t.kind = table_layout(ref.table).target;
        const double q = true_target(make_design(table_layout(ref.table).model, panel_v_dim(ref.panel), ref.sigma), t);
        const double err = std::abs(q - ref.expected->first);
        worst = std::max(worst, err);
        ok += err <= kTableTolerance ? 1 : 0;
    }
    v.detail << "quadrature ATE vs Bernstein means max error " << std::scientific << std::setprecision(2)
             << worst_mean << "; " << ok << '/' << rows << " table true values within " << kTableTolerance
             << " (max error " << worst << ")";
    v.require(worst_mean <= 1e-3, "quadrature ATE away from the analytic value");
    v.require(rows > 0 && ok == rows, "table true values");
    return v;
}

Verdict partition_invariance() {
    Verdict v;
    std::mt19937_64 rng(derive_seed(2024, 6));
    std::uniform_real_distribution<double> U(0.02, 0.98);
    double worst = 0.0;
    std::size_t designs = 0;
    for (auto model : kModels) {
        for (int k : {1, 2}) {
            for (double s : kSigmas) {
                for (auto target : {TargetSpec::ate(), TargetSpec::prte()}) {
                    const DgpSpec g = make_design(model, k, s);
                    const MomentSet& m = moments().get(g);
                    ProblemOptions o;
                    o.target = target;
                    o.v_dim_assumed = k;
                    const BoundsResult base = cvr_bounds(g.instruments, m, o);
                    o.refinement = {U(rng), U(rng), U(rng)};
                    const BoundsResult fine = cvr_bounds(g.instruments, m, o);
                    ++designs;
                    if (!base.bounded() || !fine.bounded()) {
                        worst = kInf;
                        continue;
                    }
                    worst = std::max({worst, std::abs(base.lower - fine.lower), std::abs(base.upper - fine.upper)});
                }
            }
        }
    }
    v.detail << designs << " designs (ATE and PRTE), max change " << std::scientific << std::setprecision(2) << worst;
    v.require(worst <= 1e-7, "bounds moved by more than 1e-7");
    return v;
}

Verdict dimension_reduction() {
    Verdict v;
    double worst = 0.0;
    std::size_t designs = 0;
    for (auto model : kModels) {
        for (double s : kSigmas) {
            for (auto target : {TargetSpec::ate(), TargetSpec::prte()}) {
                const DgpSpec g = make_design(model, 2, s);
                const MomentSet& m = moments().get(g);
                ProblemOptions o;
                o.target = target;
                o.v_dim_assumed = 1;
                const BoundsResult one = cvr_bounds(g.instruments, m, o);
                o.v_dim_assumed = 2;
                const BoundsResult two = cvr_bounds(g.instruments, m, o);
                ++designs;
                if (!one.bounded() || !two.bounded()) {
                    worst = kInf;
                    continue;
                }
                worst = std::max({worst, std::abs(one.lower - two.lower), std::abs(one.upper - two.upper)});
            }
        }
    }
    v.detail << designs << " two-dimensional designs, max |K=1 - K=2| " << std::scientific << std::setprecision(2)
             << worst;
    v.require(worst <= 1e-7, "assumed dimension changes the bounds");
    return v;
}

Verdict brute_force_oracle() {
    Verdict v;
    std::size_t instances = 0, contained = 0, threshold = 0, threshold_equal = 0;
    double worst_excess = -kInf, worst_threshold = 0.0;
    for (int i = 0; i < 24; ++i) {
        const auto t = testing::tiny_instance(i);
        Problem p;
        const BoundsResult lp = cvr_bounds(t.instruments, t.moments, t.options, &p);
        const BoundsResult bf = brute_force_bilinear(p, t.resolution);
        const double h = 1.0 / (t.resolution - 1);
        ++instances;
        if (!lp.bounded() || !bf.bounded()) continue;
        const double excess = std::max(lp.lower - bf.lower, bf.upper - lp.upper);
        worst_excess = std::max(worst_excess, excess);
        contained += excess <= h ? 1 : 0;
        if (t.threshold) {
            ++threshold;
            const double gap = std::max(std::abs(lp.lower - bf.lower), std::abs(lp.upper - bf.upper));
            worst_threshold = std::max(worst_threshold, gap);
            threshold_equal += gap <= h ? 1 : 0;
        }
    }

    // random feasible points with exact products against the McCormick rows
    std::mt19937_64 rng(derive_seed(2024, 8));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    InstrumentSpace in;
    in.values = {{0.0}, {1.0}, {2.0}};
    in.probabilities = {0.3, 0.3, 0.4};
    const BlockLayout L(4, 1, in.size());
    std::size_t points = 0, violations = 0;
    for (int draw = 0; draw < 20; ++draw) {
        EnvelopeBounds e = EnvelopeBounds::uniform(L, {});
        auto interval = [&](double& lo, double& hi) {
            const double a = U(rng), b = U(rng);
            lo = std::min(a, b);
            hi = std::max(a, b);
        };
        for (std::size_t i = 0; i < e.m0_lower.size(); ++i) {
            interval(e.m0_lower[i], e.m0_upper[i]);
            interval(e.m1_lower[i], e.m1_upper[i]);
        }
        for (std::size_t i = 0; i < e.mD_lower.size(); ++i) interval(e.mD_lower[i], e.mD_upper[i]);
        const RowBlock mc = assemble_mccormick(L, in, e);
        for (int t = 0; t < 500; ++t) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L.size()));
            for (std::size_t k = 0; k < L.cells(); ++k) {
                const double m0 = e.m0_lower[k] + U(rng) * (e.m0_upper[k] - e.m0_lower[k]);
                const double m1 = e.m1_lower[k] + U(rng) * (e.m1_upper[k] - e.m1_lower[k]);
                x(L.index(Block::M0, k, 0)) = m0;
                x(L.index(Block::M1, k, 0)) = m1;
                for (std::size_t z = 0; z < L.kz(); ++z) {
                    const std::size_t i = k * L.kz() + z;
                    const double d = e.mD_lower[i] + U(rng) * (e.mD_upper[i] - e.mD_lower[i]);
                    x(L.index(Block::MD, k, z)) = d;
                    x(L.index(Block::M1D, k, z)) = m1 * d;
                    x(L.index(Block::M0D, k, z)) = m0 * (1 - d);
                }
            }
            ++points;
            for (std::size_t r = 0; r < mc.size(); ++r) {
                if (mc.rows[r].dot(x) > mc.rhs[r] + 1e-12) {
                    ++violations;
                    break;
                }
            }
        }
    }
    v.detail << contained << '/' << instances << " brute-force intervals inside CvR within grid spacing (max excess "
             << std::scientific << std::setprecision(2) << worst_excess << "); threshold mode equal in "
             << threshold_equal << '/' << threshold << " (max gap " << worst_threshold << "); " << points
             << " McCormick points, " << violations << " violating";
    v.require(instances >= 20 && contained == instances, "containment");
    v.require(threshold > 0 && threshold_equal == threshold, "threshold-mode equality");
    v.require(points >= 10000 && violations == 0, "McCormick rows");
    return v;
}

Verdict coverage() {
    Verdict v;
    const auto t0 = Clock::now();
    const DgpSpec g = local_departure_design(1, 0.5);
    std::ostringstream parts;
    for (auto target : {TargetSpec::ate(), TargetSpec::prte()}) {
        ProblemOptions o;
        o.target = target;
        CoverageOptions co;
        co.replications = 200;
        co.alpha = 0.05;
        co.seed = 20240601;
        co.jobs = worker_count();
        co.n = 1000;
        const CoverageReport small = coverage_experiment(g, o, co);
        co.n = 3000;
        const CoverageReport large = coverage_experiment(g, o, co);
        parts << target_name(target.kind) << ": coverage " << std::fixed << std::setprecision(3) << small.coverage
              << " (n=1000, " << small.failures << " failed), " << large.coverage << " (n=3000); width "
              << small.mean_width << " -> " << large.mean_width << "; ";
        v.require(small.coverage >= 0.919, target_name(target.kind) + " coverage at n=1000");
        v.require(large.mean_width < small.mean_width, target_name(target.kind) + " width not decreasing");
    }
    const double secs = seconds_since(t0);
    v.detail << parts.str() << std::fixed << std::setprecision(0) << secs << " s";
    v.require(secs <= 1800.0, "runtime above 30 min");
    return v;
}

Verdict solver_suite() {
    Verdict v;
    std::mt19937_64 rng(derive_seed(2024, 10));
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double kkt = 0.0, duality = 0.0;
    for (int t = 0; t < 40; ++t) {
        const int n = 4 + t % 9;
        const ConstraintSystem s = testing::random_system(rng, n, t % 3, 2 + t % 11);
        Eigen::VectorXd c(n);
        for (int j = 0; j < n; ++j) c(j) = U(rng);
        const SolveOutcome o = solve_lp_objective(s, c);
        kkt = std::max(kkt, testing::kkt_residual(s, c, o));
        if (o.optimal()) duality = std::max(duality, std::abs(lp_dual_value(s, o) - o.value));
        else duality = kInf;
    }
    for (auto model : kModels) {
        ProblemOptions o;
        o.restrictions = RestrictionSet::r3();
        const ConstraintSystem s = assemble_population(make_design(model, 1, 0.5), o);
        for (Direction d : {Direction::Min, Direction::Max}) {
            const SolveOutcome out = solve_lp(s, d);
            kkt = std::max(kkt, testing::kkt_residual(s, unit_vector(s.cols(), 0, d == Direction::Min ? 1.0 : -1.0), out));
        }
    }

    // infeasible systems must come with a valid certificate
    std::size_t certified = 0;
    {
        ConstraintSystem s(2);
        s.lower.setZero();
        s.upper.setConstant(1.0);
        s.add_in(Eigen::RowVector2d(1, 1), 0.5);
        s.add_in(Eigen::RowVector2d(-1, -1), -1.5);
        const SolveOutcome o = solve_lp(s, Direction::Min);
        certified += o.status == SolveStatus::Infeasible && o.certificate && certificate_margin(s, *o.certificate) > 0;
    }
    {
        ConstraintSystem s(3);
        s.lower.setZero();
        s.upper.setConstant(1.0);
        s.add_eq(Eigen::RowVector3d(1, 1, 1), 2.5);
        s.add_eq(Eigen::RowVector3d(1, 0, 0), 0.0);
        s.add_eq(Eigen::RowVector3d(0, 1, 0), 0.25);
        const SolveOutcome o = solve_lp(s, Direction::Max);
        certified += o.status == SolveStatus::Infeasible && o.certificate && certificate_margin(s, *o.certificate) > 0;
    }
    {
        ProblemOptions o;
        o.restrictions.deterministic_monotone = true;
        const ConstraintSystem s = assemble_population(random_coefficient_design(1, 0.1), o);
        const SolveOutcome out = solve_lp(s, Direction::Min);
        certified += out.status == SolveStatus::Infeasible && out.certificate &&
                     certificate_margin(s, *out.certificate) > 0;
    }

    // regularized values approach the LP values from inside as mu shrinks
    bool monotone = true, sandwiched = true;
    double final_gap = 0.0;
    for (auto model : kModels) {
        ProblemOptions o;
        o.restrictions = RestrictionSet::r1();
        const ConstraintSystem s = assemble_population(make_design(model, 1, 0.1), o);
        const double lo = solve_lp(s, Direction::Min).value, hi = solve_lp(s, Direction::Max).value;
        const double radius = testing::box_radius_sq(s);
        double prev_lo = kInf, prev_hi = -kInf;
        for (double mu : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
            const SolveOutcome a = solve_regularized(s, Direction::Min, mu);
            const SolveOutcome b = solve_regularized(s, Direction::Max, mu);
            if (!a.optimal() || !b.optimal()) {
                sandwiched = false;
                break;
            }
            sandwiched = sandwiched && a.value >= lo - 1e-10 && a.value - lo <= mu * radius + 1e-10 &&
                         b.value <= hi + 1e-10 && hi - b.value <= mu * radius + 1e-10;
            monotone = monotone && a.value <= prev_lo + 1e-12 && b.value >= prev_hi - 1e-12;
            prev_lo = a.value;
            prev_hi = b.value;
        }
        final_gap = std::max({final_gap, prev_lo - lo, hi - prev_hi});
    }

    v.detail << "max KKT residual " << std::scientific << std::setprecision(2) << kkt << ", max duality gap "
             << duality << "; " << certified << "/3 infeasible systems certified; regularized gap at mu=1e-5 "
             << final_gap;
    v.require(kkt <= 1e-8, "KKT residual");
    v.require(duality <= 1e-9, "duality gap");
    v.require(certified == 3, "infeasibility certificates");
    v.require(sandwiched && monotone && final_gap <= 1e-4, "regularized convergence");
    return v;
}

struct Criterion {
    int id;
    const char* title;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "Table 3 reproduction", table3},
        {2, "Table 4 reproduction", table4},
        {3, "Tables 5-6 reproduction", tables56},
        {4, "Tables 7-10 reproduction and nesting", tables7to10},
        {5, "true values", true_values},
        {6, "partition refinement invariance", partition_invariance},
        {7, "assumed dimension K=1 vs K=2", dimension_reduction},
        {8, "brute-force and McCormick oracles", brute_force_oracle},
        {9, "inference coverage", coverage},
        {10, "solver unit suite", solver_suite},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) {
        const int id = std::atoi(argv[i]);
        if (id < 1 || id > 10) {
            std::cerr << "usage: acceptance [criterion ...]   (criteria are 1..10)\n";
            return 2;
        }
        wanted.insert(id);
    }
    bool ok = true;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << "exception: " << e.what();
        }
        std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << c.id << "  " << c.title << ": "
                  << v.detail.str() << std::endl;
        ok = ok && v.pass;
    }
    return ok ? 0 : 1;
}

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "assembler.hpp"
#include "bounds.hpp"
#include "dgp.hpp"
#include "numerics.hpp"
#include "optimizer.hpp"

namespace prte {

struct TuningResult {
    double mu_lower = 0.0, mu_upper = 0.0;
    double mu1_lower = 0.0, mu1_upper = 0.0;  // before the sqrt(log n / n) factor
    bool fallback_lower = false, fallback_upper = false;
};

namespace detail {
/// (1/n) sum_i (v_i - mean)' (v_i - mean) with v_i = W_i' lambda.
inline double trace_variance(const SampleSystem& ss, const Eigen::VectorXd& lambda) {
    const std::size_t n = ss.n();
    const Eigen::Index cols = ss.system().cols() + 1;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(cols), sq = Eigen::VectorXd::Zero(cols);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd v = ss.W(i).transpose() * lambda;
        sum += v;
        sq += v.cwiseProduct(v);
    }
    const double nn = static_cast<double>(n);
    return std::max(0.0, (sq / nn - (sum / nn).cwiseAbs2()).sum());
}

inline double tuning_factor(std::size_t n) {
    const double nn = static_cast<double>(n);
    return std::sqrt(std::log(nn) / nn);
}
}  // namespace detail

/// Per-side tuning from the unregularized multipliers. lambda_lower and
/// lambda_upper are the stacked multipliers of min e1'eta and min -e1'eta.
inline TuningResult select_tuning(const SampleSystem& ss, const Eigen::VectorXd& lambda_lower,
                                  const Eigen::VectorXd& lambda_upper) {
    const int K = ss.problem().options.v_dim_assumed;
    const double denom = (K + 1) + 1;
    const double f = detail::tuning_factor(ss.n());
    TuningResult t;
    t.mu1_lower = std::sqrt(detail::trace_variance(ss, lambda_lower)) / denom;
    t.mu1_upper = std::sqrt(detail::trace_variance(ss, lambda_upper)) / denom;
    t.fallback_lower = !(t.mu1_lower > 0.0);
    t.fallback_upper = !(t.mu1_upper > 0.0);
    t.mu_lower = t.fallback_lower ? f : f * t.mu1_lower;
    t.mu_upper = t.fallback_upper ? f : f * t.mu1_upper;
    return t;
}

/// Solves both unregularized sample LPs and applies select_tuning.
inline TuningResult select_tuning(const SampleSystem& ss) {
    const SolveOutcome lo = solve_lp(ss.system(), Direction::Min);
    const SolveOutcome hi = solve_lp(ss.system(), Direction::Max);
    if (!lo.optimal() || !hi.optimal()) throw SolverError("tuning: sample LP not solved");
    return select_tuning(ss, lo.multipliers(), hi.multipliers());
}

enum class InferenceStatus { Ok, Infeasible, SolverFailure };

inline const char* inference_status_name(InferenceStatus s) {
    switch (s) {
        case InferenceStatus::Ok: return "ok";
        case InferenceStatus::Infeasible: return "infeasible";
        case InferenceStatus::SolverFailure: return "solver-failure";
    }
    return "?";
}

struct InferenceResult {
    InferenceStatus status = InferenceStatus::Ok;
    std::string message;
    double beta_lower_hat = 0.0, beta_upper_hat = 0.0;  // unregularized sample LP values
    double reg_lower = 0.0, reg_upper = 0.0;            // regularized values
    Eigen::VectorXd eta_out_lower, eta_out_upper;
    double out_lower = 0.0, out_upper = 0.0;            // bias-corrected estimates
    double sigma_lower = 0.0, sigma_upper = 0.0;
    double ci_lower = 0.0, ci_upper = 0.0;
    double mu_lower = 0.0, mu_upper = 0.0;
    double alpha = 0.05;
    TuningResult tuning;

    bool ok() const { return status == InferenceStatus::Ok; }
    double width() const { return ci_upper - ci_lower; }
};

struct InferenceOptions {
    double alpha = 0.05;
    std::optional<double> mu;  // same value both sides; 0 turns regularization off
};

namespace detail {
/// sigma^2 = (1/n) sum_i (lambda' g(W_i, eta))^2.
inline double plug_in_sigma(const SampleSystem& ss, const Eigen::VectorXd& lambda, const Eigen::VectorXd& eta) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ss.n(); ++i) {
        const double v = lambda.dot(ss.g(i, eta));
        acc += v * v;
    }
    return std::sqrt(acc / static_cast<double>(ss.n()));
}

/// Per-coordinate max of |min eta_k| and |max eta_k| over the polytope cut by
/// the given row.
inline std::optional<Eigen::VectorXd> outer_norm_vector(const ConstraintSystem& sys, const Eigen::RowVectorXd& a,
                                                        double b) {
    const Eigen::Index n = sys.cols();
    ConstraintSystem cut = sys;
    cut.add_in(a, b, "step3");
    Eigen::VectorXd out(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        double m = 0.0;
        for (Direction d : {Direction::Min, Direction::Max}) {
            const SolveOutcome s = solve_lp(cut, d, k);
            if (!s.optimal()) return std::nullopt;
            m = std::max(m, std::abs(s.value));
        }
        out(k) = m;
    }
    return out;
}
}  // namespace detail

/// Regularized support-function inference on one sample.
inline InferenceResult estimate_bounds(const SampleSystem& ss, const InferenceOptions& opts = {}) {
    if (!(opts.alpha > 0.0 && opts.alpha < 0.5)) throw ValidationError("alpha must lie in (0, 0.5)");
    if (opts.mu && *opts.mu < 0.0) throw ValidationError("mu must be nonnegative");
    InferenceResult r;
    r.alpha = opts.alpha;
    const ConstraintSystem& sys = ss.system();
    const double rootn = std::sqrt(static_cast<double>(ss.n()));

    const SolveOutcome lp_lo = solve_lp(sys, Direction::Min);
    if (lp_lo.status == SolveStatus::Infeasible) {
        r.status = InferenceStatus::Infeasible;
        r.message = "sample polytope empty";
        return r;
    }
    const SolveOutcome lp_hi = solve_lp(sys, Direction::Max);
    if (!lp_lo.optimal() || !lp_hi.optimal()) {
        r.status = InferenceStatus::SolverFailure;
        r.message = lp_lo.optimal() ? lp_hi.message : lp_lo.message;
        return r;
    }
    r.beta_lower_hat = lp_lo.value;
    r.beta_upper_hat = lp_hi.value;

    if (opts.mu) {
        r.mu_lower = r.mu_upper = *opts.mu;
    } else {
        r.tuning = select_tuning(ss, lp_lo.multipliers(), lp_hi.multipliers());
        r.mu_lower = r.tuning.mu_lower;
        r.mu_upper = r.tuning.mu_upper;
    }

    // regularized programs (the LPs themselves when mu is zero)
    auto solve_side = [&](Direction dir, double mu, const SolveOutcome& lp) {
        return mu > 0.0 ? solve_regularized(sys, dir, mu, lp.solution) : lp;
    };
    const SolveOutcome reg_lo = solve_side(Direction::Min, r.mu_lower, lp_lo);
    const SolveOutcome reg_hi = solve_side(Direction::Max, r.mu_upper, lp_hi);
    if (!reg_lo.optimal() || !reg_hi.optimal()) {
        r.status = InferenceStatus::SolverFailure;
        r.message = "regularized program: " + (reg_lo.optimal() ? reg_hi.message : reg_lo.message);
        return r;
    }
    r.reg_lower = reg_lo.value;
    r.reg_upper = reg_hi.value;

    // plug-in standard deviations
    r.sigma_lower = detail::plug_in_sigma(ss, reg_lo.multipliers(), reg_lo.solution);
    r.sigma_upper = detail::plug_in_sigma(ss, reg_hi.multipliers(), reg_hi.solution);

    // outward bias correction from the auxiliary programs
    const Eigen::Index n = sys.cols();
    r.out_lower = r.reg_lower;
    r.out_upper = r.reg_upper;
    r.eta_out_lower = Eigen::VectorXd::Zero(n);
    r.eta_out_upper = Eigen::VectorXd::Zero(n);
    if (r.mu_lower > 0.0) {
        const auto v = detail::outer_norm_vector(sys, unit_vector(n, 0).transpose(), r.beta_lower_hat + r.mu_lower);
        if (!v) {
            r.status = InferenceStatus::SolverFailure;
            r.message = "bias-correction program failed (lower)";
            return r;
        }
        r.eta_out_lower = *v;
        r.out_lower = r.reg_lower - r.mu_lower * v->squaredNorm();
    }
    if (r.mu_upper > 0.0) {
        const auto v = detail::outer_norm_vector(sys, -unit_vector(n, 0).transpose(), -r.beta_upper_hat + r.mu_upper);
        if (!v) {
            r.status = InferenceStatus::SolverFailure;
            r.message = "bias-correction program failed (upper)";
            return r;
        }
        r.eta_out_upper = *v;
        r.out_upper = r.reg_upper + r.mu_upper * v->squaredNorm();
    }

    const double c = normal_quantile(1.0 - opts.alpha / 2.0);
    r.ci_lower = r.out_lower - c * r.sigma_lower / rootn;
    r.ci_upper = r.out_upper + c * r.sigma_upper / rootn;
    return r;
}

inline InferenceResult estimate_bounds(const Dataset& data, const InstrumentSpace& instruments,
                                       const ProblemOptions& problem, const InferenceOptions& opts = {}) {
    try {
        const SampleSystem ss(data, instruments, problem);
        return estimate_bounds(ss, opts);
    } catch (const ValidationError& e) {
        InferenceResult r;
        r.status = InferenceStatus::Infeasible;
        r.message = e.what();
        return r;
    }
}

struct CoverageReport {
    std::size_t n = 0;
    double sigma = 0.0;
    int v_dim = 1;
    std::string target;
    double coverage = 0.0;
    double mean_width = 0.0;
    std::size_t failures = 0;
    std::size_t M = 0;
    std::uint64_t seed = 0;
    double population_lower = 0.0, population_upper = 0.0;
};

inline const char* coverage_csv_header() { return "n,sigma,v_dim,target,coverage,mean_width,failures,M,seed"; }

inline void write_coverage_csv(std::ostream& os, const std::vector<CoverageReport>& rows) {
    os << coverage_csv_header() << '\n';
    const auto old = os.precision(10);
    for (const auto& r : rows) {
        os << r.n << ',' << r.sigma << ',' << r.v_dim << ',' << r.target << ',' << r.coverage << ','
           << r.mean_width << ',' << r.failures << ',' << r.M << ',' << r.seed << '\n';
    }
    os.precision(old);
}

/// One replication's interval, or nothing when the replication failed.
using ReplicationInterval = std::optional<std::pair<double, double>>;

/// Fraction of successful replications whose interval contains [lower, upper].
inline void tally_coverage(CoverageReport& rep, double lower, double upper,
                           const std::vector<ReplicationInterval>& cis) {
    std::size_t ok = 0, hit = 0;
    double width = 0.0;
    for (const auto& ci : cis) {
        if (!ci) continue;
        ++ok;
        if (ci->first <= lower && ci->second >= upper) ++hit;
        width += ci->second - ci->first;
    }
    rep.M = cis.size();
    rep.failures = cis.size() - ok;
    rep.coverage = ok > 0 ? static_cast<double>(hit) / static_cast<double>(ok) : std::nan("");
    rep.mean_width = ok > 0 ? width / static_cast<double>(ok) : std::nan("");
    rep.population_lower = lower;
    rep.population_upper = upper;
}

/// Runs body(i) for i in [0, count) on up to `jobs` threads.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < count && !failed; i = next++) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
                failed = true;
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct CoverageOptions {
    std::size_t n = 1000;
    std::size_t replications = 200;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    std::optional<double> mu;
};

/// Monte Carlo coverage of the population interval. Replication i draws its
/// sample from derive_seed(seed, i); failed replications are excluded from the
/// coverage denominator and counted.
inline CoverageReport coverage_experiment(const DgpSpec& g, const ProblemOptions& problem, const CoverageOptions& opts,
                                          std::vector<InferenceResult>* details = nullptr) {
    if (opts.replications < 1) throw ValidationError("need at least one replication");
    const BoundsResult pop = cvr_bounds(g, problem);
    if (!pop.bounded()) throw SolverError("population interval is not bounded");
    std::vector<InferenceResult> results(opts.replications);
    InferenceOptions io;
    io.alpha = opts.alpha;
    io.mu = opts.mu;
    parallel_for(opts.replications, opts.jobs, [&](std::size_t i) {
        const Dataset data = sample(g, opts.n, derive_seed(opts.seed, i));
        results[i] = estimate_bounds(data, g.instruments, problem, io);
    });
    std::vector<ReplicationInterval> cis;
    for (const auto& r : results) {
        cis.push_back(r.ok() ? ReplicationInterval(std::make_pair(r.ci_lower, r.ci_upper)) : std::nullopt);
    }
    CoverageReport rep;
    rep.n = opts.n;
    rep.sigma = g.sigma;
    rep.v_dim = g.v_dim;
    rep.target = target_name(problem.target.kind);
    rep.seed = opts.seed;
    tally_coverage(rep, pop.lower, pop.upper, cis);
    if (details) *details = std::move(results);
    return rep;
}

}  // namespace prte

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "model.hpp"

namespace prte {

enum class TargetKind {
    AvgUntreated,
    AvgTreated,
    ATE,
    ATEGivenX,
    ATT,
    ATU,
    GeneralizedLATE,
    PRTE,
    AvgSelectionBias,
    AvgSelectionOnGain,
};

struct TargetSpec {
    TargetKind kind = TargetKind::ATE;
    double v_lo = 0.0;  // GeneralizedLATE interval on the first axis
    double v_hi = 1.0;
    std::vector<int> x_star;  // ATEGivenX covariate values

    static TargetSpec ate() { return {TargetKind::ATE, 0.0, 1.0, {}}; }
    static TargetSpec prte() { return {TargetKind::PRTE, 0.0, 1.0, {}}; }
    static TargetSpec late(double lo, double hi) { return {TargetKind::GeneralizedLATE, lo, hi, {}}; }
};

inline const std::vector<std::pair<std::string, TargetKind>>& target_names() {
    static const std::vector<std::pair<std::string, TargetKind>> names = {
        {"avg-untreated", TargetKind::AvgUntreated},
        {"avg-treated", TargetKind::AvgTreated},
        {"ate", TargetKind::ATE},
        {"ate-given-x", TargetKind::ATEGivenX},
        {"att", TargetKind::ATT},
        {"atu", TargetKind::ATU},
        {"late", TargetKind::GeneralizedLATE},
        {"prte", TargetKind::PRTE},
        {"asb", TargetKind::AvgSelectionBias},
        {"asg", TargetKind::AvgSelectionOnGain},
    };
    return names;
}

inline std::string target_name(TargetKind k) {
    for (const auto& [n, kind] : target_names()) {
        if (kind == k) return n;
    }
    return "?";
}

inline TargetKind parse_target_kind(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const auto& [n, kind] : target_names()) {
        if (n == s) return kind;
    }
    throw ValidationError("unknown target '" + s + "'");
}

struct WeightValues {
    double w00 = 0.0, w01 = 0.0, w10 = 0.0, w11 = 0.0;
};

/// Weight functions of a target. Index convention: w_{dd'} multiplies the
/// potential outcome Y_d among units with treatment status d'.
struct WeightSpec {
    std::function<WeightValues(const std::vector<double>& v, std::size_t z)> eval;
    std::vector<double> v_discontinuities;  // first-axis jump points
    bool depends_on_v = false;
};

namespace detail {
inline double positive_or_throw(double x, const char* what) {
    if (!(x > 0.0)) throw ValidationError(std::string("zero denominator: ") + what);
    return x;
}
}  // namespace detail

inline WeightSpec weights_for(const TargetSpec& target, const MomentSet& moments,
                              const InstrumentSpace& instruments) {
    WeightSpec w;
    auto constant = [&w](WeightValues c) {
        w.eval = [c](const std::vector<double>&, std::size_t) { return c; };
    };
    switch (target.kind) {
        case TargetKind::AvgUntreated: constant({1, 1, 0, 0}); break;
        case TargetKind::AvgTreated: constant({0, 0, 1, 1}); break;
        case TargetKind::ATE: constant({-1, -1, 1, 1}); break;
        case TargetKind::ATT: {
            const double p1 = detail::positive_or_throw(moments.p_treated(), "P(D=1)");
            constant({0, -1 / p1, 0, 1 / p1});
            break;
        }
        case TargetKind::ATU: {
            const double p0 = detail::positive_or_throw(1 - moments.p_treated(), "P(D=0)");
            constant({-1 / p0, 0, 1 / p0, 0});
            break;
        }
        case TargetKind::AvgSelectionBias: {
            // E[Y0 | D=1] - E[Y0 | D=0]
            const double p1 = detail::positive_or_throw(moments.p_treated(), "P(D=1)");
            const double p0 = detail::positive_or_throw(1 - moments.p_treated(), "P(D=0)");
            constant({-1 / p0, 1 / p1, 0, 0});
            break;
        }
        case TargetKind::AvgSelectionOnGain: {
            const double p1 = detail::positive_or_throw(moments.p_treated(), "P(D=1)");
            const double p0 = detail::positive_or_throw(1 - moments.p_treated(), "P(D=0)");
            constant({1 / p0, -1 / p1, -1 / p0, 1 / p1});
            break;
        }
        case TargetKind::ATEGivenX: {
            if (target.x_star.empty()) throw ValidationError("ATEGivenX needs a covariate set");
            double px = 0.0;
            std::vector<char> in(instruments.size(), 0);
            for (std::size_t z = 0; z < instruments.size(); ++z) {
                const int x = instruments.covariate_of(z);
                if (std::find(target.x_star.begin(), target.x_star.end(), x) != target.x_star.end()) {
                    in[z] = 1;
                    px += instruments.probabilities.at(z);
                }
            }
            const double c = 1 / detail::positive_or_throw(px, "P(X in X*)");
            w.eval = [in, c](const std::vector<double>&, std::size_t z) {
                const double s = in.at(z) ? c : 0.0;
                return WeightValues{-s, -s, s, s};
            };
            break;
        }
        case TargetKind::GeneralizedLATE: {
            const double lo = target.v_lo, hi = target.v_hi;
            if (!(lo >= 0.0 && lo < hi && hi <= 1.0)) {
                throw ValidationError("GeneralizedLATE needs 0 <= v_lo < v_hi <= 1");
            }
            const double c = 1 / (hi - lo);
            w.eval = [lo, hi, c](const std::vector<double>& v, std::size_t) {
                const double s = (v.at(0) >= lo && v.at(0) <= hi) ? c : 0.0;
                return WeightValues{-s, -s, s, s};
            };
            for (double k : {lo, hi}) {
                if (k > 0.0 && k < 1.0) w.v_discontinuities.push_back(k);
            }
            w.depends_on_v = true;
            break;
        }
        case TargetKind::PRTE: {
            if (!instruments.policy_probabilities) {
                throw ValidationError("PRTE requires policy probabilities");
            }
            const auto& fs = *instruments.policy_probabilities;
            std::vector<double> ratio(instruments.size(), 0.0);
            for (std::size_t z = 0; z < instruments.size(); ++z) {
                const double f = instruments.probabilities.at(z);
                if (fs.at(z) > 0.0) ratio[z] = fs[z] / detail::positive_or_throw(f, "F_Z(z) under policy mass");
            }
            w.eval = [ratio](const std::vector<double>&, std::size_t z) {
                return WeightValues{ratio.at(z), 0.0, 0.0, ratio.at(z)};
            };
            break;
        }
    }
    return w;
}

/// Constant added to the eta1 row: the target is Gamma*(m) + offset.
/// PRTE is reported as E[Y*] - E[Y], with E[Y] identified from the moments.
inline double target_offset(const TargetSpec& target, const MomentSet& moments) {
    return target.kind == TargetKind::PRTE ? -moments.e_y() : 0.0;
}

/// Coefficient vector T* on eta2 (returned with a leading zero for eta1) such
/// that T*'eta = Gamma*(B'eta2) for cellwise-constant m.
inline Eigen::VectorXd target_coefficients(const WeightSpec& weights, const VPartition& partition,
                                           const BlockLayout& layout,
                                           const InstrumentSpace& instruments) {
    for (double k : weights.v_discontinuities) {
        const auto& knots = partition.knots(0);
        const bool on_knot = std::any_of(knots.begin(), knots.end(),
                                         [k](double q) { return std::abs(q - k) <= 1e-12; });
        if (!on_knot) throw ValidationError("weight discontinuity not aligned with a knot");
    }
    Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size()));
    for (std::size_t z = 0; z < instruments.size(); ++z) {
        const double f = instruments.probabilities.at(z);
        const auto x = static_cast<std::size_t>(instruments.covariate_of(z));
        for (std::size_t k = 0; k < partition.cell_count(); ++k) {
            const WeightValues w = weights.eval(partition.cell_midpoint(k), z);
            const double fv = f * partition.cell_volume(k);
            t(layout.index(Block::M0, k, x)) += fv * w.w01;
            t(layout.index(Block::M1, k, x)) += fv * w.w10;
            t(layout.index(Block::M0D, k, z)) += fv * (w.w00 - w.w01);
            t(layout.index(Block::M1D, k, z)) += fv * (w.w11 - w.w10);
        }
    }
    return t;
}

}  // namespace prte

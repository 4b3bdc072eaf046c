#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dgp.hpp"
#include "model.hpp"
#include "targets.hpp"

namespace prte {

struct ValidationReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    void add(std::string v) { violations.push_back(std::move(v)); }
    void merge(const std::vector<std::string>& more) {
        violations.insert(violations.end(), more.begin(), more.end());
    }
};

namespace detail {
inline std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

inline void check_mass(ValidationReport& r, const std::vector<double>& p, const std::string& what) {
    double s = 0.0;
    for (double q : p) {
        if (!(q >= 0.0)) {
            r.add(what + " has a negative entry");
            return;
        }
        s += q;
    }
    if (std::abs(s - 1.0) > 1e-12) r.add(what + " sums to " + fmt(s));
}
}  // namespace detail

inline std::vector<std::string> instrument_violations(const InstrumentSpace& in) {
    ValidationReport r;
    if (in.values.empty()) r.add("instrument support is empty");
    if (in.probabilities.size() != in.values.size()) r.add("instrument mass and support differ in length");
    else detail::check_mass(r, in.probabilities, "mass");
    if (in.policy_probabilities) {
        const auto& fs = *in.policy_probabilities;
        if (fs.size() != in.values.size()) r.add("policy mass and support differ in length");
        else {
            detail::check_mass(r, fs, "policy mass");
            for (std::size_t z = 0; z < fs.size() && z < in.probabilities.size(); ++z) {
                if (fs[z] > 0.0 && !(in.probabilities[z] > 0.0)) {
                    r.add("policy mass outside the instrument support at z index " + std::to_string(z));
                }
            }
        }
    }
    if (!in.covariate.empty() && in.covariate.size() != in.values.size()) r.add("covariate list length mismatch");
    for (int x : in.covariate) {
        if (x < 0) {
            r.add("negative covariate index");
            break;
        }
    }
    return r.violations;
}

inline std::vector<std::string> knot_violations(const std::vector<std::vector<double>>& knots_per_axis) {
    ValidationReport r;
    if (knots_per_axis.empty()) r.add("partition dimension must be at least 1");
    for (std::size_t a = 0; a < knots_per_axis.size(); ++a) {
        const auto& k = knots_per_axis[a];
        const std::string axis = " on axis " + std::to_string(a);
        if (k.size() < 2) {
            r.add("fewer than two knots" + axis);
            continue;
        }
        if (k.front() != 0.0 || k.back() != 1.0) r.add("knots must start at 0 and end at 1" + axis);
        if (std::any_of(k.begin(), k.end(), [](double x) { return !(x >= 0.0 && x <= 1.0); })) {
            r.add("knot outside [0,1]" + axis);
        }
        for (std::size_t i = 1; i < k.size(); ++i) {
            if (!(k[i] > k[i - 1])) {
                r.add("knots not increasing" + axis);
                break;
            }
        }
    }
    return r.violations;
}

inline std::vector<std::string> target_violations(const TargetSpec& t, const InstrumentSpace& in) {
    ValidationReport r;
    switch (t.kind) {
        case TargetKind::GeneralizedLATE:
            if (!(t.v_lo >= 0.0 && t.v_lo < t.v_hi && t.v_hi <= 1.0)) r.add("LATE needs 0 <= v_lo < v_hi <= 1");
            break;
        case TargetKind::ATEGivenX:
            if (t.x_star.empty()) r.add("ATE given X needs a covariate set");
            break;
        case TargetKind::PRTE:
            if (!in.policy_probabilities) r.add("PRTE needs policy probabilities");
            break;
        default: break;
    }
    return r.violations;
}

/// Collects every invariant violation; never throws.
inline ValidationReport validate_spec(const DgpSpec& g, const std::vector<std::vector<double>>& knots_per_axis,
                                      const TargetSpec& target) {
    ValidationReport r;
    try {
        r.merge(dgp_violations(g));
        r.merge(instrument_violations(g.instruments));
        r.merge(knot_violations(knots_per_axis));
        r.merge(target_violations(target, g.instruments));
        if (target.kind == TargetKind::GeneralizedLATE && !knots_per_axis.empty()) {
            const auto& k = knots_per_axis.front();
            for (double q : {target.v_lo, target.v_hi}) {
                if (std::none_of(k.begin(), k.end(), [q](double x) { return std::abs(x - q) <= 1e-12; })) {
                    r.add("LATE endpoint " + detail::fmt(q) + " is not a knot");
                }
            }
        }
    } catch (const std::exception& e) {
        r.add(std::string("validation aborted: ") + e.what());
    }
    return r;
}

inline ValidationReport validate_spec(const DgpSpec& g, const VPartition& partition, const TargetSpec& target) {
    return validate_spec(g, partition.knots_per_axis(), target);
}

}  // namespace prte

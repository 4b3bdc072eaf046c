#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "model.hpp"
#include "numerics.hpp"
#include "targets.hpp"

namespace prte {

enum class TreatmentModel { LocalDeparture, RandomCoefficient };

inline const char* treatment_model_name(TreatmentModel m) {
    return m == TreatmentModel::LocalDeparture ? "local" : "random";
}

inline TreatmentModel parse_treatment_model(const std::string& s) {
    if (s == "local" || s == "local-departure") return TreatmentModel::LocalDeparture;
    if (s == "random" || s == "random-coefficient") return TreatmentModel::RandomCoefficient;
    throw ValidationError("unknown treatment model '" + s + "'");
}

struct DgpSpec {
    int v_dim = 1;
    std::vector<double> theta0;
    std::vector<double> theta1;
    TreatmentModel treatment_model = TreatmentModel::LocalDeparture;
    double sigma = 0.1;
    InstrumentSpace instruments;
};

inline const std::vector<double>& theta0_default(int v_dim) {
    static const std::vector<double> one{0.6, 0.4, 0.3};
    static const std::vector<double> two{0.7, 0.5, 0.5, 0.3, 0.2, 0.1, 0.1, 0.0, 0.0};
    return v_dim == 1 ? one : two;
}

inline const std::vector<double>& theta1_default(int v_dim) {
    static const std::vector<double> one{0.75, 0.5, 0.3};
    static const std::vector<double> two{0.85, 0.65, 0.5, 0.5, 0.45, 0.3, 0.2, 0.1, 0.1};
    return v_dim == 1 ? one : two;
}

/// p(z) of the local departure design.
inline double local_departure_index(double z) { return 0.35 + 0.325 * z - 0.075 * z * z; }

inline DgpSpec local_departure_design(int v_dim, double sigma) {
    if (v_dim != 1 && v_dim != 2) throw ValidationError("v_dim must be 1 or 2");
    DgpSpec g;
    g.v_dim = v_dim;
    g.theta0 = theta0_default(v_dim);
    g.theta1 = theta1_default(v_dim);
    g.treatment_model = TreatmentModel::LocalDeparture;
    g.sigma = sigma;
    g.instruments.values = {{0.0}, {1.0}, {2.0}};
    g.instruments.probabilities = {0.5, 0.4, 0.1};
    g.instruments.policy_probabilities = std::vector<double>(3, 1.0 / 3.0);
    return g;
}

inline DgpSpec random_coefficient_design(int v_dim, double sigma) {
    if (v_dim != 1 && v_dim != 2) throw ValidationError("v_dim must be 1 or 2");
    DgpSpec g;
    g.v_dim = v_dim;
    g.theta0 = theta0_default(v_dim);
    g.theta1 = theta1_default(v_dim);
    g.treatment_model = TreatmentModel::RandomCoefficient;
    g.sigma = sigma;
    const double p1[3] = {0.5, 0.4, 0.1};
    const double p2[2] = {0.7, 0.3};
    const double z2[2] = {0.5, 1.0};
    std::vector<double> policy;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 2; ++b) {
            g.instruments.values.push_back({static_cast<double>(a), z2[b]});
            g.instruments.probabilities.push_back(p1[a] * p2[b]);
            policy.push_back(p2[b] / 3.0);
        }
    }
    g.instruments.policy_probabilities = policy;
    return g;
}

inline DgpSpec make_design(TreatmentModel model, int v_dim, double sigma) {
    return model == TreatmentModel::LocalDeparture ? local_departure_design(v_dim, sigma)
                                                   : random_coefficient_design(v_dim, sigma);
}

inline double bernstein_basis(int k, int degree, double v) {
    double binom = 1.0;
    for (int i = 1; i <= k; ++i) binom = binom * (degree - k + i) / i;
    return binom * std::pow(v, k) * std::pow(1.0 - v, degree - k);
}

/// Tensor-product Bernstein polynomial; for K=2 the coefficient of
/// b_k(v1) b_l(v2) sits at position k*(degree+1) + l.
inline double bernstein_eval(const std::vector<double>& v, const std::vector<double>& coeffs,
                             int degree = 2) {
    const std::size_t per = static_cast<std::size_t>(degree + 1);
    if (v.size() == 1) {
        if (coeffs.size() != per) throw ValidationError("Bernstein coefficient count mismatch");
        double s = 0.0;
        for (int k = 0; k <= degree; ++k) s += coeffs[static_cast<std::size_t>(k)] * bernstein_basis(k, degree, v[0]);
        return s;
    }
    if (v.size() == 2) {
        if (coeffs.size() != per * per) throw ValidationError("Bernstein coefficient count mismatch");
        double s = 0.0;
        for (int k = 0; k <= degree; ++k) {
            const double bk = bernstein_basis(k, degree, v[0]);
            for (int l = 0; l <= degree; ++l) {
                s += coeffs[static_cast<std::size_t>(k) * per + static_cast<std::size_t>(l)] * bk *
                     bernstein_basis(l, degree, v[1]);
            }
        }
        return s;
    }
    throw ValidationError("Bernstein evaluation supports K = 1 or 2");
}

inline double mtr(const DgpSpec& g, int d, const std::vector<double>& v) {
    return bernstein_eval(v, d == 1 ? g.theta1 : g.theta0);
}

/// Normalized threshold: D = 1[U >= a(v,z)] with U standard normal.
inline double selection_threshold(const DgpSpec& g, const std::vector<double>& v,
                                  const std::vector<double>& z) {
    if (!(g.sigma > 0.0)) throw ValidationError("sigma must be positive");
    if (g.treatment_model == TreatmentModel::LocalDeparture) {
        const double p = local_departure_index(z.at(0));
        const double h = g.v_dim == 1 ? v.at(0) : std::max(v.at(0), v.at(1));
        return (h - p) / ((0.75 - p) * g.sigma);
    }
    const double z2 = z.at(1);
    if (z2 == 0.0) throw ValidationError("random coefficient scale z2 must be nonzero");
    if (g.v_dim == 1) return (v.at(0) - 0.2 * z.at(0)) / (g.sigma * z2);
    return (0.5 * v.at(1) - (0.6 - v.at(0)) * z.at(0)) / (g.sigma * z2);
}

/// m_D(v, z) = P(D=1 | V=v, Z=z).
inline double propensity(const DgpSpec& g, const std::vector<double>& v, const std::vector<double>& z) {
    return normal_sf(selection_threshold(g, v, z));
}

/// First-axis points where the selection integrand bends sharply.
inline std::vector<double> design_breakpoints(const DgpSpec& g, std::size_t z) {
    const auto& zv = g.instruments.values.at(z);
    if (g.treatment_model == TreatmentModel::LocalDeparture) return {local_departure_index(zv.at(0))};
    if (g.v_dim == 1) return {0.2 * zv.at(0)};
    return {0.6};
}

/// Integral of f(v) over the box prod [lo_a, hi_a] (dimension g.v_dim).
template <class F>
double integrate_over(const DgpSpec& g, std::size_t z, F&& f, const std::vector<double>& lo,
                      const std::vector<double>& hi, std::vector<double> extra_breaks = {}) {
    auto br = design_breakpoints(g, z);
    br.insert(br.end(), extra_breaks.begin(), extra_breaks.end());
    if (g.v_dim == 1) {
        std::vector<double> v(1);
        return integrate([&](double a) { v[0] = a; return f(v); }, lo.at(0), hi.at(0), br);
    }
    std::vector<double> v(2);
    std::vector<double> br1;
    if (g.treatment_model == TreatmentModel::LocalDeparture) br1 = br;
    return integrate_box2(
        [&](double a, double b) {
            v[0] = a;
            v[1] = b;
            return f(v);
        },
        lo.at(0), hi.at(0), lo.at(1), hi.at(1), br, br1);
}

template <class F>
double integrate_unit(const DgpSpec& g, std::size_t z, F&& f, std::vector<double> extra_breaks = {}) {
    const std::vector<double> lo(static_cast<std::size_t>(g.v_dim), 0.0);
    const std::vector<double> hi(static_cast<std::size_t>(g.v_dim), 1.0);
    return integrate_over(g, z, std::forward<F>(f), lo, hi, std::move(extra_breaks));
}

inline std::vector<std::string> dgp_violations(const DgpSpec& g) {
    std::vector<std::string> out;
    if (g.v_dim != 1 && g.v_dim != 2) out.push_back("v_dim must be 1 or 2");
    const std::size_t want = g.v_dim == 2 ? 9 : 3;
    for (const auto* th : {&g.theta0, &g.theta1}) {
        if (th->size() != want) out.push_back("theta length does not match v_dim");
        for (double c : *th) {
            if (!(c >= 0.0 && c <= 1.0)) {
                out.push_back("theta coefficient outside [0,1]");
                break;
            }
        }
    }
    if (!(g.sigma > 0.0)) out.push_back("sigma must be positive");
    const auto& in = g.instruments;
    if (in.values.size() != in.probabilities.size()) out.push_back("instrument values and masses differ in length");
    for (std::size_t z = 0; z < in.values.size(); ++z) {
        const auto& zv = in.values[z];
        if (g.treatment_model == TreatmentModel::LocalDeparture) {
            if (zv.empty() || !(local_departure_index(zv[0]) < 0.75)) {
                out.push_back("local departure needs p(z) < 0.75");
            }
        } else if (zv.size() < 2 || zv[1] == 0.0) {
            out.push_back("random coefficient needs nonzero z2");
        }
    }
    return out;
}

/// Exact moments E[YD 1[Z=z]], E[Y(1-D) 1[Z=z]], E[D 1[Z=z]].
inline MomentSet population_moments(const DgpSpec& g) {
    MomentSet m;
    const auto& in = g.instruments;
    for (std::size_t z = 0; z < in.size(); ++z) {
        const auto& zv = in.values[z];
        const double f = in.probabilities.at(z);
        const double yd = integrate_unit(g, z, [&](const std::vector<double>& v) {
            return mtr(g, 1, v) * propensity(g, v, zv);
        });
        const double y0 = integrate_unit(g, z, [&](const std::vector<double>& v) {
            return mtr(g, 0, v) * normal_cdf(selection_threshold(g, v, zv));
        });
        const double d = integrate_unit(g, z, [&](const std::vector<double>& v) { return propensity(g, v, zv); });
        m.mass.push_back(f);
        m.yd.push_back(f * yd);
        m.y0.push_back(f * y0);
        m.d.push_back(f * d);
    }
    return m;
}

/// Target value under the true MTRs, by quadrature.
inline double true_target(const DgpSpec& g, const TargetSpec& target) {
    const MomentSet moments = population_moments(g);
    const WeightSpec w = weights_for(target, moments, g.instruments);
    double total = 0.0;
    for (std::size_t z = 0; z < g.instruments.size(); ++z) {
        const auto& zv = g.instruments.values[z];
        const double f = g.instruments.probabilities[z];
        if (f == 0.0) continue;
        total += f * integrate_unit(
                         g, z,
                         [&](const std::vector<double>& v) {
                             const WeightValues wv = w.eval(v, z);
                             const double pd = propensity(g, v, zv);
                             const double m0 = mtr(g, 0, v), m1 = mtr(g, 1, v);
                             return wv.w00 * m0 * (1 - pd) + wv.w01 * m0 * pd + wv.w10 * m1 * (1 - pd) +
                                    wv.w11 * m1 * pd;
                         },
                         w.v_discontinuities);
    }
    return total + target_offset(target, moments);
}

/// Cell averages of (m0, m1, mD, m0D, m1D) on a partition of dimension
/// at most g.v_dim; axes beyond the partition are averaged out.
inline MtrCoefficients cell_averages(const DgpSpec& g, const VPartition& partition) {
    if (partition.dim() > g.v_dim) throw ValidationError("partition dimension exceeds v_dim");
    const auto& in = g.instruments;
    MtrCoefficients c;
    c.layout = BlockLayout(partition.cell_count(), in.covariate_count(), in.size());
    c.eta2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.layout.size() - 1));
    auto put = [&](Block b, std::size_t k, std::size_t val, double x) {
        c.eta2(static_cast<Eigen::Index>(c.layout.index(b, k, val) - 1)) = x;
    };
    for (std::size_t k = 0; k < partition.cell_count(); ++k) {
        std::vector<double> lo(static_cast<std::size_t>(g.v_dim), 0.0), hi(lo.size(), 1.0);
        for (std::size_t a = 0; a < static_cast<std::size_t>(partition.dim()); ++a) {
            std::tie(lo[a], hi[a]) = partition.cell_interval(k, a);
        }
        const double vol = partition.cell_volume(k);
        const std::size_t z0 = 0;
        for (std::size_t x = 0; x < c.layout.kx(); ++x) {
            put(Block::M0, k, x, integrate_over(g, z0, [&](const std::vector<double>& v) { return mtr(g, 0, v); }, lo, hi) / vol);
            put(Block::M1, k, x, integrate_over(g, z0, [&](const std::vector<double>& v) { return mtr(g, 1, v); }, lo, hi) / vol);
        }
        for (std::size_t z = 0; z < in.size(); ++z) {
            const auto& zv = in.values[z];
            put(Block::MD, k, z,
                integrate_over(g, z, [&](const std::vector<double>& v) { return propensity(g, v, zv); }, lo, hi) / vol);
            put(Block::M0D, k, z,
                integrate_over(g, z, [&](const std::vector<double>& v) {
                    return mtr(g, 0, v) * normal_cdf(selection_threshold(g, v, zv));
                }, lo, hi) / vol);
            put(Block::M1D, k, z,
                integrate_over(g, z, [&](const std::vector<double>& v) {
                    return mtr(g, 1, v) * propensity(g, v, zv);
                }, lo, hi) / vol);
        }
    }
    return c;
}

struct Dataset {
    std::vector<int> y;
    std::vector<int> d;
    std::vector<std::size_t> z;  // index into the instrument support
    std::uint64_t seed = 0;

    std::size_t n() const { return y.size(); }

    void push(int yi, int di, std::size_t zi) {
        y.push_back(yi);
        d.push_back(di);
        z.push_back(zi);
    }
};

/// Draws n rows. Per row the variates are consumed in the fixed order
/// V (each axis), U, eps0, eps1, Z.
inline Dataset sample(const DgpSpec& g, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("sample size must be at least 1");
    RandomStream rng(seed);
    Dataset out;
    out.seed = seed;
    out.y.reserve(n);
    out.d.reserve(n);
    out.z.reserve(n);
    std::vector<double> v(static_cast<std::size_t>(g.v_dim));
    for (std::size_t i = 0; i < n; ++i) {
        for (double& a : v) a = rng.uniform();
        const double u = rng.normal();
        const double e0 = rng.uniform();
        const double e1 = rng.uniform();
        const std::size_t zi = rng.categorical(g.instruments.probabilities);
        const int d = u >= selection_threshold(g, v, g.instruments.values[zi]) ? 1 : 0;
        const int y = d ? (mtr(g, 1, v) > e1) : (mtr(g, 0, v) > e0);
        out.push(y, d, zi);
    }
    return out;
}

/// Empirical moments; mass is the sample frequency of each support point.
inline MomentSet sample_moments(const Dataset& data, std::size_t support_size) {
    if (data.n() == 0) throw ValidationError("empty dataset");
    MomentSet m;
    m.mass.assign(support_size, 0.0);
    m.yd.assign(support_size, 0.0);
    m.y0.assign(support_size, 0.0);
    m.d.assign(support_size, 0.0);
    for (std::size_t i = 0; i < data.n(); ++i) {
        const std::size_t z = data.z[i];
        if (z >= support_size) throw ValidationError("instrument index outside support");
        m.mass[z] += 1.0;
        m.yd[z] += data.y[i] * data.d[i];
        m.y0[z] += data.y[i] * (1 - data.d[i]);
        m.d[z] += data.d[i];
    }
    const double inv = 1.0 / static_cast<double>(data.n());
    for (std::size_t z = 0; z < support_size; ++z) {
        m.mass[z] *= inv;
        m.yd[z] *= inv;
        m.y0[z] *= inv;
        m.d[z] *= inv;
    }
    return m;
}

/// CSV with header y,d,z1[,z2].
inline void write_csv(std::ostream& os, const Dataset& data, const InstrumentSpace& in) {
    const std::size_t width = in.values.empty() ? 1 : in.values.front().size();
    os << "y,d";
    for (std::size_t c = 0; c < width; ++c) os << ",z" << c + 1;
    os << '\n';
    for (std::size_t i = 0; i < data.n(); ++i) {
        os << data.y[i] << ',' << data.d[i];
        for (double zc : in.values.at(data.z[i])) os << ',' << zc;
        os << '\n';
    }
}

inline Dataset read_csv(std::istream& is, const InstrumentSpace& in) {
    Dataset data;
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("missing CSV header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> fields;
        while (std::getline(ss, cell, ',')) fields.push_back(std::stod(cell));
        if (fields.size() < 3) throw ValidationError("CSV row too short");
        std::vector<double> zv(fields.begin() + 2, fields.end());
        data.push(static_cast<int>(fields[0]), static_cast<int>(fields[1]), in.index_of(zv));
    }
    return data;
}

}  // namespace prte

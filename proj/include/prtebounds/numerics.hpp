#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace prte {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Standard normal CDF. erfc keeps full relative accuracy in both tails.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Upper tail 1 - Phi(x), evaluated without cancellation.
inline double normal_sf(double x) {
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: probability must lie in (0,1)");
    }
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
    double absolute_tolerance = 1e-10;  // per breakpoint-delimited piece
    int max_panels = 1 << 12;
};

/// Composite 30-point Gauss-Legendre on [a,b] with n equal panels.
template <class F>
double gauss_legendre_panels(F& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double lo = a + i * h;
        s += boost::math::quadrature::gauss<double, 30>::integrate(f, lo, lo + h);
    }
    return s;
}

/// Integral over [a,b] split at the interior breakpoints. On each piece the
/// panel count doubles until successive estimates agree to the tolerance.
template <class F>
double integrate(F&& f, double a, double b, const std::vector<double>& breakpoints = {},
                 const QuadratureOptions& opts = {}) {
    if (!(b > a)) return 0.0;
    std::vector<double> pts{a};
    for (double p : breakpoints) {
        if (p > a && p < b) pts.push_back(p);
    }
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(), [](double x, double y) { return y - x < 1e-14; }),
              pts.end());
    pts.back() = b;

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        int n = 1;
        double prev = gauss_legendre_panels(f, pts[i], pts[i + 1], n);
        while (true) {
            n *= 2;
            const double cur = gauss_legendre_panels(f, pts[i], pts[i + 1], n);
            if (std::abs(cur - prev) <= opts.absolute_tolerance) {
                prev = cur;
                break;
            }
            if (n >= opts.max_panels) {
                throw QuadratureError("quadrature did not converge on [" + std::to_string(pts[i]) + ", " +
                                      std::to_string(pts[i + 1]) + "]");
            }
            prev = cur;
        }
        total += prev;
    }
    if (!std::isfinite(total)) throw QuadratureError("non-finite integral");
    return total;
}

/// Iterated integral over [a0,b0]x[a1,b1]. The inner integral is also split
/// at v2 = v1 so integrands with a kink on the diagonal stay smooth per piece.
template <class F>
double integrate_box2(F&& f, double a0, double b0, double a1, double b1,
                      const std::vector<double>& breaks0 = {}, const std::vector<double>& breaks1 = {},
                      const QuadratureOptions& opts = {}) {
    QuadratureOptions inner_opts = opts;
    inner_opts.absolute_tolerance = opts.absolute_tolerance * 0.01;
    auto inner = [&](double v1) {
        std::vector<double> br = breaks1;
        br.push_back(v1);
        return integrate([&](double v2) { return f(v1, v2); }, a1, b1, br, inner_opts);
    };
    std::vector<double> br0 = breaks0;
    br0.push_back(a1);
    br0.push_back(b1);
    return integrate(inner, a0, b0, br0, opts);
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Deterministic variate source on top of mt19937_64. Only the engine output
/// sequence is standardized, so the transforms are done here rather than via
/// <random> distributions.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0,1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * uniform());
    }

    /// Index drawn from a discrete law given by its probabilities.
    std::size_t categorical(const std::vector<double>& probs) {
        const double u = uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return probs.size() - 1;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace prte

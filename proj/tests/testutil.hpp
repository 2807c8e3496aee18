#pragma once

// Shared helpers for the test suites: a long-double reference for the
// incomplete gamma functions built on adaptive Simpson quadrature of the
// defining integrals, kept deliberately separate from the library code paths.

#include <cmath>
#include <complex>
#include <functional>

namespace testutil {

inline long double adaptive_simpson(const std::function<long double(long double)>& f,
                                    long double a, long double b, long double tol,
                                    int depth = 44) {
    struct Rec {
        const std::function<long double(long double)>& f;
        long double operator()(long double a, long double fa, long double b, long double fb,
                               long double m, long double fm, long double whole,
                               long double tol, int depth) const {
            long double lm = (a + m) / 2, rm = (m + b) / 2;
            long double flm = f(lm), frm = f(rm);
            long double left = (m - a) / 6 * (fa + 4 * flm + fm);
            long double right = (b - m) / 6 * (fm + 4 * frm + fb);
            long double delta = left + right - whole;
            bool at_noise = std::fabs(delta) <= 3e-16L * (std::fabs(left) + std::fabs(right));
            if (depth <= 0 || at_noise ||
                (depth <= 32 && std::fabs(delta) <= 15 * tol))
                return left + right + delta / 15;
            return (*this)(a, fa, m, fm, lm, flm, left, tol / 2, depth - 1) +
                   (*this)(m, fm, b, fb, rm, frm, right, tol / 2, depth - 1);
        }
    } rec{f};
    long double m = (a + b) / 2;
    long double fa = f(a), fb = f(b), fm = f(m);
    long double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return rec(a, fa, b, fb, m, fm, whole, tol, depth);
}

// gamma(s,x) via the substitution t = u^(1/s), which removes the endpoint
// singularity for s < 1.
inline long double lower_igamma_ref(long double s, long double x) {
    if (x <= 0) return 0.0L;
    long double xc = std::min(x, s + 200.0L);  // tail beyond is < 1e-50 relative
    if (s < 1) {
        auto g = [&](long double u) -> long double {
            if (u <= 0) return 1.0L;
            return std::exp(-std::pow(u, 1.0L / s));
        };
        long double xs = std::pow(xc, s);
        return adaptive_simpson(g, 0.0L, xs, 1e-17L * xs) / s;
    }
    auto g = [&](long double t) -> long double {
        if (t <= 0) return 0.0L;
        return std::exp((s - 1.0L) * std::log(t) - t);
    };
    long double tpeak = std::min(std::max(s - 1.0L, 1e-10L), xc);
    long double scale = std::exp((s - 1.0L) * std::log(tpeak) - tpeak);
    return adaptive_simpson(g, 0.0L, xc, 1e-17L * scale * std::max(1.0L, xc));
}

inline long double upper_igamma_ref(long double s, long double x) {
    long double T = x + 500.0L + 10.0L * s;
    auto g = [&](long double t) -> long double {
        return std::exp((s - 1.0L) * std::log(t) - t);
    };
    if (x == 0) return std::tgammal(s);
    // magnitude of the integrand peak over [x, T], for a relative tolerance
    long double tpeak = std::max(x, s - 1.0L);
    long double scale = std::exp((s - 1.0L) * std::log(tpeak > 0 ? tpeak : x) - tpeak);
    return adaptive_simpson(g, x, T, 1e-17L * scale * std::max(1.0L, x));
}

inline long double upper_pochhammer_ref(long double lambda, unsigned n, long double x) {
    return upper_igamma_ref(lambda + n, x) / std::tgammal(lambda);
}

inline long double lower_pochhammer_ref(long double lambda, unsigned n, long double x) {
    return lower_igamma_ref(lambda + n, x) / std::tgammal(lambda);
}

inline double rel_err(double got, double want) {
    double scale = std::max(std::fabs(want), 1e-300);
    return std::fabs(got - want) / scale;
}

inline double rel_err(std::complex<double> got, std::complex<double> want) {
    double scale = std::max(std::abs(want), 1e-300);
    return std::abs(got - want) / scale;
}

}  // namespace testutil

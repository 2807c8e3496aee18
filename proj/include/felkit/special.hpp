#pragma once

// Gamma-function primitives: log-gamma, regularized incomplete gamma P/Q
// (series / continued-fraction split), rising factorials, and a log-space
// carrier for ratios of gamma values.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace felkit {

inline double log_gamma(double s) {
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::domain_error("log_gamma: argument must be positive, got " + std::to_string(s));
    return std::lgamma(s);
}

inline double gamma_fn(double s) {
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::domain_error("gamma_fn: argument must be positive, got " + std::to_string(s));
    return std::tgamma(s);
}

// sign * exp(log_magnitude); keeps gamma-ratio products representable far
// beyond double range.
struct GammaRatio {
    double log_magnitude = 0.0;
    double sign = 1.0;  // +1, -1, or 0 for an exact zero

    double value() const { return sign == 0.0 ? 0.0 : sign * std::exp(log_magnitude); }

    GammaRatio& operator*=(const GammaRatio& o) {
        log_magnitude += o.log_magnitude;
        sign *= o.sign;
        return *this;
    }
};

namespace detail {

// Natural logs of the regularized incomplete gamma functions
// P(s,x) = gamma(s,x)/Gamma(s) and Q(s,x) = Gamma(s,x)/Gamma(s).
struct RegularizedGammaLog {
    double log_p;
    double log_q;
};

inline RegularizedGammaLog regularized_gamma_log(double s, double x) {
    if (!(s > 0.0) || !std::isfinite(s))
        throw std::domain_error("incomplete gamma: s must be positive, got " + std::to_string(s));
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::domain_error("incomplete gamma: x must be nonnegative, got " + std::to_string(x));

    constexpr double minus_inf = -std::numeric_limits<double>::infinity();
    if (x == 0.0) return {minus_inf, 0.0};

    if (x < s + 1.0) {
        // P via the ascending series x^s e^-x / Gamma(s+1) * sum_{n>=0} x^n / prod(s+1..s+n)
        double sum = 1.0, term = 1.0;
        for (int n = 1; n < 1000; ++n) {
            term *= x / (s + n);
            sum += term;
            if (term < sum * 1e-17) break;
        }
        double log_p = s * std::log(x) - x - std::lgamma(s + 1.0) + std::log(sum);
        if (log_p > 0.0) log_p = 0.0;
        double log_q = log_p == 0.0 ? minus_inf : std::log1p(-std::exp(log_p));
        return {log_p, log_q};
    }

    // Q via the Lentz continued fraction for Gamma(s,x)
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - s, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 1000; ++i) {
        double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-17) break;
    }
    double log_q = -x + s * std::log(x) - std::lgamma(s) + std::log(h);
    if (log_q > 0.0) log_q = 0.0;
    double log_p = log_q == 0.0 ? minus_inf : std::log1p(-std::exp(log_q));
    return {log_p, log_q};
}

}  // namespace detail

inline double regularized_gamma_p(double s, double x) {
    return std::exp(detail::regularized_gamma_log(s, x).log_p);
}

inline double regularized_gamma_q(double s, double x) {
    return std::exp(detail::regularized_gamma_log(s, x).log_q);
}

inline double upper_incomplete_gamma(double s, double x) {
    double q = regularized_gamma_q(s, x);
    return s < 170.0 ? q * std::tgamma(s)
                     : std::exp(detail::regularized_gamma_log(s, x).log_q + std::lgamma(s));
}

inline double lower_incomplete_gamma(double s, double x) {
    double p = regularized_gamma_p(s, x);
    return s < 170.0 ? p * std::tgamma(s)
                     : std::exp(detail::regularized_gamma_log(s, x).log_p + std::lgamma(s));
}

// (lambda)_n = lambda (lambda+1) ... (lambda+n-1), (lambda)_0 = 1
inline double pochhammer(double lambda, unsigned n) {
    double p = 1.0;
    for (unsigned j = 0; j < n; ++j) p *= lambda + j;
    return p;
}

// [lambda; x]_n = Gamma(lambda+n, x) / Gamma(lambda), as a log-space ratio
inline GammaRatio upper_pochhammer_ratio(double lambda, unsigned n, double x) {
    if (!(lambda > 0.0))
        throw std::domain_error("upper_pochhammer_ratio: lambda must be positive");
    double log_q = detail::regularized_gamma_log(lambda + n, x).log_q;
    if (std::isinf(log_q)) return {0.0, 0.0};
    return {log_q + std::lgamma(lambda + n) - std::lgamma(lambda), 1.0};
}

// (lambda; x)_n = gamma(lambda+n, x) / Gamma(lambda)
inline GammaRatio lower_pochhammer_ratio(double lambda, unsigned n, double x) {
    if (!(lambda > 0.0))
        throw std::domain_error("lower_pochhammer_ratio: lambda must be positive");
    double log_p = detail::regularized_gamma_log(lambda + n, x).log_p;
    if (std::isinf(log_p)) return {0.0, 0.0};
    return {log_p + std::lgamma(lambda + n) - std::lgamma(lambda), 1.0};
}

}  // namespace felkit

#pragma once

// Series evaluators built on incomplete gamma symbols: incomplete Pochhammer
// numbers, incomplete Mittag-Leffler functions (upper and lower), their
// Prabhakar-type generalization, incomplete binomial expansions, and
// incomplete Fox-Wright sums. Every evaluator returns a SeriesValue carrying
// a truncation-error estimate and a convergence flag.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "felkit/special.hpp"

namespace felkit {

struct TruncationControl {
    double rel_tol = 1e-12;
    int max_terms = 500;
    int consecutive_small = 3;

    TruncationControl tightened() const {
        return {rel_tol / 10.0, max_terms, consecutive_small};
    }
};

struct SeriesValue {
    std::complex<double> value{0.0, 0.0};
    double err_estimate = 0.0;  // magnitude of the first omitted term
    int terms_used = 0;
    bool converged = false;
};

namespace detail {

// Sums term(0) + term(1) + ... until `consecutive_small` successive terms fall
// below rel_tol * |partial sum| and the next (omitted) term does too. The
// omitted term's magnitude is the error estimate.
template <typename TermFn>
SeriesValue sum_series(TermFn&& term, const TruncationControl& ctl) {
    std::complex<double> sum{0.0, 0.0};
    int streak = 0;
    for (int k = 0; k < ctl.max_terms; ++k) {
        std::complex<double> t = term(k);
        double mag = std::abs(t);
        if (!std::isfinite(mag))
            return {sum, std::numeric_limits<double>::infinity(), k, false};
        double floor_ = std::max(std::abs(sum), 1e-300);
        if (streak >= ctl.consecutive_small && mag <= ctl.rel_tol * floor_)
            return {sum, mag, k, true};
        sum += t;
        if (mag <= ctl.rel_tol * std::max(std::abs(sum), 1e-300))
            ++streak;
        else
            streak = 0;
    }
    double tail = std::abs(term(ctl.max_terms));
    return {sum, std::isfinite(tail) ? tail : std::numeric_limits<double>::infinity(),
            ctl.max_terms, false};
}

inline std::complex<double> polar_term(double log_mag, double phase) {
    double m = std::exp(log_mag);
    return {m * std::cos(phase), m * std::sin(phase)};
}

}  // namespace detail

inline double incomplete_pochhammer_upper(double lambda, unsigned n, double x) {
    return upper_pochhammer_ratio(lambda, n, x).value();
}

inline double incomplete_pochhammer_lower(double lambda, unsigned n, double x) {
    return lower_pochhammer_ratio(lambda, n, x).value();
}

namespace detail {

enum class Cut { upper, lower };

// sum_k sym_k(delta; x) z^k / (k! Gamma(a k + b)) with sym the upper or lower
// incomplete Pochhammer symbol
inline SeriesValue ml_series(Cut cut, double a, double b, double delta, double x,
                             std::complex<double> z, const TruncationControl& ctl) {
    if (!(a > 0.0) || !(b > 0.0) || !(delta > 0.0))
        throw std::domain_error("incomplete_ml: a, b, delta must be positive");
    if (!(x >= 0.0)) throw std::domain_error("incomplete_ml: x must be nonnegative");
    const double zmag = std::abs(z);
    const double zarg = zmag > 0.0 ? std::arg(z) : 0.0;
    const double lg_delta = std::lgamma(delta);
    auto term = [&](int k) -> std::complex<double> {
        if (k > 0 && zmag == 0.0) return {0.0, 0.0};
        auto rg = regularized_gamma_log(delta + k, x);
        double log_sym = (cut == Cut::upper ? rg.log_q : rg.log_p) +
                         std::lgamma(delta + k) - lg_delta;
        double log_mag = log_sym - std::lgamma(a * k + b) - std::lgamma(k + 1.0) +
                         (k > 0 ? k * std::log(zmag) : 0.0);
        return polar_term(log_mag, k * zarg);
    };
    return sum_series(term, ctl);
}

}  // namespace detail

inline SeriesValue incomplete_ml_upper(double a, double b, double delta, double x,
                                       std::complex<double> z,
                                       const TruncationControl& ctl = {}) {
    return detail::ml_series(detail::Cut::upper, a, b, delta, x, z, ctl);
}

inline SeriesValue incomplete_ml_lower(double a, double b, double delta, double x,
                                       std::complex<double> z,
                                       const TruncationControl& ctl = {}) {
    return detail::ml_series(detail::Cut::lower, a, b, delta, x, z, ctl);
}

// Prabhakar-type sum with weight Gamma(rho n + beta) and upper symbol of
// parameter gamma_lambda. gamma_lambda = 0 denotes the empty symbol whose only
// surviving term is n = 0, i.e. the value is exactly 1/Gamma(beta).
inline SeriesValue incomplete_prabhakar_ml(double gamma_lambda, double rho, double beta,
                                           double x, std::complex<double> z,
                                           const TruncationControl& ctl = {}) {
    if (!(gamma_lambda >= 0.0))
        throw std::domain_error("incomplete_prabhakar_ml: gamma_lambda must be >= 0");
    if (gamma_lambda == 0.0) {
        if (!(beta > 0.0)) throw std::domain_error("incomplete_prabhakar_ml: beta must be positive");
        return {{1.0 / std::tgamma(beta), 0.0}, 0.0, 1, true};
    }
    return detail::ml_series(detail::Cut::upper, rho, beta, gamma_lambda, x, z, ctl);
}

// Complete Prabhakar sum evaluated by term-ratio recurrence; reference route
// for the x -> 0 reduction of the incomplete evaluator.
inline SeriesValue complete_prabhakar_ml(double gamma, double rho, double beta,
                                         std::complex<double> z,
                                         const TruncationControl& ctl = {}) {
    if (!(gamma >= 0.0) || !(rho > 0.0) || !(beta > 0.0))
        throw std::domain_error("complete_prabhakar_ml: bad parameters");
    if (gamma == 0.0) return {{1.0 / std::tgamma(beta), 0.0}, 0.0, 1, true};
    std::vector<std::complex<double>> memo;
    memo.push_back(std::complex<double>(std::exp(-std::lgamma(beta)), 0.0));
    auto term = [&](int k) -> std::complex<double> {
        while ((int)memo.size() <= k) {
            int n = (int)memo.size() - 1;
            double lg_ratio = std::lgamma(rho * n + beta) - std::lgamma(rho * (n + 1) + beta);
            memo.push_back(memo.back() * z * ((gamma + n) / (n + 1.0)) * std::exp(lg_ratio));
        }
        return memo[k];
    };
    return detail::sum_series(term, ctl);
}

// (1 - w)^(-[gamma; x]) = sum_n [gamma; x]_n w^n / n!, valid on |w| < 1.
// gamma = 0 is the empty symbol (value 1). Outside the disc the series is
// flagged non-convergent.
inline SeriesValue incomplete_binomial(double gamma, double x, std::complex<double> w,
                                       const TruncationControl& ctl = {}) {
    if (!(gamma >= 0.0)) throw std::domain_error("incomplete_binomial: gamma must be >= 0");
    if (gamma == 0.0) return {{1.0, 0.0}, 0.0, 1, true};
    const double wmag = std::abs(w);
    if (wmag >= 1.0) {
        return {{std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN()},
                std::numeric_limits<double>::infinity(), 0, false};
    }
    const double warg = wmag > 0.0 ? std::arg(w) : 0.0;
    const double lg_gamma = std::lgamma(gamma);
    auto term = [&](int n) -> std::complex<double> {
        if (n > 0 && wmag == 0.0) return {0.0, 0.0};
        auto rg = detail::regularized_gamma_log(gamma + n, x);
        double log_mag = rg.log_q + std::lgamma(gamma + n) - lg_gamma -
                         std::lgamma(n + 1.0) + (n > 0 ? n * std::log(wmag) : 0.0);
        return detail::polar_term(log_mag, n * warg);
    };
    return detail::sum_series(term, ctl);
}

struct WrightPair {
    double a;      // offset
    double alpha;  // slope multiplying the summation index
};

struct WrightSpec {
    std::vector<WrightPair> upper;  // numerator gamma factors Gamma(a_i + alpha_i k)
    std::vector<WrightPair> lower;  // denominator gamma factors Gamma(b_j + beta_j k)
    double cutoff = 0.0;            // incomplete cutoff on the first upper factor
    double lower_cutoff = -1.0;     // optional cutoff on the first lower factor (<0: complete)
    enum class Variant { upper, lower } variant = Variant::upper;

    // Stated sufficient condition for the complete series to define an entire
    // function: sum(beta_j) - sum(alpha_i) > 1. Diagnostic only, never enforced.
    double entirety_margin() const {
        double m = 0.0;
        for (const auto& p : lower) m += p.alpha;
        for (const auto& p : upper) m -= p.alpha;
        return m;
    }
    bool declared_entire() const { return entirety_margin() > 1.0; }
};

// sum_k [prod_i Gamma*(a_i + alpha_i k)] / [prod_j Gamma*(b_j + beta_j k)] z^k / k!
// where the first factor of each product may be an incomplete gamma per spec.
inline SeriesValue incomplete_wright(const WrightSpec& spec, std::complex<double> z,
                                     const TruncationControl& ctl = {}) {
    if (spec.upper.empty() && spec.lower.empty())
        throw std::domain_error("incomplete_wright: empty parameter lists");
    if (!(spec.cutoff >= 0.0))
        throw std::domain_error("incomplete_wright: cutoff must be nonnegative");
    const double zmag = std::abs(z);
    const double zarg = zmag > 0.0 ? std::arg(z) : 0.0;
    const bool use_lower = spec.variant == WrightSpec::Variant::lower;
    auto term = [&](int k) -> std::complex<double> {
        if (k > 0 && zmag == 0.0) return {0.0, 0.0};
        double log_mag = -std::lgamma(k + 1.0) + (k > 0 ? k * std::log(zmag) : 0.0);
        for (size_t i = 0; i < spec.upper.size(); ++i) {
            double arg = spec.upper[i].a + spec.upper[i].alpha * k;
            if (!(arg > 0.0))
                throw std::domain_error("incomplete_wright: nonpositive gamma argument " +
                                        std::to_string(arg) + " in numerator at k=" +
                                        std::to_string(k));
            if (i == 0 && (spec.cutoff > 0.0 || use_lower)) {
                auto rg = detail::regularized_gamma_log(arg, spec.cutoff);
                log_mag += (use_lower ? rg.log_p : rg.log_q) + std::lgamma(arg);
            } else {
                log_mag += std::lgamma(arg);
            }
        }
        for (size_t j = 0; j < spec.lower.size(); ++j) {
            double arg = spec.lower[j].a + spec.lower[j].alpha * k;
            if (!(arg > 0.0))
                throw std::domain_error("incomplete_wright: nonpositive gamma argument " +
                                        std::to_string(arg) + " in denominator at k=" +
                                        std::to_string(k));
            double piece;
            if (j == 0 && spec.lower_cutoff >= 0.0) {
                auto rg = detail::regularized_gamma_log(arg, spec.lower_cutoff);
                piece = (use_lower ? rg.log_p : rg.log_q) + std::lgamma(arg);
                if (std::isinf(piece) && piece < 0.0)
                    throw std::runtime_error("incomplete_wright: zero denominator term at k=" +
                                             std::to_string(k));
            } else {
                piece = std::lgamma(arg);
            }
            log_mag -= piece;
        }
        return detail::polar_term(log_mag, k * zarg);
    };
    return detail::sum_series(term, ctl);
}

// (1/Gamma(c k)) * Wright sum with numerator pair (c k, 1; cutoff) over
// denominator pair (beta, rho); the cutoff argument is taken as given.
inline SeriesValue wright_kernel_series(double c, double k, double cutoff, double rho,
                                        double beta, std::complex<double> z,
                                        const TruncationControl& ctl = {}) {
    if (!(c * k > 0.0))
        throw std::domain_error("wright_kernel_series: c*k must be positive");
    WrightSpec spec;
    spec.upper = {{c * k, 1.0}};
    spec.lower = {{beta, rho}};
    spec.cutoff = cutoff;
    SeriesValue sv = incomplete_wright(spec, z, ctl);
    double norm = std::exp(-std::lgamma(c * k));
    sv.value *= norm;
    sv.err_estimate *= norm;
    return sv;
}

// Kernel-power sum in Wright form: the symbol of parameter c*k carries the
// scaled cutoff x*k.
inline SeriesValue wright_form_of_kernel(double c, double k, double x, double rho,
                                         double beta, std::complex<double> z,
                                         const TruncationControl& ctl = {}) {
    return wright_kernel_series(c, k, x * k, rho, beta, z, ctl);
}

}  // namespace felkit

#pragma once

// Forward eigenvalues of the jump problem and the asymptotic quantities that
// can be read off a spectrum (gamma sequence, a, b, [q1] + h1, a2).

#include <algorithm>
#include <cmath>
#include <vector>

#include "halfinv/charfn.hpp"
#include "halfinv/core.hpp"
#include "halfinv/entire.hpp"
#include "halfinv/numerics.hpp"

namespace halfinv {

/// Eigenvalues mu_n = lambda_n^2 in increasing order. `shift` records a
/// constant already added to every mu_n (0 when untouched).
struct Spectrum {
    std::vector<double> mu;
    double shift = 0.0;

    std::size_t size() const noexcept { return mu.size(); }
    /// Signed square root: negative values stand for i|lambda|.
    double lambda(std::size_t n) const { return signed_sqrt(mu.at(n)); }
    std::vector<double> lambdas() const {
        std::vector<double> out(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) out[i] = signed_sqrt(mu[i]);
        return out;
    }
    static Spectrum from_lambdas(const std::vector<double>& lambdas, double shift = 0.0) {
        Spectrum s{{}, shift};
        for (double l : lambdas) s.mu.push_back(signed_square(l));
        return s;
    }
    bool contains_zero(double tol = 1e-10) const {
        return std::any_of(mu.begin(), mu.end(), [&](double m) { return std::abs(m) <= tol; });
    }
    void validate(bool require_nonzero = false) const {
        for (std::size_t i = 0; i < mu.size(); ++i) {
            if (!std::isfinite(mu[i])) throw InvalidArgument("Spectrum: non-finite eigenvalue");
            if (i > 0 && !(mu[i] > mu[i - 1])) throw InvalidArgument("Spectrum: eigenvalues must be strictly increasing");
        }
        if (require_nonzero && contains_zero()) throw InvalidArgument("Spectrum: zero eigenvalue (shift first)");
    }
    /// mu_n -> mu_n + c.
    Spectrum shifted(double c) const {
        Spectrum s{mu, shift + c};
        for (double& m : s.mu) m += c;
        return s;
    }
};

/// Nonnegative zeros of the q = 0, h = 0 characteristic function (lambda form),
/// lambda_0 = 0 first. At least `count` entries.
inline std::vector<double> reference_zeros(const JumpParams& j, std::size_t count) {
    if (j.at_midpoint()) {
        std::vector<double> out(count);
        for (std::size_t n = 0; n < count; ++n) out[n] = M_PI * double(n);
        return out;
    }
    return sine_combination_zeros(j.b2() / j.b1(), 1.0 - 2.0 * j.d, count, true);
}

namespace detail {

inline double potential_min(const PotentialHalf& q) { return *std::min_element(q.values().begin(), q.values().end()); }
inline double potential_max_abs(const PotentialHalf& q) {
    double m = 0.0;
    for (double v : q.values()) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace detail

/// Lower bound for the spectrum of the full problem from its quadratic form.
inline double spectrum_lower_bound(const ProblemSpec& p) {
    const double min_q = std::min(detail::potential_min(p.q1), detail::potential_min(p.q2));
    const double neg = std::max(0.0, -p.boundary.h1) + std::max(0.0, -p.boundary.h2) +
                       std::max(0.0, -p.jump.a1 * p.jump.a2);
    return eigenvalue_lower_bound(min_q, neg, std::min(p.jump.d, kHalf));
}

/// First `count` eigenvalues of the problem, numbered like the zeros of the
/// q = 0 characteristic function.
inline Spectrum find_eigenvalues(const ProblemSpec& p, std::size_t count, const PropagateOptions& opt = {},
                                 const ZeroSearchOptions& zopt = {}) {
    if (count < 1) throw InvalidArgument("find_eigenvalues: count must be >= 1");
    p.validate(false);
    auto phi = [&](double mu) { return characteristic_mu<double>(p, mu, opt); };
    double mu_low = spectrum_lower_bound(p);
    while (phi(mu_low) <= 0.0) mu_low = 2.0 * mu_low - 10.0;
    const double max_q = std::max(detail::potential_max_abs(p.q1), detail::potential_max_abs(p.q2));
    const double extra = std::sqrt(std::abs(mu_low) + max_q) + 2.0;
    const auto ref = reference_zeros(p.jump, count + static_cast<std::size_t>(2.0 * extra / M_PI) + 6);
    return Spectrum{find_zeros_mu(phi, count, ref, mu_low, extra, zopt), 0.0};
}

/// gamma_n = (lambda_n - n pi) n pi.
inline std::vector<double> gamma_sequence(const Spectrum& s) {
    std::vector<double> g(s.size());
    // (mu - (n pi)^2) n pi / (lambda + n pi) avoids cancelling lambda - n pi.
    const long double pi = 3.141592653589793238462643383279502884L;
    for (std::size_t n = 0; n < s.size(); ++n) {
        const long double npi = pi * static_cast<long double>(n);
        if (n == 0 || s.mu[n] <= 0.0) {
            g[n] = static_cast<double>((static_cast<long double>(s.lambda(n)) - npi) * npi);
        } else {
            const long double m = s.mu[n];
            g[n] = static_cast<double>((m - npi * npi) * npi / (std::sqrt(m) + npi));
        }
    }
    return g;
}

struct AbEstimate {
    double a = 0.0;
    double b = 0.0;
    double spread = 0.0;  ///< disagreement between linear and quadratic tail fits
    bool converged = true;
};

namespace detail {

/// Intercept of a polynomial fit in 1/k of the given degree.
inline double tail_intercept(const std::vector<double>& ks, const std::vector<double>& vs, int degree) {
    Eigen::MatrixXd a(ks.size(), degree + 1);
    Eigen::VectorXd y(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
        double p = 1.0;
        for (int c = 0; c <= degree; ++c) {
            a(i, c) = p;
            p /= ks[i];
        }
        y(i) = vs[i];
    }
    return least_squares(a, y)(0);
}

}  // namespace detail

/// a = lim (gamma_2k - gamma_2k+1)/2, b = lim (gamma_2k + gamma_2k+1)/2, from
/// polynomial fits in 1/k over the last third of the pairs.
inline AbEstimate extract_ab(const Spectrum& s) {
    if (s.size() < 40) throw InvalidArgument("extract_ab: need at least 40 eigenvalues");
    const auto g = gamma_sequence(s);
    const std::size_t pairs = (s.size() - 2) / 2;  // k = 1 .. pairs
    const std::size_t first = pairs - pairs / 3 + 1;
    std::vector<double> ks, as, bs;
    for (std::size_t k = first; k <= pairs; ++k) {
        ks.push_back(double(k));
        as.push_back(0.5 * (g[2 * k] - g[2 * k + 1]));
        bs.push_back(0.5 * (g[2 * k] + g[2 * k + 1]));
    }
    AbEstimate e;
    e.a = detail::tail_intercept(ks, as, 2);
    e.b = detail::tail_intercept(ks, bs, 2);
    e.spread = std::max(std::abs(e.a - detail::tail_intercept(ks, as, 1)),
                        std::abs(e.b - detail::tail_intercept(ks, bs, 1)));
    e.converged = e.spread <= 0.1 * std::max({std::abs(e.a), std::abs(e.b), 1.0});
    return e;
}

struct MeanAndA2 {
    double mean_q1_plus_h1 = 0.0;  ///< [q1] + h1
    double a2 = 0.0;
};

/// Solves the linear relations between (a, b) and ([q1] + h1, a2).
inline MeanAndA2 recover_mean_and_a2(double a, double b, double a1, double h2, double mean_q2) {
    if (!(a1 > 0.0)) throw InvalidArgument("recover_mean_and_a2: a1 must be > 0");
    const double w2 = h2 + mean_q2;
    const double s = a1 + 1.0 / a1;
    const double w1 = -(s * (a - b) + 2.0 * w2 / a1) / (2.0 * a1);
    return {w1, (b - w1 - w2) * s};
}

/// a and b implied by known parameters (d = 1/2 case).
inline std::pair<double, double> ab_from_parameters(double a1, double a2, double w1, double w2) {
    const double s = a1 + 1.0 / a1;
    return {(a2 + (a1 - 1.0 / a1) * (w2 - w1)) / s, a2 / s + w1 + w2};
}

}  // namespace halfinv

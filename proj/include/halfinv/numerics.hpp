#pragma once

// Shared numeric utilities: bracketed zero search for even entire functions
// written in mu = lambda^2, Neville extrapolation, small least squares, and a
// deterministic parallel loop.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <thread>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>
#include <Eigen/Dense>

#include "halfinv/entire.hpp"
#include "halfinv/errors.hpp"

namespace halfinv {

/// Worker count: HALFINV_THREADS caps it, default hardware concurrency.
inline unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("HALFINV_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

/// Calls body(i) for i in [0, n). Iterations must be independent; results are
/// identical for any worker count.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct Extrapolated {
    double value = 0.0;
    double residual = 0.0;  ///< |full extrapolant - extrapolant without the first point|
};

/// Polynomial (Neville) extrapolation of values v(x_k) to x = 0.
inline Extrapolated richardson(std::vector<double> xs, std::vector<double> vs) {
    if (xs.size() != vs.size() || xs.empty()) throw InvalidArgument("richardson: size mismatch");
    auto neville = [](const std::vector<double>& x, std::vector<double> p) {
        const std::size_t n = x.size();
        for (std::size_t m = 1; m < n; ++m) {
            for (std::size_t i = 0; i + m < n; ++i) {
                p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
            }
        }
        return p[0];
    };
    const double full = neville(xs, vs);
    double reduced = vs.back();
    if (xs.size() > 1) {
        reduced = neville(std::vector<double>(xs.begin() + 1, xs.end()),
                          std::vector<double>(vs.begin() + 1, vs.end()));
    }
    return {full, std::abs(full - reduced)};
}

/// Least squares solution of A c = y.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
    return a.colPivHouseholderQr().solve(y);
}

/// Lower bound on eigenvalues for a Schroedinger operator whose quadratic form
/// carries point terms with total negative weight `negative_weight`, minimum
/// potential `min_q`, and shortest segment `min_segment`.
inline double eigenvalue_lower_bound(double min_q, double negative_weight, double min_segment) {
    if (negative_weight <= 0.0) return min_q - 1.0;
    const double eps = std::min(min_segment, 0.5 / negative_weight);
    return min_q - negative_weight * (1.0 / eps + 2.0 / min_segment) - 1.0;
}

struct ZeroSearchOptions {
    /// Sweep step as a fraction of the smallest reference-zero gap.
    double sweep_fraction = 1.0 / 8.0;
    /// Sweep refinements (step halving) before a missed-root error.
    int max_refinements = 3;
    /// Bracket width target relative to max(1, |lambda|).
    double rel_tol = 1e-12;
};

/// First `count` zeros (in increasing mu) of a real function of mu whose
/// leading behaviour has the nonnegative lambda-zeros `reference` (ascending,
/// long enough to cover count + a margin). Zeros below mu = 0 are searched down
/// to mu_low. The sweep is audited against the reference count (Rouche).
inline std::vector<double> find_zeros_mu(const std::function<double(double)>& f, std::size_t count,
                                         const std::vector<double>& reference, double mu_low,
                                         double extra_lambda = 0.0, const ZeroSearchOptions& opt = {}) {
    if (count == 0) return {};
    // Audit boundary beyond the requested zeros, pushed out by extra_lambda so
    // that low-lying perturbations cannot cross it.
    std::size_t k_end = count + 1;
    while (k_end + 1 < reference.size() && reference[k_end] < reference[count] + extra_lambda) ++k_end;
    if (k_end + 1 > reference.size()) throw InvalidArgument("find_zeros_mu: reference list too short");
    const double lambda_end = 0.5 * (reference[k_end - 1] + reference[k_end]);
    double min_gap = lambda_end;
    for (std::size_t i = 0; i + 1 <= k_end; ++i) min_gap = std::min(min_gap, reference[i + 1] - reference[i]);
    const double t_low = mu_low < 0.0 ? -std::sqrt(-mu_low) : 0.0;
    const double t_start = std::min(t_low, -1e-3);

    auto g = [&](double t) { return f(signed_square(t)); };
    for (int attempt = 0; attempt <= opt.max_refinements; ++attempt) {
        const double step = min_gap * opt.sweep_fraction / std::pow(2.0, attempt);
        const auto n = static_cast<std::size_t>(std::ceil((lambda_end - t_start) / step));
        std::vector<double> ts(n + 1), vs(n + 1);
        for (std::size_t i = 0; i <= n; ++i) ts[i] = t_start + (lambda_end - t_start) * double(i) / double(n);
        parallel_for(n + 1, [&](std::size_t i) { vs[i] = g(ts[i]); });
        std::vector<std::pair<double, double>> brackets;
        std::vector<double> exact;
        for (std::size_t i = 0; i < n; ++i) {
            if (vs[i] == 0.0) {
                exact.push_back(ts[i]);
            } else if ((vs[i] < 0.0) != (vs[i + 1] < 0.0) && vs[i + 1] != 0.0) {
                brackets.emplace_back(ts[i], ts[i + 1]);
            }
        }
        if (brackets.size() + exact.size() != k_end) {
            if (attempt < opt.max_refinements) continue;
            std::ostringstream msg;
            msg << "missed-root audit: found " << brackets.size() + exact.size() << " sign changes below lambda = "
                << lambda_end << ", reference count " << k_end;
            throw NumericError(msg.str());
        }
        std::vector<double> zeros(exact);
        std::vector<double> refined(brackets.size());
        parallel_for(brackets.size(), [&](std::size_t i) {
            auto [a, b] = brackets[i];
            const double scale = std::max(1.0, std::abs(b));
            auto tol = [&](double x, double y) { return std::abs(y - x) <= opt.rel_tol * scale; };
            std::uintmax_t iters = 200;
            auto r = boost::math::tools::toms748_solve(g, a, b, tol, iters);
            refined[i] = 0.5 * (r.first + r.second);
        });
        zeros.insert(zeros.end(), refined.begin(), refined.end());
        std::sort(zeros.begin(), zeros.end());
        zeros.resize(count);
        for (double& z : zeros) z = signed_square(z);
        return zeros;
    }
    return {};
}

/// Positive zeros of sin(l) + theta sin(l c), 0 < c <= 1, |theta| < 1, prefixed
/// with 0 when include_zero. Found by sweep + bracketing.
inline std::vector<double> sine_combination_zeros(double theta, double c, std::size_t count, bool include_zero) {
    std::vector<double> out;
    if (include_zero) out.push_back(0.0);
    auto f = [&](double l) { return std::sin(l) + theta * std::sin(l * c); };
    const double step = M_PI / 64.0;
    double a = step * 0.5;
    double fa = f(a);
    while (out.size() < count) {
        const double b = a + step;
        const double fb = f(b);
        if ((fa < 0.0) != (fb < 0.0)) {
            auto tol = [](double x, double y) { return std::abs(y - x) <= 1e-14 * std::max(1.0, std::abs(x)); };
            std::uintmax_t iters = 200;
            auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
            out.push_back(0.5 * (r.first + r.second));
        }
        a = b;
        fa = fb;
    }
    return out;
}

}  // namespace halfinv

#pragma once

// Solution propagation for -y'' + q(x) y = mu y on [0, 1/2] with an optional
// interior jump. The potential is piecewise linear on its grid, so every cell
// is integrated with the fourth-order Magnus method (two Gauss points), whose
// 2x2 exponential is evaluated in closed form. The transfer matrices are
// unimodular, which keeps the Wronskian at one to rounding.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <vector>

#include "halfinv/core.hpp"
#include "halfinv/entire.hpp"

namespace halfinv {

struct PropagateOptions {
    /// Upper bound on a Magnus substep. Cells of the potential grid are never
    /// straddled, so the effective step is min(max_step, grid_step).
    double max_step = 1.0 / 1024.0;
};

namespace detail {

template <class T>
struct Mat2 {
    T a, b, c, d;  // [[a, b], [c, d]]
};

/// C(s) = cosh(sqrt s), S(s) = sinh(sqrt s)/sqrt s and dS/ds.
template <class T>
struct CoshSinh {
    T c, s, ds;
};

inline CoshSinh<double> cosh_sinh(double sigma) {
    if (std::abs(sigma) < 1e-3) {
        const double s2 = sigma * sigma;
        const double c = 1.0 + sigma / 2.0 + s2 / 24.0 + s2 * sigma / 720.0 + s2 * s2 / 40320.0;
        const double s = 1.0 + sigma / 6.0 + s2 / 120.0 + s2 * sigma / 5040.0 + s2 * s2 / 362880.0;
        const double ds = 1.0 / 6.0 + sigma / 60.0 + s2 / 1680.0 + s2 * sigma / 90720.0;
        return {c, s, ds};
    }
    double c, s;
    if (sigma > 0.0) {
        const double r = std::sqrt(sigma);
        c = std::cosh(r);
        s = std::sinh(r) / r;
    } else {
        const double r = std::sqrt(-sigma);
        c = std::cos(r);
        s = std::sin(r) / r;
    }
    return {c, s, (c - s) / (2.0 * sigma)};
}

inline CoshSinh<std::complex<double>> cosh_sinh(std::complex<double> sigma) {
    using C = std::complex<double>;
    if (std::abs(sigma) < 1e-3) {
        const C s2 = sigma * sigma;
        const C c = 1.0 + sigma / 2.0 + s2 / 24.0 + s2 * sigma / 720.0 + s2 * s2 / 40320.0;
        const C s = 1.0 + sigma / 6.0 + s2 / 120.0 + s2 * sigma / 5040.0 + s2 * s2 / 362880.0;
        const C ds = 1.0 / 6.0 + sigma / 60.0 + s2 / 1680.0 + s2 * sigma / 90720.0;
        return {c, s, ds};
    }
    const C r = std::sqrt(sigma);
    const C c = std::cosh(r);
    const C s = std::sinh(r) / r;
    return {c, s, (c - s) / (2.0 * sigma)};
}

/// One Magnus step of length h where q is linear; qa, qb are q at the two
/// Gauss points (qa first). Returns the transfer matrix and, optionally, its
/// derivative with respect to mu.
template <class T>
inline void magnus_step(double h, double qa, double qb, T mu, Mat2<T>& e, Mat2<T>* de) {
    const double kappa = std::sqrt(3.0) * h * h / 12.0 * (qa - qb);
    const T lower = h * (0.5 * (qa + qb) - mu);
    const T sigma = kappa * kappa + h * lower;
    const auto cs = cosh_sinh(sigma);
    e = {cs.c + cs.s * kappa, cs.s * h, cs.s * lower, cs.c - cs.s * kappa};
    if (de) {
        // d sigma / d mu = -h^2; d Omega / d mu = [[0,0],[-h,0]].
        const T dc = -h * h * 0.5 * cs.s;
        const T dsig = -h * h * cs.ds;
        *de = {dc + dsig * kappa, dsig * h, dsig * lower - cs.s * h, dc - dsig * kappa};
    }
}

template <class T>
struct Propagated {
    T y, dy;      // value
    T ym, dym;    // derivative in mu
};

template <class T>
inline void apply(const Mat2<T>& e, const Mat2<T>* de, Propagated<T>& u, bool with_derivative) {
    const T y = e.a * u.y + e.b * u.dy;
    const T dy = e.c * u.y + e.d * u.dy;
    if (with_derivative) {
        const T ym = de->a * u.y + de->b * u.dy + e.a * u.ym + e.b * u.dym;
        const T dym = de->c * u.y + de->d * u.dy + e.c * u.ym + e.d * u.dym;
        u.ym = ym;
        u.dym = dym;
    }
    u.y = y;
    u.dy = dy;
}

template <class T>
inline bool finite_state(const Propagated<T>& u) {
    if constexpr (is_complex_v<T>) {
        return std::isfinite(u.y.real()) && std::isfinite(u.y.imag()) && std::isfinite(u.dy.real()) &&
               std::isfinite(u.dy.imag());
    } else {
        return std::isfinite(u.y) && std::isfinite(u.dy);
    }
}

/// Integrates from x0 to x1 (x0 < x1, both in [0, 1/2]) without straddling
/// potential-grid nodes.
template <class T>
inline void propagate_segment(const PotentialHalf& q, double x0, double x1, T mu, Propagated<T>& u,
                              bool with_derivative, const PropagateOptions& opt) {
    static const double g = 0.5 - std::sqrt(3.0) / 6.0;
    const double hq = q.grid_step();
    double x = x0;
    while (x < x1 - 1e-15) {
        auto cell = static_cast<std::size_t>(std::floor(x / hq + 1e-12));
        if (cell >= q.cells()) cell = q.cells() - 1;
        const double cell_end = std::min(x1, q.node(cell + 1));
        const double len = cell_end - x;
        if (len <= 1e-15) {
            x = cell_end;
            continue;
        }
        const auto nsub = static_cast<int>(std::ceil(len / opt.max_step - 1e-9));
        const double h = len / nsub;
        const double x_cell = q.node(cell);
        const double slope = (q[cell + 1] - q[cell]) / hq;
        for (int k = 0; k < nsub; ++k) {
            const double xs = x + h * k;
            const double qa = q[cell] + slope * (xs + g * h - x_cell);
            const double qb = q[cell] + slope * (xs + (1.0 - g) * h - x_cell);
            Mat2<T> e, de;
            magnus_step<T>(h, qa, qb, mu, e, with_derivative ? &de : nullptr);
            apply(e, with_derivative ? &de : nullptr, u, with_derivative);
        }
        x = cell_end;
        if (!finite_state(u)) {
            std::ostringstream msg;
            msg << "integration failure: non-finite solution at x = " << x;
            throw NumericError(msg.str());
        }
    }
}

template <class T>
inline void apply_jump(const JumpParams& j, Propagated<T>& u, bool with_derivative) {
    const T y = j.a1 * u.y;
    const T dy = u.dy / j.a1 + j.a2 * u.y;
    if (with_derivative) {
        const T ym = j.a1 * u.ym;
        const T dym = u.dym / j.a1 + j.a2 * u.ym;
        u.ym = ym;
        u.dym = dym;
    }
    u.y = y;
    u.dy = dy;
}

inline void check_interior_jump(const std::optional<JumpParams>& jump) {
    if (jump && !(jump->d > 0.0 && jump->d < kHalf)) {
        throw InvalidArgument("propagate: jump position must lie strictly inside (0, 1/2)");
    }
    if (jump && !(jump->a1 > 0.0)) throw InvalidArgument("propagate: a1 must be positive");
}

template <class T>
inline Propagated<T> run(const PotentialHalf& q, T y0, T dy0, T mu, const std::optional<JumpParams>& jump,
                         bool with_derivative, const PropagateOptions& opt) {
    check_interior_jump(jump);
    Propagated<T> u{y0, dy0, T{}, T{}};
    if (jump) {
        propagate_segment(q, 0.0, jump->d, mu, u, with_derivative, opt);
        apply_jump(*jump, u, with_derivative);
        propagate_segment(q, jump->d, kHalf, mu, u, with_derivative, opt);
    } else {
        propagate_segment(q, 0.0, kHalf, mu, u, with_derivative, opt);
    }
    return u;
}

}  // namespace detail

/// Solution with y(0) = 1, y'(0) = h, evaluated at x = 1/2, as a function of
/// mu = lambda^2. The jump, when present, must lie strictly inside (0, 1/2).
template <class T>
BasicSolutionState<T> propagate_mu(const PotentialHalf& q, double h, T mu,
                                   const std::optional<JumpParams>& jump = std::nullopt,
                                   const PropagateOptions& opt = {}) {
    const auto u = detail::run<T>(q, T(1.0), T(h), mu, jump, false, opt);
    return {u.y, u.dy, kHalf};
}

/// Same, in terms of lambda (real or complex).
template <class T>
BasicSolutionState<T> propagate(const PotentialHalf& q, double h, T lambda,
                                const std::optional<JumpParams>& jump = std::nullopt,
                                const PropagateOptions& opt = {}) {
    return propagate_mu<T>(q, h, lambda * lambda, jump, opt);
}

/// Solution with arbitrary initial data (y0, dy0) at x = 0.
template <class T>
BasicSolutionState<T> propagate_from(const PotentialHalf& q, T y0, T dy0, T mu,
                                     const std::optional<JumpParams>& jump = std::nullopt,
                                     const PropagateOptions& opt = {}) {
    const auto u = detail::run<T>(q, y0, dy0, mu, jump, false, opt);
    return {u.y, u.dy, kHalf};
}

template <class T>
struct StateAndMuDerivative {
    BasicSolutionState<T> value;
    BasicSolutionState<T> d_mu;  ///< d/dmu of (y, y') at x = 1/2
};

/// Propagates the variational system alongside: d/dmu of y(1/2) and y'(1/2).
template <class T>
StateAndMuDerivative<T> propagate_mu_with_derivative(const PotentialHalf& q, double h, T mu,
                                                     const std::optional<JumpParams>& jump = std::nullopt,
                                                     const PropagateOptions& opt = {}) {
    const auto u = detail::run<T>(q, T(1.0), T(h), mu, jump, true, opt);
    return {{u.y, u.dy, kHalf}, {u.ym, u.dym, kHalf}};
}

/// States at the given increasing positions in [0, 1/2] for initial data
/// (y0, dy0). A position equal to the jump point records the left limit.
inline std::vector<SolutionState> propagate_trace(const PotentialHalf& q, double y0, double dy0, double mu,
                                                  const std::optional<JumpParams>& jump,
                                                  std::span<const double> positions,
                                                  const PropagateOptions& opt = {}) {
    detail::check_interior_jump(jump);
    detail::Propagated<double> u{y0, dy0, 0.0, 0.0};
    std::vector<SolutionState> out;
    out.reserve(positions.size());
    double x = 0.0;
    bool jumped = !jump.has_value();
    for (double target : positions) {
        if (target < x - 1e-15 || target > kHalf + 1e-15) {
            throw InvalidArgument("propagate_trace: positions must be increasing within [0, 1/2]");
        }
        if (!jumped && target > jump->d) {
            detail::propagate_segment(q, x, jump->d, mu, u, false, opt);
            detail::apply_jump(*jump, u, false);
            x = jump->d;
            jumped = true;
        }
        detail::propagate_segment(q, x, target, mu, u, false, opt);
        x = std::max(x, target);
        out.push_back({u.y, u.dy, target});
    }
    return out;
}

}  // namespace halfinv

#pragma once

// Independent reference computations: a finite-element/difference matrix
// eigensolver, Simpson quadrature of eigenfunction norms and the q = 0
// closed-form solution. None of these reuse the shooting code paths except
// quad_norm, which integrates propagated states.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "halfinv/core.hpp"
#include "halfinv/entire.hpp"
#include "halfinv/errors.hpp"
#include "halfinv/numerics.hpp"
#include "halfinv/propagate.hpp"
#include "halfinv/spectrum.hpp"

namespace halfinv {

/// Symmetric tridiagonal pencil (diag, off) with lumped mass, already scaled
/// by M^{-1/2} on both sides.
struct FDMatrixProblem {
    std::size_t n_points = 0;
    double step = 0.0;
    std::size_t interface_node = 0;
    std::vector<double> diag, off;
};

/// P1 elements with lumped mass on a grid aligned to the jump point. The
/// unknown at the jump is y(d-); y(d+) = a1 y(d-) enters the first element to
/// the right, and a1 a2 y(d-)^2 the quadratic form.
inline FDMatrixProblem assemble_fd(const ProblemSpec& p, std::size_t cells_per_half) {
    const std::size_t n = 2 * cells_per_half;
    const double h = 1.0 / static_cast<double>(n);
    const JumpParams& j = p.jump;
    const double md = j.d / h;
    const auto m = static_cast<std::size_t>(std::llround(md));
    if (std::abs(md - static_cast<double>(m)) > 1e-9) throw InvalidArgument("assemble_fd: jump point not on the grid");

    // q at node i seen from the element on the left (-) or right (+).
    auto q_at = [&](std::size_t i, bool right_side) {
        const double x = h * static_cast<double>(i);
        if (i < cells_per_half || (i == cells_per_half && !right_side)) return p.q1.at(x);
        return p.q2.at(1.0 - x);
    };
    std::vector<double> a_diag(n + 1, 0.0), a_off(n, 0.0), mass(n + 1, 0.0);
    for (std::size_t e = 0; e < n; ++e) {
        const double sl = (e == m) ? j.a1 : 1.0;  // scale of the left node value
        const double sr = 1.0;
        a_diag[e] += sl * sl / h + 0.5 * h * q_at(e, true) * sl * sl;
        a_diag[e + 1] += sr * sr / h + 0.5 * h * q_at(e + 1, false) * sr * sr;
        a_off[e] = -sl * sr / h;
        mass[e] += 0.5 * h * sl * sl;
        mass[e + 1] += 0.5 * h;
    }
    a_diag[0] += p.boundary.h1;
    a_diag[n] += p.boundary.h2;
    a_diag[m] += j.a1 * j.a2;

    FDMatrixProblem out;
    out.n_points = n + 1;
    out.step = h;
    out.interface_node = m;
    out.diag.resize(n + 1);
    out.off.resize(n);
    for (std::size_t i = 0; i <= n; ++i) out.diag[i] = a_diag[i] / mass[i];
    for (std::size_t i = 0; i < n; ++i) out.off[i] = a_off[i] / std::sqrt(mass[i] * mass[i + 1]);
    return out;
}

/// Number of eigenvalues below x (Sturm sequence via LDL^T pivots).
inline std::size_t sturm_count(const FDMatrixProblem& m, double x) {
    std::size_t count = 0;
    double piv = m.diag[0] - x;
    if (piv < 0.0) ++count;
    for (std::size_t i = 1; i < m.diag.size(); ++i) {
        const double prev = piv == 0.0 ? 1e-300 : piv;
        piv = m.diag[i] - x - m.off[i - 1] * m.off[i - 1] / prev;
        if (piv < 0.0) ++count;
    }
    return count;
}

/// Smallest `count` eigenvalues by bisection on the Sturm count.
inline std::vector<double> fd_matrix_eigenvalues(const FDMatrixProblem& m, std::size_t count) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < m.diag.size(); ++i) {
        const double r = (i > 0 ? std::abs(m.off[i - 1]) : 0.0) + (i < m.off.size() ? std::abs(m.off[i]) : 0.0);
        lo = std::min(lo, m.diag[i] - r);
        hi = std::max(hi, m.diag[i] + r);
    }
    std::vector<double> ev(count);
    parallel_for(count, [&](std::size_t k) {
        double a = lo, b = hi;
        for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
            const double c = 0.5 * (a + b);
            if (sturm_count(m, c) > k) b = c;
            else a = c;
        }
        ev[k] = 0.5 * (a + b);
    });
    return ev;
}

struct FdOptions {
    std::size_t points_per_eigenvalue = 64;
    std::size_t grids = 3;
    double max_residual = 1e-3;  ///< relative extrapolation residual allowed per eigenvalue
};

struct FdSpectrum {
    Spectrum spectrum;
    std::vector<double> residual;  ///< extrapolation residual per eigenvalue
    std::size_t base_cells = 0;
};

/// Eigenvalues from grids h, h/2, h/4 extrapolated in h^2. The base grid is a
/// refinement of both potential grids and contains the jump point.
inline FdSpectrum fd_eigenvalues(const ProblemSpec& p, std::size_t count, const FdOptions& opt = {}) {
    if (count == 0) throw InvalidArgument("fd_eigenvalues: count must be positive");
    p.validate(false);
    std::size_t base = std::lcm(p.q1.cells(), p.q2.cells());
    auto aligned = [&](std::size_t c) {
        const double md = p.jump.d * 2.0 * static_cast<double>(c);
        return std::abs(md - std::round(md)) < 1e-9;
    };
    std::size_t cells = base;
    while (!aligned(cells) || 2 * cells + 1 < opt.points_per_eigenvalue * count) {
        cells += base;
        if (cells > (1u << 22)) throw InvalidArgument("fd_eigenvalues: cannot align the grid with the jump point");
    }
    std::vector<std::vector<double>> levels;
    std::vector<double> h2;
    for (std::size_t g = 0; g < std::max<std::size_t>(opt.grids, 1); ++g) {
        const std::size_t c = cells << g;
        const auto m = assemble_fd(p, c);
        levels.push_back(fd_matrix_eigenvalues(m, count));
        h2.push_back(m.step * m.step);
    }
    FdSpectrum out;
    out.base_cells = cells;
    out.spectrum.mu.resize(count);
    out.residual.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<double> vs;
        for (const auto& l : levels) vs.push_back(l[k]);
        const auto e = richardson(h2, vs);
        out.spectrum.mu[k] = e.value;
        out.residual[k] = e.residual;
        if (!(e.residual <= opt.max_residual * std::max(1.0, std::abs(e.value)))) {
            throw NumericError("fd_eigenvalues: extrapolation did not converge for eigenvalue " + std::to_string(k));
        }
    }
    return out;
}

/// int_0^{1/2} phi1(x, mu)^2 dx by composite Simpson, split at the jump.
inline double quad_norm(const ProblemSpec& p, double mu, std::size_t intervals = 4096) {
    intervals += intervals % 2;
    const bool inner = !p.jump.at_midpoint();
    std::optional<JumpParams> j;
    if (inner) j = p.jump;
    const double d = inner ? p.jump.d : kHalf;
    auto simpson = [&](double a, double b, std::span<const double> ys) {
        const std::size_t n = ys.size() - 1;
        double s = ys.front() + ys.back();
        for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * ys[i];
        return s * (b - a) / (3.0 * static_cast<double>(n));
    };
    auto grid = [&](double a, double b) {
        std::vector<double> x(intervals + 1);
        for (std::size_t i = 0; i <= intervals; ++i) x[i] = a + (b - a) * static_cast<double>(i) / intervals;
        x.back() = b;
        return x;
    };
    std::vector<double> pos = grid(0.0, d);
    std::vector<double> right;
    if (inner) {
        right = grid(d, kHalf);
        pos.insert(pos.end(), right.begin() + 1, right.end());
    }
    const auto tr = propagate_trace(p.q1, 1.0, p.boundary.h1, mu, j, pos);
    std::vector<double> yl(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) yl[i] = tr[i].y * tr[i].y;
    double total = simpson(0.0, d, yl);
    if (inner) {
        std::vector<double> yr(intervals + 1);
        const double yd = p.jump.a1 * tr[intervals].y;  // y(d+)
        yr[0] = yd * yd;
        for (std::size_t i = 1; i <= intervals; ++i) yr[i] = tr[intervals + i].y * tr[intervals + i].y;
        total += simpson(d, kHalf, yr);
    }
    return total;
}

/// (y, y') at x = 1/2 for q = 0, y(0) = 1, y'(0) = h, with the jump applied
/// when it lies inside (0, 1/2).
inline SolutionState closed_form_q0(const JumpParams& jp, double h, double lambda) {
    const double mu = lambda * lambda;
    auto rotate = [&](double y, double dy, double len) {
        const double c = cos_sqrt(mu, len), s = sinc_sqrt(mu, len);
        return std::pair{c * y + s * dy, -mu * s * y + c * dy};
    };
    if (jp.at_midpoint()) {
        const auto [y, dy] = rotate(1.0, h, kHalf);
        return {y, dy, kHalf};
    }
    auto [y, dy] = rotate(1.0, h, jp.d);
    const double yp = jp.a1 * y;
    const double dyp = dy / jp.a1 + jp.a2 * y;
    const auto [y2, dy2] = rotate(yp, dyp, kHalf - jp.d);
    return {y2, dy2, kHalf};
}

}  // namespace halfinv

#pragma once

// Scattering data of the left half continued by zero to the half-line, the
// Marchenko equation for the transformation kernel, and recovery of q1, h1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "halfinv/core.hpp"
#include "halfinv/errors.hpp"
#include "halfinv/interp.hpp"
#include "halfinv/numerics.hpp"

namespace halfinv {

using cplx = std::complex<double>;
using JostFn = std::function<cplx(cplx)>;
using SFn = std::function<cplx(double)>;

/// f(lambda) = e^{i lambda/2} (i lambda phi1(1/2) - phi1'(1/2)).
inline JostFn jost_function(const HalfCharFns& fns) {
    return [fns](cplx lambda) {
        const cplx i(0.0, 1.0);
        cplx val, der;
        if (lambda.imag() == 0.0) {
            const auto [v, d] = fns.eval(lambda.real() * lambda.real());
            val = v;
            der = d;
        } else {
            const auto [v, d] = fns.eval_complex(lambda * lambda);
            val = v;
            der = d;
        }
        return std::exp(i * lambda * 0.5) * (i * lambda * val - der);
    };
}

/// S(lambda) = -f(-lambda) / f(lambda) on the real axis.
inline SFn s_function(JostFn jost, double zero_tol = 1e-10) {
    return [jost = std::move(jost), zero_tol](double lambda) {
        const cplx fp = jost(cplx(lambda, 0.0));
        if (std::abs(fp) <= zero_tol * std::max(1.0, std::abs(lambda))) {
            throw NumericError("zero-denominator: Jost function vanishes near lambda = " + std::to_string(lambda) +
                               "; shift the spectrum");
        }
        return -jost(cplx(-lambda, 0.0)) / fp;
    };
}

struct FsOptions {
    double cutoff = 600.0;
    double step = 1.0 / 512.0;    ///< x-grid of F_S
    double lambda_step = 0.05;
    double refine_width = 1.0;    ///< lambda scale of the grid refinement at 0
    std::size_t refine_factor = 16;
    double x_max = 2.0;
    double taper_fraction = 0.2;
    double tail_band = 0.5;       ///< tail fit uses lambda in [tail_band * cutoff, cutoff]
    double tail_tolerance = 1e-3;
};

/// F_S sampled at x_i = i * step, i = 0..size-1, with fit diagnostics.
struct FsKernel {
    double step = 1.0 / 512.0;
    std::vector<double> values;
    std::vector<double> tail_coeffs;  ///< coefficients of the closed-form tail model
    double tail_residual = 0.0;
    double imag_residue = 0.0;
    double unitarity_defect = 0.0;  ///< max ||S| - 1| on the sampling grid

    std::size_t size() const noexcept { return values.size(); }
    double x(std::size_t i) const noexcept { return step * static_cast<double>(i); }
    double at(std::size_t i) const { return values.at(i); }
};

struct ScatteringData {
    JostFn jost;
    SFn s_fn;
    FsKernel fs;
};

/// F_S(x) = (1/2pi) int (S - 1) e^{i lambda x} d lambda. The leading tail is
/// fit on the outer band and transformed in closed form; the remainder is
/// integrated by the midpoint rule with a raised-cosine taper.
inline FsKernel fs_transform(const SFn& s_fn, const FsOptions& opt = {}) {
    if (!(opt.cutoff > 0.0) || !(opt.step > 0.0) || !(opt.lambda_step > 0.0)) {
        throw InvalidArgument("fs_transform: cutoff, step and lambda_step must be positive");
    }
    // Midpoint rule in t with lambda = t - k w tanh(t / w), k = 1 - 1/refine_factor:
    // the step shrinks to lambda_step / refine_factor near 0, where a small
    // Jost value puts structure of width |f(0)| into S, and the grading is
    // smooth, so the +-lambda sum keeps its accuracy.
    const double k = 1.0 - 1.0 / static_cast<double>(std::max<std::size_t>(opt.refine_factor, 1));
    const double wr = opt.refine_width;
    double t_end = opt.cutoff + k * wr;
    for (int it = 0; it < 50; ++it) t_end = opt.cutoff + k * wr * std::tanh(t_end / wr);
    const std::size_t ncell = static_cast<std::size_t>(std::ceil(t_end / opt.lambda_step));
    const double dt = t_end / static_cast<double>(ncell);
    std::vector<double> lam(ncell), wl(ncell);
    for (std::size_t j = 0; j < ncell; ++j) {
        const double t = (static_cast<double>(j) + 0.5) * dt;
        const double sech = 1.0 / std::cosh(t / wr);
        lam[j] = t - k * wr * std::tanh(t / wr);
        wl[j] = (1.0 - k * sech * sech) * dt;
    }
    const std::size_t nl = lam.size();
    std::vector<cplx> sp(nl), sm(nl);
    parallel_for(nl, [&](std::size_t j) {
        sp[j] = s_fn(lam[j]);
        sm[j] = s_fn(-lam[j]);
    });

    FsKernel out;
    out.step = opt.step;
    for (std::size_t j = 0; j < nl; ++j) {
        out.unitarity_defect = std::max({out.unitarity_defect, std::abs(std::abs(sp[j]) - 1.0),
                                         std::abs(std::abs(sm[j]) - 1.0)});
    }

    // Tail model: S - 1 ~ sum_k c_k e^{i lambda a_k} / (i lambda + 1)^{p_k}. The
    // shifted terms carry the kinks of F_S at x = +-1 left by the cut-off at 1/2.
    const cplx i(0.0, 1.0);
    constexpr int kTerms = 5;
    constexpr int kPower[kTerms] = {1, 2, 1, 2, 2};
    constexpr double kShift[kTerms] = {0.0, 0.0, 1.0, 1.0, -1.0};
    auto basis = [&](double l, int k) {
        const cplx u = 1.0 / (i * l + 1.0);
        const cplx p = kPower[k] == 1 ? u : u * u;
        return kShift[k] == 0.0 ? p : p * std::exp(i * l * kShift[k]);
    };
    std::vector<std::size_t> band;
    for (std::size_t j = 0; j < nl; ++j)
        if (lam[j] >= opt.tail_band * opt.cutoff) band.push_back(j);
    if (band.size() < 4 * kTerms) throw InvalidArgument("fs_transform: tail band too short");
    Eigen::MatrixXd a(4 * band.size(), kTerms);
    Eigen::VectorXd y(4 * band.size());
    for (std::size_t r = 0; r < band.size(); ++r) {
        const std::size_t j = band[r];
        for (int side = 0; side < 2; ++side) {
            const double l = side == 0 ? lam[j] : -lam[j];
            const cplx s1 = (side == 0 ? sp[j] : sm[j]) - 1.0;
            const std::size_t row = 4 * r + 2 * side;
            for (int k = 0; k < kTerms; ++k) {
                const cplx b = basis(l, k);
                a(row, k) = b.real();
                a(row + 1, k) = b.imag();
            }
            y(row) = s1.real();
            y(row + 1) = s1.imag();
        }
    }
    const Eigen::VectorXd c = least_squares(a, y);
    out.tail_coeffs.assign(c.data(), c.data() + kTerms);
    out.tail_residual = std::sqrt((a * c - y).squaredNorm() / static_cast<double>(2 * band.size()));
    if (!(out.tail_residual <= opt.tail_tolerance)) {
        throw NumericError("tail-fit: residual " + std::to_string(out.tail_residual) + " exceeds " +
                           std::to_string(opt.tail_tolerance));
    }
    auto model = [&](double l) {
        cplx m = 0.0;
        for (int k = 0; k < kTerms; ++k) m += c(k) * basis(l, k);
        return m;
    };
    // (1/2pi) int e^{i l a} (i l + 1)^{-p} e^{i l x} dl = (x+a)^{p-1} e^{-(x+a)} / (p-1)!, x + a >= 0
    auto model_transform = [&](double x) {
        double v = 0.0;
        for (int k = 0; k < kTerms; ++k) {
            const double z = x + kShift[k];
            if (z < 0.0) continue;
            v += c(k) * (kPower[k] == 1 ? 1.0 : z) * std::exp(-z);
        }
        return v;
    };

    std::vector<cplx> rp(nl), rm(nl);
    const double taper_start = (1.0 - opt.taper_fraction) * opt.cutoff;
    for (std::size_t j = 0; j < nl; ++j) {
        double w = wl[j] / (2.0 * std::numbers::pi);
        if (lam[j] > taper_start) {
            w *= 0.5 * (1.0 + std::cos(std::numbers::pi * (lam[j] - taper_start) / (opt.cutoff - taper_start)));
        }
        rp[j] = w * (sp[j] - 1.0 - model(lam[j]));
        rm[j] = w * (sm[j] - 1.0 - model(-lam[j]));
    }

    const std::size_t nx = static_cast<std::size_t>(std::llround(opt.x_max / opt.step)) + 1;
    out.values.assign(nx, 0.0);
    std::vector<double> imag(nx, 0.0);
    parallel_for(nx, [&](std::size_t k) {
        const double x = opt.step * static_cast<double>(k);
        cplx acc = 0.0;
        for (std::size_t j = 0; j < nl; ++j) {
            const cplx e(std::cos(lam[j] * x), std::sin(lam[j] * x));
            acc += rp[j] * e + rm[j] * std::conj(e);
        }
        out.values[k] = acc.real() + model_transform(x);
        imag[k] = acc.imag();
    });
    for (double v : imag) out.imag_residue = std::max(out.imag_residue, std::abs(v));
    return out;
}

inline ScatteringData scattering_data(const HalfCharFns& fns, const FsOptions& opt = {}) {
    ScatteringData d;
    d.jost = jost_function(fns);
    d.s_fn = s_function(d.jost);
    d.fs = fs_transform(d.s_fn, opt);
    return d;
}

struct MarchenkoOptions {
    std::size_t ratio = 2;        ///< kernel step = ratio * F_S step
    std::size_t extra_cells = 0;  ///< solve beyond t = 1 - x (support check)
    double condition_limit = 1e8;
    /// Constants tried, in order, as an addition to q1 until the half-line
    /// problem has no bound state; the addition is removed from the output.
    std::vector<double> shift_ladder = {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 11.0, 16.0, 23.0, 32.0, 45.0, 64.0, 90.0, 128.0};
    double jost_margin = 0.02;  ///< required f(0) distance from 0 for an accepted shift
    double kappa_max = 60.0;
    double kappa_step = 0.05;
};

/// K(x_i, x_i + j h) for x_i = i h, i = 0..M (h = 1/(2M)); row i holds
/// j = 0..2(M - i) (+ extra cells). K vanishes beyond t = 1 - x.
struct TransformKernel {
    double step = 1.0 / 256.0;
    std::vector<std::vector<double>> rows;
    double max_condition = 0.0;
    bool ill_conditioned = false;

    std::size_t cells() const noexcept { return rows.empty() ? 0 : rows.size() - 1; }
    double x(std::size_t i) const noexcept { return step * static_cast<double>(i); }
    /// K(x_i, x_i + j h), zero outside the stored support.
    double at(std::size_t i, std::size_t j) const {
        if (i >= rows.size() || j >= rows[i].size()) return 0.0;
        return rows[i][j];
    }
    std::vector<double> diagonal() const {
        std::vector<double> d(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) d[i] = rows[i].front();
        return d;
    }
    double norm() const {
        double s = 0.0;
        for (const auto& r : rows)
            for (double v : r) s = std::max(s, std::abs(v));
        return s;
    }
};

/// Nystrom solution of K(x,t) + F(x+t) + int_x^{1-x} K(x,s) F(s+t) ds = 0
/// with trapezoid weights, independently for each grid x.
inline TransformKernel solve_marchenko(const FsKernel& fs, const MarchenkoOptions& opt = {}) {
    if (opt.ratio == 0) throw InvalidArgument("solve_marchenko: ratio must be >= 1");
    const double h = fs.step * static_cast<double>(opt.ratio);
    const double mf = kHalf / h;
    const std::size_t m = static_cast<std::size_t>(std::llround(mf));
    if (m < 2 || std::abs(mf - static_cast<double>(m)) > 1e-9) {
        throw InvalidArgument("solve_marchenko: kernel step must divide 1/2");
    }
    const std::size_t r = opt.ratio;
    const std::size_t need = r * (4 * m + 2 * opt.extra_cells) + 1;
    if (fs.size() < need) throw InvalidArgument("solve_marchenko: F_S sampled on too short a range");

    TransformKernel k;
    k.step = h;
    k.rows.resize(m + 1);
    std::vector<double> cond(m + 1, 0.0);
    parallel_for(m + 1, [&](std::size_t i) {
        const std::size_t n = 2 * (m - i) + opt.extra_cells;
        if (n == 0) {
            k.rows[i] = {-fs.values[r * 2 * i]};
            cond[i] = 1.0;
            return;
        }
        Eigen::MatrixXd a(n + 1, n + 1);
        Eigen::VectorXd b(n + 1);
        for (std::size_t j = 0; j <= n; ++j) {
            b(static_cast<Eigen::Index>(j)) = -fs.values[r * (2 * i + j)];
            for (std::size_t l = 0; l <= n; ++l) {
                const double w = (l == 0 || l == n) ? 0.5 * h : h;
                a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) =
                    w * fs.values[r * (2 * i + j + l)] + (j == l ? 1.0 : 0.0);
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        const double rc = lu.rcond();
        cond[i] = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
        const Eigen::VectorXd sol = lu.solve(b);
        k.rows[i].assign(sol.data(), sol.data() + sol.size());
    });
    k.max_condition = *std::max_element(cond.begin(), cond.end());
    k.ill_conditioned = !(k.max_condition <= opt.condition_limit);
    return k;
}

/// q1(x) = -2 d/dx K(x,x) by fourth-order differences: five-point centered
/// inside, one-sided five-point stencils at the two nodes next to each end.
/// Second-order differences bias a mode e^{i w x} by ~(w h)^2/6, which at
/// h = 1/256 shifts low eigenvalues by more than 1e-4.
inline PotentialHalf potential_from_kernel(const TransformKernel& k) {
    const auto d = k.diagonal();
    const std::size_t n = d.size();
    if (n < 5) throw InvalidArgument("potential_from_kernel: need at least 5 diagonal samples");
    const double h = k.step;
    std::vector<double> q(n);
    for (std::size_t i = 2; i + 2 < n; ++i) q[i] = (-d[i + 2] + 8.0 * d[i + 1] - 8.0 * d[i - 1] + d[i - 2]) / (12.0 * h);
    // s = +1 looks forward, s = -1 backward
    auto end = [&](std::size_t i, double s) {
        auto at = [&](int m) { return d[static_cast<std::size_t>(static_cast<long>(i) + static_cast<long>(s) * m)]; };
        return s * (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)) / (12.0 * h);
    };
    auto next_to_end = [&](std::size_t i, double s) {
        auto at = [&](int m) { return d[static_cast<std::size_t>(static_cast<long>(i) + static_cast<long>(s) * m)]; };
        return s * (-3.0 * at(-1) - 10.0 * at(0) + 18.0 * at(1) - 6.0 * at(2) + at(3)) / (12.0 * h);
    };
    q[0] = end(0, 1.0);
    q[1] = next_to_end(1, 1.0);
    q[n - 1] = end(n - 1, -1.0);
    q[n - 2] = next_to_end(n - 2, -1.0);
    for (double& v : q) v *= -2.0;
    return PotentialHalf(std::move(q));
}

/// f(0, lambda) and f'(0, lambda) from the kernel rows at x = 0, h, 2h.
struct JostAtZero {
    cplx value, derivative;
};

inline JostAtZero jost_at_zero(const TransformKernel& k, double lambda) {
    if (k.rows.size() < 4) throw InvalidArgument("jost_at_zero: kernel grid too coarse");
    const double h = k.step;
    const std::size_t n = 2 * k.cells();
    // K_x(0, t_j) from K(0,t_j), K(h,t_j), K(2h,t_j); row i stores t = (i + j') h.
    auto kk = [&](std::size_t i, std::size_t j) -> double {
        if (j < i) return 0.0;
        return k.at(i, j - i);
    };
    std::vector<double> kx(n + 1);
    for (std::size_t j = 2; j <= n; ++j) kx[j] = (-3.0 * kk(0, j) + 4.0 * kk(1, j) - kk(2, j)) / (2.0 * h);
    kx[1] = 2.0 * kx[2] - kx[3];
    kx[0] = 3.0 * kx[2] - 2.0 * kx[3];

    const cplx i(0.0, 1.0);
    cplx iv = 0.0, id = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double w = (j == 0 || j == n) ? 0.5 * h : h;
        const cplx e = std::exp(i * lambda * (h * static_cast<double>(j)));
        iv += w * kk(0, j) * e;
        id += w * kx[j] * e;
    }
    return {1.0 + iv, i * lambda - kk(0, 0) + id};
}

struct H1Estimate {
    double h1 = 0.0;
    std::vector<double> samples;  ///< per evaluation point
    double spread = 0.0;
};

/// h1 = (f'(0,-l) + f'(0,l) S(l)) / (f(0,-l) + f(0,l) S(l)) at several l;
/// returns the median.
inline H1Estimate h1_from_scattering(const TransformKernel& k, const SFn& s_fn,
                                     const std::vector<double>& points = {1.0, 2.0, 3.0},
                                     double denominator_tol = 1e-8) {
    H1Estimate est;
    for (double l : points) {
        const auto p = jost_at_zero(k, l);
        const auto m = jost_at_zero(k, -l);
        const cplx s = s_fn(l);
        const cplx den = m.value + p.value * s;
        if (std::abs(den) < denominator_tol) continue;
        est.samples.push_back(((m.derivative + p.derivative * s) / den).real());
    }
    if (est.samples.empty()) throw NumericError("h1: all denominators are small");
    auto sorted = est.samples;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    est.h1 = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    est.spread = sorted.back() - sorted.front();
    return est;
}

/// phi1(1/2, .) pair for q1 + delta.
inline HalfCharFns add_to_potential(const HalfCharFns& f, double delta) {
    if (delta == 0.0) return f;
    HalfCharFns g = f;
    g.eval = [e = f.eval, delta](double mu) { return e(mu - delta); };
    g.eval_complex = [e = f.eval_complex, delta](cplx mu) { return e(mu - delta); };
    return g;
}

/// Zeros i kappa, kappa > 0, of the Jost function: sign changes of
/// -e^{kappa/2} f(i kappa) = kappa phi1(1/2, -kappa^2) + phi1'(1/2, -kappa^2),
/// which is positive for large kappa. `at_zero` receives -f(0).
inline std::size_t count_bound_states(const HalfCharFns& fns, const MarchenkoOptions& opt, double* at_zero = nullptr) {
    auto g = [&](double k) {
        const auto [v, d] = fns.eval(-k * k);
        return k * v + d;
    };
    const double g0 = g(0.0);
    if (at_zero) *at_zero = g0;
    std::size_t count = 0;
    double prev = g0;
    const auto n = static_cast<std::size_t>(std::ceil(opt.kappa_max / opt.kappa_step));
    for (std::size_t i = 1; i <= n; ++i) {
        const double cur = g(opt.kappa_step * static_cast<double>(i));
        if ((prev < 0.0) != (cur < 0.0)) ++count;
        prev = cur;
    }
    // g ends positive, so an odd count means g(0) < 0 (one crossing was at 0+)
    return count;
}

struct MarchenkoResult {
    FsKernel fs;
    SFn s_fn;
    TransformKernel kernel;       ///< for q1 + shift, as are fs and s_fn
    PotentialHalf q1;
    H1Estimate h1;
    double kernel_mean_q1 = 0.0;  ///< K(0,0) - shift/4 = [q1]
    double shift = 0.0;           ///< constant added to q1 to remove bound states
    std::size_t bound_states = 0; ///< bound states of the unshifted half-line problem
};

/// Full chain from phi1(1/2, .), phi1'(1/2, .) to (q1, h1).
inline MarchenkoResult marchenko_recover(const HalfCharFns& fns, const FsOptions& fopt = {},
                                         const MarchenkoOptions& mopt = {}) {
    MarchenkoResult res;
    // The equation carries no discrete part, so q1 is raised until the
    // half-line problem has none.
    res.bound_states = count_bound_states(fns, mopt);
    bool found = false;
    for (double c : mopt.shift_ladder) {
        double f0 = 0.0;
        if (count_bound_states(add_to_potential(fns, c), mopt, &f0) == 0 && f0 >= mopt.jost_margin) {
            res.shift = c;
            found = true;
            break;
        }
    }
    if (!found) throw NumericError("bound-states: no shift in the ladder removes the bound states of the half-line problem");
    const JostFn jost = jost_function(add_to_potential(fns, res.shift));
    const SFn s = s_function(jost);
    res.s_fn = s;
    res.fs = fs_transform(s, fopt);
    res.kernel = solve_marchenko(res.fs, mopt);
    res.q1 = potential_from_kernel(res.kernel).shifted(-res.shift);
    res.h1 = h1_from_scattering(res.kernel, s);
    res.kernel_mean_q1 = res.kernel.at(0, 0) - res.shift / 4.0;
    return res;
}

}  // namespace halfinv

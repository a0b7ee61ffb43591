#pragma once

// Left-case (d < 1/2) parameters read off the rebuilt function Psi = Phi / b1:
// ratio b2/b1, a1, d, omega1, omega2.

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "halfinv/errors.hpp"
#include "halfinv/numerics.hpp"
#include "halfinv/product.hpp"

namespace halfinv {

inline double a1_from_ratio(double r) { return std::sqrt((1.0 + r) / (1.0 - r)); }

struct A1dEstimate {
    double ratio = 0.0;           ///< b2/b1, magnitude from the envelope, sign from the phase
    double envelope = 0.0;        ///< envelope of l^-1 Psi + sin l, extrapolated over windows
    double envelope_spread = 0.0; ///< change made by the extrapolation
    double a1 = 1.0;
    double d = 0.25;
    double d_fit_residual = 0.0;  ///< rms misfit of the zero positions
    std::size_t zero_count = 0;
};

struct A1dOptions {
    /// Upper end of the reliable real window as a fraction of the largest eigenvalue.
    double reliable_fraction = 0.6;
    double sample_step = 0.02;
};

/// Ratio b2/b1 from the envelope of g(l) = Psi(l)/l + sin(l) over windows
/// [L, 2L], d from the spacing pi/(1 - 2d) of the zeros of g.
/// `psi` is a function of mu = lambda^2; `lambda_max` bounds the range where it
/// is trusted.
inline A1dEstimate recover_a1_d(const std::function<double(double)>& psi, double lambda_max,
                                const A1dOptions& opt = {}) {
    const double top = opt.reliable_fraction * lambda_max;
    if (top < 20.0) throw InvalidArgument("recover_a1_d: spectrum too short");
    auto g = [&](double l) { return psi(l * l) / l + std::sin(l); };

    A1dEstimate e;
    std::vector<double> window_max;
    for (double hi = top; hi >= top / 4.0 - 1e-9; hi /= 2.0) {
        double m = 0.0;
        for (double l = hi / 2.0; l <= hi; l += opt.sample_step) m = std::max(m, std::abs(g(l)));
        window_max.push_back(m);
    }
    // window maxima behave like |ratio| + O(1/L); extrapolate linearly in 1/L
    e.envelope = std::max(0.0, 2.0 * window_max[0] - window_max[1]);
    e.envelope_spread = std::abs(window_max[0] - e.envelope);
    if (e.envelope < 1e-3) {
        throw ConditionViolation("degenerate-ratio",
                                 "envelope of Psi/lambda + sin(lambda) is below 1e-3; d is not identifiable");
    }

    // zeros of g on [top/4, top]
    std::vector<double> zeros;
    const double lo = top / 4.0;
    double pl = lo, pv = g(lo);
    for (double l = lo + opt.sample_step; l <= top; l += opt.sample_step) {
        const double v = g(l);
        if ((pv < 0.0) != (v < 0.0)) {
            double a = pl, b = l, fa = pv;
            for (int i = 0; i < 50; ++i) {
                const double m = 0.5 * (a + b);
                const double fm = g(m);
                if ((fa < 0.0) == (fm < 0.0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            zeros.push_back(0.5 * (a + b));
        }
        pl = l;
        pv = v;
    }
    if (zeros.size() < 4) throw NumericError("recover_a1_d: too few zeros of Psi/lambda + sin(lambda)");
    std::vector<double> gaps;
    for (std::size_t i = 1; i < zeros.size(); ++i) gaps.push_back(zeros[i] - zeros[i - 1]);
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    const double spacing0 = gaps[gaps.size() / 2];
    // Index each zero by its distance from the first in units of the typical
    // spacing; spurious close pairs share an index and are dropped.
    std::vector<double> ks, zs;
    long last = -1;
    for (double z : zeros) {
        const long k = std::lround((z - zeros.front()) / spacing0);
        if (k == last) continue;
        last = k;
        ks.push_back(double(k));
        zs.push_back(z);
    }
    Eigen::MatrixXd a(ks.size(), 2);
    Eigen::VectorXd y(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) {
        a(i, 0) = ks[i];
        a(i, 1) = 1.0;
        y(i) = zs[i];
    }
    const Eigen::VectorXd c = least_squares(a, y);
    const double spacing = c(0);
    e.d = 0.5 - M_PI / (2.0 * spacing);
    e.d_fit_residual = (a * c - y).norm() / std::sqrt(double(ks.size()));
    e.zero_count = ks.size();
    if (!(e.d > 0.0 && e.d < kHalf)) throw NumericError("recover_a1_d: zero spacing gives d outside (0, 1/2)");

    // Sign from the phase: g ~ -ratio sin(l (1 - 2d)).
    const double cc = 1.0 - 2.0 * e.d;
    double proj = 0.0, norm = 0.0;
    for (double l = lo; l <= top; l += opt.sample_step) {
        const double s = std::sin(l * cc);
        proj += g(l) * s;
        norm += s * s;
    }
    e.ratio = (proj > 0.0 ? -1.0 : 1.0) * std::min(e.envelope, 0.999999);
    e.a1 = a1_from_ratio(e.ratio);
    return e;
}

inline A1dEstimate recover_a1_d(const ProductFn& psi, const A1dOptions& opt = {}) {
    return recover_a1_d([&](double mu) { return psi(mu); }, psi.lambda_max(), opt);
}

/// Least-squares fit of Psi(l)/l on a real window against the asymptotic model
/// s [-sin l - theta sin lc + (k1 cos l + k2 cos lc)/l] + O(l^-2) terms, with d
/// found by a one-dimensional search. s corrects the constant C0.
struct LeftFit {
    LeftModel model;
    double scale = 1.0;
    double residual = 0.0;  ///< rms misfit over the window
    double window_lo = 0.0;
    double window_hi = 0.0;
};

struct LeftFitOptions {
    double lo_fraction = 0.1;
    double hi_fraction = 0.6;
    double sample_step = 0.05;
    double d_halfwidth = 0.02;
};

namespace detail {

struct LinearLeftFit {
    Eigen::VectorXd coef;
    double residual;
};

inline LinearLeftFit fit_left_linear(const std::vector<double>& ls, const std::vector<double>& ys, double d) {
    const double c = 1.0 - 2.0 * d;
    // 2d is dropped when it nearly coincides with 1 - 2d: the two columns
    // would beat against each other and blow up the coefficients.
    const int nf = std::abs(2.0 * d - c) < 0.05 ? 2 : 3;
    const double freqs[3] = {1.0, c, 2.0 * d};
    Eigen::MatrixXd a(ls.size(), 5 + 2 * nf);
    Eigen::VectorXd y(ls.size());
    for (std::size_t i = 0; i < ls.size(); ++i) {
        const double l = ls[i];
        a(i, 0) = std::sin(l);
        a(i, 1) = std::sin(l * c);
        a(i, 2) = std::cos(l) / l;
        a(i, 3) = std::cos(l * c) / l;
        for (int f = 0; f < nf; ++f) {
            a(i, 4 + 2 * f) = std::sin(freqs[f] * l) / (l * l);
            a(i, 5 + 2 * f) = std::cos(freqs[f] * l) / (l * l);
        }
        a(i, 4 + 2 * nf) = 1.0 / (l * l);
        y(i) = ys[i];
    }
    LinearLeftFit out;
    out.coef = least_squares(a, y);
    out.residual = (a * out.coef - y).norm() / std::sqrt(double(ls.size()));
    return out;
}

}  // namespace detail

inline LeftFit refine_left_model(const std::function<double(double)>& psi, double lambda_max, double d0,
                                 const LeftFitOptions& opt = {}) {
    const double lmax = lambda_max;
    LeftFit fit;
    fit.window_lo = std::max(10.0, opt.lo_fraction * lmax);
    fit.window_hi = opt.hi_fraction * lmax;
    std::vector<double> ls, ys;
    for (double l = fit.window_lo; l <= fit.window_hi; l += opt.sample_step) ls.push_back(l);
    ys.resize(ls.size());
    parallel_for(ls.size(), [&](std::size_t i) { ys[i] = psi(ls[i] * ls[i]) / ls[i]; });

    auto objective = [&](double d) { return detail::fit_left_linear(ls, ys, d).residual; };
    const double dlo = std::max(1e-3, d0 - opt.d_halfwidth), dhi = std::min(kHalf - 1e-3, d0 + opt.d_halfwidth);
    const auto best = boost::math::tools::brent_find_minima(objective, dlo, dhi, 40);
    const double d = best.first;
    const auto lin = detail::fit_left_linear(ls, ys, d);
    const double s = -lin.coef(0);
    fit.scale = s;
    fit.model = LeftModel{lin.coef(1) / lin.coef(0), d, lin.coef(2) / s, lin.coef(3) / s};
    fit.residual = lin.residual;
    return fit;
}

inline LeftFit refine_left_model(const ProductFn& psi, double d0, const LeftFitOptions& opt = {}) {
    return refine_left_model([&](double mu) { return psi(mu); }, psi.lambda_max(), d0, opt);
}

struct OmegaEstimate {
    double omega1 = 0.0;
    double omega2 = 0.0;
    double omega1_residual = 0.0;
    double omega2_spread = 0.0;
    bool converged = true;
};

/// omega1 = 2 lim e^-tau h2(i tau), omega2 = lim (h2(l) - omega1 cos l) at
/// l = 2 m pi / (1 - 2d), with h2 = Phi + l (b1 sin l + b2 sin l(1-2d)).
/// `phi` must already carry the constant of Phi (not Psi).
inline OmegaEstimate recover_omegas(const std::function<double(double)>& phi, double lambda_max, double a1,
                                    double d) {
    const double b1 = 0.5 * (a1 + 1.0 / a1), b2 = 0.5 * (a1 - 1.0 / a1);
    const double c = 1.0 - 2.0 * d;
    OmegaEstimate e;
    std::vector<double> xs, vs;
    for (double tau : {20.0, 40.0, 80.0}) {
        const double h2 = phi(-tau * tau) - tau * (b1 * std::sinh(tau) + b2 * std::sinh(tau * c));
        xs.push_back(1.0 / tau);
        vs.push_back(2.0 * std::exp(-tau) * h2);
    }
    const auto w1 = richardson(xs, vs);
    e.omega1 = w1.value;
    e.omega1_residual = w1.residual;

    const double top = 0.6 * lambda_max;
    const auto m_hi = static_cast<long>(std::floor(top * c / (2.0 * M_PI)));
    const long m_lo = std::max<long>(1, m_hi / 2);
    if (m_hi < 2) throw InvalidArgument("recover_omegas: spectrum too short");
    std::vector<double> samples;
    for (long m = m_lo; m <= m_hi; ++m) {
        const double l = 2.0 * M_PI * double(m) / c;
        const double h2 = phi(l * l) + l * (b1 * std::sin(l) + b2 * std::sin(l * c));
        samples.push_back(h2 - e.omega1 * std::cos(l));
    }
    double sum = 0.0;
    for (double v : samples) sum += v;
    e.omega2 = sum / double(samples.size());
    e.omega2_spread = *std::max_element(samples.begin(), samples.end()) -
                      *std::min_element(samples.begin(), samples.end());
    e.converged = e.omega2_spread <= 0.1 * std::max({std::abs(e.omega1), std::abs(e.omega2), 1.0}) &&
                  e.omega1_residual <= 0.1 * std::max(std::abs(e.omega1), 1.0);
    return e;
}

inline OmegaEstimate recover_omegas(const ProductFn& phi, double a1, double d) {
    return recover_omegas([&](double mu) { return phi(mu); }, phi.lambda_max(), a1, d);
}

struct LeftAsymptotics {
    LeftModel model;           ///< theta = b2/b1, d, kappa_i = omega_i / b1
    double a1 = 1.0;
    double b1 = 1.0;
    double omega1 = 0.0;
    double omega2 = 0.0;
    double c0 = 1.0;           ///< constant of Psi
    A1dEstimate envelope_estimate;
    OmegaEstimate limit_omegas;  ///< omega1, omega2 from the tau / real-point limits
    double fit_residual = 0.0;
    double c0_residual = 0.0;
};

struct LeftAsymptoticsOptions {
    A1dOptions envelope;
    LeftFitOptions fit;
    ProductOptions product;
    int passes = 2;
};

/// Full left-case recovery from eigenvalues: a plain product seeds the
/// envelope/zero estimates, then least-squares fits on a real window alternate
/// with rebuilding the product against the fitted reference and tail.
inline std::pair<LeftAsymptotics, ProductFn> recover_left_asymptotics(const Spectrum& s,
                                                                       const LeftAsymptoticsOptions& opt = {}) {
    LeftAsymptotics out;
    ProductFn psi = build_product_left(s);
    out.envelope_estimate = recover_a1_d(psi, opt.envelope);
    LeftFitOptions first = opt.fit;
    first.hi_fraction = std::min(first.hi_fraction, 0.3);
    LeftFit fit = refine_left_model(psi, out.envelope_estimate.d, first);
    for (int pass = 0; pass < opt.passes; ++pass) {
        psi = build_product_left(s, &fit.model, opt.product);
        fit = refine_left_model(psi, fit.model.d, opt.fit);
    }
    out.c0_residual = left_constant(psi).residual;
    psi.set_constant(psi.constant() / fit.scale);
    out.model = fit.model;
    out.fit_residual = fit.residual;
    out.c0 = psi.constant();
    if (!(std::abs(out.model.theta) < 1.0)) throw NumericError("recover_left_asymptotics: |b2/b1| >= 1");
    out.a1 = a1_from_ratio(out.model.theta);
    out.b1 = 0.5 * (out.a1 + 1.0 / out.a1);
    out.omega1 = out.b1 * out.model.kappa1;
    out.omega2 = out.b1 * out.model.kappa2;
    const double b1 = out.b1;
    out.limit_omegas =
        recover_omegas([&](double mu) { return b1 * psi(mu); }, psi.lambda_max(), out.a1, out.model.d);
    return {out, psi};
}

}  // namespace halfinv

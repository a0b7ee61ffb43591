#pragma once

// Characteristic function rebuilt from its zeros as a canonical product. Each
// factor 1 - mu/mu_n is paired with the matching factor of a known reference
// function so the truncated product converges quickly.

#include <cmath>
#include <complex>
#include <vector>

#include "halfinv/entire.hpp"
#include "halfinv/numerics.hpp"
#include "halfinv/spectrum.hpp"

namespace halfinv {

enum class PairingCase { mid, left };

/// Reference zero set: sin(l) (mid) or sin(l) + theta sin(l c), c = 1 - 2d (left).
struct PairingReference {
    PairingCase kind = PairingCase::mid;
    double theta = 0.0;
    double c = 1.0;

    static PairingReference mid() { return {}; }
    static PairingReference left(double theta, double d) { return {PairingCase::left, theta, 1.0 - 2.0 * d}; }

    /// prod_{n>=1} (1 - mu/rho_n), normalized to 1 at mu = 0.
    template <class T>
    T entire(T mu) const {
        if (kind == PairingCase::mid || theta == 0.0) return sinc_sqrt(mu, 1.0);
        return (sinc_sqrt(mu, 1.0) + theta * sinc_sqrt(mu, c)) / (1.0 + theta * c);
    }
    /// Nonnegative lambda-zeros, 0 first.
    std::vector<double> zeros(std::size_t count) const {
        if (kind == PairingCase::mid || theta == 0.0) {
            std::vector<double> out(count);
            for (std::size_t n = 0; n < count; ++n) out[n] = M_PI * double(n);
            return out;
        }
        return sine_combination_zeros(theta, c, count, true);
    }
};

class ProductFn {
public:
    /// `tail_mu` extends the measured eigenvalues with modelled ones (indices
    /// N, N+1, ...); they are paired with the reference like measured ones.
    ProductFn(Spectrum s, PairingReference ref, std::vector<double> tail_mu = {}, double constant = 1.0)
        : spectrum_(std::move(s)), ref_(ref), constant_(constant) {
        spectrum_.validate(true);
        mu_ = spectrum_.mu;
        mu_.insert(mu_.end(), tail_mu.begin(), tail_mu.end());
        const auto z = ref_.zeros(mu_.size());
        rho_.resize(mu_.size());
        for (std::size_t n = 0; n < mu_.size(); ++n) rho_[n] = z[n] * z[n];
        check_tail();
    }

    /// prod_n (1 - mu/mu_n) without the constant.
    template <class T>
    T unit(T mu) const {
        const double lam = std::sqrt(std::abs(mu));
        const double guard = 6e-5 * std::max(1.0, lam);
        for (std::size_t n = 1; n < rho_.size(); ++n) {
            if (std::abs(mu - rho_[n]) < guard) {
                // removable singularity of E / prod(1 - mu/rho): symmetric average
                return 0.5 * (unit_raw(mu - T(2.0 * guard)) + unit_raw(mu + T(2.0 * guard)));
            }
        }
        return unit_raw(mu);
    }

    template <class T>
    T operator()(T mu) const {
        return constant_ * unit(mu);
    }
    /// Value at lambda (mu = lambda^2).
    template <class T>
    T at_lambda(T lambda) const {
        return (*this)(lambda * lambda);
    }

    double constant() const noexcept { return constant_; }
    void set_constant(double c) { constant_ = c; }
    const Spectrum& spectrum() const noexcept { return spectrum_; }
    const PairingReference& reference() const noexcept { return ref_; }
    std::size_t factor_count() const noexcept { return mu_.size(); }
    /// Largest measured |lambda|.
    double lambda_max() const { return std::abs(spectrum_.lambda(spectrum_.size() - 1)); }
    /// False when (lambda_n - lambda_n^0) lambda_n^0 grows in the tail, i.e. the
    /// paired factors do not form an l^1 sequence.
    bool tail_converges() const noexcept { return tail_ok_; }
    double tail_growth() const noexcept { return tail_growth_; }

private:
    template <class T>
    T unit_raw(T mu) const {
        T p = T(1.0) - mu / mu_[0];
        for (std::size_t n = 1; n < mu_.size(); ++n) {
            p *= ((mu_[n] - mu) * rho_[n]) / ((rho_[n] - mu) * mu_[n]);
        }
        return p * ref_.entire(mu);
    }

    void check_tail() {
        const std::size_t n = spectrum_.size();
        if (n < 9) return;
        auto dev = [&](std::size_t k) {
            const double l0 = std::sqrt(rho_[k]);
            return std::abs(spectrum_.lambda(k) - l0) * l0;
        };
        double mid = 0.0, tail = 0.0;
        for (std::size_t k = n / 3; k < 2 * n / 3; ++k) mid += dev(k) / double(2 * n / 3 - n / 3);
        for (std::size_t k = 2 * n / 3; k < n; ++k) tail += dev(k) / double(n - 2 * n / 3);
        tail_growth_ = tail / (mid + 1.0);
        tail_ok_ = tail <= 2.0 * mid + 1.0;
    }

    Spectrum spectrum_;
    PairingReference ref_;
    double constant_ = 1.0;
    std::vector<double> mu_;
    std::vector<double> rho_;
    bool tail_ok_ = true;
    double tail_growth_ = 0.0;
};

/// Modelled eigenvalues lambda_n = n pi + ((-1)^n a + b)/(n pi) for
/// n = first .. first + count - 1, returned as mu.
inline std::vector<double> mid_tail_model(double a, double b, std::size_t first, std::size_t count) {
    std::vector<double> out;
    for (std::size_t n = first; n < first + count; ++n) {
        const double npi = M_PI * double(n);
        const double l = npi + ((n % 2 ? -a : a) + b) / npi;
        out.push_back(l * l);
    }
    return out;
}

/// Zeros of -l (sin l + theta sin l c) + k1 cos l + k2 cos l c next to the
/// reference zeros with indices first .. first + count - 1, returned as mu.
inline std::vector<double> left_tail_model(double theta, double d, double k1, double k2, std::size_t first,
                                           std::size_t count) {
    const double c = 1.0 - 2.0 * d;
    const auto z = sine_combination_zeros(theta, c, first + count, true);
    std::vector<double> out;
    for (std::size_t n = first; n < first + count; ++n) {
        double l = z[n];
        for (int it = 0; it < 8; ++it) {
            const double s = std::sin(l) + theta * std::sin(l * c);
            const double f = -l * s + k1 * std::cos(l) + k2 * std::cos(l * c);
            const double df = -s - l * (std::cos(l) + theta * c * std::cos(l * c)) - k1 * std::sin(l) -
                              k2 * c * std::sin(l * c);
            const double step = f / df;
            l -= step;
            if (std::abs(step) < 1e-15 * l) break;
        }
        out.push_back(l * l);
    }
    return out;
}

/// Default number of modelled tail eigenvalues for a spectrum of length n.
inline std::size_t default_tail_length(std::size_t n) { return std::min<std::size_t>(3 * n, 2000); }

/// C = -b1 lim lambda_m / prod(1 - lambda_m^2/mu_n) at lambda_m = pi/2 + 2 m pi,
/// m = 10, 20, 40, extrapolated in 1/lambda_m.
inline Extrapolated mid_constant(const ProductFn& p, double b1) {
    std::vector<double> xs, vs;
    for (int m : {10, 20, 40}) {
        const double l = M_PI / 2 + 2.0 * M_PI * m;
        xs.push_back(1.0 / l);
        vs.push_back(-b1 * l / p.unit(l * l));
    }
    return richardson(xs, vs);
}

/// C0 = (1/2) lim tau e^tau / prod(1 + tau^2/mu_n), tau = 20, 40, 80,
/// extrapolated in 1/tau.
inline Extrapolated left_constant(const ProductFn& p) {
    std::vector<double> xs, vs;
    for (double tau : {20.0, 40.0, 80.0}) {
        xs.push_back(1.0 / tau);
        vs.push_back(0.5 * tau * std::exp(tau) / p.unit(-tau * tau));
    }
    return richardson(xs, vs);
}

struct ProductOptions {
    std::size_t tail_length = 0;  ///< 0 selects default_tail_length
    bool use_tail_model = true;
};

/// Mid case: Phi rebuilt from eigenvalues, tail modelled from (a, b) of the
/// same spectrum, constant C from the limit at lambda_m.
inline ProductFn build_product_mid(const Spectrum& s, double b1, const AbEstimate* ab = nullptr,
                                   const ProductOptions& opt = {}) {
    std::vector<double> tail;
    if (opt.use_tail_model) {
        const AbEstimate e = ab ? *ab : extract_ab(s);
        tail = mid_tail_model(e.a, e.b, s.size(), opt.tail_length ? opt.tail_length : default_tail_length(s.size()));
    }
    ProductFn p(s, PairingReference::mid(), tail);
    p.set_constant(mid_constant(p, b1).value);
    return p;
}

/// Left-case asymptotic model of Psi = Phi / b1:
/// -l (sin l + theta sin l(1-2d)) + kappa1 cos l + kappa2 cos l(1-2d) + ...
struct LeftModel {
    double theta = 0.0;
    double d = 0.25;
    double kappa1 = 0.0;
    double kappa2 = 0.0;
};

/// Left case: Psi rebuilt from eigenvalues. Without a model the pairing is
/// against sin(l) and no tail is added; with a model the pairing uses its
/// reference zeros and the tail uses its zeros. Constant C0 from the tau limit.
inline ProductFn build_product_left(const Spectrum& s, const LeftModel* model = nullptr,
                                    const ProductOptions& opt = {}) {
    if (!model) {
        ProductFn p(s, PairingReference::mid());
        p.set_constant(left_constant(p).value);
        return p;
    }
    std::vector<double> tail;
    if (opt.use_tail_model) {
        tail = left_tail_model(model->theta, model->d, model->kappa1, model->kappa2, s.size(),
                               opt.tail_length ? opt.tail_length : default_tail_length(s.size()));
    }
    ProductFn p(s, PairingReference::left(model->theta, model->d), tail);
    p.set_constant(left_constant(p).value);
    return p;
}

}  // namespace halfinv

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "halfinv/errors.hpp"

namespace halfinv {

/// Length of each half of the unit interval.
inline constexpr double kHalf = 0.5;

/// Real samples of a potential on a uniform grid over [0, 1/2], interpolated
/// piecewise-linearly between nodes.
class PotentialHalf {
public:
    PotentialHalf() : values_{0.0, 0.0} {}

    explicit PotentialHalf(std::vector<double> values) : values_(std::move(values)) {
        if (values_.size() < 2) {
            throw InvalidArgument("PotentialHalf needs at least two samples");
        }
        for (double v : values_) {
            if (!std::isfinite(v)) throw InvalidArgument("PotentialHalf: non-finite sample");
        }
    }

    /// Samples `fn` at `n` uniform points of [0, 1/2].
    static PotentialHalf sample(const std::function<double(double)>& fn, std::size_t n) {
        if (n < 2) throw InvalidArgument("PotentialHalf::sample needs n >= 2");
        std::vector<double> v(n);
        const double step = kHalf / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) v[i] = fn(step * static_cast<double>(i));
        return PotentialHalf(std::move(v));
    }

    static PotentialHalf constant(double c, std::size_t n = 2) {
        return PotentialHalf(std::vector<double>(n, c));
    }

    std::size_t size() const noexcept { return values_.size(); }
    std::size_t cells() const noexcept { return values_.size() - 1; }
    double grid_step() const noexcept { return kHalf / static_cast<double>(cells()); }
    double node(std::size_t i) const noexcept { return grid_step() * static_cast<double>(i); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    /// Piecewise-linear interpolant; clamps outside [0, 1/2].
    double at(double x) const noexcept {
        if (x <= 0.0) return values_.front();
        if (x >= kHalf) return values_.back();
        const double s = x / grid_step();
        auto i = static_cast<std::size_t>(s);
        if (i >= cells()) i = cells() - 1;
        const double t = s - static_cast<double>(i);
        return values_[i] + t * (values_[i + 1] - values_[i]);
    }

    PotentialHalf shifted(double c) const {
        std::vector<double> v(values_);
        for (double& x : v) x += c;
        return PotentialHalf(std::move(v));
    }

    /// Resamples onto `n` uniform nodes.
    PotentialHalf resampled(std::size_t n) const {
        return sample([this](double x) { return at(x); }, n);
    }

private:
    std::vector<double> values_;
};

/// [f] = (1/2) * integral of f over [0, 1/2], composite Simpson on the samples.
/// An odd number of cells closes with Simpson's 3/8 rule on the last three.
inline double bracket_average(const PotentialHalf& f) {
    const auto v = f.values();
    const std::size_t m = f.cells();
    const double h = f.grid_step();
    double integral = 0.0;
    if (m == 1) {
        integral = 0.5 * h * (v[0] + v[1]);
    } else {
        std::size_t simpson_cells = (m % 2 == 0) ? m : m - 3;
        for (std::size_t i = 0; i + 2 <= simpson_cells; i += 2) {
            integral += h / 3.0 * (v[i] + 4.0 * v[i + 1] + v[i + 2]);
        }
        if (m % 2 == 1) {
            const std::size_t i = m - 3;
            integral += 3.0 * h / 8.0 * (v[i] + 3.0 * v[i + 1] + 3.0 * v[i + 2] + v[i + 3]);
        }
    }
    return 0.5 * integral;
}

/// Integral of the piecewise-linear interpolant over [0, x].
inline double integrate_to(const PotentialHalf& f, double x) {
    if (x <= 0.0) return 0.0;
    x = std::min(x, kHalf);
    const double h = f.grid_step();
    double acc = 0.0;
    std::size_t i = 0;
    while (i < f.cells() && f.node(i + 1) <= x) {
        acc += 0.5 * h * (f[i] + f[i + 1]);
        ++i;
    }
    if (i < f.cells() && x > f.node(i)) {
        acc += 0.5 * (x - f.node(i)) * (f[i] + f.at(x));
    }
    return acc;
}

/// Interior jump y(d+) = a1 y(d-), y'(d+) = y'(d-)/a1 + a2 y(d-).
struct JumpParams {
    double a1 = 1.0;
    double a2 = 0.0;
    double d = 0.5;

    double b1() const noexcept { return 0.5 * (a1 + 1.0 / a1); }
    double b2() const noexcept { return 0.5 * (a1 - 1.0 / a1); }
    bool at_midpoint() const noexcept { return std::abs(d - kHalf) < 1e-14; }

    /// Checks a1 > 0, 0 < d <= 1/2 and, unless disabled, |a1 - 1| + |a2| > 0.
    void validate(bool require_discontinuity = true) const {
        if (!(a1 > 0.0) || !std::isfinite(a1)) throw InvalidArgument("JumpParams: a1 must be > 0");
        if (!std::isfinite(a2)) throw InvalidArgument("JumpParams: a2 must be finite");
        if (!(d > 0.0 && d <= kHalf)) throw InvalidArgument("JumpParams: d must lie in (0, 1/2]");
        if (require_discontinuity && std::abs(a1 - 1.0) + std::abs(a2) == 0.0) {
            throw InvalidArgument("JumpParams: |a1 - 1| + |a2| must be positive");
        }
    }
};

struct BoundaryCoeffs {
    double h1 = 0.0;
    double h2 = 0.0;
};

/// Full problem: -y'' + q y = lambda^2 y on (0,1), y'(0) = h1 y(0),
/// y'(1) = -h2 y(1), jump at d. q1 = q on [0,1/2], q2(x) = q(1 - x).
struct ProblemSpec {
    PotentialHalf q1;
    PotentialHalf q2;
    BoundaryCoeffs boundary;
    JumpParams jump;

    void validate(bool require_discontinuity = true) const {
        jump.validate(require_discontinuity);
        if (!std::isfinite(boundary.h1) || !std::isfinite(boundary.h2)) {
            throw InvalidArgument("ProblemSpec: boundary coefficients must be finite");
        }
    }

    /// Problem with q -> q + c on both halves; eigenvalues shift by +c.
    ProblemSpec shifted(double c) const {
        return ProblemSpec{q1.shifted(c), q2.shifted(c), boundary, jump};
    }
};

/// y and y' at position x.
template <class T>
struct BasicSolutionState {
    T y{};
    T dy{};
    double x = 0.0;
};

using SolutionState = BasicSolutionState<double>;
using ComplexSolutionState = BasicSolutionState<std::complex<double>>;

template <class T>
inline constexpr bool is_complex_v = false;
template <class T>
inline constexpr bool is_complex_v<std::complex<T>> = true;

}  // namespace halfinv

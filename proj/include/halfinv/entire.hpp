#pragma once

// Even entire functions of lambda written in the variable mu = lambda^2, so
// that real negative mu (imaginary lambda) stays in real arithmetic.

#include <cmath>
#include <complex>

#include "halfinv/core.hpp"

namespace halfinv {

/// cos(s * sqrt(mu)).
inline double cos_sqrt(double mu, double s) {
    if (mu >= 0.0) return std::cos(s * std::sqrt(mu));
    return std::cosh(s * std::sqrt(-mu));
}

inline std::complex<double> cos_sqrt(std::complex<double> mu, double s) {
    return std::cos(s * std::sqrt(mu));
}

/// sin(s * sqrt(mu)) / sqrt(mu), equal to s at mu = 0.
inline double sinc_sqrt(double mu, double s) {
    const double z = mu * s * s;
    if (std::abs(z) < 1e-6) {
        return s * (1.0 - z / 6.0 + z * z / 120.0);
    }
    if (mu > 0.0) {
        const double r = std::sqrt(mu);
        return std::sin(s * r) / r;
    }
    const double r = std::sqrt(-mu);
    return std::sinh(s * r) / r;
}

inline std::complex<double> sinc_sqrt(std::complex<double> mu, double s) {
    const std::complex<double> z = mu * (s * s);
    if (std::abs(z) < 1e-6) {
        return s * (1.0 - z / 6.0 + z * z / 120.0);
    }
    const std::complex<double> r = std::sqrt(mu);
    return std::sin(s * r) / r;
}

/// Principal square root of mu as the "lambda" of a real eigenvalue: sqrt(mu)
/// for mu >= 0 and -sqrt(-mu) for mu < 0 (marks an imaginary lambda).
inline double signed_sqrt(double mu) {
    return mu >= 0.0 ? std::sqrt(mu) : -std::sqrt(-mu);
}

inline double signed_square(double lambda) {
    return lambda >= 0.0 ? lambda * lambda : -lambda * lambda;
}

}  // namespace halfinv

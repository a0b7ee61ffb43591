#pragma once

#include <complex>
#include <optional>

#include "halfinv/core.hpp"
#include "halfinv/entire.hpp"
#include "halfinv/propagate.hpp"

namespace halfinv {

/// Phi = a1 phi1 phi2' + phi1' phi2 / a1 + a2 phi1 phi2 (jump at the midpoint).
template <class T>
T char_fn_mid(const BasicSolutionState<T>& phi1, const BasicSolutionState<T>& phi2, const JumpParams& jump) {
    return jump.a1 * phi1.y * phi2.dy + phi1.dy * phi2.y / jump.a1 + jump.a2 * phi1.y * phi2.y;
}

/// Phi = phi1 phi2' + phi1' phi2 (jump already inside phi1).
template <class T>
T char_fn_left(const BasicSolutionState<T>& phi1, const BasicSolutionState<T>& phi2) {
    return phi1.y * phi2.dy + phi1.dy * phi2.y;
}

/// phi1(1/2) and phi2(1/2) for a full problem at spectral parameter mu.
template <class T>
struct HalfStates {
    BasicSolutionState<T> phi1;
    BasicSolutionState<T> phi2;
};

template <class T>
HalfStates<T> half_states(const ProblemSpec& p, T mu, const PropagateOptions& opt = {}) {
    std::optional<JumpParams> inner;
    if (!p.jump.at_midpoint()) inner = p.jump;
    return {propagate_mu<T>(p.q1, p.boundary.h1, mu, inner, opt),
            propagate_mu<T>(p.q2, p.boundary.h2, mu, std::nullopt, opt)};
}

/// Characteristic function of the full problem as a function of mu = lambda^2.
template <class T>
T characteristic_mu(const ProblemSpec& p, T mu, const PropagateOptions& opt = {}) {
    const auto s = half_states<T>(p, mu, opt);
    if (p.jump.at_midpoint()) return char_fn_mid(s.phi1, s.phi2, p.jump);
    return char_fn_left(s.phi1, s.phi2);
}

/// Leading term Phi0(lambda) = -lambda (b1 sin lambda + b2 sin lambda(1 - 2d)),
/// written in mu.
template <class T>
T reference_char_fn_mu(const JumpParams& j, T mu) {
    return -mu * (j.b1() * sinc_sqrt(mu, 1.0) + j.b2() * sinc_sqrt(mu, 1.0 - 2.0 * j.d));
}

}  // namespace halfinv

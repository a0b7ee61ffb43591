#pragma once

// End-to-end reconstructions. Mid case (jump at 1/2): eigenvalues + a1, h2, q2
// -> q1, h1, a2. Left case (jump inside the left half): eigenvalues + h2, q2
// -> a1, d, omegas, phi1 pair, spectral data; the last recovery step is a
// plug-in. Hypotheses are hard gates unless overridden.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "halfinv/asymptotics.hpp"
#include "halfinv/charfn.hpp"
#include "halfinv/core.hpp"
#include "halfinv/errors.hpp"
#include "halfinv/interp.hpp"
#include "halfinv/marchenko.hpp"
#include "halfinv/product.hpp"
#include "halfinv/spectrum.hpp"

namespace halfinv {

using Json = nlohmann::ordered_json;

struct InverseInputMid {
    double a1 = 1.0;
    double h2 = 0.0;
    PotentialHalf q2;
    Spectrum spectrum;
};

struct InverseInputLeft {
    double h2 = 0.0;
    PotentialHalf q2;
    Spectrum spectrum;
};

struct PipelineOptions {
    std::size_t node_count = 100;      ///< interpolation nodes per series
    std::optional<double> shift;       ///< spectral shift in mu; unset = automatic
    double auto_shift = 0.09;
    bool override_checks = false;
    std::size_t interlace_count = 20;
    std::size_t norming_count = 20;
    FsOptions fs;
    MarchenkoOptions marchenko;
    ProductOptions product;
};

namespace detail {

struct CheckLog {
    Json entries = Json::array();
    bool override_checks = false;

    void check(bool ok, const std::string& condition, const std::string& detail) {
        entries.push_back({{"condition", condition}, {"passed", ok}, {"detail", detail}});
        if (!ok && !override_checks) throw ConditionViolation(condition, detail);
    }
};

inline void check_ordering(const Spectrum& s, CheckLog& log) {
    bool ok = s.size() > 0;
    std::string detail = ok ? "eigenvalues strictly increasing" : "empty spectrum";
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
        if (!std::isfinite(s.mu[i])) {
            ok = false;
            detail = "non-finite eigenvalue at index " + std::to_string(i);
        } else if (i > 0 && !(s.mu[i] > s.mu[i - 1])) {
            ok = false;
            detail = "eigenvalue " + std::to_string(i) + " does not exceed its predecessor";
        }
    }
    log.check(ok, "ordering", detail);
}

/// Spectrum shift c: the problem with q + c has eigenvalues mu + c.
inline double choose_shift(const Spectrum& s, const PotentialHalf& q2, double h2, const PipelineOptions& opt) {
    if (opt.shift) return *opt.shift;
    const bool zero_eig = s.contains_zero(1e-10);
    const bool phi2_zero = std::abs(propagate_mu<double>(q2, h2, 0.0).y) < 1e-8;
    return (zero_eig || phi2_zero) ? opt.auto_shift : 0.0;
}

/// phi1 pair of the unshifted problem from the pair of the shifted one.
inline HalfCharFns unshift(const HalfCharFns& f, double c) {
    if (c == 0.0) return f;
    HalfCharFns g = f;
    g.eval = [e = f.eval, c](double mu) { return e(mu + c); };
    g.eval_complex = [e = f.eval_complex, c](std::complex<double> mu) { return e(mu + c); };
    return g;
}

inline Json interp_report(const InterpolationResult& r) {
    return {{"nodes", r.nu.size()},
            {"psi1_l2", r.psi1.l2_norm()},
            {"psi2_l2", r.psi2.l2_norm()},
            {"truncation_gap", r.fns.truncation_gap},
            {"truncation_unstable", r.fns.truncation_unstable}};
}

}  // namespace detail

struct MidResult {
    PotentialHalf q1;
    double h1 = 0.0;
    double a2 = 0.0;
    double shift = 0.0;
    HalfCharFns fns;  ///< reconstructed phi1(1/2, .), phi1'(1/2, .)
    MarchenkoResult marchenko;  ///< intermediate data, in the shifted spectral variable
    Json report;
};

/// Asymptotic form lambda_n = n pi + ((-1)^n a + b)/(n pi) + beta_n / n with
/// beta_n -> 0: mean |beta| over the last third must not exceed twice the mean
/// over the middle third (plus a floor for spectra that are already exact).
inline bool beta_tail_decays(const Spectrum& s, const AbEstimate& ab, double* last_mean = nullptr) {
    const std::size_t n = s.size();
    auto mean_beta = [&](std::size_t lo, std::size_t hi) {
        double acc = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            const double kp = M_PI * static_cast<double>(k);
            const double sign = k % 2 ? -1.0 : 1.0;
            acc += std::abs(static_cast<double>(k) * (s.lambda(k) - kp) - (sign * ab.a + ab.b) / M_PI);
        }
        return acc / static_cast<double>(hi - lo);
    };
    const double mid = mean_beta(n / 3, 2 * n / 3), last = mean_beta(2 * n / 3, n);
    if (last_mean) *last_mean = last;
    return last <= 2.0 * mid + 1e-6;
}

/// Algorithm for the jump at the midpoint: Phi from the eigenvalues,
/// ([q1] + h1, a2) from the asymptotics, phi1 pair by interpolation, then
/// q1 and h1 by the Marchenko equation.
inline MidResult algorithm1(const InverseInputMid& in, const PipelineOptions& opt = {}) {
    if (!(in.a1 > 0.0)) throw InvalidArgument("algorithm1: a1 must be positive");
    detail::CheckLog log{Json::array(), opt.override_checks};
    detail::check_ordering(in.spectrum, log);

    MidResult out;
    Json& rep = out.report;
    rep["case"] = "mid";
    rep["eigenvalues"] = in.spectrum.size();
    const double c = detail::choose_shift(in.spectrum, in.q2, in.h2, opt);
    out.shift = c;
    rep["shift"] = c;
    const Spectrum s = in.spectrum.shifted(c);
    const PotentialHalf q2 = in.q2.shifted(c);

    // Asymptotics of the eigenvalues, then Phi.
    const AbEstimate ab = extract_ab(s);
    double beta_last = 0.0;
    const bool beta_ok = beta_tail_decays(s, ab, &beta_last);
    rep["asymptotics"] = {{"a", ab.a}, {"b", ab.b}, {"spread", ab.spread}, {"beta_tail_mean", beta_last}};
    log.check(ab.converged && beta_ok, "asymptotic-form",
              "gamma limits spread " + std::to_string(ab.spread) + ", tail mean |beta| " + std::to_string(beta_last));
    if (std::abs(in.a1 - 1.0) < 1e-12) {
        log.check(std::abs(ab.a) > 1e-6, "unit-a1-nonzero-a", "a1 = 1 requires a != 0, got a = " + std::to_string(ab.a));
    }
    const MeanAndA2 ma = recover_mean_and_a2(ab.a, ab.b, in.a1, in.h2, bracket_average(q2));
    out.a2 = ma.a2;
    rep["mean_q1_plus_h1"] = ma.mean_q1_plus_h1 - c / 4.0;
    rep["a2"] = ma.a2;

    const double b1 = 0.5 * (in.a1 + 1.0 / in.a1);
    const ProductFn phi = build_product_mid(s, b1, &ab, opt.product);
    rep["product"] = {{"constant", phi.constant()},
                      {"tail_converges", phi.tail_converges()},
                      {"tail_growth", phi.tail_growth()},
                      {"lambda_max", phi.lambda_max()}};

    // Right-half nodes, remainder samples, interpolation.
    const auto interp = reconstruct_half_charfns([&](double mu) { return phi(mu); }, q2, in.h2,
                                                 {true, in.a1, ma.a2}, LeadingTerms::for_mid(ma.mean_q1_plus_h1),
                                                 opt.node_count);
    rep["interpolation"] = detail::interp_report(interp);
    const auto il = check_nevanlinna_interlace(interp.fns, opt.interlace_count);
    rep["interlace"] = {{"passed", il.passed}, {"message", il.message}};
    log.check(il.passed, "nevanlinna-interlace", il.message);

    // Scattering data, Marchenko equation, q1 and h1.
    const auto mr = marchenko_recover(interp.fns, opt.fs, opt.marchenko);
    out.q1 = mr.q1.shifted(-c);
    out.h1 = mr.h1.h1;
    out.fns = detail::unshift(interp.fns, c);
    out.marchenko = mr;
    const double h1_cross = ma.mean_q1_plus_h1 - mr.kernel_mean_q1;
    rep["scattering"] = {{"tail_residual", mr.fs.tail_residual},
                         {"tail_coefficients", mr.fs.tail_coeffs},
                         {"imag_residue", mr.fs.imag_residue},
                         {"unitarity_defect", mr.fs.unitarity_defect}};
    rep["kernel"] = {{"step", mr.kernel.step},
                     {"bound_states", mr.bound_states},
                     {"potential_shift", c + mr.shift},
                     {"max_condition", mr.kernel.max_condition},
                     {"ill_conditioned", mr.kernel.ill_conditioned}};
    rep["h1"] = {{"value", out.h1},
                 {"samples", mr.h1.samples},
                 {"spread", mr.h1.spread},
                 {"from_mean", h1_cross},
                 {"discrepancy", std::abs(h1_cross - out.h1)}};
    rep["mean_q1_plus_h1_marchenko"] = mr.kernel_mean_q1 - c / 4.0 + out.h1;
    rep["checks"] = log.entries;
    return out;
}

/// Norming constants alpha_n = -(d/dmu) phi1'(1/2, mu_n) * phi1(1/2, mu_n)
/// at the zeros mu_n of phi1'(1/2, .).
struct SpectralData {
    std::vector<double> mus_sq;
    std::vector<double> alphas;

    bool positive() const {
        return std::all_of(alphas.begin(), alphas.end(), [](double a) { return a > 0.0; });
    }
    bool distinct() const {
        for (std::size_t i = 1; i < mus_sq.size(); ++i)
            if (!(mus_sq[i] > mus_sq[i - 1])) return false;
        return true;
    }
};

inline SpectralData norming_constants(const HalfCharFns& fns, const std::vector<double>& mus_sq) {
    SpectralData sd;
    sd.mus_sq = mus_sq;
    sd.alphas.resize(mus_sq.size());
    parallel_for(mus_sq.size(), [&](std::size_t n) {
        const double m = mus_sq[n];
        const double h = 1e-4 * (1.0 + std::abs(m));
        auto der = [&](double x) { return fns.phi_der(x); };
        const double slope = (der(m - 2 * h) - 8 * der(m - h) + 8 * der(m + h) - der(m + 2 * h)) / (12 * h);
        sd.alphas[n] = -slope * fns.phi_val(m);
    });
    return sd;
}

struct ReferenceTriple {
    PotentialHalf q1_ref;
    double a2_ref = 0.0;
    double h1_ref = 0.0;
    SpectralData spectral_data_ref;
};

/// sum_n xi_n |mu_n| with xi_n = |mu_n - mu~_n| + |alpha_n - alpha~_n| (mu in
/// lambda form); finite when the partial sums stabilise.
struct ReferenceCloseness {
    double sum = 0.0;
    double tail_increment = 0.0;  ///< contribution of the second half of the terms
    bool passed = false;
};

inline ReferenceCloseness reference_closeness(const SpectralData& sd, const SpectralData& ref) {
    ReferenceCloseness r;
    const std::size_t n = std::min(sd.mus_sq.size(), ref.mus_sq.size());
    if (n == 0 || sd.alphas.size() < n || ref.alphas.size() < n) return r;
    for (std::size_t k = 0; k < n; ++k) {
        const double m = signed_sqrt(sd.mus_sq[k]), mr = signed_sqrt(ref.mus_sq[k]);
        const double term = (std::abs(m - mr) + std::abs(sd.alphas[k] - ref.alphas[k])) * std::abs(m);
        r.sum += term;
        if (k >= n / 2) r.tail_increment += term;
    }
    r.passed = r.tail_increment <= 0.1 * r.sum + 1e-12;
    return r;
}

struct FinalRecovery {
    PotentialHalf q1;
    double a2 = 0.0;
    double h1 = 0.0;
};

using FinalRecoveryPlugin =
    std::function<FinalRecovery(const SpectralData&, const ReferenceTriple&, double a1, double d)>;

/// Named plug-ins for the last recovery step of the left case.
class PluginRegistry {
public:
    static PluginRegistry& instance() {
        static PluginRegistry r;
        return r;
    }
    void add(const std::string& key, FinalRecoveryPlugin fn) { plugins_[key] = std::move(fn); }
    const FinalRecoveryPlugin& get(const std::string& key) const {
        const auto it = plugins_.find(key);
        if (it == plugins_.end()) throw InvalidArgument("no final-recovery plug-in registered as '" + key + "'");
        return it->second;
    }
    bool contains(const std::string& key) const { return plugins_.count(key) > 0; }

private:
    PluginRegistry() {
        plugins_[kDefaultKey] = [](const SpectralData& sd, const ReferenceTriple& ref, double, double) {
            const auto rc = reference_closeness(sd, ref.spectral_data_ref);
            if (rc.sum <= 1e-12) return FinalRecovery{ref.q1_ref, ref.a2_ref, ref.h1_ref};
            throw NotImplemented("final recovery by spectral mappings is not implemented; register a plug-in");
        };
    }
    std::map<std::string, FinalRecoveryPlugin> plugins_;

public:
    static constexpr const char* kDefaultKey = "spectral-mappings";
};

inline FinalRecovery final_recovery(const SpectralData& sd, const ReferenceTriple& ref, double a1, double d,
                                    const std::string& key = PluginRegistry::kDefaultKey) {
    const auto rc = reference_closeness(sd, ref.spectral_data_ref);
    if (!rc.passed) {
        throw ConditionViolation("reference-closeness", "sum xi_n |mu_n| does not stabilise (tail " +
                                                            std::to_string(rc.tail_increment) + " of " +
                                                            std::to_string(rc.sum) + ")");
    }
    if (!sd.positive()) throw ConditionViolation("norming-positivity", "alpha_n <= 0");
    return PluginRegistry::instance().get(key)(sd, ref, a1, d);
}

struct LeftResult {
    double a1 = 1.0;
    double d = 0.25;
    double omega1 = 0.0;
    double omega2 = 0.0;
    double shift = 0.0;
    LeftAsymptotics asymptotics;
    HalfCharFns fns;
    SpectralData sd;
    Json report;
};

/// Algorithm for the jump inside the left half, up to the spectral data of
/// the left problem with Neumann condition at 1/2.
inline LeftResult algorithm2(const InverseInputLeft& in, const PipelineOptions& opt = {}) {
    detail::CheckLog log{Json::array(), opt.override_checks};
    detail::check_ordering(in.spectrum, log);

    LeftResult out;
    Json& rep = out.report;
    rep["case"] = "left";
    rep["eigenvalues"] = in.spectrum.size();
    const double c = detail::choose_shift(in.spectrum, in.q2, in.h2, opt);
    out.shift = c;
    rep["shift"] = c;
    const Spectrum s = in.spectrum.shifted(c);
    const PotentialHalf q2 = in.q2.shifted(c);

    // Product, then a1, d and the omegas.
    LeftAsymptoticsOptions lopt;
    lopt.product = opt.product;
    auto [est, psi] = recover_left_asymptotics(s, lopt);
    log.check(psi.tail_converges(), "product-convergence",
              "tail growth " + std::to_string(psi.tail_growth()));
    const auto& m = est.model;
    log.check(std::abs(m.theta) < 1.0 && std::abs(m.theta) + std::abs(m.kappa2) > 0.0 && m.d > 0.0 && m.d < 0.5,
              "representation",
              "theta " + std::to_string(m.theta) + ", kappa2 " + std::to_string(m.kappa2) + ", d " + std::to_string(m.d));
    const double b1 = est.b1;
    const double b2 = 0.5 * (est.a1 - 1.0 / est.a1);
    out.a1 = est.a1;
    out.d = m.d;
    out.asymptotics = est;
    out.omega1 = est.omega1 - b1 * c / 2.0;
    out.omega2 = est.omega2 - b2 * c * (0.5 - m.d);
    rep["asymptotics"] = {{"a1", out.a1},
                          {"d", out.d},
                          {"theta", m.theta},
                          {"kappa1", out.omega1 / b1},
                          {"kappa2", out.omega2 / b1},
                          {"omega1", out.omega1},
                          {"omega2", out.omega2},
                          {"c0", est.c0},
                          {"fit_residual", est.fit_residual},
                          {"envelope_a1", est.envelope_estimate.a1},
                          {"envelope_d", est.envelope_estimate.d},
                          {"limit_omega1", est.limit_omegas.omega1},
                          {"limit_omega2", est.limit_omegas.omega2}};
    rep["product"] = {{"constant", psi.constant()},
                      {"tail_converges", psi.tail_converges()},
                      {"tail_growth", psi.tail_growth()},
                      {"lambda_max", psi.lambda_max()}};

    // First-order coefficients, remainder samples, interpolation.
    const double w2 = bracket_average(q2) + in.h2;
    const double f1 = est.omega1 - b1 * w2;
    const double f2 = -est.omega2 + b2 * w2;
    auto phi = [&, b1](double mu) { return b1 * psi(mu); };
    const auto interp = reconstruct_half_charfns(phi, q2, in.h2, {false, est.a1, 0.0},
                                                 LeadingTerms::for_left(est.a1, m.d, f1, f2), opt.node_count);
    rep["interpolation"] = detail::interp_report(interp);
    const auto il = check_nevanlinna_interlace(interp.fns, std::max(opt.interlace_count, opt.norming_count));
    rep["interlace"] = {{"passed", il.passed}, {"message", il.message}};

    // Spectral data of the left problem.
    std::vector<double> mus(il.zeros_der.begin(),
                            il.zeros_der.begin() + static_cast<std::ptrdiff_t>(
                                                       std::min(opt.norming_count, il.zeros_der.size())));
    SpectralData sd = norming_constants(interp.fns, mus);
    for (double& v : sd.mus_sq) v -= c;
    log.check(sd.positive(), "norming-positivity", "all alpha_n must be positive");
    log.check(sd.distinct(), "distinct-mu", "the zeros of phi1'(1/2, .) must be distinct");
    out.sd = sd;
    out.fns = detail::unshift(interp.fns, c);
    // shifting q1 by c adds b1 c/4 to f1 and -b2 c (1/2 - 2d)/2 to f2
    out.fns.f1_half = f1 - b1 * c / 4.0;
    out.fns.f2_half = f2 + b2 * c * (0.5 - 2.0 * m.d) / 2.0;
    rep["spectral_data"] = {{"mus_sq", sd.mus_sq}, {"alphas", sd.alphas}};
    rep["checks"] = log.entries;
    return out;
}

/// First-order coefficients of the left case for a known problem:
/// omega1 = b1 ([q1] + h1 + [q2] + h2) + a2/2,
/// omega2 = b2 ([q2] + h2 - h1) + a2/2 + b2 (int_d^{1/2} q1 - int_0^d q1)/2.
inline std::pair<double, double> left_omegas(const ProblemSpec& p) {
    const JumpParams& j = p.jump;
    const double b1 = j.b1(), b2 = j.b2();
    const double w2 = bracket_average(p.q2) + p.boundary.h2;
    const double ql = integrate_to(p.q1, j.d), qr = integrate_to(p.q1, kHalf) - ql;
    return {b1 * (bracket_average(p.q1) + p.boundary.h1 + w2) + 0.5 * j.a2,
            b2 * (w2 - p.boundary.h1) + 0.5 * j.a2 + 0.5 * b2 * (qr - ql)};
}

/// Forward-generated input with its ground truth.
struct SynthesizedMid {
    InverseInputMid input;
    ProblemSpec truth;
};
struct SynthesizedLeft {
    InverseInputLeft input;
    ProblemSpec truth;
};

inline Spectrum synthesize_spectrum(const ProblemSpec& p, std::size_t count) {
    if (count == 0) throw InvalidArgument("synthesize: empty spectrum requested");
    return find_eigenvalues(p, count);
}

inline SynthesizedMid synthesize_mid(const ProblemSpec& p, std::size_t count) {
    if (!p.jump.at_midpoint()) throw InvalidArgument("synthesize_mid: jump must be at 1/2");
    return {{p.jump.a1, p.boundary.h2, p.q2, synthesize_spectrum(p, count)}, p};
}

inline SynthesizedLeft synthesize_left(const ProblemSpec& p, std::size_t count) {
    if (p.jump.at_midpoint()) throw InvalidArgument("synthesize_left: jump must lie inside (0, 1/2)");
    return {{p.boundary.h2, p.q2, synthesize_spectrum(p, count)}, p};
}

}  // namespace halfinv

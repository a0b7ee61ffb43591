#pragma once

// Recovery of phi1(1/2, .) and phi1'(1/2, .) for the left half from the
// characteristic function and the right-half data: values of the remainders
// at the zeros of phi2(1/2, .) / phi2'(1/2, .), then Lagrange interpolation.
//
// All series are written in mu = lambda^2. For the odd remainder psi1 we
// interpolate psi1(lambda)/lambda, for the even psi2 we interpolate psi2
// itself; pairing the +-n terms of the lambda-form series gives exactly these.

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "halfinv/core.hpp"
#include "halfinv/entire.hpp"
#include "halfinv/numerics.hpp"
#include "halfinv/propagate.hpp"
#include "halfinv/spectrum.hpp"

namespace halfinv {

enum class NodeKind { nu, mu };

/// Zeros of phi2(1/2, .) (nu) or phi2'(1/2, .) (mu) for n >= 0, stored as
/// squares m_n = node_n^2; node(-n) = -node(n).
struct NodeSet {
    NodeKind kind = NodeKind::nu;
    std::vector<double> sq;
    std::vector<double> slope;  ///< d/dmu of the base function at m_n

    std::size_t size() const noexcept { return sq.size(); }
    double node(std::size_t n) const { return signed_sqrt(sq.at(n)); }
};

inline NodeSet compute_nodes(const PotentialHalf& q2, double h2, std::size_t count, NodeKind kind,
                             const PropagateOptions& opt = {}) {
    auto f = [&](double mu) {
        const auto s = propagate_mu<double>(q2, h2, mu, std::nullopt, opt);
        return kind == NodeKind::nu ? s.y : s.dy;
    };
    const double min_q = *std::min_element(q2.values().begin(), q2.values().end());
    double max_q = 0.0;
    for (double v : q2.values()) max_q = std::max(max_q, std::abs(v));
    const double mu_low = eigenvalue_lower_bound(min_q, std::max(0.0, -h2), kHalf);
    const double extra = std::sqrt(std::abs(mu_low) + max_q) + 2.0;
    std::vector<double> ref;
    const std::size_t want = count + static_cast<std::size_t>(extra / M_PI) + 6;
    for (std::size_t n = 0; n < want; ++n) ref.push_back(kind == NodeKind::nu ? (2.0 * n + 1.0) * M_PI : 2.0 * n * M_PI);
    NodeSet out;
    out.kind = kind;
    out.sq = find_zeros_mu(f, count, ref, mu_low, extra);
    out.slope.resize(count);
    parallel_for(count, [&](std::size_t i) {
        const auto d = propagate_mu_with_derivative<double>(q2, h2, out.sq[i], std::nullopt, opt);
        out.slope[i] = kind == NodeKind::nu ? d.d_mu.y : d.d_mu.dy;
    });
    return out;
}

enum class Symmetry { odd, even };

/// Samples of a remainder at interpolation points. For odd remainders the
/// stored values are psi(node)/node at the nu-nodes; for even remainders they
/// are psi at 0 followed by psi at the mu-nodes m_1, m_2, ...
struct EntireFnSamples {
    NodeSet nodes;
    Symmetry symmetry = Symmetry::odd;
    std::vector<double> points;  ///< interpolation points in mu
    std::vector<double> values;  ///< reduced values (see above)
    std::vector<double> slopes;  ///< derivative of the base function at each point

    /// lambda-form value at signed node index (sign = +1 or -1); real nodes only.
    double signed_value(std::size_t n, int sign) const {
        if (symmetry == Symmetry::odd) return sign * nodes.node(n) * values.at(n);
        return n == 0 ? values.at(0) : values.at(n);
    }
    double l2_norm() const {
        double s = 0.0;
        for (std::size_t n = 0; n < values.size(); ++n) {
            if (points[n] < 0.0) continue;
            const double v = symmetry == Symmetry::odd ? std::sqrt(points[n]) * values[n] : values[n];
            s += 2.0 * v * v;
        }
        return std::sqrt(s);
    }
};

enum class BaseKind { phi2_val, g };

namespace detail {

inline void require_nonzero(double v, double scale, const std::string& what) {
    if (std::abs(v) < 1e-8 * (1.0 + scale)) {
        throw NumericError("node-degeneracy: " + what + " vanishes at an interpolation node");
    }
}

}  // namespace detail

/// Lagrange (sine-type) interpolation series f(mu) = B(mu) sum_k v_k / (B'(p_k)(mu - p_k)).
class CardinalSeries {
public:
    CardinalSeries() = default;
    CardinalSeries(std::vector<double> points, std::vector<double> values, std::vector<double> slopes)
        : points_(std::move(points)), weights_(values.size()), values_(std::move(values)) {
        for (std::size_t k = 0; k < values_.size(); ++k) weights_[k] = values_[k] / slopes[k];
        truncation_ = values_.size();
    }

    /// Series value given the base function value at mu.
    template <class T>
    T evaluate(T mu, T base, std::size_t terms = 0) const {
        const std::size_t n = terms ? std::min(terms, weights_.size()) : truncation_;
        T sum{};
        for (std::size_t k = 0; k < n; ++k) {
            const T diff = mu - points_[k];
            if (std::abs(diff) < 1e-8 * (1.0 + std::abs(points_[k]))) {
                // at a node the cardinal ratio is 1, the rest is multiplied by base ~ 0
                T rest{};
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != k) rest += weights_[j] / (mu - points_[j]);
                }
                return values_[k] + base * rest;
            }
            sum += weights_[k] / diff;
        }
        return base * sum;
    }

    std::size_t size() const noexcept { return weights_.size(); }
    std::size_t truncation() const noexcept { return truncation_; }
    void set_truncation(std::size_t n) { truncation_ = std::min(n, weights_.size()); }
    const std::vector<double>& points() const noexcept { return points_; }

private:
    std::vector<double> points_;
    std::vector<double> weights_;
    std::vector<double> values_;
    std::size_t truncation_ = 0;
};

/// Right-half functions at mu and the two interpolation bases.
template <class T>
struct RightHalf {
    T phi2;
    T dphi2;
    T g;  ///< mu phi2'(mu) / (mu - m0)
};

template <class T>
RightHalf<T> right_half(const PotentialHalf& q2, double h2, double m0, T mu, const PropagateOptions& opt = {}) {
    RightHalf<T> r;
    const T diff = mu - m0;
    if (std::abs(diff) < 1e-8 * (1.0 + std::abs(m0))) {
        const auto d = propagate_mu_with_derivative<T>(q2, h2, mu, std::nullopt, opt);
        r.phi2 = d.value.y;
        r.dphi2 = d.value.dy;
        r.g = mu * d.d_mu.dy;
        return r;
    }
    const auto s = propagate_mu<T>(q2, h2, mu, std::nullopt, opt);
    r.phi2 = s.y;
    r.dphi2 = s.dy;
    r.g = mu * s.dy / diff;
    return r;
}

/// Interpolation points and base slopes for the even remainder: {0, m_1, m_2, ...}.
inline std::pair<std::vector<double>, std::vector<double>> g_points(const PotentialHalf& q2, double h2,
                                                                     const NodeSet& mu_nodes,
                                                                     const PropagateOptions& opt = {}) {
    const double m0 = mu_nodes.sq.at(0);
    std::vector<double> pts{0.0}, slopes;
    if (std::abs(m0) < 1e-8) {
        slopes.push_back(mu_nodes.slope[0]);
    } else {
        const auto s = propagate_mu<double>(q2, h2, 0.0, std::nullopt, opt);
        slopes.push_back(-s.dy / m0);
    }
    for (std::size_t n = 1; n < mu_nodes.size(); ++n) {
        const double m = mu_nodes.sq[n];
        pts.push_back(m);
        slopes.push_back(m * mu_nodes.slope[n] / (m - m0));
    }
    return {pts, slopes};
}

/// phi1(1/2, .) and phi1'(1/2, .) as functions of mu.
struct HalfCharFns {
    std::function<std::pair<double, double>(double)> eval;
    std::function<std::pair<std::complex<double>, std::complex<double>>(std::complex<double>)> eval_complex;
    double f1_half = 0.0;
    double f2_half = 0.0;
    bool truncation_unstable = false;
    double truncation_gap = 0.0;

    double phi_val(double mu) const { return eval(mu).first; }
    double phi_der(double mu) const { return eval(mu).second; }
    double phi_val_lambda(double lambda) const { return eval(lambda * lambda).first; }
    double phi_der_lambda(double lambda) const { return eval(lambda * lambda).second; }

    /// Direct propagation for a known left half (q1, h1, optional interior jump).
    static HalfCharFns from_left_half(const PotentialHalf& q1, double h1, const JumpParams& jump,
                                      const PropagateOptions& opt = {}) {
        std::optional<JumpParams> j;
        if (!jump.at_midpoint()) j = jump;
        HalfCharFns f;
        f.eval = [=](double mu) {
            const auto s = propagate_mu<double>(q1, h1, mu, j, opt);
            return std::pair<double, double>{s.y, s.dy};
        };
        f.eval_complex = [=](std::complex<double> mu) {
            const auto s = propagate_mu<std::complex<double>>(q1, h1, mu, j, opt);
            return std::pair{s.y, s.dy};
        };
        return f;
    }
};

/// Leading terms of phi1(1/2), phi1'(1/2) that are known before interpolation.
struct LeadingTerms {
    bool mid = true;
    double w1 = 0.0;  ///< [q1] + h1 (mid case)
    double b1 = 1.0, b2 = 0.0, d = 0.5, f1 = 0.0, f2 = 0.0;  ///< left case

    static LeadingTerms for_mid(double mean_sum) { return {true, mean_sum}; }
    static LeadingTerms for_left(double a1, double d, double f1, double f2) {
        return {false, 0.0, 0.5 * (a1 + 1.0 / a1), 0.5 * (a1 - 1.0 / a1), d, f1, f2};
    }

    template <class T>
    T value(T mu) const {
        if (mid) return cos_sqrt(mu, kHalf) + w1 * sinc_sqrt(mu, kHalf);
        return b1 * cos_sqrt(mu, kHalf) + b2 * cos_sqrt(mu, kHalf - 2 * d) + f1 * sinc_sqrt(mu, kHalf) +
               f2 * sinc_sqrt(mu, 2 * d - kHalf);
    }
    template <class T>
    T derivative(T mu) const {
        if (mid) return -mu * sinc_sqrt(mu, kHalf) + w1 * cos_sqrt(mu, kHalf);
        return mu * (-b1 * sinc_sqrt(mu, kHalf) + b2 * sinc_sqrt(mu, 2 * d - kHalf)) + f1 * cos_sqrt(mu, kHalf) -
               f2 * cos_sqrt(mu, 2 * d - kHalf);
    }
};

/// Jump-dependent combination used in the characteristic function.
struct Coupling {
    bool mid = true;
    double a1 = 1.0, a2 = 0.0;
};

/// Values psi1(nu_n)/nu_n from Phi at the nu-nodes.
inline EntireFnSamples psi1_samples(const std::function<double(double)>& phi, const NodeSet& nu, const PotentialHalf& q2,
                                    double h2, const Coupling& cp, const LeadingTerms& lead,
                                    const PropagateOptions& opt = {}) {
    if (nu.kind != NodeKind::nu) throw InvalidArgument("psi1_samples: nu-nodes required");
    EntireFnSamples s;
    s.nodes = nu;
    s.symmetry = Symmetry::odd;
    s.points = nu.sq;
    s.slopes = nu.slope;
    s.values.resize(nu.size());
    parallel_for(nu.size(), [&](std::size_t n) {
        const double m = nu.sq[n];
        const double dphi2 = propagate_mu<double>(q2, h2, m, std::nullopt, opt).dy;
        detail::require_nonzero(dphi2, std::sqrt(std::abs(m)), "phi2'(1/2)");
        const double scale = cp.mid ? cp.a1 : 1.0;
        s.values[n] = phi(m) / (scale * dphi2) - lead.value(m);
    });
    return s;
}

/// Values psi2 at {0, m_1, m_2, ...} from Phi at the mu-nodes and phi1 at
/// zero. phi1_at(mu) is the already reconstructed phi1(1/2, mu).
inline EntireFnSamples psi2_samples(const std::function<double(double)>& phi,
                                    const std::function<double(double)>& phi1_at, const NodeSet& mu_nodes,
                                    const PotentialHalf& q2, double h2, const Coupling& cp, const LeadingTerms& lead,
                                    const PropagateOptions& opt = {}) {
    if (mu_nodes.kind != NodeKind::mu) throw InvalidArgument("psi2_samples: mu-nodes required");
    EntireFnSamples s;
    s.nodes = mu_nodes;
    s.symmetry = Symmetry::even;
    std::tie(s.points, s.slopes) = g_points(q2, h2, mu_nodes, opt);
    s.values.resize(s.points.size());
    // phi1' from the characteristic function given phi1, phi2, phi2'
    auto dphi1 = [&](double m) {
        const auto r = propagate_mu<double>(q2, h2, m, std::nullopt, opt);
        detail::require_nonzero(r.y, std::sqrt(std::abs(m)), "phi2(1/2)");
        const double f = phi(m);
        if (cp.mid) {
            const double p1 = phi1_at(m);
            return (f - cp.a1 * p1 * r.dy - cp.a2 * p1 * r.y) * cp.a1 / r.y;
        }
        return (f - phi1_at(m) * r.dy) / r.y;
    };
    {
        const auto r0 = propagate_mu<double>(q2, h2, 0.0, std::nullopt, opt);
        if (std::abs(r0.y) < 1e-8) {
            throw InvalidArgument("psi2_samples: phi2(1/2, 0) = 0; shift the spectrum before interpolating");
        }
    }
    parallel_for(s.points.size(), [&](std::size_t n) {
        const double m = s.points[n];
        s.values[n] = dphi1(m) - lead.derivative(m);
    });
    return s;
}

/// Series for a sample set; truncation diagnostic compares N and N/2 terms on
/// lambda in [0, window].
struct SeriesCheck {
    double gap = 0.0;
    bool unstable = false;
};

/// Assembled phi1(1/2, .), phi1'(1/2, .) from the two sample sets.
class ReconstructedHalf {
public:
    ReconstructedHalf(PotentialHalf q2, double h2, double m0, CardinalSeries psi1, CardinalSeries psi2,
                      LeadingTerms lead, PropagateOptions opt = {})
        : q2_(std::move(q2)), h2_(h2), m0_(m0), psi1_(std::move(psi1)), psi2_(std::move(psi2)), lead_(lead), opt_(opt) {}

    template <class T>
    std::pair<T, T> evaluate(T mu, std::size_t terms = 0) const {
        const auto r = right_half<T>(q2_, h2_, m0_, mu, opt_);
        const T p1 = lead_.value(mu) + psi1_.evaluate(mu, r.phi2, terms ? terms : 0);
        const T p2 = lead_.derivative(mu) + psi2_.evaluate(mu, r.g, terms ? terms : 0);
        return {p1, p2};
    }
    /// Remainders alone (mu-form psi1/lambda and psi2).
    template <class T>
    std::pair<T, T> remainders(T mu, std::size_t terms = 0) const {
        const auto r = right_half<T>(q2_, h2_, m0_, mu, opt_);
        return {psi1_.evaluate(mu, r.phi2, terms), psi2_.evaluate(mu, r.g, terms)};
    }

    SeriesCheck truncation_check(double window = 40.0, double tol = 1e-4) const {
        SeriesCheck c;
        const std::size_t h1 = std::max<std::size_t>(1, psi1_.truncation() / 2);
        const std::size_t h2 = std::max<std::size_t>(1, psi2_.truncation() / 2);
        for (double l = 0.0; l <= window; l += 0.5) {
            const double mu = l * l;
            const auto r = right_half<double>(q2_, h2_, m0_, mu, opt_);
            c.gap = std::max(c.gap, std::abs(psi1_.evaluate(mu, r.phi2) - psi1_.evaluate(mu, r.phi2, h1)) *
                                        std::max(1.0, l));
            c.gap = std::max(c.gap, std::abs(psi2_.evaluate(mu, r.g) - psi2_.evaluate(mu, r.g, h2)));
        }
        c.unstable = c.gap > tol;
        return c;
    }

    const CardinalSeries& psi1() const noexcept { return psi1_; }
    const CardinalSeries& psi2() const noexcept { return psi2_; }
    const LeadingTerms& leading() const noexcept { return lead_; }

private:
    PotentialHalf q2_;
    double h2_;
    double m0_;
    CardinalSeries psi1_;
    CardinalSeries psi2_;
    LeadingTerms lead_;
    PropagateOptions opt_;
};

inline HalfCharFns assemble_half_charfns(std::shared_ptr<const ReconstructedHalf> rec, const LeadingTerms& lead) {
    HalfCharFns f;
    f.eval = [rec](double mu) { return rec->evaluate<double>(mu); };
    f.eval_complex = [rec](std::complex<double> mu) { return rec->evaluate<std::complex<double>>(mu); };
    if (!lead.mid) {
        f.f1_half = lead.f1;
        f.f2_half = lead.f2;
    }
    const auto check = rec->truncation_check();
    f.truncation_gap = check.gap;
    f.truncation_unstable = check.unstable;
    return f;
}

struct InterpolationResult {
    NodeSet nu;
    NodeSet mu;
    EntireFnSamples psi1;
    EntireFnSamples psi2;
    std::shared_ptr<const ReconstructedHalf> half;
    HalfCharFns fns;
};

/// Full reconstruction of the left-half characteristic functions from Phi.
inline InterpolationResult reconstruct_half_charfns(const std::function<double(double)>& phi, const PotentialHalf& q2,
                                                    double h2, const Coupling& cp, const LeadingTerms& lead,
                                                    std::size_t node_count, const PropagateOptions& opt = {}) {
    InterpolationResult out;
    out.nu = compute_nodes(q2, h2, node_count, NodeKind::nu, opt);
    out.mu = compute_nodes(q2, h2, node_count, NodeKind::mu, opt);
    out.psi1 = psi1_samples(phi, out.nu, q2, h2, cp, lead, opt);
    CardinalSeries s1(out.psi1.points, out.psi1.values, out.psi1.slopes);
    // phi1 at any mu from the first series (needed for the psi2 node values)
    const double m0 = out.mu.sq.at(0);
    auto phi1_at = [&](double mu) {
        const auto r = right_half<double>(q2, h2, m0, mu, opt);
        return lead.value(mu) + s1.evaluate(mu, r.phi2);
    };
    out.psi2 = psi2_samples(phi, phi1_at, out.mu, q2, h2, cp, lead, opt);
    CardinalSeries s2(out.psi2.points, out.psi2.values, out.psi2.slopes);
    out.half = std::make_shared<ReconstructedHalf>(q2, h2, m0, s1, s2, lead, opt);
    out.fns = assemble_half_charfns(out.half, lead);
    return out;
}

struct InterlaceReport {
    bool passed = true;
    std::size_t first_violation = 0;
    std::string message;
    std::vector<double> zeros_val;  ///< zeros of phi1(1/2, .) in mu
    std::vector<double> zeros_der;  ///< zeros of phi1'(1/2, .) in mu
};

/// Strict interlacing z'_0 < z_0 < z'_1 < z_1 < ... of derivative zeros z'
/// (poles of phi1/phi1') and value zeros z, all in mu.
inline InterlaceReport check_interlace(std::vector<double> zeros_val, std::vector<double> zeros_der) {
    InterlaceReport r;
    const std::size_t n = std::min(zeros_val.size(), zeros_der.size());
    for (std::size_t k = 0; k < n && r.passed; ++k) {
        if (!(zeros_der[k] < zeros_val[k])) {
            r.passed = false;
            r.first_violation = k;
        } else if (k + 1 < zeros_der.size() && !(zeros_val[k] < zeros_der[k + 1])) {
            r.passed = false;
            r.first_violation = k;
        }
    }
    r.message = r.passed ? "zeros and poles interlace"
                         : "interlacing fails at index " + std::to_string(r.first_violation);
    r.zeros_val = std::move(zeros_val);
    r.zeros_der = std::move(zeros_der);
    return r;
}

/// Zeros of both functions by a sign sweep in signed lambda, then the
/// interlacing test on the first `count` of each.
inline InterlaceReport check_nevanlinna_interlace(const HalfCharFns& fns, std::size_t count,
                                                  double lambda_floor = -40.0) {
    std::vector<double> zv, zd;
    const double step = M_PI / 64.0;
    double t = lambda_floor;
    auto at = [&](double tt) { return fns.eval(signed_square(tt)); };
    auto prev = at(t);
    auto refine = [&](double a, double b, bool value) {
        auto f = [&](double tt) { return value ? at(tt).first : at(tt).second; };
        double fa = f(a);
        for (int i = 0; i < 60; ++i) {
            const double m = 0.5 * (a + b);
            const double fm = f(m);
            if ((fa < 0.0) == (fm < 0.0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        return signed_square(0.5 * (a + b));
    };
    while ((zv.size() < count || zd.size() < count) && t < 4000.0) {
        const double tn = t + step;
        const auto cur = at(tn);
        if ((prev.first < 0.0) != (cur.first < 0.0)) zv.push_back(refine(t, tn, true));
        if ((prev.second < 0.0) != (cur.second < 0.0)) zd.push_back(refine(t, tn, false));
        prev = cur;
        t = tn;
    }
    if (zv.size() < count || zd.size() < count) throw NumericError("check_nevanlinna_interlace: zeros not found");
    zv.resize(count);
    zd.resize(count);
    return check_interlace(std::move(zv), std::move(zd));
}

}  // namespace halfinv

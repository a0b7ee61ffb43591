// Acceptance run: one pass/fail line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "halfinv/oracle.hpp"
#include "halfinv/pipelines.hpp"

using namespace halfinv;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double l2_norm(const PotentialHalf& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += (i == 0 || i + 1 == q.size() ? 0.5 : 1.0) * q[i] * q[i];
    return std::sqrt(s * q.grid_step());
}

double l2_diff(const PotentialHalf& a, const PotentialHalf& b) {
    return l2_norm(PotentialHalf::sample([&](double x) { return a.at(x) - b.at(x); }, 2049));
}

// Smooth random problem on a 256-cell grid, d on a 1/64 lattice.
ProblemSpec oracle_problem(std::mt19937& rng, bool mid) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double c1 = 2 * u(rng), c2 = 2 * u(rng), k1 = 1 + 3 * std::abs(u(rng)), k2 = 1 + 3 * std::abs(u(rng));
    const double a1 = std::exp(std::log(3.0) * u(rng));
    const double d = mid ? 0.5 : (8 + std::floor(14 * std::abs(u(rng)))) / 64.0;
    return {PotentialHalf::sample([=](double x) { return c1 * std::cos(k1 * M_PI * x); }, 257),
            PotentialHalf::sample([=](double x) { return c2 * std::sin(k2 * M_PI * x) + 0.5 * c1; }, 257),
            {u(rng), u(rng)},
            {a1, u(rng), d}};
}

// Jump at 1/2: a1 in [1/3, 3] away from 1, |h| <= 2, ||q|| <= 2.
ProblemSpec mid_problem(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double c0 = u(rng), c1 = 1.5 * u(rng), c2 = u(rng), k1 = 1 + std::floor(3 * std::abs(u(rng)));
    const double e0 = u(rng), e1 = 2 * u(rng);
    double a1 = std::exp(std::log(3.0) * u(rng));
    if (std::abs(a1 - 1.0) < 0.1) a1 = 1.0 / 3.0 + 2.0 * std::abs(a1);
    return {PotentialHalf::sample([=](double x) { return c0 + c1 * std::sin(2 * k1 * M_PI * x) + c2 * x; }, 513),
            PotentialHalf::sample([=](double x) { return e0 + e1 * std::cos(M_PI * x); }, 513),
            {2 * u(rng), 2 * u(rng)},
            {a1, u(rng), 0.5}};
}

struct MidCase {
    ProblemSpec truth;
    Spectrum spectrum;
    MidResult result;
    double seconds = 0.0;
};

const std::vector<MidCase>& mid_suite() {
    static const std::vector<MidCase> suite = [] {
        std::mt19937 rng(2024);
        std::vector<MidCase> out;
        for (int k = 0; k < 10; ++k) {
            MidCase c;
            c.truth = mid_problem(rng);
            const auto t0 = std::chrono::steady_clock::now();
            const auto syn = synthesize_mid(c.truth, 200);
            c.spectrum = syn.input.spectrum;
            c.result = algorithm1(syn.input);
            c.seconds = seconds_since(t0);
            out.push_back(std::move(c));
        }
        return out;
    }();
    return suite;
}

ProblemSpec left_problem(double a1, double a2, double d, double amp) {
    return {PotentialHalf::sample([=](double x) { return amp * std::sin(2 * M_PI * x) + 1.0; }, 513),
            PotentialHalf::sample([](double x) { return std::cos(M_PI * x); }, 513),
            {0.5, -0.3},
            {a1, a2, d}};
}

// 1. q = 0, h = 0, a2 = 0, d = 1/2: mu_n = (n pi)^2.
Outcome ac1() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (double a1 : {1.0, 2.0}) {
        const ProblemSpec p{PotentialHalf::constant(0.0), PotentialHalf::constant(0.0), {0.0, 0.0}, {a1, 0.0, 0.5}};
        const auto s = find_eigenvalues(p, 10);
        for (std::size_t n = 0; n < 10; ++n) worst = std::max(worst, std::abs(s.mu[n] - std::pow(n * M_PI, 2)));
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-10 && t < 5.0, fmt("max |mu_n - (n pi)^2| = %.2e (tol 1e-10), %.2f s (limit 5 s)", worst, t)};
}

// 2. Shooting vs extrapolated finite differences on 25 random problems.
Outcome ac2() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(7);
    double worst = 0.0;
    for (int k = 0; k < 25; ++k) {
        const auto p = oracle_problem(rng, k % 2 == 0);
        const auto fd = fd_eigenvalues(p, 20).spectrum;
        const auto sh = find_eigenvalues(p, 20);
        for (std::size_t n = 0; n < 20; ++n)
            worst = std::max(worst, std::abs(fd.mu[n] - sh.mu[n]) / std::max(1.0, std::abs(fd.mu[n])));
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-6 && t < 120.0, fmt("max relative difference %.2e (tol 1e-6), %.1f s (limit 120 s)", worst, t)};
}

// 3. (a, b) and ([q1] + h1, a2) from 200 eigenvalues.
Outcome ac3() {
    double e_ab = 0.0, e_w = 0.0;
    for (const auto& c : mid_suite()) {
        const auto& p = c.truth;
        const double w1 = bracket_average(p.q1) + p.boundary.h1;
        const double w2 = bracket_average(p.q2) + p.boundary.h2;
        const auto [a, b] = ab_from_parameters(p.jump.a1, p.jump.a2, w1, w2);
        const auto est = extract_ab(c.spectrum);
        e_ab = std::max({e_ab, std::abs(est.a - a), std::abs(est.b - b)});
        const auto m = recover_mean_and_a2(est.a, est.b, p.jump.a1, p.boundary.h2, bracket_average(p.q2));
        e_w = std::max({e_w, std::abs(m.mean_q1_plus_h1 - w1), std::abs(m.a2 - p.jump.a2)});
    }
    return {e_ab <= 2e-2 && e_w <= 2e-2,
            fmt("max (a, b) error %.2e, max ([q1]+h1, a2) error %.2e (tol 2e-2), 10 problems", e_ab, e_w)};
}

// 4. Interpolated phi1(1/2, .), phi1'(1/2, .) against propagation, ||q|| near 5.
Outcome ac4() {
    double e_val = 0.0, e_der = 0.0, qmax = 0.0;
    const std::size_t nodes = 200;
    for (double amp : {9.5, -9.0}) {
        const ProblemSpec p{PotentialHalf::sample([=](double x) { return amp * std::sin(2 * M_PI * x); }, 513),
                            PotentialHalf::sample([=](double x) { return -amp * std::cos(3 * M_PI * x); }, 513),
                            {0.5, -0.3},
                            {2.0, 1.0, 0.5}};
        qmax = std::max({qmax, l2_norm(p.q1), l2_norm(p.q2)});
        const auto spec = find_eigenvalues(p, 200);
        const auto prod = build_product_mid(spec, p.jump.b1());
        const double w1 = bracket_average(p.q1) + p.boundary.h1;
        const auto r = reconstruct_half_charfns([&](double mu) { return prod(mu); }, p.q2, p.boundary.h2,
                                                {true, p.jump.a1, p.jump.a2}, LeadingTerms::for_mid(w1), nodes);
        const auto truth = HalfCharFns::from_left_half(p.q1, p.boundary.h1, p.jump);
        for (double l = -40.0; l <= 40.0; l += 0.05) {
            const auto [v, dv] = r.fns.eval(l * l);
            const auto [tv, tdv] = truth.eval(l * l);
            e_val = std::max(e_val, std::abs(v - tv));
            e_der = std::max(e_der, std::abs(dv - tdv));
        }
    }
    return {e_val <= 1e-3 && e_der <= 1e-3,
            fmt("sup |phi err| %.2e, sup |phi' err| %.2e on [-40, 40] (tol 1e-3), %zu nodes per series, max ||q|| %.2f",
                e_val, e_der, nodes, qmax)};
}

// 5. Jump-at-midpoint round trip over the 10-problem suite.
Outcome ac5() {
    double e_q = 0.0, e_h = 0.0, e_a = 0.0, t = 0.0;
    for (const auto& c : mid_suite()) {
        e_q = std::max(e_q, l2_diff(c.result.q1, c.truth.q1));
        e_h = std::max(e_h, std::abs(c.result.h1 - c.truth.boundary.h1));
        e_a = std::max(e_a, std::abs(c.result.a2 - c.truth.jump.a2));
        t += c.seconds;
    }
    return {e_q <= 2e-2 && e_h <= 5e-3 && e_a <= 5e-3 && t < 600.0,
            fmt("max L2(q1) %.2e (tol 2e-2), |h1| %.2e (5e-3), |a2| %.2e (5e-3), %.1f s (limit 600 s)", e_q, e_h,
                e_a, t)};
}

// 6. Interior jump, up to the left spectral data, with 400 eigenvalues.
Outcome ac6() {
    struct Case {
        double a1, a2, d, amp;
    };
    double e_a1 = 0.0, e_d = 0.0, e_w = 0.0, e_alpha = 0.0;
    for (const Case& k : {Case{2.0, 0.7, 0.25, 1.0}, Case{0.5, -0.4, 0.2, 1.5}, Case{3.0, 0.3, 0.125, -1.0}}) {
        const auto p = left_problem(k.a1, k.a2, k.d, k.amp);
        const auto r = algorithm2(synthesize_left(p, 400).input);
        const auto [w1, w2] = left_omegas(p);
        e_a1 = std::max(e_a1, std::abs(r.a1 - k.a1));
        e_d = std::max(e_d, std::abs(r.d - k.d));
        e_w = std::max({e_w, std::abs(r.omega1 - w1) / std::abs(w1), std::abs(r.omega2 - w2) / std::abs(w2)});
        for (std::size_t n = 0; n < r.sd.mus_sq.size(); ++n)
            e_alpha = std::max(e_alpha, std::abs(r.sd.alphas[n] - quad_norm(p, r.sd.mus_sq[n])));
    }
    return {e_a1 <= 1e-2 && e_d <= 1e-3 && e_w <= 5e-2 && e_alpha <= 1e-6,
            fmt("|a1| %.2e (1e-2), |d| %.2e (1e-3), omega rel %.2e (5e-2), alpha %.2e (1e-6), 3 problems", e_a1, e_d,
                e_w, e_alpha)};
}

// 7. Invariants.
Outcome ac7() {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    double wr = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = oracle_problem(rng, trial % 2 == 0);
        std::optional<JumpParams> j;
        if (!p.jump.at_midpoint()) j = p.jump;
        const double mu = 200.0 * u(rng) * std::abs(u(rng)) * 5.0;
        std::vector<double> xs;
        for (int i = 0; i <= 64; ++i) xs.push_back(0.5 * i / 64.0);
        const auto a = propagate_trace(p.q1, 1.0, p.boundary.h1, mu, j, xs);
        const auto b = propagate_trace(p.q1, 0.0, 1.0, mu, j, xs);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double w = a[i].y * b[i].dy - a[i].dy * b[i].y;
            const double scale = std::max({1.0, std::abs(a[i].y * b[i].dy), std::abs(a[i].dy * b[i].y)});
            wr = std::max(wr, std::abs(w - 1.0) / scale);
        }
    }

    double unit = 0.0;
    for (const auto& c : mid_suite()) unit = std::max(unit, c.result.marchenko.fs.unitarity_defect);

    double card = 0.0;
    const auto q2 = mid_problem(rng).q2;
    const auto nu = compute_nodes(q2, 0.3, 40, NodeKind::nu);
    for (std::size_t k = 0; k < 40; ++k) {
        std::vector<double> v(40, 0.0);
        v[k] = 1.0;
        CardinalSeries s(nu.sq, v, nu.slope);
        for (std::size_t m = 0; m < 40; ++m) {
            const double base = propagate_mu<double>(q2, 0.3, nu.sq[m]).y;
            card = std::max(card, std::abs(s.evaluate(nu.sq[m], base) - (m == k ? 1.0 : 0.0)));
        }
    }

    bool interlace = true, positive = true;
    std::mt19937 rng2(7);
    for (int k = 0; k < 25; ++k) {
        const auto p = oracle_problem(rng2, k % 2 == 0);
        const auto fns = HalfCharFns::from_left_half(p.q1, p.boundary.h1, p.jump);
        const auto il = check_nevanlinna_interlace(fns, 20);
        interlace = interlace && il.passed;
        positive = positive && norming_constants(fns, il.zeros_der).positive();
    }
    for (const auto& c : mid_suite()) interlace = interlace && c.result.report["interlace"]["passed"].get<bool>();

    return {wr <= 1e-9 && unit <= 1e-6 && card <= 1e-8 && interlace && positive,
            fmt("Wronskian %.2e (1e-9), |S| defect %.2e (1e-6), cardinal %.2e (1e-8), interlacing %s, alpha > 0 %s", wr,
                unit, card, interlace ? "yes" : "NO", positive ? "yes" : "NO")};
}

// 8. Re-solving with the reconstructed data reproduces the spectrum.
Outcome ac8() {
    double worst = 0.0;
    for (const auto& c : mid_suite()) {
        ProblemSpec rec = c.truth;
        rec.q1 = c.result.q1;
        rec.boundary.h1 = c.result.h1;
        rec.jump.a2 = c.result.a2;
        const auto again = find_eigenvalues(rec, 50);
        for (std::size_t n = 0; n < 50; ++n)
            worst = std::max(worst, std::abs(again.mu[n] - c.spectrum.mu[n]) / std::max(1.0, std::abs(c.spectrum.mu[n])));
    }
    return {worst <= 1e-4, fmt("max |dmu| / max(1, |mu|) over 50 eigenvalues %.2e (tol 1e-4), 10 problems", worst)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"1 trivial spectrum", ac1},      {"2 oracle equivalence", ac2}, {"3 asymptotic extraction", ac3},
        {"4 interpolation fidelity", ac4}, {"5 jump-at-midpoint round trip", ac5},
        {"6 interior-jump round trip", ac6}, {"7 invariants", ac7},     {"8 spectrum reproduced", ac8}};
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.passed ? 0 : 1;
        std::printf("AC%s: %s  %s\n", name, o.passed ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}

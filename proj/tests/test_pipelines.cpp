#include <chrono>
#include <cmath>

#include <gtest/gtest.h>

#include "halfinv/oracle.hpp"
#include "halfinv/pipelines.hpp"

using namespace halfinv;

namespace {

double l2_diff(const PotentialHalf& a, const PotentialHalf& b) {
    const auto d = PotentialHalf::sample([&](double x) { return a.at(x) - b.at(x); }, 2049);
    double s = 0.0;
    for (double v : d.values()) s += v * v;
    return std::sqrt(s * d.grid_step());
}

ProblemSpec smooth_mid_problem() {
    return {PotentialHalf::sample([](double x) { return std::sin(2 * M_PI * x); }, 513),
            PotentialHalf::sample([](double x) { return std::cos(M_PI * x); }, 513),
            {0.5, -0.3},
            {2.0, 1.0, 0.5}};
}

ProblemSpec free_problem(double a1, double a2, double d) {
    return {PotentialHalf::constant(0.0, 513), PotentialHalf::constant(0.0, 513), {0.0, 0.0}, {a1, a2, d}};
}

}  // namespace

TEST(Algorithm1, FreeProblemRoundTrip) {
    const auto syn = synthesize_mid(free_problem(2.0, 0.0, 0.5), 200);
    const auto r = algorithm1(syn.input);
    EXPECT_LE(l2_diff(r.q1, syn.truth.q1), 1e-2);
    EXPECT_NEAR(r.h1, 0.0, 5e-3);
    EXPECT_NEAR(r.a2, 0.0, 5e-3);
    EXPECT_GT(r.shift, 0.0);
    std::printf("free: L2 %.3g h1 %.3g a2 %.3g\n", l2_diff(r.q1, syn.truth.q1), r.h1, r.a2);
}

TEST(Algorithm1, SmoothProblemRoundTrip) {
    const auto p = smooth_mid_problem();
    const auto t0 = std::chrono::steady_clock::now();
    const auto syn = synthesize_mid(p, 200);
    const auto t1 = std::chrono::steady_clock::now();
    const auto r = algorithm1(syn.input);
    const auto t2 = std::chrono::steady_clock::now();
    const double l2 = l2_diff(r.q1, p.q1);
    EXPECT_LE(l2, 2e-2);
    EXPECT_NEAR(r.h1, 0.5, 5e-3);
    EXPECT_NEAR(r.a2, 1.0, 5e-3);
    std::printf("smooth: L2 %.3g dh1 %.3g da2 %.3g  synth %.1fs recon %.1fs\n%s\n", l2, r.h1 - 0.5, r.a2 - 1.0,
                std::chrono::duration<double>(t1 - t0).count(), std::chrono::duration<double>(t2 - t1).count(),
                r.report.dump(1).c_str());
}

namespace {

ProblemSpec smooth_left_problem(double a1, double a2, double d) {
    return {PotentialHalf::sample([](double x) { return std::sin(2 * M_PI * x) + 1.0; }, 513),
            PotentialHalf::sample([](double x) { return std::cos(M_PI * x); }, 513),
            {0.5, -0.3},
            {a1, a2, d}};
}

}  // namespace

TEST(Algorithm2, FreeProblemClosedForms) {
    const auto syn = synthesize_left(free_problem(2.0, 0.0, 0.25), 200);
    const auto r = algorithm2(syn.input);
    EXPECT_NEAR(r.a1, 2.0, 1e-2);
    EXPECT_NEAR(r.d, 0.25, 1e-3);
    EXPECT_NEAR(r.omega1, 0.0, 1e-2);
    EXPECT_NEAR(r.omega2, 0.0, 1e-2);
    double err = 0.0;
    for (double l = -40; l <= 40; l += 0.25) {
        err = std::max(err, std::abs(r.fns.phi_val_lambda(l) - (1.25 * std::cos(l / 2) + 0.75 * std::cos(0.0))));
    }
    EXPECT_LE(err, 1e-3);
    std::printf("free left: a1 %.6f d %.6f w1 %.3g w2 %.3g phi err %.3g\n", r.a1, r.d, r.omega1, r.omega2, err);
}

TEST(Algorithm2, SmoothProblemSpectralData) {
    const auto p = smooth_left_problem(2.0, 0.7, 0.25);
    const auto syn = synthesize_left(p, 200);
    const auto r = algorithm2(syn.input);
    EXPECT_NEAR(r.a1, 2.0, 1e-2);
    EXPECT_NEAR(r.d, 0.25, 1e-3);
    ASSERT_EQ(r.sd.mus_sq.size(), 20u);
    EXPECT_TRUE(r.sd.positive());
    const auto truth = HalfCharFns::from_left_half(p.q1, p.boundary.h1, p.jump);
    double amax = 0.0, mmax = 0.0;
    for (std::size_t n = 0; n < r.sd.mus_sq.size(); ++n) {
        const double a = quad_norm(p, r.sd.mus_sq[n]);
        amax = std::max(amax, std::abs(a - r.sd.alphas[n]));
        mmax = std::max(mmax, std::abs(truth.phi_der(r.sd.mus_sq[n])));
    }
    std::printf("smooth left: a1 %.8f d %.8f w1 %.6f w2 %.6f alpha err %.3g  |phi'(mu_n)| %.3g\n", r.a1, r.d,
                r.omega1, r.omega2, amax, mmax);
}

TEST(Algorithm1, ReconstructionReproducesSpectrum) {
    const auto p = smooth_mid_problem();
    const auto syn = synthesize_mid(p, 200);
    const auto r = algorithm1(syn.input);
    ProblemSpec rec = p;
    rec.q1 = r.q1;
    rec.boundary.h1 = r.h1;
    rec.jump.a2 = r.a2;
    const auto again = find_eigenvalues(rec, 50);
    for (std::size_t n = 0; n < 50; ++n) {
        EXPECT_NEAR(again.mu[n], syn.input.spectrum.mu[n], 1e-4 * std::max(1.0, std::abs(again.mu[n]))) << n;
    }
}

TEST(Algorithm1, OrderingViolationIsNamed) {
    auto syn = synthesize_mid(smooth_mid_problem(), 60);
    std::swap(syn.input.spectrum.mu[10], syn.input.spectrum.mu[11]);
    try {
        (void)algorithm1(syn.input);
        FAIL() << "expected ConditionViolation";
    } catch (const ConditionViolation& e) {
        EXPECT_EQ(e.condition(), "ordering");
    }
}

TEST(Algorithm1, UnitA1NeedsNonzeroA) {
    // a1 = 1, a2 = 0: a = 0, so the data do not determine the problem.
    auto p = smooth_mid_problem();
    p.jump = {1.0, 0.0, 0.5};
    const auto syn = synthesize_mid(p, 100);
    try {
        (void)algorithm1(syn.input);
        FAIL() << "expected ConditionViolation";
    } catch (const ConditionViolation& e) {
        EXPECT_EQ(e.condition(), "unit-a1-nonzero-a");
    }
}

TEST(Algorithm1, OverrideRecordsFailedCheck) {
    auto p = smooth_mid_problem();
    p.jump = {1.0, 0.0, 0.5};
    const auto syn = synthesize_mid(p, 200);
    PipelineOptions opt;
    opt.override_checks = true;
    const auto r = algorithm1(syn.input, opt);
    bool recorded = false;
    for (const auto& c : r.report["checks"])
        if (c["condition"] == "unit-a1-nonzero-a") recorded = !c["passed"].get<bool>();
    EXPECT_TRUE(recorded);
}

TEST(Algorithm2, UnitA1IsDegenerate) {
    const auto syn = synthesize_left(smooth_left_problem(1.0, 0.5, 0.25), 200);
    try {
        (void)algorithm2(syn.input);
        FAIL() << "expected ConditionViolation";
    } catch (const ConditionViolation& e) {
        EXPECT_EQ(e.condition(), "degenerate-ratio");
    }
}

TEST(Algorithm2, OmegasMatchGroundTruth) {
    const auto p = smooth_left_problem(0.5, -0.4, 0.2);
    const auto r = algorithm2(synthesize_left(p, 200).input);
    const auto [w1, w2] = left_omegas(p);
    EXPECT_NEAR(r.a1, 0.5, 1e-2);
    EXPECT_NEAR(r.d, 0.2, 1e-3);
    EXPECT_NEAR(r.omega1, w1, 0.05 * std::abs(w1));
    EXPECT_NEAR(r.omega2, w2, 0.05 * std::abs(w2));
}

TEST(Algorithm2, ShiftDoesNotChangeResults) {
    const auto syn = synthesize_left(smooth_left_problem(2.0, 0.7, 0.25), 200);
    const auto plain = algorithm2(syn.input);
    PipelineOptions opt;
    opt.shift = 0.3;
    const auto shifted = algorithm2(syn.input, opt);
    EXPECT_NEAR(plain.a1, shifted.a1, 1e-6);
    EXPECT_NEAR(plain.d, shifted.d, 1e-6);
    EXPECT_NEAR(plain.omega1, shifted.omega1, 5e-3);
    EXPECT_NEAR(plain.omega2, shifted.omega2, 5e-3);
    for (std::size_t n = 0; n < 10; ++n) {
        EXPECT_NEAR(plain.sd.mus_sq[n], shifted.sd.mus_sq[n], 1e-4 * std::max(1.0, std::abs(plain.sd.mus_sq[n])));
        EXPECT_NEAR(plain.sd.alphas[n], shifted.sd.alphas[n], 1e-5);
    }
}

TEST(LeftOmegas, MatchLargeLambdaCoefficients) {
    // lambda (phi1(1/2) - b1 cos(l/2) - b2 cos(l(1/2-2d))) = f1 sin(l/2) + f2 sin(l(2d-1/2)) + O(1/l)
    const auto p = smooth_left_problem(2.0, 0.7, 0.25 + 1.0 / 64);
    const JumpParams& j = p.jump;
    const auto truth = HalfCharFns::from_left_half(p.q1, p.boundary.h1, j);
    Eigen::MatrixXd a(400, 2);
    Eigen::VectorXd y(400);
    for (int k = 0; k < 400; ++k) {
        const double l = 2000.0 + 0.37 * k;
        a(k, 0) = std::sin(l / 2);
        a(k, 1) = std::sin(l * (2 * j.d - 0.5));
        y(k) = l * (truth.phi_val_lambda(l) - j.b1() * std::cos(l / 2) - j.b2() * std::cos(l * (0.5 - 2 * j.d)));
    }
    const Eigen::VectorXd f = least_squares(a, y);
    const double w2 = bracket_average(p.q2) + p.boundary.h2;
    const auto [w1, w2x] = left_omegas(p);
    EXPECT_NEAR(f(0) + j.b1() * w2, w1, 1e-3);
    EXPECT_NEAR(j.b2() * w2 - f(1), w2x, 1e-3);
}

TEST(NormingConstants, FreeNeumann) {
    const auto fns = HalfCharFns::from_left_half(PotentialHalf::constant(0.0), 0.0, JumpParams{});
    std::vector<double> mus;
    for (int n = 0; n < 6; ++n) mus.push_back(std::pow(2 * n * M_PI, 2));
    const auto sd = norming_constants(fns, mus);
    EXPECT_NEAR(sd.alphas[0], 0.5, 1e-9);
    for (int n = 1; n < 6; ++n) EXPECT_NEAR(sd.alphas[n], 0.25, 1e-9);
}

TEST(NormingConstants, JumpProblemMatchesQuadrature) {
    const auto p = smooth_left_problem(1.7, -0.6, 0.3);
    const auto fns = HalfCharFns::from_left_half(p.q1, p.boundary.h1, p.jump);
    const auto zeros = check_nevanlinna_interlace(fns, 15).zeros_der;
    const auto sd = norming_constants(fns, zeros);
    for (std::size_t n = 0; n < zeros.size(); ++n) {
        EXPECT_GT(sd.alphas[n], 0.0);
        EXPECT_NEAR(sd.alphas[n], quad_norm(p, zeros[n]), 1e-6) << n;
    }
}

namespace {

// Spectral data of the free Neumann problem and a nearby perturbation whose
// differences decay fast enough for the closeness sum to settle.
SpectralData free_data(double eps) {
    SpectralData sd;
    for (int n = 0; n < 20; ++n) {
        sd.mus_sq.push_back(signed_square(2 * n * M_PI + eps / std::pow(n + 1.0, 4)));
        sd.alphas.push_back(n == 0 ? 0.5 : 0.25);
    }
    return sd;
}

}  // namespace

TEST(FinalRecovery, DefaultIsNotImplemented) {
    ReferenceTriple ref{PotentialHalf::constant(0.0), 0.0, 0.0, free_data(0.0)};
    EXPECT_TRUE(reference_closeness(free_data(0.01), ref.spectral_data_ref).passed);
    EXPECT_THROW(final_recovery(free_data(0.01), ref, 2.0, 0.25), NotImplemented);
}

TEST(FinalRecovery, DivergentClosenessIsAViolation) {
    SpectralData far = free_data(0.0);
    for (std::size_t n = 0; n < far.mus_sq.size(); ++n) far.alphas[n] += 0.01;
    ReferenceTriple ref{PotentialHalf::constant(0.0), 0.0, 0.0, free_data(0.0)};
    EXPECT_THROW(final_recovery(far, ref, 2.0, 0.25), ConditionViolation);
}

TEST(FinalRecovery, IdenticalDataIsFixedPoint) {
    SpectralData sd{{0.0, 40.0, 160.0}, {0.5, 0.25, 0.25}};
    ReferenceTriple ref{PotentialHalf::constant(0.3), 0.7, -0.2, sd};
    const auto r = final_recovery(sd, ref, 2.0, 0.25);
    EXPECT_EQ(r.q1.values()[0], 0.3);
    EXPECT_EQ(r.a2, 0.7);
    EXPECT_EQ(r.h1, -0.2);
}

TEST(FinalRecovery, RegisteredPluginIsUsed) {
    PluginRegistry::instance().add("test-constant", [](const SpectralData&, const ReferenceTriple& ref, double, double) {
        return FinalRecovery{ref.q1_ref, 1.5, 2.5};
    });
    const SpectralData sd = free_data(0.01);
    ReferenceTriple ref{PotentialHalf::constant(0.0), 0.0, 0.0, free_data(0.0)};
    const auto r = final_recovery(sd, ref, 2.0, 0.25, "test-constant");
    EXPECT_EQ(r.a2, 1.5);
    EXPECT_THROW(final_recovery(sd, ref, 2.0, 0.25, "missing"), InvalidArgument);
}

TEST(Synthesize, TrivialSpectrum) {
    const auto s = synthesize_mid(free_problem(1.0, 0.0, 0.5), 10).input.spectrum;
    for (std::size_t n = 0; n < 10; ++n) EXPECT_NEAR(s.lambda(n), n * M_PI, 1e-10);
}

TEST(Synthesize, JumpSpectrumSolvesTrigonometricEquation) {
    // q = 0, h = 0: Phi = -l (b1 sin l + b2 sin l(1 - 2d)).
    const JumpParams j{2.0, 0.0, 0.25};
    const auto s = synthesize_left(free_problem(2.0, 0.0, 0.25), 20).input.spectrum;
    for (std::size_t n = 1; n < 20; ++n) {
        const double l = s.lambda(n);
        EXPECT_NEAR(j.b1() * std::sin(l) + j.b2() * std::sin(l * 0.5), 0.0, 1e-9) << n;
    }
}

TEST(Synthesize, EmptyCountRejected) {
    EXPECT_THROW(synthesize_mid(free_problem(2.0, 0.0, 0.5), 0), InvalidArgument);
}

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "halfinv/charfn.hpp"
#include "halfinv/oracle.hpp"

using namespace halfinv;

namespace {

ProblemSpec free_problem(double a1, double a2, double d, double h1 = 0.0, double h2 = 0.0) {
    return {PotentialHalf::constant(0.0, 65), PotentialHalf::constant(0.0, 65), {h1, h2}, {a1, a2, d}};
}

// Smooth random problem on a 256-cell grid; d on a 1/64 lattice.
ProblemSpec random_problem(std::mt19937& rng, bool mid) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double c1 = 2 * u(rng), c2 = 2 * u(rng), k1 = 1 + 3 * std::abs(u(rng)), k2 = 1 + 3 * std::abs(u(rng));
    const double a1 = std::exp(std::log(3.0) * u(rng));
    const double d = mid ? 0.5 : (8 + std::floor(14 * std::abs(u(rng)))) / 64.0;
    return {PotentialHalf::sample([=](double x) { return c1 * std::cos(k1 * M_PI * x); }, 257),
            PotentialHalf::sample([=](double x) { return c2 * std::sin(k2 * M_PI * x) + 0.5 * c1; }, 257),
            {u(rng), u(rng)},
            {a1, u(rng), d}};
}

}  // namespace

TEST(FdEigenvalues, FreeUnitJump) {
    const auto s = fd_eigenvalues(free_problem(1.0, 0.0, 0.5), 10).spectrum;
    for (std::size_t n = 0; n < 10; ++n) EXPECT_NEAR(s.mu[n], std::pow(n * M_PI, 2), 1e-6 * std::max(1.0, s.mu[n]));
}

TEST(FdEigenvalues, FreeScaledJumpMidpoint) {
    const auto s = fd_eigenvalues(free_problem(2.0, 0.0, 0.5), 10).spectrum;
    for (std::size_t n = 0; n < 10; ++n) EXPECT_NEAR(s.mu[n], std::pow(n * M_PI, 2), 1e-6 * std::max(1.0, s.mu[n]));
}

TEST(FdEigenvalues, AgreesWithShooting) {
    std::mt19937 rng(7);
    for (int k = 0; k < 4; ++k) {
        const auto p = random_problem(rng, k % 2 == 0);
        const auto fd = fd_eigenvalues(p, 20).spectrum;
        const auto sh = find_eigenvalues(p, 20);
        for (std::size_t n = 0; n < 20; ++n) {
            EXPECT_NEAR(fd.mu[n], sh.mu[n], 1e-6 * std::max(1.0, std::abs(sh.mu[n]))) << k << " " << n;
        }
    }
}

TEST(FdEigenvalues, JumpOffGridRejected) {
    auto p = free_problem(2.0, 0.0, 0.25);
    p.jump.d = 0.25 + 1e-7;
    EXPECT_THROW(fd_eigenvalues(p, 5), InvalidArgument);
}

TEST(QuadNorm, FreeNeumannValues) {
    const auto p = free_problem(1.0, 0.0, 0.5);
    EXPECT_NEAR(quad_norm(p, 0.0), 0.5, 1e-12);
    for (int n = 1; n <= 5; ++n) EXPECT_NEAR(quad_norm(p, std::pow(2 * n * M_PI, 2)), 0.25, 1e-10);
}

TEST(QuadNorm, FreeJumpMatchesClosedForm) {
    // phi = cos(l x) on [0,d), a1 cos(l d) cos(l(x-d)) - sin(l d) sin(l(x-d)) / a1 on (d, 1/2].
    const double a1 = 2.0, d = 0.25, l = 3.0;
    const auto p = free_problem(a1, 0.0, d);
    const double A = a1 * std::cos(l * d), B = -std::sin(l * d) / a1, L = 0.5 - d;
    const double left = d / 2 + std::sin(2 * l * d) / (4 * l);
    const double right = A * A * (L / 2 + std::sin(2 * l * L) / (4 * l)) + B * B * (L / 2 - std::sin(2 * l * L) / (4 * l)) +
                         A * B * (1 - std::cos(2 * l * L)) / (2 * l);
    EXPECT_NEAR(quad_norm(p, l * l), left + right, 1e-10);
}

TEST(QuadNorm, AlwaysPositive) {
    std::mt19937 rng(3);
    for (int k = 0; k < 10; ++k) {
        const auto p = random_problem(rng, k % 2 == 0);
        EXPECT_GT(quad_norm(p, 50.0 * k - 20.0), 0.0);
    }
}

TEST(ClosedFormQ0, UnitJump) {
    const auto s = closed_form_q0({1.0, 0.0, 0.5}, 0.0, 2.3);
    EXPECT_NEAR(s.y, std::cos(1.15), 1e-14);
    EXPECT_NEAR(s.dy, -2.3 * std::sin(1.15), 1e-14);
}

TEST(ClosedFormQ0, MatchesPropagation) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto zero = PotentialHalf::constant(0.0);
    for (int k = 0; k < 100; ++k) {
        const JumpParams j{0.3 + 2.7 * u(rng), 4 * u(rng) - 2, 0.05 + 0.4 * u(rng)};
        const double h = 4 * u(rng) - 2, l = 40 * u(rng);
        const auto c = closed_form_q0(j, h, l);
        const auto s = propagate<double>(zero, h, l, j);
        const double scale = 1 + l;
        EXPECT_NEAR(c.y, s.y, 1e-10 * scale);
        EXPECT_NEAR(c.dy, s.dy, 1e-10 * scale * scale);
    }
}

TEST(ClosedFormQ0, A2TermsEnterFirstOrderCoefficient) {
    // For large lambda, phi1'(1/2) / lambda ~ -b1 sin(l/2) - b2 sin(l(1/2 - 2d))
    // + (f1 cos(l/2) - f2 cos(l(2d - 1/2))) / lambda with f1 = b1 h + a2/2.
    const double a1 = 2.0, a2 = 0.8, d = 0.2, h = 0.3;
    const JumpParams j{a1, a2, d};
    const double b1 = j.b1(), b2 = j.b2();
    const double f1 = b1 * h + a2 / 2, f2 = b2 * h - a2 / 2;
    for (double l : {400.0, 900.0}) {
        const auto s = closed_form_q0(j, h, l);
        const double lead = -b1 * std::sin(l / 2) * l + b2 * std::sin(l * (2 * d - 0.5)) * l;
        const double first = f1 * std::cos(l / 2) - f2 * std::cos(l * (2 * d - 0.5));
        EXPECT_NEAR(s.dy - lead, first, 5.0 / l);
    }
}

#include "doctest.h"

#include <cmath>

#include "nlsa/spectral.hpp"

using namespace nlsa;

// Weighted problem L_a f = nu W^4 f on the radial sector has nu = (2k+1)(2k+3)/3
// (stereographic projection to the sphere, then rho = r^beta removes a).
// The H^1_a pencils are 1 - c/nu: c=5 gives -4, 0, 4/7; c=1 gives 0, 4/5, 32/35.
TEST_CASE("pencil eigenvalues against the weighted problem") {
    for (double a : {-0.08, -0.05, -0.02}) {
        CAPTURE(a);
        const PhysParams p(a);
        auto s0 = make_sector(build_grid(p, 512, 200.0), 0);
        const auto g = gap_estimates(assemble_sector_op(s0, 5), assemble_sector_op(s0, 1), 4);
        CHECK(g.pencil5(0) == doctest::Approx(-4.0).epsilon(1e-6));
        CHECK(std::abs(g.pencil5(1)) < 1e-6);
        CHECK(g.lambda3 == doctest::Approx(4.0 / 7.0).epsilon(1e-5));
        CHECK(std::abs(g.pencil1(0)) < 1e-6);
        CHECK(g.tilde_lambda2 == doctest::Approx(0.8).epsilon(1e-5));
        CHECK(g.pencil1(2) == doctest::Approx(32.0 / 35.0).epsilon(1e-5));
        CHECK(g.interlaced);
        CHECK(g.ok);
    }
}

TEST_CASE("sector spectra") {
    const PhysParams p(-0.04);
    auto g1 = build_grid(p, 512, 200.0);
    auto g2 = build_grid(p, 1024, 200.0);
    auto s1 = make_sector(g1, 0), s2 = make_sector(g2, 0);
    auto c5a = sector_spectrum(assemble_sector_op(s1, 5), 5);
    auto c5b = sector_spectrum(assemble_sector_op(s2, 5), 5);
    const double tol = kernel_tolerance(c5a, c5b);
    flag_kernel(c5a, tol);
    flag_kernel(c5b, tol);
    CHECK(c5b.orthonormality_error < 1e-10);
    CHECK(c5b.negative_count == 1);
    REQUIRE(c5b.kernel.size() == 1);
    CHECK(c5b.kernel[0] == 1);
    const GroundState gs = eval_ground_state(s2);
    CHECK(l2_cosine(c5b.eigenvectors.col(1), gs.W1.phi.real(), s2->mass()) >= 0.999);

    auto c1 = sector_spectrum(assemble_sector_op(s2, 1), 3, tol);
    CHECK(c1.negative_count == 0);
    REQUIRE(c1.kernel.size() == 1);
    CHECK(l2_cosine(c1.eigenvectors.col(0), gs.W.phi.real(), s2->mass()) >= 0.999);
    CHECK(c1.eigenvalues(1) > 0);

    auto l1 = make_sector(g2, 1);
    auto l2 = make_sector(g2, 2);
    auto e1 = sector_spectrum(assemble_sector_op(l1, 5), 2);
    auto e2 = sector_spectrum(assemble_sector_op(l2, 5), 2);
    CHECK(e1.eigenvalues(0) > 0);
    CHECK(e2.eigenvalues(0) > e1.eigenvalues(0));
}

TEST_CASE("frobenius exponents") {
    auto [sp, sm] = frobenius_exponents(-0.2, 1);
    CHECK(sp == doctest::Approx(0.931782).epsilon(1e-6));
    CHECK(sp == doctest::Approx(-0.5 + 0.5 * std::sqrt(9.0 - 0.8)));
    CHECK(sm == doctest::Approx(-0.5 - 0.5 * std::sqrt(9.0 - 0.8)));
    CHECK(frobenius_exponents(-0.04, 0).first == doctest::Approx(-0.0417424).epsilon(1e-5));
    CHECK(frobenius_exponents(-1e-12, 1).first == doctest::Approx(1.0).epsilon(1e-9));

    const PhysParams p(-0.05);
    auto l1 = make_sector(build_grid(p, 1024, 200.0), 1);
    auto e1 = sector_spectrum(assemble_sector_op(l1, 5), 1);
    const double slope = boundary_slope(*l1, e1.eigenvectors.col(0));
    CHECK(std::abs(slope / p.s_plus(1) - 1.0) < 0.05);
}

TEST_CASE("trichotomy pair") {
    const PhysParams p(-0.04);
    const GroundState gs = eval_ground_state(p, build_grid(p, 512, 200.0));
    const auto t = solve_trichotomy(gs);
    CHECK(t.e0 == doctest::Approx(2.0753047).epsilon(1e-4));
    CHECK(t.real_positive_count == 1);
    CHECK(t.near_zero_count == 2);
    CHECK(t.residual < 1e-6);  // rounding floor ~ eps * ||M^{-1}K||
    CHECK(t.pair_pm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(t.pair_pp) < 1e-8);
    CHECK(std::abs(t.pair_mm) < 1e-8);
    CHECK(std::abs(t.identity_lhs / t.identity_rhs - 1.0) < 1e-6);
    CHECK(norm_a(t.Vplus) == doctest::Approx(norm_a(t.Vminus)).epsilon(1e-12));
    CHECK(t.center_max_real < 1e-6);
}

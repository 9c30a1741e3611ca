#include "doctest.h"

#include <cmath>

#include "nlsa/ground_state.hpp"

using namespace nlsa;

namespace {

GroundState make_gs(double a, int n = 1024) {
    const PhysParams p(a);
    return eval_ground_state(p, build_grid(p, n, 200.0));
}

}  // namespace

TEST_CASE("ground state residual and norms") {
    for (double a : {-0.08, -0.05, -0.02}) {
        CAPTURE(a);
        const auto gs = make_gs(a);
        CHECK(ground_state_residual(gs) <= 1e-6);
        CHECK(gs.M == doctest::Approx(gs.M_exact).epsilon(1e-8));
        CHECK(gs.int_W6 == doctest::Approx(gs.M_exact).epsilon(1e-8));
        CHECK(gs.E == doctest::Approx(gs.M_exact / 3.0).epsilon(1e-8));
    }
}

TEST_CASE("energy limit as a -> 0") {
    const auto gs = make_gs(-1e-5);
    CHECK(gs.E == doctest::Approx(std::sqrt(3.0) * kPi * kPi / 4.0).epsilon(1e-4));
}

TEST_CASE("closed-form generators against finite differences") {
    const PhysParams p(-0.06);
    for (double r : {1e-3, 0.3, 1.0, 7.0, 150.0}) {
        const double h = 1e-5 * r;
        const double dW = (ground_state_profile(p, r + h) - ground_state_profile(p, r - h)) / (2 * h);
        CHECK(scaling_generator(p, r) == doctest::Approx(r * dW + 0.5 * ground_state_profile(p, r)).epsilon(1e-7));
        const double dW1 = (scaling_generator(p, r + h) - scaling_generator(p, r - h)) / (2 * h);
        CHECK(scaling_generator2(p, r) == doctest::Approx(r * dW1 + 0.5 * scaling_generator(p, r)).epsilon(1e-6));
    }
}

TEST_CASE("W1 is orthogonal to W and iW") {
    const auto gs = make_gs(-0.04);
    CHECK(std::abs(inner_a(gs.W, gs.W1)) <= 1e-8 * gs.M);
    CHECK(std::abs(inner_a(gs.W * cplx(0, 1), gs.W)) <= 1e-14 * gs.M);
}

TEST_CASE("symmetry action") {
    const auto gs = make_gs(-0.04);
    const SymmetryAction g{0.7, 1.5};
    const RadialField a = g.apply(gs.W);
    const RadialField b = scaled_W(gs, 0.7, 1.5);
    CHECK(norm_a(a - b) <= 1e-4 * std::sqrt(gs.M));
    const RadialField back = g.inverse().apply(a);
    CHECK(norm_a(back - gs.W) <= 2e-4 * std::sqrt(gs.M));
    CHECK(std::abs(inner_a(b, b) - gs.M) <= 1e-6 * gs.M);
    const RadialField c = scaled_W(gs, 1.0, 3.0);
    CHECK(std::abs(inner_a(c, c) - gs.M) <= 1e-6 * gs.M);
}

TEST_CASE("polished discrete ground state") {
    const auto gs = make_gs(-0.04, 512);
    const auto pr = polish_ground_state(gs);
    CHECK(pr.residual_after < 1e-9);
    CHECK(pr.residual_after < pr.residual_before);
    CHECK(stationary_residual(pr.field) == doctest::Approx(pr.residual_after).epsilon(1e-6));
    CHECK(norm_a(pr.field - gs.W) <= 1e-5 * std::sqrt(gs.M));
}

TEST_CASE("sharp Sobolev inequality") {
    const auto gs = make_gs(-0.05);
    std::vector<SobolevSample> samples;
    samples.push_back({"W", gs.W, true});
    samples.push_back({"2 W(3x)", scaled_W(gs, 0.0, 1.0 / 3.0) * 2.0, true});
    const RadialField gauss = field_from_u(gs.sector, [](double r) { return cplx(std::exp(-r * r)); });
    samples.push_back({"gaussian", gauss, false});
    samples.push_back({"W + gaussian", gs.W + gauss * 0.2, false});
    samples.push_back({"0.5 W", gs.W * 0.5, false});
    const auto rep = sharp_sobolev_check(gs, samples);
    CHECK(rep.ok);
    CHECK(rep.rows[2].deficit > 1e-3);
    CHECK(rep.rows[4].coercivity_checked);
}

#include "doctest.h"

#include <cmath>

#include "nlsa/errors.hpp"
#include "nlsa/threshold.hpp"

using namespace nlsa;

namespace {

const ThresholdSetup& setup() {
    static const ThresholdSetup s = [] {
        PhysParams p{-0.04};
        return make_threshold_setup(eval_ground_state(p, build_grid(p, 512, 200.0)));
    }();
    return s;
}

}  // namespace

TEST_CASE("line and rate fits") {
    const LineFit f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    REQUIRE(f.ok);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK_FALSE(fit_line({1.0}, {2.0}).ok);
    CHECK_FALSE(fit_line({1, 1, 1}, {1, 2, 3}).ok);

    std::vector<double> t, q;
    for (int i = 0; i <= 400; ++i) {
        t.push_back(0.025 * i);
        // decay, then a growing tail inside the window
        q.push_back(std::exp(-1.7 * t.back()) + 1e-9 * std::exp(2.0 * t.back()));
    }
    const RateFit r = fit_log_rate(t, q, 1e-6, 1.0);
    REQUIRE(r.ok);
    CHECK(std::abs(r.rate + 1.7) < 5e-3);
    CHECK(r.r2 > 0.9999);
    CHECK(r.efoldings > 3.0);
    CHECK_FALSE(fit_log_rate(t, q, 10.0, 20.0).ok);
}

TEST_CASE("fixed point at zero seed is zero") {
    const LPState st = lp_solve(setup(), 0.0);
    CHECK(st.converged);
    CHECK(st.y0_plus == 0.0);
    CHECK(st.vc0_norm == 0.0);
}

TEST_CASE("fixed point is quadratically tangent to the stable direction") {
    const ThresholdSetup& s = setup();
    std::vector<double> x, y;
    for (double y0 : {1e-2, 5e-3}) {
        const LPState st = lp_solve(s, y0);
        REQUIRE(st.converged);
        CHECK(st.contraction <= 0.9);
        CHECK(st.lambda == s.trich.e0);
        // the stable coordinate of v(0) is the seed itself
        CHECK(std::abs(s.trich.y_minus(st.v0.phi) - y0) <= 1e-12 * y0);
        CHECK(std::abs(s.trich.y_plus(st.v0.phi) - st.y0_plus) <= 1e-12 * y0);
        CHECK(st.ball <= 1.1 * y0);
        x.push_back(std::log(y0));
        y.push_back(std::log(std::abs(st.y0_plus) + st.vc0_norm));
    }
    CHECK(std::abs(fit_line(x, y).slope - 2.0) < 0.1);
    LPOptions bad;
    bad.lambda = 2.0 * s.trich.e0;
    CHECK_THROWS_AS(lp_solve(s, 1e-3, bad), UsageError);
}

TEST_CASE("minus branch stays below the ground state and decays at e0") {
    const ThresholdSetup& s = setup();
    const ThresholdOrbit o = build_threshold_orbit(s, Branch::Minus, 1e-3, 5.0);
    CHECK(o.one_sided);
    REQUIRE(o.decay.ok);
    CHECK(std::abs(-o.decay.rate / s.trich.e0 - 1.0) < 1e-2);
    CHECK(o.record.samples.front().kinetic < s.gs.M);
}

TEST_CASE("unstable direction grows at e0") {
    const ThresholdSetup& s = setup();
    const GrowthRun g = unstable_growth(s, 1e-4, 3.0);
    REQUIRE(g.fit.ok);
    CHECK(std::abs(g.fit.rate / s.trich.e0 - 1.0) < 0.02);
}

TEST_CASE("truncated datum sits on the threshold energy above the ground state") {
    PhysParams p{-0.04};
    const GroundState gs = eval_ground_state(p, build_grid(p, 512, 200.0));
    const BlowupDatum b = tune_blowup_datum(gs, 5.0);
    CHECK(b.c > 1.0);
    CHECK(std::abs(b.energy_gap) < 1e-12);
    CHECK(b.kinetic_excess > 0.0);
    CHECK_THROWS_AS(tune_blowup_datum(gs, 500.0), UsageError);
}

TEST_CASE("classification of short runs") {
    const ThresholdSetup& s = setup();
    ClassifyBudget b;
    b.t_end = 2.0;
    ClassificationVerdict v = classify(s.gs, s.gs.W, b);
    CHECK(v.label == Verdict::StationaryManifold);
    CHECK(v.max_d <= 1e-8);

    const RadialField low(s.gs.sector, 0.9 * s.gs.W.phi);
    v = classify(s.gs, low, b);
    CHECK(v.label != Verdict::StationaryManifold);
    CHECK(v.label != Verdict::BlowsUp);
    CHECK(v.final_kinetic < 1.0);
    CHECK(to_string(Verdict::ConvergesToW) == "converges-to-W");
    CHECK(to_string(Branch::Minus) == "minus");
}

#include "doctest.h"

#include <cmath>

#include "nlsa/modulation.hpp"
#include "nlsa/virial.hpp"

using namespace nlsa;

namespace {

struct Fixture {
    PhysParams p{-0.04};
    GroundState gs = eval_ground_state(p, build_grid(p, 512, 200.0));
    RadialField shell(cplx amp, double r0, double w, double mu = 1.0) const {
        // g_{0,mu} applied in closed form
        return field_from_u(gs.sector, [&](double r) {
            const double x = r / mu;
            return amp * std::pow(mu, -0.5) * std::exp(-(x - r0) * (x - r0) / (w * w));
        });
    }
};

}  // namespace

TEST_CASE("distance") {
    Fixture F;
    CHECK(distance(F.gs, F.gs.W) <= 1e-14 * F.gs.M);
    const RadialField u(F.gs.sector, 1.01 * F.gs.W.phi);
    CHECK(std::abs(distance(F.gs, u) / F.gs.M - 0.0201) < 1e-12);
    CHECK(distance(F.gs, scaled_W(F.gs, 1.0, 3.0)) <= 1e-6 * F.gs.M);
}

TEST_CASE("modulation fit recovers symmetry parameters") {
    Fixture F;
    ModulationFit f = fit_modulation(F.gs, F.gs.W);
    REQUIRE(f.ok);
    // discrete <W, W1>_a is ~1e-10 M, so mu = 1 only to that level
    CHECK(std::abs(f.theta) < 1e-12);
    CHECK(std::abs(f.mu - 1.0) < 1e-9);
    CHECK(std::abs(f.alpha) < 1e-12);
    CHECK(f.v_norm < 1e-10 * std::sqrt(F.gs.M));

    f = fit_modulation(F.gs, scaled_W(F.gs, 0.3, 2.0));
    REQUIRE(f.ok);
    CHECK(std::abs(f.theta - 0.3) < 1e-8);
    CHECK(std::abs(f.mu - 2.0) < 1e-8);
    CHECK(std::abs(f.alpha) < 1e-8);
    CHECK(std::abs(f.J0) <= 1e-9);
    CHECK(std::abs(f.J1) <= 1e-9);

    f = fit_modulation(F.gs, RadialField(F.gs.sector, 1.01 * F.gs.W.phi));
    REQUIRE(f.ok);
    CHECK(std::abs(f.theta) < 1e-9);
    CHECK(std::abs(f.mu - 1.0) < 1e-9);
    CHECK(std::abs(f.alpha - 0.01) < 1e-12);
    CHECK(f.v_norm < 1e-8 * std::sqrt(F.gs.M));
}

TEST_CASE("modulation residual is orthogonal to the symmetry directions") {
    Fixture F;
    const RadialField gW = scaled_W(F.gs, -2.0, 0.6);
    const RadialField u(F.gs.sector, gW.phi + F.shell(cplx(0.02, 0.05), 3.0, 1.0).phi);
    const ModulationFit f = fit_modulation(F.gs, u);
    REQUIRE(f.ok);
    const RadialField W = scaled_W(F.gs, f.theta, f.mu);
    const RadialField iW(F.gs.sector, cplx(0, 1) * W.phi);
    const RadialField W1 = scaled_W1(F.gs, f.theta, f.mu);
    const double s = norm_a(f.v) * std::sqrt(F.gs.M);
    CHECK(std::abs(inner_a(f.v, W)) <= 1e-9 * s);
    CHECK(std::abs(inner_a(f.v, iW)) <= 1e-9 * s);
    CHECK(std::abs(inner_a(f.v, W1)) <= 1e-9 * s);
}

TEST_CASE("fit refuses data far from the manifold") {
    Fixture F;
    const RadialField u(F.gs.sector, 1.5 * F.gs.W.phi);
    const ModulationFit f = fit_modulation(F.gs, u);
    CHECK_FALSE(f.ok);
    CHECK(!f.message.empty());
}

TEST_CASE("default delta0 lies below the calibrated threshold") {
    Fixture F;
    const Delta0Calibration cal = calibrate_delta0(F.gs, 12345, 100);
    CHECK(cal.d.size() == 600);
    CHECK(cal.delta0 > 0.0);
    CHECK(kDefaultDelta0 <= cal.delta0);
}

TEST_CASE("cutoff profile") {
    const CutoffProfile& c = default_cutoff();
    double max_d2 = -INFINITY;
    for (int i = 0; i <= 20000; ++i) {
        const double s = 5.0 * i / 20000;
        max_d2 = std::max(max_d2, c.d2phi(s));
        if (s <= 1.0) CHECK(c.phi(s) == doctest::Approx(s * s));
        if (s >= c.support()) CHECK(c.phi(s) == 0.0);
    }
    CHECK(max_d2 <= 2.0 + 1e-12);
    CHECK(std::abs(c.phi(c.support() - 1e-9)) < 1e-12);
    // derivatives against differences
    for (double s : {1.3, 1.9, 2.5, 3.4}) {
        const double h = 1e-4;
        CHECK(std::abs((c.phi(s + h) - c.phi(s - h)) / (2 * h) - c.dphi(s)) < 1e-7);
        CHECK(std::abs((c.dphi(s + h) - c.dphi(s - h)) / (2 * h) - c.d2phi(s)) < 1e-6);
        const double f1 = (c.lap(s + h) - c.lap(s - h)) / (2 * h);
        const double f2 = (c.lap(s + h) - 2 * c.lap(s) + c.lap(s - h)) / (h * h);
        CHECK(std::abs(f2 + 2 * f1 / s - c.bilap(s)) < 1e-4 * (1 + std::abs(c.bilap(s))));
    }
}

TEST_CASE("virial quantities vanish on the ground state") {
    Fixture F;
    for (double R : {2.0, 5.0, 10.0}) {
        const VirialSample v = virial_sample(F.gs, F.gs.W, R);
        CHECK(std::abs(v.AR) <= 1e-8 * F.gs.M);
        CHECK(std::abs(v.dttVR) <= 1e-8 * F.gs.M);
        CHECK(std::abs(v.dtVR) <= 1e-14 * F.gs.M);
    }
    CHECK_THROWS_AS(virial_sample(F.gs, F.gs.W, 60.0), UsageError);
}

TEST_CASE("virial identity agrees with the direct second-derivative formula") {
    Fixture F;
    const RadialField u(F.gs.sector, F.gs.W.phi + F.shell(cplx(0.1, -0.07), 4.0, 1.5).phi);
    for (double R : {2.0, 5.0}) {
        const VirialSample v = virial_sample(F.gs, u, R);
        CHECK(std::abs(v.dttVR - v.dttVR_direct) <= 1e-6 * F.gs.M);
    }
}

TEST_CASE("A_R is scale covariant") {
    Fixture F;
    const cplx amp(0.3, 0.2);
    const RadialField u = F.shell(amp, 3.0, 1.0);
    for (double mu : {0.5, 2.0}) {
        const RadialField gu = F.shell(amp, 3.0, 1.0, mu);
        const double R = 4.0;
        const double a1 = virial_sample(F.gs, u, R).AR;
        const double a2 = virial_sample(F.gs, gu, mu * R).AR;
        CHECK(std::abs(a1 - a2) <= 1e-6 * std::abs(a1));
    }
}

TEST_CASE("virial second difference matches the identity along a run") {
    Fixture F;
    const RadialField u0(F.gs.sector, F.gs.W.phi + F.shell(cplx(1e-3, 1e-3), 3.0, 1.0).phi);
    EvolutionControls c;
    c.sample_every = 0.005;
    SimState st = make_state(u0);
    const OrbitRecord rec = evolve(F.gs, st, 1.0, c, make_modulation_observer(F.gs, 5.0));
    double err = 0.0, scale = 0.0;
    const double h = c.sample_every;
    for (size_t i = 1; i + 1 < rec.samples.size(); ++i) {
        const auto &a = rec.samples[i - 1], &b = rec.samples[i], &d = rec.samples[i + 1];
        err = std::max(err, std::abs((a.VR - 2 * b.VR + d.VR) / (h * h) - b.dttVR));
        scale = std::max(scale, std::abs(b.dttVR));
        CHECK(std::isfinite(b.theta));
    }
    CHECK(err <= 1e-4 * scale);
}

TEST_CASE("compactness scale") {
    Fixture F;
    const cplx amp(0.4, -0.1);
    const double L = compactness_scale(F.shell(amp, 3.0, 1.0));
    for (double mu : {0.5, 2.0, 3.0})
        CHECK(std::abs(compactness_scale(F.shell(amp, 3.0, 1.0, mu)) * mu / L - 1.0) < 1e-8);
    const RadialField& W = F.gs.W;
    double prev = INFINITY;
    for (double R : {0.1, 0.5, 1.0, 2.0, 10.0}) {
        const double V = scale_functional(W, R);
        CHECK(V < prev);
        prev = V;
    }
    CHECK_THROWS_AS(compactness_scale(RadialField(F.gs.sector, CVec::Zero(F.gs.sector->n()))), UsageError);
}

TEST_CASE("ground state compactness scale is refinement stable") {
    PhysParams p{-0.04};
    const double a = compactness_scale(eval_ground_state(p, build_grid(p, 512, 200.0)).W);
    const double b = compactness_scale(eval_ground_state(p, build_grid(p, 1024, 200.0)).W);
    CHECK(std::abs(a / b - 1.0) < 1e-3);
}

TEST_CASE("modulation rates") {
    Fixture F;
    EvolutionControls c;
    c.sample_every = 0.05;
    SimState st = make_state(F.gs.W);
    OrbitRecord rec = evolve(F.gs, st, 1.0, c, make_modulation_observer(F.gs, 0.0));
    RateReport r = modulation_rates(rec);
    REQUIRE(r.ok);
    CHECK(r.max_rate <= 1e-8);

    // discrete ground state at scale 2 is stationary: theta and mu stay put
    const PolishResult P = polish_ground_state(F.gs, 2.0);
    st = make_state(P.field);
    rec = evolve(F.gs, st, 1.0, c, make_modulation_observer(F.gs, 0.0));
    r = modulation_rates(rec);
    REQUIRE(r.ok);
    CHECK(r.max_rate <= 1e-6);

    OrbitRecord empty;
    CHECK_FALSE(modulation_rates(empty).ok);
}

#include "doctest.h"

#include <cmath>

#include "nlsa/errors.hpp"
#include "nlsa/grid.hpp"
#include "nlsa/hash.hpp"
#include "nlsa/params.hpp"

using namespace nlsa;

TEST_CASE("admissible range of a") {
    CHECK_NOTHROW(PhysParams(-0.04));
    CHECK_THROWS_AS(PhysParams(-0.3), ConfigError);
    CHECK_THROWS_AS(PhysParams(0.0), ConfigError);
    CHECK_THROWS_AS(PhysParams(-0.09), ConfigError);
    try {
        PhysParams p(-0.3);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("-1/4+4/25") != std::string::npos);
    }
}

TEST_CASE("indicial exponents") {
    CHECK(PhysParams(-0.04).s_plus(0) == doctest::Approx(-0.0417424).epsilon(1e-5));
    CHECK(PhysParams(-1e-9 - 1e-12).s_plus(1) == doctest::Approx(1.0).epsilon(1e-8));
    const PhysParams p(-0.05);
    for (int l = 0; l < 4; ++l) {
        const double s = p.s_plus(l), m = p.s_minus(l);
        CHECK(s * (s + 1) == doctest::Approx(-0.05 + l * (l + 1)));
        CHECK(m * (m + 1) == doctest::Approx(-0.05 + l * (l + 1)));
    }
}

TEST_CASE("grid geometry") {
    const PhysParams p(-0.04);
    auto g = build_grid(p, 1024, 200.0, Grading::first_node(1e-4));
    CHECK(g->r()(0) == doctest::Approx(1e-4).epsilon(1e-10));
    CHECK(g->r()(g->n() - 1) == doctest::Approx(200.0).epsilon(1e-13));
    for (int i = 1; i < g->n(); ++i) REQUIRE(g->r()(i) > g->r()(i - 1));
    CHECK(g->xi_of_r(g->r()(17)) == doctest::Approx(g->xi(18)).epsilon(1e-12));
    CHECK(g->fingerprint().size() == 12);
    CHECK(g->fingerprint() == build_grid(p, 1024, 200.0, Grading::first_node(1e-4))->fingerprint());
    CHECK(g->fingerprint() != build_grid(p, 1024, 100.0, Grading::first_node(1e-4))->fingerprint());
}

TEST_CASE("geometric ratio descriptor") {
    const PhysParams p(-0.04);
    const double q = 1.01;
    const int n = 512;
    auto g = build_grid(p, n, 200.0, Grading::ratio(q));
    CHECK(g->r()(0) == doctest::Approx(200.0 * (q - 1) / (std::pow(q, n) - 1)).epsilon(1e-10));
}

TEST_CASE("box quadrature") {
    for (double a : {-0.08, -0.02}) {
        const PhysParams p(a);
        auto g = build_grid(p, 1024, 200.0);
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(g->n());
        CHECK(g->integrate(one) == doctest::Approx(4.0 * kPi / 3.0 * std::pow(200.0, 3)).epsilon(1e-10));
        const Eigen::VectorXd gauss = (-g->r().array().square()).exp().matrix();
        CHECK(g->integrate(gauss) == doctest::Approx(std::pow(kPi, 1.5)).epsilon(1e-8));
    }
}

TEST_CASE("fnv1a hash") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
}

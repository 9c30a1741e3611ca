#include "nlsa/grid.hpp"

#include <array>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdio>

#include "nlsa/hash.hpp"

namespace nlsa {

namespace {

// log(sinh x) for x > 0 without overflow
double log_sinh(double x) { return x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0); }

// Gregory-type end corrections for the trapezoid rule, exact for polynomials
// of degree < 8 at each end. Solved once from Euler-Maclaurin moments.
std::array<double, 8> end_corrections() {
    constexpr int p = 8;
    // rhs_k = sum_m B_2m/(2m)! d^{2m-1}/dx^{2m-1} x^k at 0
    const long double bern_over[p] = {0.0L, 1.0L / 12.0L, 0.0L, -1.0L / 120.0L,
                                      0.0L, 1.0L / 252.0L, 0.0L, -1.0L / 240.0L};
    long double A[p][p + 1];
    for (int k = 0; k < p; ++k) {
        for (int j = 0; j < p; ++j) A[k][j] = std::pow(static_cast<long double>(j), k);
        A[k][0] = (k == 0) ? 1.0L : 0.0L;
        A[k][p] = bern_over[k];
    }
    for (int c = 0; c < p; ++c) {
        int piv = c;
        for (int r = c + 1; r < p; ++r)
            if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
        for (int j = 0; j <= p; ++j) std::swap(A[c][j], A[piv][j]);
        for (int r = 0; r < p; ++r) {
            if (r == c) continue;
            long double f = A[r][c] / A[c][c];
            for (int j = c; j <= p; ++j) A[r][j] -= f * A[c][j];
        }
    }
    std::array<double, 8> out{};
    for (int k = 0; k < p; ++k) out[k] = static_cast<double>(A[k][p] / A[k][k]);
    return out;
}

}  // namespace

RadialGrid::RadialGrid(const PhysParams& p, int n, double r_max, double r1)
    : params_(p), n_(n), r_max_(r_max), r1_(r1), beta_(p.beta()) {
    if (n < 16) throw ConfigError("grid needs n >= 16, got " + std::to_string(n));
    if (!(r_max > 1.0)) throw ConfigError("grid needs r_max > 1");
    if (!(r1 > 0.0 && r1 < r_max)) throw ConfigError("grid needs 0 < r_1 < r_max");

    const double log_ratio = beta_ * std::log(r_max / r1);
    auto f = [&](double d) { return log_sinh((n - 0.5) * d) - log_sinh(0.5 * d) - log_ratio; };
    // f is increasing in d with f(0+) = log(2n-1) - log_ratio
    if (std::log(2.0 * n - 1.0) >= log_ratio)
        throw ConfigError("r_max/r_1 too small for n nodes: grading would be coarser than uniform");
    double hi = 1.0;
    while (f(hi) < 0.0) hi *= 2.0;
    std::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(52);
    auto br = boost::math::tools::toms748_solve(f, 1e-12, hi, tol, iters);
    dxi_ = 0.5 * (br.first + br.second);
    log_A_ = beta_ * std::log(r_max) - log_sinh((n - 0.5) * dxi_);
    A_ = std::exp(log_A_);

    r_.resize(n);
    for (int k = 1; k <= n; ++k) r_(k - 1) = r_of_xi(xi(k));
    r_(n - 1) = r_max;

    // Trapezoid on [xi_1, xi_n] with end corrections, plus the analytic
    // first segment int_0^{r_1} 4 pi r^2 dr attached to node 1.
    static const std::array<double, 8> c = end_corrections();
    Eigen::VectorXd tw = Eigen::VectorXd::Ones(n);
    tw(0) = tw(n - 1) = 0.5;
    for (int j = 0; j < 8; ++j) {
        tw(j) += c[j];
        tw(n - 1 - j) += c[j];
    }
    w_.resize(n);
    for (int k = 1; k <= n; ++k) {
        const double x = xi(k), rk = r_(k - 1);
        w_(k - 1) = tw(k - 1) * dxi_ * 4.0 * kPi * rk * rk * dr_dxi(x);
    }
    // [0, xi_1] piece: int_0^{r_1} 4 pi r^2 dr
    w_(0) += 4.0 * kPi * r_(0) * r_(0) * r_(0) / 3.0;
}

double RadialGrid::r_of_xi(double x) const {
    if (x <= 0.0) return 0.0;
    return std::exp((log_A_ + log_sinh(x)) / beta_);
}

double RadialGrid::dr_dxi(double x) const {
    // r = (A sinh x)^{1/beta} => dr/dxi = r coth(x) / beta
    return r_of_xi(x) / (beta_ * std::tanh(x));
}

double RadialGrid::xi_of_r(double r) const {
    if (r <= 0.0) return 0.0;
    const double log_q = beta_ * std::log(r) - log_A_;
    if (log_q > 20.0) return log_q + std::log(2.0) + std::log1p(std::exp(-2.0 * log_q) / 4.0);
    return std::asinh(std::exp(log_q));
}

std::string RadialGrid::fingerprint() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "a=%.17g;n=%d;rmax=%.17g;r1=%.17g", params_.a(), n_, r_max_, r1_);
    return hex64(fnv1a64(buf)).substr(0, 12);
}

GridPtr build_grid(const PhysParams& p, int n, double r_max, const Grading& grading) {
    double r1 = grading.value;
    if (grading.kind == Grading::Kind::GeometricRatio) {
        const double q = grading.value;
        if (!(q > 1.0)) throw ConfigError("geometric grading ratio must exceed 1");
        r1 = r_max * (q - 1.0) / (std::pow(q, n) - 1.0);
    }
    return std::make_shared<const RadialGrid>(p, n, r_max, r1);
}

}  // namespace nlsa

#include "nlsa/virial.hpp"

#include <boost/math/differentiation/autodiff.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <algorithm>
#include <cmath>
#include <memory>

#include "nlsa/errors.hpp"

namespace nlsa {

namespace {

using boost::math::differentiation::make_fvar;

// C-infinity step e^{-1/x} / (e^{-1/x} + e^{-1/(1-x)}) on [0,1] and three derivatives
void smooth_step(double x, double& s0, double& s1, double& s2, double& s3) {
    if (x <= 0.0 || x >= 1.0) {
        s0 = x <= 0.0 ? 0.0 : 1.0;
        s1 = s2 = s3 = 0.0;
        return;
    }
    const auto t = make_fvar<double, 3>(x);
    const auto f = exp(-1.0 / t), g = exp(-1.0 / (1.0 - t));
    const auto S = f / (f + g);
    s0 = S.derivative(0);
    s1 = S.derivative(1);
    s2 = S.derivative(2);
    s3 = S.derivative(3);
}

constexpr double kS1 = 1.0, kS2 = 2.0, kS3 = 4.0;

// sub-points per cell for the cutoff-weighted integrals
constexpr int kRefine = 5;

template <class F>
double integrate(F f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 10, 1e-15);
}

}  // namespace

CutoffProfile::CutoffProfile() {
    auto S = [](double x) {
        double s0, s1, s2, s3;
        smooth_step(x, s0, s1, s2, s3);
        return s0;
    };
    // phi(4) = 1 + I0 + c I1
    const double I0 = integrate([&](double s) { return 2.0 * s * (1.0 - S((s - kS1) / (kS2 - kS1))); }, kS1, kS2);
    const double I1 = integrate([&](double s) { return -2.0 * s * S((s - kS1) / (kS2 - kS1)); }, kS1, kS2) +
                      integrate([&](double s) { return 2.0 * s * (S((s - kS2) / (kS3 - kS2)) - 1.0); }, kS2, kS3);
    c_ = -(1.0 + I0) / I1;
    // phi and phi' on a uniform table over [1,4]; cubic Hermite in between
    const int m = kTable;
    phi_.resize(m + 1);
    dphi_.resize(m + 1);
    const double h = (kS3 - kS1) / m;
    phi_[0] = 1.0;
    dphi_[0] = dphi(kS1);
    for (int i = 1; i <= m; ++i) {
        const double a = kS1 + (i - 1) * h;
        phi_[i] = phi_[i - 1] +
                  boost::math::quadrature::gauss<double, 15>::integrate([&](double t) { return dphi(t); }, a, a + h);
        dphi_[i] = dphi(a + h);
    }
}

const CutoffProfile& default_cutoff() {
    static const CutoffProfile c;
    return c;
}

void CutoffProfile::psi(double s, double& p0, double& p1, double& p2, double& p3) const {
    double s0, s1, s2, s3;
    if (s <= kS1) {
        p0 = 1.0;
        p1 = p2 = p3 = 0.0;
    } else if (s <= kS2) {
        const double L = kS2 - kS1;
        smooth_step((s - kS1) / L, s0, s1, s2, s3);
        const double k = 1.0 + c_;
        p0 = 1.0 - k * s0;
        p1 = -k * s1 / L;
        p2 = -k * s2 / (L * L);
        p3 = -k * s3 / (L * L * L);
    } else if (s < kS3) {
        const double L = kS3 - kS2;
        smooth_step((s - kS2) / L, s0, s1, s2, s3);
        p0 = -c_ + c_ * s0;
        p1 = c_ * s1 / L;
        p2 = c_ * s2 / (L * L);
        p3 = c_ * s3 / (L * L * L);
    } else {
        p0 = p1 = p2 = p3 = 0.0;
    }
}

double CutoffProfile::phi(double s) const {
    if (s <= kS1) return s * s;
    if (s >= kS3) return 0.0;
    const double h = (kS3 - kS1) / kTable;
    const double x = (s - kS1) / h;
    const int i = std::min(kTable - 1, static_cast<int>(x));
    const double t = x - i, t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * phi_[i] + (t3 - 2 * t2 + t) * h * dphi_[i] + (-2 * t3 + 3 * t2) * phi_[i + 1] +
           (t3 - t2) * h * dphi_[i + 1];
}

double CutoffProfile::dphi(double s) const {
    double p0, p1, p2, p3;
    psi(s, p0, p1, p2, p3);
    return 2.0 * s * p0;
}

double CutoffProfile::d2phi(double s) const {
    double p0, p1, p2, p3;
    psi(s, p0, p1, p2, p3);
    return 2.0 * p0 + 2.0 * s * p1;
}

double CutoffProfile::lap(double s) const {
    double p0, p1, p2, p3;
    psi(s, p0, p1, p2, p3);
    return 6.0 * p0 + 2.0 * s * p1;
}

double CutoffProfile::bilap(double s) const {
    if (s <= kS1 || s >= kS3) return 0.0;
    double p0, p1, p2, p3;
    psi(s, p0, p1, p2, p3);
    return 14.0 * p2 + 2.0 * s * p3 + 16.0 * p1 / s;
}

CutoffProfile::Values CutoffProfile::values(double s) const {
    double p0, p1, p2, p3;
    psi(s, p0, p1, p2, p3);
    Values v;
    v.phi = phi(s);
    v.dphi = 2.0 * s * p0;
    v.d2phi = 2.0 * p0 + 2.0 * s * p1;
    v.lap = 6.0 * p0 + 2.0 * s * p1;
    v.bilap = (s <= kS1 || s >= kS3) ? 0.0 : 14.0 * p2 + 2.0 * s * p3 + 16.0 * p1 / s;
    return v;
}

VirialSample virial_sample(const GroundState& gs, const RadialField& u, double R, const CutoffProfile& cutoff) {
    require_same(gs.W, u);
    const Sector& sec = *u.sector;
    if (!(R > 0.0) || cutoff.support() * R > sec.grid().r_max())
        throw UsageError("virial radius needs 0 < " + std::to_string(cutoff.support()) + " R <= r_max");
    const double a = sec.grid().params().a();
    const auto ext = sec.refined(u.phi, kRefine);
    VirialSample v;
    v.R = R;
    double V = 0.0, dV = 0.0, G = 0.0, A = 0.0;
    for (int k = 0; k < ext.r.size(); ++k) {
        const double r = ext.r(k), m = ext.m(k), s = r / R;
        const double u2 = std::norm(ext.u(k)), ur2 = std::norm(ext.ur(k)), u6 = u2 * u2 * u2;
        if (s < cutoff.support()) {
            const auto cv = cutoff.values(s);
            const double d1 = R * cv.dphi, d2 = cv.d2phi, lp = cv.lap, bl = cv.bilap / (R * R);
            V += m * R * R * cv.phi * u2;
            dV += m * d1 * std::imag(std::conj(ext.u(k)) * ext.ur(k));
            G += m * (4.0 * d2 * ur2 - (4.0 / 3.0) * lp * u6 - bl * u2 + 4.0 * a * d1 / (r * r * r) * u2);
            if (s > 1.0)
                A += m * ((4.0 * d2 - 8.0) * ur2 + (8.0 - (4.0 / 3.0) * lp) * u6 +
                          (4.0 * a * d1 / (r * r * r) - 8.0 * a / (r * r)) * u2);
            A -= m * bl * u2;
        } else {
            A += m * (-8.0 * ur2 + 8.0 * u6 - 8.0 * a / (r * r) * u2);
        }
    }
    v.VR = V;
    v.dtVR = 2.0 * dV;
    v.AR = A;
    v.dttVR_direct = G;
    v.dttVR = 16.0 * (gs.M - inner_a(u, u)) + A + 48.0 * (energy(u) - gs.E);
    return v;
}

double scale_functional(const RadialField& u, double R) {
    const auto ext = u.sector->refined(u.phi, kRefine);
    double V = 0.0;
    for (int k = 0; k < ext.r.size(); ++k) {
        const double s = ext.r(k) / R;
        V += ext.m(k) * (s * s / (1.0 + s * s)) * std::norm(ext.ur(k));
    }
    return V;
}

double compactness_scale(const RadialField& u) {
    const auto ext = u.sector->refined(u.phi, kRefine);
    const double total = ext.m.dot(ext.ur.cwiseAbs2());
    if (!(total > 0.0)) throw UsageError("compactness_scale of the zero field");
    auto f = [&](double lr) {
        const double R = std::exp(lr);
        double V = 0.0;
        for (int k = 0; k < ext.r.size(); ++k) {
            const double s = ext.r(k) / R;
            V += ext.m(k) * (s * s / (1.0 + s * s)) * std::norm(ext.ur(k));
        }
        return V / total - 0.5;
    };
    // f decreases from 1/2 to -1/2 in log R
    double lo = 0.0, hi = 0.0;
    double flo = f(lo), fhi = flo;
    while (flo < 0.0 && lo > -60.0) flo = f(lo -= 1.0);
    while (fhi > 0.0 && hi < 60.0) fhi = f(hi += 1.0);
    if (flo < 0.0 || fhi > 0.0) throw NumericalError("compactness_scale: no bracket");
    std::uintmax_t iters = 200;
    const auto [x0, x1] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                            boost::math::tools::eps_tolerance<double>(50), iters);
    return std::exp(-0.5 * (x0 + x1));
}

Observer make_modulation_observer(const GroundState& gs, double R, ModulationOptions opt) {
    auto last = std::make_shared<std::optional<std::pair<double, double>>>();
    const CutoffProfile& cutoff = default_cutoff();
    return [&gs, R, opt, last, &cutoff](const RadialField& u, Sample& s) {
        ModulationOptions o = opt;
        o.seed = *last;
        ModulationFit f = fit_modulation(gs, u, o);
        if (!f.ok && o.seed) {
            o.seed.reset();
            f = fit_modulation(gs, u, o);
        }
        if (f.ok) {
            s.theta = f.theta;
            s.mu = f.mu;
            s.alpha = f.alpha;
            *last = std::make_pair(f.theta, f.mu);
        } else {
            last->reset();
        }
        if (R > 0.0) {
            const VirialSample v = virial_sample(gs, u, R, cutoff);
            s.VR = v.VR;
            s.dtVR = v.dtVR;
            s.dttVR = v.dttVR;
        }
    };
}

}  // namespace nlsa

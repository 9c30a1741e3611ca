#include "nlsa/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nlsa/errors.hpp"

namespace nlsa {

namespace {

RadialField times_i(const RadialField& f) { return {f.sector, f.phi * cplx(0.0, 1.0)}; }

// Complex Hdot^1_a pairing sum conj(g) K f for real g.
cplx pair_real(const Vec& g, const SpMat& K, const CVec& f) {
    const Vec Kg = K * g;
    return cplx(Kg.dot(f.real()), Kg.dot(f.imag()));
}

struct Eval {
    double J0, J1;
    Eigen::Matrix2d jac;  // columns: d/dtheta, d/dlog mu
};

Eval evaluate(const GroundState& gs, const RadialField& u, double theta, double mu) {
    const RadialField gW = scaled_W(gs, theta, mu);
    const RadialField gW1 = scaled_W1(gs, theta, mu);
    const RadialField gW2 = scaled_W2(gs, theta, mu);
    Eval e;
    e.J0 = inner_a(u, times_i(gW));
    e.J1 = inner_a(u, gW1);
    const double iW1 = inner_a(u, times_i(gW1));
    e.jac << -inner_a(u, gW), -iW1, iW1, -inner_a(u, gW2);
    return e;
}

double wrap(double t) { return std::remainder(t, 2.0 * kPi); }

}  // namespace

double distance(const GroundState& gs, const RadialField& u) { return std::abs(inner_a(u, u) - gs.M); }

ModulationFit fit_modulation(const GroundState& gs, const RadialField& u, const ModulationOptions& opt) {
    require_same(gs.W, u);
    ModulationFit fit;
    fit.d = distance(gs, u);
    if (!(fit.d < opt.delta0 * gs.M)) {
        fit.message = "d(u) above the modulation threshold";
        return fit;
    }
    double theta = 0.0, lmu = 0.0;
    if (opt.seed) {
        theta = opt.seed->first;
        lmu = std::log(opt.seed->second);
    } else {
        const SpMat& K = gs.sector->stiffness();
        double best = -1.0;
        for (int j = 0; j < opt.scan_points; ++j) {
            const double l10 =
                opt.log10_mu_min + (opt.log10_mu_max - opt.log10_mu_min) * j / std::max(1, opt.scan_points - 1);
            const double mu = std::pow(10.0, l10);
            const cplx c = pair_real(scaled_W(gs, 0.0, mu).phi.real(), K, u.phi);
            if (std::abs(c) > best) {
                best = std::abs(c);
                theta = std::arg(c);
                lmu = std::log(mu);
            }
        }
    }

    const double scale = gs.M;
    double best_res = INFINITY, best_theta = theta, best_lmu = lmu;
    for (int it = 0; it <= opt.max_iterations; ++it) {
        const Eval e = evaluate(gs, u, theta, std::exp(lmu));
        const double res = std::max(std::abs(e.J0), std::abs(e.J1)) / scale;
        if (!std::isfinite(res)) break;
        if (res < best_res) {
            best_res = res;
            best_theta = theta;
            best_lmu = lmu;
        }
        fit.iterations = it;
        if (res <= opt.tol) break;
        const Eigen::Vector2d step = e.jac.partialPivLu().solve(Eigen::Vector2d(-e.J0, -e.J1));
        if (!step.allFinite()) break;
        const double damp = std::min(1.0, 0.5 / std::max(std::abs(step(0)), std::abs(step(1))));
        theta += damp * step(0);
        lmu += damp * step(1);
    }
    if (!(best_res <= opt.accept)) {
        fit.message = "Newton did not converge";
        fit.J0 = best_res;
        return fit;
    }
    fit.theta = wrap(best_theta);
    fit.mu = std::exp(best_lmu);
    const RadialField gW = scaled_W(gs, fit.theta, fit.mu);
    const double gg = inner_a(gW, gW);
    fit.alpha = inner_a(u, gW) / gg - 1.0;
    if (fit.alpha <= -1.0) {
        fit.message = "fit landed on the opposite phase";
        return fit;
    }
    fit.v = RadialField(u.sector, u.phi - (1.0 + fit.alpha) * gW.phi);
    fit.v_norm = norm_a(fit.v);
    fit.J0 = inner_a(u, times_i(gW)) / scale;
    fit.J1 = inner_a(u, scaled_W1(gs, fit.theta, fit.mu)) / scale;
    fit.ok = true;
    return fit;
}

RateReport modulation_rates(const OrbitRecord& rec, double d_floor) {
    RateReport rep;
    std::vector<const Sample*> s;
    for (const auto& x : rec.samples)
        if (std::isfinite(x.theta) && std::isfinite(x.mu) && std::isfinite(x.alpha) && x.d_u > d_floor)
            s.push_back(&x);
    if (s.size() < 3) {
        rep.message = "fewer than three fitted samples";
        return rep;
    }
    std::vector<double> th(s.size());
    th[0] = s[0]->theta;
    for (size_t i = 1; i < s.size(); ++i) th[i] = th[i - 1] + wrap(s[i]->theta - s[i - 1]->theta);
    for (size_t i = 1; i + 1 < s.size(); ++i) {
        const double h = s[i + 1]->t - s[i - 1]->t;
        if (!(h > 0.0)) continue;
        const double da = (s[i + 1]->alpha - s[i - 1]->alpha) / h;
        const double dth = (th[i + 1] - th[i - 1]) / h;
        const double dlm = (std::log(s[i + 1]->mu) - std::log(s[i - 1]->mu)) / h;
        const double rate = std::abs(da) + std::abs(dth) + std::abs(dlm);
        const double mu = s[i]->mu;
        rep.t.push_back(s[i]->t);
        rep.rate.push_back(rate);
        rep.ratio.push_back(s[i]->d_u > 0.0 ? rate / (mu * mu * s[i]->d_u) : INFINITY);
        rep.max_rate = std::max(rep.max_rate, rate);
        rep.sup_ratio = std::max(rep.sup_ratio, rep.ratio.back());
    }
    rep.ok = !rep.t.empty();
    if (!rep.ok) rep.message = "no interior samples";
    return rep;
}

Delta0Calibration calibrate_delta0(const GroundState& gs, std::uint64_t seed, int trials,
                                   const std::vector<double>& eps) {
    if (trials <= 0 || eps.empty()) throw UsageError("calibrate_delta0 needs trials and eps levels");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N(0.0, 1.0);
    Delta0Calibration cal;
    cal.trials = trials;
    ModulationOptions opt;
    opt.delta0 = INFINITY;
    double min_fail = INFINITY, max_d = 0.0;
    for (int k = 0; k < trials; ++k) {
        const double theta0 = kPi * (2.0 * U(rng) - 1.0);
        const double mu0 = std::exp(std::log(3.0) * (2.0 * U(rng) - 1.0));
        cplx amp[4];
        double ctr[4], wid[4];
        for (int j = 0; j < 4; ++j) {
            amp[j] = cplx(N(rng), N(rng));
            ctr[j] = std::log(0.1) + U(rng) * std::log(300.0);
            wid[j] = 0.3 + 0.7 * U(rng);
        }
        RadialField h = field_from_u(gs.sector, [&](double r) {
            cplx s = 0.0;
            const double lr = std::log(r);
            for (int j = 0; j < 4; ++j) s += amp[j] * std::exp(-0.5 * std::pow((lr - ctr[j]) / wid[j], 2));
            return s;
        });
        h.phi *= std::sqrt(gs.M) / norm_a(h);
        const RadialField base = scaled_W(gs, theta0, mu0);
        std::optional<std::pair<double, double>> cont = std::make_pair(theta0, mu0);
        for (double e : eps) {
            const RadialField u(gs.sector, base.phi + e * h.phi);
            const ModulationFit f = fit_modulation(gs, u, opt);
            ModulationOptions warm = opt;
            warm.seed = cont;
            const ModulationFit c = cont ? fit_modulation(gs, u, warm) : ModulationFit{};
            cont = c.ok ? std::make_optional(std::make_pair(c.theta, c.mu)) : std::nullopt;
            // the scan must find the root continued in eps from the planted parameters
            const bool same = f.ok && c.ok && std::abs(wrap(f.theta - c.theta)) <= 1e-6 &&
                              std::abs(std::log(f.mu / c.mu)) <= 1e-6;
            const double d = f.d / gs.M;
            cal.d.push_back(d);
            cal.residual.push_back(f.ok ? std::max(std::abs(f.J0), std::abs(f.J1)) : f.J0);
            cal.converged.push_back(same);
            max_d = std::max(max_d, d);
            if (!same) {
                ++cal.failures;
                min_fail = std::min(min_fail, d);
            }
        }
    }
    cal.delta0 = std::isfinite(min_fail) ? min_fail : max_d;
    return cal;
}

}  // namespace nlsa

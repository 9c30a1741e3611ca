#include "nlsa/threshold.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nlsa/errors.hpp"
#include "nlsa/modulation.hpp"

namespace nlsa {

namespace {

double norm_K(const SpMat& K, const CVec& v) {
    const Vec re = v.real(), im = v.imag();
    return std::sqrt(std::max(0.0, re.dot(K * re) + im.dot(K * im)));
}

// Everything the Duhamel iteration needs, for one step size.
struct LPContext {
    int n = 0;
    double e0 = 0.0, h = 0.0;
    Vec M, w6, w, P;
    const SpMat* K = nullptr;
    CVec Vp, Vm;
    Vec LVp1, LVp2, LVm1, LVm2;   // weak-form L V+- split in real and imaginary rows
    SpMat Bp, Bm;                 // M +- h/2 B in real block form
    Eigen::SparseLU<SpMat> lu;

    double y_plus(const CVec& v) const { return LVm1.dot(v.real()) + LVm2.dot(v.imag()); }
    double y_minus(const CVec& v) const { return LVp1.dot(v.real()) + LVp2.dot(v.imag()); }

    // M^{-1} R(v), R = i (w6 |W+v|^4 (W+v) - w6 W^5 - 5 P v1 - i P v2)
    CVec forcing(const CVec& v) const {
        CVec f(n);
        for (int i = 0; i < n; ++i) {
            const cplx z = w(i) + v(i);
            const double a2 = std::norm(z);
            const double w2 = w(i) * w(i);
            // same operation order as a2 * a2 * z so that R(0) = 0 exactly
            const cplx N = w6(i) * (a2 * a2 * z - w2 * w2 * w(i)) - 5.0 * P(i) * v(i).real() -
                           cplx(0.0, 1.0) * P(i) * v(i).imag();
            f(i) = cplx(0.0, 1.0) * N / M(i);
        }
        return f;
    }

    void project_center(CVec& x) const {
        const double yp = y_plus(x), ym = y_minus(x);
        x -= yp * Vp + ym * Vm;
    }
};

void build_context(LPContext& c, const ThresholdSetup& s, double h) {
    const TrichotomyData& t = s.trich;
    const Sector& sec = *s.gs.sector;
    c.n = sec.n();
    c.e0 = t.e0;
    c.h = h;
    c.M = sec.mass();
    c.w6 = sec.power_weights(6.0);
    c.w = s.gs.W.phi.real();
    c.P = c.w6.cwiseProduct(c.w.array().pow(4).matrix());
    c.K = &sec.stiffness();
    c.Vp = t.Vplus.phi;
    c.Vm = t.Vminus.phi;
    c.LVp1 = t.A5 * c.Vp.real();
    c.LVp2 = t.A1 * c.Vp.imag();
    c.LVm1 = t.A5 * c.Vm.real();
    c.LVm2 = t.A1 * c.Vm.imag();

    const int n = c.n;
    std::vector<Eigen::Triplet<double>> tp, tm;
    for (int i = 0; i < n; ++i) {
        tp.emplace_back(i, i, c.M(i));
        tp.emplace_back(n + i, n + i, c.M(i));
        tm.emplace_back(i, i, c.M(i));
        tm.emplace_back(n + i, n + i, c.M(i));
    }
    // B (x1, x2) = (A1 x2, -A5 x1)
    for (int k = 0; k < t.A1.outerSize(); ++k)
        for (SpMat::InnerIterator it(t.A1, k); it; ++it) {
            tp.emplace_back(it.row(), n + it.col(), 0.5 * h * it.value());
            tm.emplace_back(it.row(), n + it.col(), -0.5 * h * it.value());
        }
    for (int k = 0; k < t.A5.outerSize(); ++k)
        for (SpMat::InnerIterator it(t.A5, k); it; ++it) {
            tp.emplace_back(n + it.row(), it.col(), -0.5 * h * it.value());
            tm.emplace_back(n + it.row(), it.col(), 0.5 * h * it.value());
        }
    c.Bp.resize(2 * n, 2 * n);
    c.Bm.resize(2 * n, 2 * n);
    c.Bp.setFromTriplets(tp.begin(), tp.end());
    c.Bm.setFromTriplets(tm.begin(), tm.end());
    c.Bp.makeCompressed();
    c.Bm.makeCompressed();
    c.lu.compute(c.Bp);
    if (c.lu.info() != Eigen::Success) throw NumericalError("lp_solve: factorization failed");
}

Vec split(const CVec& v) {
    Vec x(2 * v.size());
    x << v.real(), v.imag();
    return x;
}

CVec join(const Vec& x) {
    const int n = static_cast<int>(x.size() / 2);
    CVec v(n);
    for (int i = 0; i < n; ++i) v(i) = cplx(x(i), x(n + i));
    return v;
}

}  // namespace

ThresholdSetup make_threshold_setup(const GroundState& closed_form, const TrichotomyOptions& opt) {
    const PolishResult p = polish_ground_state(closed_form, 1.0);
    GroundState gs = with_field(closed_form, p.field);
    TrichotomyData t = solve_trichotomy(gs, opt);
    return ThresholdSetup{std::move(gs), closed_form, std::move(t), p.residual_after};
}

LPState lp_solve(const ThresholdSetup& s, double y0_minus, const LPOptions& opt) {
    LPContext c;
    build_context(c, s, opt.h);
    const double e0 = c.e0;
    LPState st;
    st.y0_minus = y0_minus;
    st.lambda = opt.lambda > 0.0 ? opt.lambda : e0;
    if (st.lambda > e0 * (1.0 + 1e-12)) throw UsageError("lp_solve: decay weight must lie in (0, e0]");
    st.T_h = opt.T_h > 0.0 ? opt.T_h : 12.0 / e0;
    const int N = static_cast<int>(std::ceil(st.T_h / opt.h));
    st.h = opt.h;
    st.T_h = N * opt.h;
    const double h = opt.h;
    st.t.resize(N + 1);
    for (int j = 0; j <= N; ++j) st.t[j] = j * h;

    // exact weights of piecewise-linear forcing against e^{-e0 s}
    const double E = std::exp(-e0 * h);
    const double wa = (1.0 - E) / e0;
    const double wc = (1.0 - E * (1.0 + e0 * h)) / (e0 * e0 * h);  // int_0^h e^{-e0 s} s/h ds
    const double wb = wa - wc;                                     // int_0^h e^{-e0 (h-s)} s/h ds

    std::vector<double> ym(N + 1), yp(N + 1, 0.0);
    std::vector<CVec> vc(N + 1, CVec::Zero(c.n));
    for (int j = 0; j <= N; ++j) ym[j] = y0_minus * std::exp(-e0 * st.t[j]);

    std::vector<double> Rp(N + 1), Rm(N + 1);
    std::vector<CVec> fc(N + 1);
    double prev_update = 0.0;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        for (int j = 0; j <= N; ++j) {
            const CVec v = ym[j] * c.Vm + yp[j] * c.Vp + vc[j];
            CVec f = c.forcing(v);
            Rp[j] = c.y_plus(f);
            Rm[j] = c.y_minus(f);
            f -= Rp[j] * c.Vp + Rm[j] * c.Vm;
            fc[j] = std::move(f);
        }
        std::vector<double> nym(N + 1), nyp(N + 1);
        std::vector<CVec> nvc(N + 1);
        nym[0] = y0_minus;
        for (int j = 0; j < N; ++j) nym[j + 1] = E * nym[j] + (wa - wb) * Rm[j] + wb * Rm[j + 1];
        nyp[N] = 0.0;
        for (int j = N - 1; j >= 0; --j) nyp[j] = E * nyp[j + 1] - (wa - wc) * Rp[j] - wc * Rp[j + 1];
        nvc[N] = CVec::Zero(c.n);
        Vec xn = Vec::Zero(2 * c.n);
        for (int j = N - 1; j >= 0; --j) {
            const CVec mf = c.M.cast<cplx>().cwiseProduct(fc[j] + fc[j + 1]);
            const Vec rhs = c.Bm * xn - 0.5 * h * split(mf);
            Vec x = c.lu.solve(rhs);
            CVec v = join(x);
            c.project_center(v);
            nvc[j] = v;
            xn = split(v);
        }
        double upd = 0.0;
        for (int j = 0; j <= N; ++j) {
            const double d = std::abs(nym[j] - ym[j]) + std::abs(nyp[j] - yp[j]) + norm_K(*c.K, nvc[j] - vc[j]);
            upd = std::max(upd, std::exp(st.lambda * st.t[j]) * d);
        }
        ym.swap(nym);
        yp.swap(nyp);
        vc.swap(nvc);
        st.iterations = it;
        st.updates.push_back(upd);
        if (!std::isfinite(upd)) {
            st.message = "iteration produced non-finite values";
            break;
        }
        // ratios are only meaningful well above the rounding floor
        const double floor = 1e3 * opt.tol * std::max(std::abs(y0_minus), 1e-300);
        if (it >= 2 && prev_update > floor && upd > floor)
            st.contraction = std::max(st.contraction, upd / prev_update);
        if (it >= 2 && upd > 2.0 * prev_update && prev_update > floor) {
            st.message = "iteration diverges; observed Lipschitz estimate " + std::to_string(upd / prev_update);
            break;
        }
        prev_update = upd;
        if (upd <= opt.tol * std::abs(y0_minus) || upd == 0.0) {
            st.converged = true;
            break;
        }
    }
    if (!st.converged && st.message.empty()) st.message = "iteration limit reached";
    if (st.converged && st.contraction > opt.max_contraction) {
        st.converged = false;
        st.message = "contraction factor " + std::to_string(st.contraction) + " above the limit";
    }

    st.y_minus = ym;
    st.y_plus = yp;
    st.vc_norm.resize(N + 1);
    for (int j = 0; j <= N; ++j) {
        st.vc_norm[j] = norm_K(*c.K, vc[j]);
        st.ball = std::max(st.ball,
                           std::exp(st.lambda * st.t[j]) * (std::abs(ym[j]) + std::abs(yp[j]) + st.vc_norm[j]));
    }
    st.y0_plus = yp[0];
    st.vc0_norm = st.vc_norm[0];
    st.v0 = RadialField(s.gs.sector, ym[0] * c.Vm + yp[0] * c.Vp + vc[0]);
    return st;
}

int kinetic_sign_for_positive_seed(const ThresholdSetup& s, double y0, const LPOptions& opt) {
    const LPState st = lp_solve(s, std::abs(y0), opt);
    const RadialField u(s.gs.sector, s.gs.W.phi + st.v0.phi);
    const double dev = inner_a(u, u) - s.gs.M;
    if (dev == 0.0) throw PropertyFailure("threshold seed leaves the kinetic energy unchanged");
    return dev > 0.0 ? 1 : -1;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    const size_t m = std::min(x.size(), y.size());
    f.points = static_cast<int>(m);
    if (m < 2) return f;
    double sx = 0, sy = 0;
    for (size_t i = 0; i < m; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    f.ok = true;
    return f;
}

RateFit fit_log_rate(const std::vector<double>& t, const std::vector<double>& q, double lo, double hi, bool trim) {
    RateFit r;
    // first contiguous run inside the window
    size_t i0 = 0;
    while (i0 < q.size() && !(q[i0] >= lo && q[i0] <= hi)) ++i0;
    size_t i1 = i0;
    while (i1 < q.size() && q[i1] >= lo && q[i1] <= hi) ++i1;
    // keep the monotone trend between the extremes of the run
    if (i1 > i0) {
        size_t imin = i0, imax = i0;
        for (size_t i = i0; i < i1; ++i) {
            if (q[i] < q[imin]) imin = i;
            if (q[i] > q[imax]) imax = i;
        }
        i0 = std::min(imin, imax);
        i1 = std::max(imin, imax) + 1;
    }
    if (i1 - i0 < 3) {
        r.message = "fewer than three samples in the window";
        return r;
    }
    std::vector<double> x, y;
    double lmin = INFINITY, lmax = -INFINITY;
    for (size_t i = i0; i < i1; ++i) {
        lmin = std::min(lmin, std::log(q[i]));
        lmax = std::max(lmax, std::log(q[i]));
    }
    const bool cut = trim && (lmax - lmin) > 4.0;
    for (size_t i = i0; i < i1; ++i) {
        const double l = std::log(q[i]);
        if (cut && (l < lmin + 1.0 || l > lmax - 1.0)) continue;
        x.push_back(t[i]);
        y.push_back(l);
    }
    const LineFit f = fit_line(x, y);
    if (!f.ok) {
        r.message = "degenerate fit";
        return r;
    }
    r.ok = true;
    r.rate = f.slope;
    r.r2 = f.r2;
    r.t0 = x.front();
    r.t1 = x.back();
    r.points = f.points;
    r.efoldings = std::abs(f.slope) * (r.t1 - r.t0);
    return r;
}

std::string to_string(Branch b) { return b == Branch::Plus ? "plus" : "minus"; }

ThresholdOrbit build_threshold_orbit(const ThresholdSetup& s, Branch branch, double eps, double t_end,
                                     const EvolutionControls& c, double virial_R, const LPOptions& lp) {
    ThresholdOrbit o;
    o.branch = branch;
    const int sgn = kinetic_sign_for_positive_seed(s, std::abs(eps), lp);
    const int want = branch == Branch::Plus ? 1 : -1;
    const double y0 = std::abs(eps) * (sgn == want ? 1.0 : -1.0);
    o.lp = lp_solve(s, y0, lp);
    if (!o.lp.converged) throw NumericalError("threshold orbit: " + o.lp.message);
    const RadialField u0(s.gs.sector, s.gs.W.phi + o.lp.v0.phi);
    const double dev0 = inner_a(u0, u0) - s.gs.M;
    if ((dev0 > 0.0 ? 1 : -1) != want) throw PropertyFailure("threshold seed starts on the wrong side of M");
    SimState st = make_state(u0);
    o.record = evolve(s.gs, st, t_end, c, make_modulation_observer(s.gs, virial_R));
    o.d_floor = 1e-8 * s.gs.M;
    std::vector<double> t, d;
    for (const auto& x : o.record.samples) {
        t.push_back(std::abs(x.t));
        d.push_back(x.d_u);
    }
    // past the minimum of d the orbit is saturated by discretization error
    const size_t sat = std::min_element(d.begin(), d.end()) - d.begin();
    for (size_t i = 0; i <= sat && i < d.size(); ++i) {
        const auto& x = o.record.samples[i];
        if (x.d_u >= o.d_floor && ((x.kinetic - s.gs.M > 0.0 ? 1 : -1) != want)) o.one_sided = false;
    }
    o.decay = fit_log_rate(t, d, 1e-6 * s.gs.M, 1e-2 * s.gs.M);
    return o;
}

GrowthRun unstable_growth(const ThresholdSetup& s, double eps, double t_end, const EvolutionControls& c) {
    GrowthRun g;
    const RadialField& Vp = s.trich.Vplus;
    const double scale = eps * std::sqrt(s.gs.M) / norm_a(Vp);
    const RadialField u0(s.gs.sector, s.gs.W.phi + scale * Vp.phi);
    SimState st = make_state(u0);
    const SpMat& K = s.gs.sector->stiffness();
    const CVec W = s.gs.W.phi;
    auto* tt = &g.t;
    auto* dd = &g.dist;
    g.record = evolve(s.gs, st, t_end, c, [tt, dd, &K, W](const RadialField& u, Sample& smp) {
        tt->push_back(smp.t);
        dd->push_back(norm_K(K, u.phi - W));
    });
    const double nW = std::sqrt(s.gs.M);
    g.fit = fit_log_rate(g.t, g.dist, 0.0, 1e-2 * nW, false);
    return g;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::StationaryManifold: return "stationary-manifold";
        case Verdict::ConvergesToW: return "converges-to-W";
        case Verdict::Disperses: return "disperses";
        case Verdict::BlowsUp: return "blows-up";
        case Verdict::Undecided: return "undecided";
    }
    return "undecided";
}

ClassificationVerdict classify(const GroundState& gs, const RadialField& u0, const ClassifyBudget& b) {
    ClassificationVerdict v;
    SimState st = make_state(u0);
    v.record = evolve(gs, st, b.t_end, b.controls);
    const auto& S = v.record.samples;
    const double M = gs.M;
    v.blowup_flag = v.record.blowup;
    v.termination = v.record.termination;
    v.min_dt = v.record.min_dt;
    v.final_grad = v.record.final_grad;
    v.S = S.empty() ? 0.0 : S.back().S_cum;
    std::vector<double> t, d;
    bool below = true;
    for (const auto& x : S) {
        v.max_d = std::max(v.max_d, x.d_u / M);
        v.peak_l6 = std::max(v.peak_l6, x.L6);
        v.max_grad = std::max(v.max_grad, std::sqrt(x.kinetic));
        if (x.kinetic >= M) below = false;
        t.push_back(x.t);
        d.push_back(x.d_u);
    }
    if (!S.empty()) {
        v.final_d = S.back().d_u / M;
        v.final_kinetic = S.back().kinetic / M;
        v.final_l6 = S.back().L6;
    }
    v.max_grad = std::max(v.max_grad, v.final_grad);

    if (v.blowup_flag) {
        v.label = Verdict::BlowsUp;
        v.reason = "step collapse with gradient above the blowup threshold";
        return v;
    }
    if (v.termination != Termination::Completed) {
        v.label = Verdict::Undecided;
        v.reason = "run ended early (" + to_string(v.termination) + ") without the gradient trigger";
        return v;
    }
    if (v.max_d <= b.stationary_tol) {
        v.label = Verdict::StationaryManifold;
        v.reason = "d stays below the stationary tolerance";
        return v;
    }
    v.rate = fit_log_rate(t, d, 1e-8 * M, 1e-1 * M);
    if (v.rate.ok && v.rate.rate < 0.0 && v.rate.r2 >= b.converge_r2 && v.rate.efoldings >= b.converge_efoldings) {
        v.label = Verdict::ConvergesToW;
        v.reason = "log-linear decay of d";
        return v;
    }
    if (below && v.final_l6 <= b.disperse_l6_drop * v.peak_l6) {
        v.label = Verdict::Disperses;
        v.reason = "kinetic below M throughout and L6 decaying";
        return v;
    }
    v.label = Verdict::Undecided;
    v.reason = "no rule decided within the budget";
    return v;
}

BlowupDatum tune_blowup_datum(const GroundState& gs, double R0) {
    if (!(R0 > 0.0) || R0 >= gs.sector->grid().r_max()) throw UsageError("blowup datum radius outside the box");
    auto chi = [R0](double r) {
        const double x = 2.0 * r / R0 - 1.0;  // 0 at R0/2, 1 at R0
        if (x <= 0.0) return 1.0;
        if (x >= 1.0) return 0.0;
        const double f = std::exp(-1.0 / x), g = std::exp(-1.0 / (1.0 - x));
        return g / (f + g);
    };
    const PhysParams& p = gs.params;
    const RadialField base = field_from_u(gs.sector, [&](double r) { return cplx(ground_state_profile(p, r) * chi(r)); });
    const double K = inner_a(base, base);
    const double P6 = lp_integral(base, 6.0);
    auto E = [&](double c) { return 0.5 * c * c * K - c * c * c * c * c * c * P6 / 6.0; };
    const double cmax = std::pow(K / P6, 0.25);
    if (E(cmax) < gs.E) throw PropertyFailure("truncated profile cannot reach the threshold energy");
    double lo = cmax, hi = 2.0 * cmax;
    while (E(hi) > gs.E) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (E(mid) > gs.E ? lo : hi) = mid;
    }
    BlowupDatum bd;
    bd.c = 0.5 * (lo + hi);
    bd.R0 = R0;
    bd.u0 = RadialField(gs.sector, bd.c * base.phi);
    bd.energy_gap = (energy(bd.u0) - gs.E) / gs.M;
    bd.kinetic_excess = (inner_a(bd.u0, bd.u0) - gs.M) / gs.M;
    return bd;
}

std::vector<SuiteEntry> standard_suite(double a, int n) {
    const PhysParams p(a);
    auto gs = std::make_shared<const GroundState>(eval_ground_state(p, build_grid(p, n, 200.0)));
    // concentration needs a finer first cell
    auto fine = std::make_shared<const GroundState>(
        eval_ground_state(p, build_grid(p, 2 * n, 200.0, Grading::first_node(1e-10))));
    std::vector<SuiteEntry> out;
    ClassifyBudget stat;
    stat.t_end = 10.0;
    // discrete ground states: the closed form carries an O(h^8) unstable component
    // that grows like e^{e0 t / mu^2}; mu < 1 is out of reach over t = 10
    for (auto [th, mu] : {std::pair{0.0, 1.0}, std::pair{0.7, 1.5}, std::pair{2.0, 3.0}}) {
        char name[48];
        std::snprintf(name, sizeof name, "g(%.1f,%.1f)W", th, mu);
        const PolishResult P = polish_ground_state(*gs, mu);
        out.push_back({name, Verdict::StationaryManifold, gs, RadialField(gs->sector, std::polar(1.0, th) * P.field.phi),
                       stat});
    }
    ClassifyBudget disp;
    disp.t_end = 50.0;
    out.push_back({"0.9W", Verdict::Disperses, gs, RadialField(gs->sector, 0.9 * gs->W.phi), disp});
    out.push_back({"0.8g(1,2)W", Verdict::Disperses, gs, RadialField(gs->sector, 0.8 * scaled_W(*gs, 1.0, 2.0).phi),
                   disp});
    RadialField shell = field_from_u(gs->sector, [](double r) { return cplx(std::exp(-(r - 3.0) * (r - 3.0))); });
    shell.phi *= 0.5 * std::sqrt(gs->M) / norm_a(shell);
    out.push_back({"shell", Verdict::Disperses, gs, shell, disp});
    ClassifyBudget bl;
    bl.t_end = 5.0;
    for (double R0 : {5.0, 8.0, 12.0}) {
        const BlowupDatum bd = tune_blowup_datum(*fine, R0);
        out.push_back({"cWchi(R0=" + std::to_string(static_cast<int>(R0)) + ")", Verdict::BlowsUp, fine, bd.u0, bl});
    }
    return out;
}

}  // namespace nlsa

#include "nlsa/evolution.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "nlsa/errors.hpp"
#include "nlsa/lapack.hpp"

namespace nlsa {

namespace {

constexpr int kTickBits = 30;  // dt = dt_max 2^{-k}, times tracked exactly in ticks

double smoothstep7(double x) {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    const double x4 = x * x * x * x;
    return x4 * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x);
}

}  // namespace

std::string to_string(Termination t) {
    switch (t) {
        case Termination::Completed: return "completed";
        case Termination::StepCollapse: return "step-collapse";
        case Termination::NonFinite: return "non-finite";
        case Termination::StepLimit: return "step-limit";
    }
    return "unknown";
}

PropagatorCache::PropagatorCache(SectorPtr sector) : sector_(std::move(sector)) {
    sqrt_m_ = sector_->mass().cwiseSqrt();
    const Vec is = sqrt_m_.cwiseInverse();
    const Eigen::MatrixXd S = is.asDiagonal() * sector_->stiffness_dense() * is.asDiagonal();
    auto e = lapack::all(S);
    lambda_ = e.values;
    Q_ = std::move(e.vectors);
}

CVec PropagatorCache::apply(const CVec& phi, double tau) const {
    const CVec z = Q_.transpose() * sqrt_m_.cwiseProduct(phi);
    CVec zt(z.size());
    for (int i = 0; i < z.size(); ++i) zt(i) = std::polar(1.0, -tau * lambda_(i)) * z(i);
    return (Q_ * zt).cwiseQuotient(sqrt_m_.cast<cplx>());
}

SimState make_state(RadialField u, double t0) {
    SimState st;
    st.t = t0;
    st.E0 = energy(u);
    st.M0 = lp_integral(u, 2.0);
    st.u = std::move(u);
    return st;
}

struct Evolver::Factor {
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
};

Evolver::Evolver(const GroundState& ref, EvolutionControls controls)
    : sector_(ref.sector), M_ref_(ref.M), c_(controls) {
    if (!(c_.dt_max > 0) || !(c_.sample_every > 0)) throw UsageError("evolution: dt_max and sample_every must be positive");
    const double ratio = c_.sample_every / c_.dt_max;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
        throw UsageError("evolution: sample_every must be a multiple of dt_max");
    mass_ = sector_->mass();
    w6_ = sector_->power_weights(6.0);
    w10_ = sector_->power_weights(10.0);
    rate_ = w6_.cwiseQuotient(mass_);
    const auto& r = sector_->grid().r();
    const double r_max = sector_->grid().r_max();
    gamma_ = Vec::Zero(r.size());
    if (c_.absorbing)
        for (int i = 0; i < r.size(); ++i)
            gamma_(i) = c_.absorb_strength * smoothstep7((r(i) - 0.9 * r_max) / (0.1 * r_max));
    if (c_.scheme == Scheme::Strang) prop_ = std::make_shared<PropagatorCache>(sector_);
}

Diagnostics Evolver::diagnostics(const RadialField& u) const {
    Diagnostics d;
    d.kinetic = inner_a(u, u);
    const Vec a2 = u.phi.cwiseAbs2();
    const Vec a4 = a2.cwiseProduct(a2);
    d.int_u6 = w6_.dot(a4.cwiseProduct(a2));
    d.int_u10 = w10_.dot(a4.cwiseProduct(a4).cwiseProduct(a2));
    d.E = 0.5 * d.kinetic - d.int_u6 / 6.0;
    d.mass = mass_.dot(a2);
    d.Linf = linf(u);
    return d;
}

const Evolver::Factor& Evolver::factor(double dt) {
    auto it = lu_.find(dt);
    if (it != lu_.end()) return *it->second;
    const SpMat& K = sector_->stiffness();
    const int n = static_cast<int>(K.rows());
    std::vector<Eigen::Triplet<cplx>> tl;
    const cplx ih(0.0, 0.5 * dt);
    for (int k = 0; k < K.outerSize(); ++k)
        for (SpMat::InnerIterator e(K, k); e; ++e) {
            tl.emplace_back(e.row(), e.col(), ih * e.value());
        }
    for (int i = 0; i < n; ++i) {
        const double damp = 0.5 * dt * gamma_(i) * mass_(i);
        tl.emplace_back(i, i, mass_(i) + damp);
    }
    auto f = std::make_shared<Factor>();
    Eigen::SparseMatrix<cplx> L(n, n);
    L.setFromTriplets(tl.begin(), tl.end());
    L.makeCompressed();
    f->lu.compute(L);
    if (f->lu.info() != Eigen::Success) throw NumericalError("evolution: Crank-Nicolson factorization failed");
    if (lu_.size() > 64) lu_.clear();
    return *lu_.emplace(dt, f).first->second;
}

bool Evolver::step(CVec& phi, double dt, int* iterations) {
    if (!(dt > 0)) throw UsageError("step: dt must be positive");
    if (c_.scheme == Scheme::Strang) {
        step_strang(phi, dt);
        if (iterations) *iterations = 0;
        return true;
    }
    return step_cn(phi, dt, iterations);
}

// (M + i dt/2 K) u1 = (M - i dt/2 K) u0 + i dt w6 G,
// G = (|u1|^4 + |u1|^2 |u0|^2 + |u0|^4)/3 (u1 + u0)/2: mass and energy conserving.
// Solved for the increment d = u1 - u0, so that rounding scales with |d| and
// discrete equilibria are not perturbed at the eps * cond level every step.
bool Evolver::step_cn(CVec& phi, double dt, int* iterations) {
    const Factor& f = factor(dt);
    const cplx idt(0.0, dt);
    CVec b0 = -idt * (sector_->stiffness() * phi);
    if (c_.absorbing) b0 -= dt * gamma_.cwiseProduct(mass_).cast<cplx>().cwiseProduct(phi);
    if (!c_.nonlinear) {
        phi += f.lu.solve(b0);
        if (iterations) *iterations = 1;
        return true;
    }
    const Vec p0 = phi.cwiseAbs2();
    const double norm0 = std::sqrt(mass_.dot(p0));
    CVec d = CVec::Zero(phi.size());
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= c_.picard_max; ++it) {
        const CVec u1 = phi + d;
        const Vec p1 = u1.cwiseAbs2();
        const Vec q = (p1.cwiseProduct(p1) + p1.cwiseProduct(p0) + p0.cwiseProduct(p0)) / 3.0;
        const CVec G = (w6_.cwiseProduct(q)).cast<cplx>().cwiseProduct(phi + 0.5 * d);
        CVec next = f.lu.solve(b0 + idt * G);
        const double delta = std::sqrt(mass_.dot((next - d).cwiseAbs2()));
        d.swap(next);
        if (!d.allFinite()) return false;
        const double rel = delta / std::max(norm0, 1e-300);
        // converged, or stalled at the rounding floor
        if (rel <= c_.picard_tol || (rel < 1e-12 && delta >= 0.5 * prev)) {
            phi += d;
            if (iterations) *iterations = it;
            return true;
        }
        prev = delta;
    }
    if (iterations) *iterations = c_.picard_max;
    return false;
}

void Evolver::step_strang(CVec& phi, double dt) {
    auto half = [&](CVec& x) {
        if (!c_.nonlinear && !c_.absorbing) return;
        for (int i = 0; i < x.size(); ++i) {
            const double a2 = std::norm(x(i));
            const double ph = c_.nonlinear ? 0.5 * dt * rate_(i) * a2 * a2 : 0.0;
            x(i) *= std::polar(std::exp(-0.5 * dt * gamma_(i)), ph);
        }
    };
    half(phi);
    phi = prop_->apply(phi, dt);
    half(phi);
}

OrbitRecord Evolver::evolve(SimState& st, double t_end, const Observer& obs) {
    if (!st.u.sector || st.u.sector->ell() != 0) throw UsageError("evolve: sector-0 field required");
    if (t_end == st.t) throw UsageError("evolve: t_end equals the current time");
    if (!st.u.finite()) throw UsageError("evolve: non-finite initial state");
    const bool backward = t_end < st.t;
    const double t0 = st.t;
    const double dt_max = c_.dt_max;
    const double tick = std::ldexp(dt_max, -kTickBits);
    const std::int64_t total = std::llround(std::abs(t_end - t0) / tick);
    const std::int64_t every = std::llround(c_.sample_every / tick);

    CVec phi = backward ? CVec(st.u.phi.conjugate()) : st.u.phi;
    auto physical = [&](const CVec& x) { return RadialField(st.u.sector, backward ? CVec(x.conjugate()) : x); };

    OrbitRecord rec;
    rec.E0 = st.E0;
    rec.M0 = st.M0;
    rec.min_dt = dt_max;
    double S = st.S;
    std::int64_t ticks = 0;
    int penalty = 0, calm = 0;
    Diagnostics dg = diagnostics(physical(phi));
    double u10_prev = dg.int_u10;

    auto time_at = [&](std::int64_t k) { return backward ? t0 - k * tick : t0 + k * tick; };
    auto record = [&](double dt_now) {
        const RadialField u = physical(phi);
        Sample s;
        s.t = time_at(ticks);
        s.kinetic = dg.kinetic;
        s.d_u = std::abs(dg.kinetic - M_ref_);
        s.E = dg.E;
        s.mass = dg.mass;
        s.L6 = std::pow(std::max(dg.int_u6, 0.0), 1.0 / 6.0);
        s.Linf = dg.Linf;
        s.S_cum = S;
        s.int_u10 = dg.int_u10;
        s.dt = dt_now;
        if (obs) obs(u, s);
        rec.max_energy_drift = std::max(rec.max_energy_drift, std::abs(dg.E - st.E0));
        rec.max_mass_drift = std::max(rec.max_mass_drift, std::abs(dg.mass - st.M0));
        rec.samples.push_back(s);
    };
    record(dt_max);

    while (ticks < total) {
        if (rec.steps >= c_.max_steps) {
            rec.termination = Termination::StepLimit;
            break;
        }
        // dyadic step from the nonlinear phase budget
        const double target = std::min(dt_max, c_.phase_budget / std::pow(std::max(dg.Linf, 1e-300), 4));
        int k = target >= dt_max ? 0 : static_cast<int>(std::ceil(std::log2(dt_max / target) - 1e-12));
        k += penalty;
        if (k > kTickBits) k = kTickBits;
        std::int64_t len = std::int64_t(1) << (kTickBits - k);
        const std::int64_t to_sample = every - ticks % every;
        const std::int64_t to_end = total - ticks;
        const std::int64_t room = std::min(to_sample, to_end);
        while (len > room) {
            len >>= 1;
            ++k;
        }
        const double dt = std::ldexp(dt_max, -k);
        if (dt < c_.dt_floor) {
            rec.termination = Termination::StepCollapse;
            break;
        }
        CVec trial = phi;
        int iters = 0;
        if (!step(trial, dt, &iters)) {
            ++rec.picard_failures;
            ++penalty;
            calm = 0;
            if (std::ldexp(dt_max, -(k + 1)) < c_.dt_floor) {
                rec.termination = Termination::StepCollapse;
                break;
            }
            continue;
        }
        if (!trial.allFinite()) {
            rec.termination = Termination::NonFinite;
            break;
        }
        phi.swap(trial);
        ticks += len;
        ++rec.steps;
        rec.min_dt = std::min(rec.min_dt, dt);
        if (penalty > 0 && ++calm >= 32) {
            --penalty;
            calm = 0;
        }
        dg = diagnostics(physical(phi));
        S += 0.5 * dt * (u10_prev + dg.int_u10);
        u10_prev = dg.int_u10;
        if (ticks % every == 0 || ticks == total) record(dt);
    }

    st.u = physical(phi);
    st.t = time_at(ticks);
    st.S = S;
    st.dt = rec.min_dt;
    rec.t_final = st.t;
    rec.final_grad = std::sqrt(grad_l2_sq(st.u));
    rec.final_state = st.u;
    if (rec.termination != Termination::Completed) {
        if (rec.samples.empty() || rec.samples.back().t != st.t) record(rec.min_dt);
        rec.blowup = rec.termination == Termination::StepCollapse &&
                     rec.final_grad > c_.blowup_grad_factor * std::sqrt(M_ref_);
    }
    return rec;
}

OrbitRecord evolve(const GroundState& ref, SimState& st, double t_end, const EvolutionControls& c,
                   const Observer& obs) {
    Evolver ev(ref, c);
    return ev.evolve(st, t_end, obs);
}

double scattering_size(const OrbitRecord& rec) {
    double S = 0.0;
    for (size_t i = 1; i < rec.samples.size(); ++i) {
        const auto& a = rec.samples[i - 1];
        const auto& b = rec.samples[i];
        S += 0.5 * std::abs(b.t - a.t) * (a.int_u10 + b.int_u10);
    }
    return S;
}

void OrbitRecord::write_csv(std::ostream& os, const std::vector<std::string>& header) const {
    for (const auto& h : header) os << "# " << h << '\n';
    os << "t,d_u,kinetic,E,mass,L6,Linf,S_cum,theta,mu,alpha,VR,dtVR,dttVR\n";
    char buf[32];
    auto put = [&](double v, bool last) {
        if (std::isfinite(v)) {
            std::snprintf(buf, sizeof buf, "%.12g", v);
            os << buf;
        }
        os << (last ? '\n' : ',');
    };
    for (const auto& s : samples) {
        put(s.t, false);
        put(s.d_u, false);
        put(s.kinetic, false);
        put(s.E, false);
        put(s.mass, false);
        put(s.L6, false);
        put(s.Linf, false);
        put(s.S_cum, false);
        put(s.theta, false);
        put(s.mu, false);
        put(s.alpha, false);
        put(s.VR, false);
        put(s.dtVR, false);
        put(s.dttVR, true);
    }
}

}  // namespace nlsa

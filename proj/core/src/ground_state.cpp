#include "nlsa/ground_state.hpp"

#include <Eigen/LU>
#include <cmath>

namespace nlsa {

namespace {

double softplus(double x) { return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct Q {
    double W, q_over;  // W and q/(1+q), q = r^{2 beta}
};

Q profile_parts(const PhysParams& p, double r) {
    const double b = p.beta();
    const double lr = std::log(r);
    const double x = 2.0 * b * lr;
    const double logW = 0.25 * std::log(3.0 * b * b) + 0.5 * (b - 1.0) * lr - 0.5 * softplus(x);
    const double qo = x > 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    return {std::exp(logW), qo};
}

// Fritsch-Carlson slopes on a uniform grid
void pchip_slopes(const std::vector<double>& y, double h, std::vector<double>& d) {
    const size_t m = y.size();
    d.assign(m, 0.0);
    std::vector<double> del(m - 1);
    for (size_t i = 0; i + 1 < m; ++i) del[i] = (y[i + 1] - y[i]) / h;
    for (size_t i = 1; i + 1 < m; ++i) {
        if (del[i - 1] * del[i] > 0.0)
            d[i] = 2.0 / (1.0 / del[i - 1] + 1.0 / del[i]);
    }
    d[0] = del[0];
    d[m - 1] = del[m - 2];
}

double hermite(double y0, double y1, double d0, double d1, double h, double t) {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1;
}

}  // namespace

double ground_state_profile(const PhysParams& p, double r) {
    if (r <= 0.0) return 0.0;
    return profile_parts(p, r).W;
}

double scaling_generator(const PhysParams& p, double r) {
    if (r <= 0.0) return 0.0;
    const auto [W, qo] = profile_parts(p, r);
    // (1-q)/(1+q) = 1 - 2 q/(1+q)
    return 0.5 * p.beta() * W * (1.0 - 2.0 * qo);
}

double scaling_generator2(const PhysParams& p, double r) {
    if (r <= 0.0) return 0.0;
    const auto [W, qo] = profile_parts(p, r);
    const double b = p.beta();
    const double h = 1.0 - 2.0 * qo;
    const double q_over_sq = qo * (1.0 - qo);  // q/(1+q)^2
    return 0.5 * b * b * W * (0.5 * h * h - 4.0 * q_over_sq);
}

double energy(const RadialField& u) { return 0.5 * inner_a(u, u) - lp_integral(u, 6.0) / 6.0; }

GroundState eval_ground_state(const PhysParams& p, GridPtr grid) {
    if (p.a() != grid->params().a()) throw UsageError("eval_ground_state: grid built for a different a");
    return eval_ground_state(make_sector(std::move(grid), 0));
}

GroundState eval_ground_state(SectorPtr s) {
    if (s->ell() != 0) throw UsageError("ground state lives in sector 0");
    const PhysParams& p = s->grid().params();
    GroundState gs{p, s, {}, {}};
    gs.W = field_from_u(s, [&](double r) { return cplx(ground_state_profile(p, r)); });
    gs.W1 = field_from_u(s, [&](double r) { return cplx(scaling_generator(p, r)); });
    const double b = p.beta();
    gs.M = inner_a(gs.W, gs.W);
    gs.M_exact = std::pow(3.0, 1.5) * kPi * kPi * b * b / 4.0;
    gs.int_W6 = lp_integral(gs.W, 6.0);
    gs.L6 = std::pow(gs.int_W6, 1.0 / 6.0);
    gs.E = energy(gs.W);
    return gs;
}

GroundState with_field(const GroundState& gs, const RadialField& W) {
    require_same(gs.W, W);
    GroundState out = gs;
    out.W = W;
    out.M = inner_a(W, W);
    out.int_W6 = lp_integral(W, 6.0);
    out.L6 = std::pow(out.int_W6, 1.0 / 6.0);
    out.E = energy(W);
    return out;
}

double stationary_residual(const RadialField& u) {
    const Sector& s = *u.sector;
    const Vec& M = s.mass();
    const Vec w6 = s.power_weights(6.0);
    const CVec nl = (w6.array() * u.phi.cwiseAbs2().array().square()).matrix().cast<cplx>().cwiseProduct(u.phi);
    const CVec res = s.stiffness() * u.phi - nl;
    // weak-form vectors to pointwise values: divide by mass, then L^2 norm
    const double num = (res.cwiseAbs2().array() / M.array()).sum();
    const double den = (nl.cwiseAbs2().array() / M.array()).sum();
    return std::sqrt(num / den);
}

double ground_state_residual(const GroundState& gs) {
    const Sector& s = *gs.sector;
    const Vec P = s.potential_weights([&](double r) { return std::pow(ground_state_profile(gs.params, r), 4); });
    const Vec phi = gs.W.phi.real();
    const Vec nl = P.cwiseProduct(phi);
    const Vec res = s.stiffness() * phi - nl;
    const Vec& M = s.mass();
    return std::sqrt((res.array().square() / M.array()).sum() / (nl.array().square() / M.array()).sum());
}

RadialField SymmetryAction::apply(const RadialField& f) const {
    const Sector& s = *f.sector;
    const RadialGrid& g = s.grid();
    const int n = g.n();
    const double h = g.dxi();
    const double sp = s.s_plus();
    // extended node values k = -3 .. n+4
    const int kmin = -3, kmax = n + 4;
    std::vector<double> yr, yi, dr, di;
    for (int k = kmin; k <= kmax; ++k) {
        auto [idx, fac] = s.ghost(k);
        yr.push_back(fac * f.phi(idx - 1).real());
        yi.push_back(fac * f.phi(idx - 1).imag());
    }
    pchip_slopes(yr, h, dr);
    pchip_slopes(yi, h, di);
    const double xi_n = g.xi(n);
    const cplx phase = std::polar(std::pow(mu, -0.5 - sp), theta);

    CVec out(n);
    for (int i = 0; i < n; ++i) {
        const double rho = g.r()(i) / mu;
        const double x = g.xi_of_r(rho);
        cplx val;
        if (x >= xi_n) {
            val = f.phi(n - 1) * std::pow(rho / g.r_max(), s.s_minus() - sp);
        } else {
            const double pos = x / h + 0.5;  // fractional node index k
            int k0 = static_cast<int>(std::floor(pos));
            if (k0 < kmin) k0 = kmin;
            if (k0 >= kmax) k0 = kmax - 1;
            const double t = pos - k0;
            const size_t j = static_cast<size_t>(k0 - kmin);
            val = cplx(hermite(yr[j], yr[j + 1], dr[j], dr[j + 1], h, t),
                       hermite(yi[j], yi[j + 1], di[j], di[j + 1], h, t));
        }
        out(i) = phase * val;
    }
    return {f.sector, out};
}

RadialField scaled_W(const GroundState& gs, double theta, double mu) {
    const cplx c = std::polar(std::pow(mu, -0.5), theta);
    return field_from_u(gs.sector, [&](double r) { return c * ground_state_profile(gs.params, r / mu); });
}

RadialField scaled_W1(const GroundState& gs, double theta, double mu) {
    const cplx c = std::polar(std::pow(mu, -0.5), theta);
    return field_from_u(gs.sector, [&](double r) { return c * scaling_generator(gs.params, r / mu); });
}

RadialField scaled_W2(const GroundState& gs, double theta, double mu) {
    const cplx c = std::polar(std::pow(mu, -0.5), theta);
    return field_from_u(gs.sector, [&](double r) { return c * scaling_generator2(gs.params, r / mu); });
}

PolishResult polish_ground_state(const GroundState& gs, double mu) {
    const Sector& s = *gs.sector;
    const int n = s.n();
    const Eigen::MatrixXd K = s.stiffness_dense();
    const Vec& M = s.mass();
    const Vec w6 = s.power_weights(6.0);
    Vec phi = scaled_W(gs, 0.0, mu).phi.real();
    const Vec border = M.cwiseProduct(scaled_W1(gs, 0.0, mu).phi.real());

    auto residual = [&](const Vec& x) {
        const Vec nl = w6.cwiseProduct(x.array().pow(5).matrix());
        const Vec res = K * x - nl;
        return std::sqrt((res.array().square() / M.array()).sum() / (nl.array().square() / M.array()).sum());
    };

    PolishResult out;
    out.residual_before = residual(phi);
    double best = out.residual_before;
    Vec best_phi = phi;
    Eigen::MatrixXd B(n + 1, n + 1);
    for (int it = 0; it < 8; ++it) {
        const Vec nl = w6.cwiseProduct(phi.array().pow(5).matrix());
        Eigen::VectorXd rhs(n + 1);
        rhs.head(n) = -(K * phi - nl);
        rhs(n) = 0.0;
        B.setZero();
        B.topLeftCorner(n, n) = K;
        B.topLeftCorner(n, n).diagonal() -= 5.0 * w6.cwiseProduct(phi.array().pow(4).matrix());
        B.col(n).head(n) = border;
        B.row(n).head(n) = border.transpose();
        const Eigen::VectorXd sol = B.partialPivLu().solve(rhs);
        phi += sol.head(n);
        ++out.iterations;
        const double r = residual(phi);
        if (r < best) {
            best = r;
            best_phi = phi;
        } else if (r > 0.5 * best) {
            break;  // stalled at the rounding floor
        }
    }
    out.residual_after = best;
    out.field = RadialField(gs.sector, best_phi.cast<cplx>());
    return out;
}

SobolevReport sharp_sobolev_check(const GroundState& gs, const std::vector<SobolevSample>& samples) {
    if (samples.empty()) throw UsageError("sharp_sobolev_check needs samples");
    SobolevReport rep;
    rep.sharp_constant = gs.L6 / std::sqrt(gs.M);
    for (const auto& smp : samples) {
        SobolevReport::Row row;
        row.label = smp.label;
        const double na2 = inner_a(smp.f, smp.f);
        const double l6 = std::pow(lp_integral(smp.f, 6.0), 1.0 / 6.0);
        row.ratio = (l6 / std::sqrt(na2)) / rep.sharp_constant;
        row.deficit = 1.0 - row.ratio;
        row.ok = row.deficit >= -1e-8;
        if (smp.extremal) row.ok = row.ok && std::abs(row.deficit) <= 1e-6;
        if (na2 <= gs.M) {
            row.coercivity_checked = true;
            const double E = energy(smp.f);
            row.coercivity_ok = (na2 / 3.0 <= E * (1 + 1e-12) + 1e-14) && (E <= na2 / 2.0 * (1 + 1e-12) + 1e-14);
            row.ok = row.ok && row.coercivity_ok;
        }
        rep.ok = rep.ok && row.ok;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace nlsa

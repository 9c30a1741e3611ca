#include "nlsa/sector.hpp"

#include <array>
#include <cmath>
#include <map>

#include "nlsa/errors.hpp"
#include "nlsa/ground_state.hpp"

namespace nlsa {

namespace {

// staggered first derivative, 8th order: D f(j+1/2) = sum C_m (f_{j+m} - f_{j+1-m}) / h
constexpr double kStag[4] = {1225.0 / 1024.0, -245.0 / 3072.0, 49.0 / 5120.0, -5.0 / 7168.0};
// collocated first derivative, 8th order
constexpr double kCent[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};

// Exterior harmonic solution has to decay to ~e^{-45} in xi before the tail is cut.
constexpr double kTailXi = 45.0;

}  // namespace

Sector::Sector(GridPtr grid, int ell) : grid_(std::move(grid)), ell_(ell) {
    if (ell < 0) throw UsageError("sector index must be nonnegative");
    const auto& g = *grid_;
    const auto& p = g.params();
    sp_ = p.s_plus(ell);
    sm_ = p.s_minus(ell);
    const int n = g.n();
    const double h = g.dxi();
    ntail_ = static_cast<int>(std::ceil(kTailXi / h));
    const int next = n + ntail_;

    rext_.resize(next);
    mext_.resize(next);
    for (int k = 1; k <= next; ++k) {
        const double x = g.xi(k);
        const double rk = (k == n) ? g.r_max() : g.r_of_xi(x);
        rext_(k - 1) = rk;
        mext_(k - 1) = h * 4.0 * kPi * rk * rk * g.dr_dxi(x);
    }
    tail_.resize(ntail_);
    for (int i = 0; i < ntail_; ++i) tail_(i) = std::exp((sm_ - sp_) * std::log(rext_(n + i) / g.r_max()));

    rs_.resize(n);
    mass_.resize(n);
    for (int i = 0; i < n; ++i) {
        rs_(i) = std::pow(rext_(i), sp_);
        mass_(i) = mext_(i) * rs_(i) * rs_(i);
    }

    // K = sum_j h g_j d_j d_j^T over midpoints xi = j h, g = 4 pi r^{2s+2} / r_xi.
    // j = 0 sits at r = 0 where g vanishes.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(next) * 24);
    std::map<int, double> d;
    for (int j = 1; j <= next - 4; ++j) {
        const double x = j * h;
        const double rm = g.r_of_xi(x);
        const double gj = 4.0 * kPi * std::exp((2.0 * sp_ + 2.0) * std::log(rm)) / g.dr_dxi(x);
        const double wj = h * gj;
        d.clear();
        for (int m = 1; m <= 4; ++m) {
            auto [ip, fp] = ghost(j + m);
            auto [im, fm] = ghost(j + 1 - m);
            d[ip] += kStag[m - 1] * fp / h;
            d[im] -= kStag[m - 1] * fm / h;
        }
        for (auto& [a, da] : d)
            for (auto& [b, db] : d) trip.emplace_back(a - 1, b - 1, wj * da * db);
    }
    K_.resize(n, n);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();
}

std::pair<int, double> Sector::ghost(int k) const {
    const int n = grid_->n();
    if (k <= 0) return {1 - k, 1.0};
    if (k <= n) return {k, 1.0};
    if (k > n + ntail_) return {n, 0.0};
    return {n, tail_(k - n - 1)};
}

Vec Sector::power_weights(double p) const {
    const int n = grid_->n();
    Vec w(n);
    for (int i = 0; i < n; ++i) w(i) = mext_(i) * std::pow(rext_(i), p * sp_);
    double t = 0.0;
    for (int i = 0; i < ntail_; ++i) t += mext_(n + i) * std::pow(rext_(n + i), p * sp_) * std::pow(tail_(i), p);
    w(n - 1) += t;
    return w;
}

Vec Sector::potential_weights(const std::function<double(double)>& V,
                              const std::function<double(double)>& V_tail) const {
    const int n = grid_->n();
    const auto& Vt = V_tail ? V_tail : V;
    Vec w(n);
    for (int i = 0; i < n; ++i) w(i) = mext_(i) * V(rext_(i)) * rs_(i) * rs_(i);
    double t = 0.0;
    for (int i = 0; i < ntail_; ++i) {
        const double r = rext_(n + i);
        t += mext_(n + i) * Vt(r) * std::pow(r, 2.0 * sp_) * tail_(i) * tail_(i);
    }
    w(n - 1) += t;
    return w;
}

CVec Sector::dphi_dxi(const CVec& phi) const {
    const int n = grid_->n();
    const double h = grid_->dxi();
    CVec d(n);
    for (int k = 1; k <= n; ++k) {
        cplx s = 0.0;
        for (int m = 1; m <= 4; ++m) {
            auto [ip, fp] = ghost(k + m);
            auto [im, fm] = ghost(k - m);
            s += kCent[m - 1] * (fp * phi(ip - 1) - fm * phi(im - 1));
        }
        d(k - 1) = s / h;
    }
    return d;
}

CVec Sector::du_dr(const CVec& phi) const {
    const int n = grid_->n();
    const CVec dx = dphi_dxi(phi);
    CVec out(n);
    for (int i = 0; i < n; ++i) {
        const double r = rext_(i);
        const double rxi = grid_->dr_dxi(grid_->xi(i + 1));
        out(i) = rs_(i) * (sp_ * phi(i) / r + dx(i) / rxi);
    }
    return out;
}

Sector::Extended Sector::extended(const CVec& phi) const {
    const int n = grid_->n();
    const int next = n + ntail_;
    Extended e;
    e.r = rext_;
    e.m = mext_;
    e.u.resize(next);
    e.ur.resize(next);
    e.u.head(n) = to_u(phi);
    e.ur.head(n) = du_dr(phi);
    for (int i = 0; i < ntail_; ++i) {
        const double r = rext_(n + i);
        const cplx uk = phi(n - 1) * tail_(i) * std::pow(r, sp_);
        e.u(n + i) = uk;
        e.ur(n + i) = sm_ * uk / r;
    }
    return e;
}

Sector::Extended Sector::refined(const CVec& phi, int q) const {
    if (q < 1 || q % 2 == 0) throw UsageError("refined quadrature needs an odd factor");
    const auto& g = *grid_;
    const int next = grid_->n() + ntail_;
    const double h = g.dxi(), hs = h / q;
    const int m = q * next;
    Extended e;
    e.r.resize(m);
    e.m.resize(m);
    e.u.resize(m);
    e.ur.resize(m);
    auto node = [&](int k) {
        auto [i, f] = ghost(k);
        return f == 0.0 ? cplx(0.0) : f * phi(i - 1);
    };
    // Lagrange weights (value, derivative) depend only on the offset i mod q
    std::vector<std::array<double, 10>> wv(q), wd(q);
    for (int o = 0; o < q; ++o) {
        const double pos = (o + 0.5) / q + 0.5;
        const double t = pos - std::floor(pos);
        for (int j = 0; j < 10; ++j) {
            const double xj = j - 4;
            double v = 1.0, d = 0.0;
            for (int l = 0; l < 10; ++l) {
                if (l == j) continue;
                const double xl = l - 4;
                v *= (t - xl) / (xj - xl);
                double p = 1.0 / (xj - xl);
                for (int mm = 0; mm < 10; ++mm)
                    if (mm != j && mm != l) p *= (t - (mm - 4)) / (xj - (mm - 4));
                d += p;
            }
            wv[o][j] = v;
            wd[o][j] = d;
        }
    }
    for (int i = 0; i < m; ++i) {
        const double x = (i + 0.5) * hs;
        const int k0 = static_cast<int>(std::floor(x / h + 0.5));  // stencil k0-4 .. k0+5
        const auto& cv = wv[i % q];
        const auto& cd = wd[i % q];
        cplx f = 0.0, fx = 0.0;
        for (int j = 0; j < 10; ++j) {
            const cplx v = node(k0 - 4 + j);
            f += cv[j] * v;
            fx += cd[j] * v;
        }
        fx /= h;
        const double r = g.r_of_xi(x), rxi = g.dr_dxi(x);
        const double rs = std::pow(r, sp_);
        e.r(i) = r;
        e.m(i) = hs * 4.0 * kPi * r * r * rxi;
        e.u(i) = rs * f;
        e.ur(i) = rs * (sp_ * f / r + fx / rxi);
    }
    return e;
}

RadialField RadialField::operator+(const RadialField& o) const {
    require_same(*this, o);
    return {sector, phi + o.phi};
}

RadialField RadialField::operator-(const RadialField& o) const {
    require_same(*this, o);
    return {sector, phi - o.phi};
}

void require_same(const RadialField& f, const RadialField& g) {
    if (!f.sector || !g.sector) throw UsageError("field without sector");
    if (f.sector != g.sector &&
        (f.sector->ell() != g.sector->ell() || f.sector->grid_ptr() != g.sector->grid_ptr()))
        throw UsageError("fields live on different grids or sectors");
}

RadialField field_from_u(SectorPtr s, const std::function<cplx(double)>& u) {
    const auto& r = s->grid().r();
    CVec phi(r.size());
    for (int i = 0; i < r.size(); ++i) phi(i) = u(r(i)) / s->rs()(i);
    return {std::move(s), std::move(phi)};
}

double inner_a(const RadialField& f, const RadialField& g) {
    require_same(f, g);
    const SpMat& K = f.sector->stiffness();
    const Vec fr = f.phi.real(), fi = f.phi.imag(), gr = g.phi.real(), gi = g.phi.imag();
    return fr.dot(K * gr) + fi.dot(K * gi);
}

double norm_a(const RadialField& f) { return std::sqrt(std::max(0.0, inner_a(f, f))); }

double inner_l2(const RadialField& f, const RadialField& g) {
    require_same(f, g);
    const Vec& M = f.sector->mass();
    return (f.phi.conjugate().cwiseProduct(g.phi)).real().dot(M);
}

double lp_integral(const RadialField& f, double p) {
    if (p == 2.0) return f.phi.cwiseAbs2().dot(f.sector->mass());
    const Vec w = f.sector->power_weights(p);
    return f.phi.cwiseAbs().array().pow(p).matrix().dot(w);
}

double grad_l2_sq(const RadialField& f) {
    const Sector& s = *f.sector;
    const auto& g = s.grid();
    const int n = g.n();
    const CVec ur = s.du_dr(f.phi);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double m = g.dxi() * 4.0 * kPi * g.r()(i) * g.r()(i) * g.dr_dxi(g.xi(i + 1));
        sum += m * std::norm(ur(i));
    }
    // exterior: u ~ r^{s_-} so u_r = s_- u / r
    double t = 0.0;
    for (int k = n + 1; k <= n + s.n_tail(); ++k) {
        const double r = s.r_ext(k);
        const double m = g.dxi() * 4.0 * kPi * r * r * g.dr_dxi(g.xi(k));
        const double ur_k = s.s_minus() * s.ghost(k).second * std::pow(r, s.s_plus() - 1.0);
        t += m * ur_k * ur_k;
    }
    return sum + t * std::norm(f.phi(n - 1));
}

double linf(const RadialField& f) { return f.u().cwiseAbs().maxCoeff(); }

SectorOperator assemble_sector_op(SectorPtr sector, int c) {
    if (c != 0 && c != 1 && c != 5) throw UsageError("sector operator coefficient must be 0, 1 or 5");
    const PhysParams& p = sector->grid().params();
    SectorOperator op;
    op.ell = sector->ell();
    op.c = c;
    op.potential = sector->potential_weights([&](double r) { return std::pow(ground_state_profile(p, r), 4); });
    op.A = sector->stiffness_dense();
    op.A.diagonal() -= c * op.potential;
    op.mass = sector->mass();
    op.sector = std::move(sector);
    return op;
}

SectorPtr make_sector(GridPtr grid, int ell) { return std::make_shared<const Sector>(std::move(grid), ell); }

}  // namespace nlsa

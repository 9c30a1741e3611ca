#include "nlsa/spectral.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>

#include "nlsa/errors.hpp"
#include "nlsa/lapack.hpp"

namespace nlsa {

namespace {

Eigen::MatrixXd similarity(const Eigen::MatrixXd& A, const Vec& mass) {
    const Vec s = mass.cwiseSqrt().cwiseInverse();
    return s.asDiagonal() * A * s.asDiagonal();
}

SpMat sparse_op(const Sector& s, const Vec& potential, double c) {
    SpMat A = s.stiffness();
    for (int i = 0; i < A.rows(); ++i) A.coeffRef(i, i) -= c * potential(i);
    A.makeCompressed();
    return A;
}

}  // namespace

SectorSpectrum sector_spectrum(const SectorOperator& op, int k, double kernel_tol) {
    const int n = static_cast<int>(op.A.rows());
    if (k < 1 || k > n) throw UsageError("sector_spectrum: need 1 <= k <= n");
    SectorSpectrum out;
    out.ell = op.ell;
    out.c = op.c;
    lapack::SymEig e;
    const Eigen::MatrixXd S = similarity(op.A, op.mass);
    out.rounding_floor = 100.0 * std::numeric_limits<double>::epsilon() * S.cwiseAbs().rowwise().sum().maxCoeff();
    try {
        e = lapack::lowest(S, k);
    } catch (const NumericalError& err) {
        throw NumericalError(std::string("sector_spectrum(l=") + std::to_string(op.ell) + ", c=" + std::to_string(op.c) +
                             "): " + err.what());
    }
    out.eigenvalues = e.values;
    out.eigenvectors = op.mass.cwiseSqrt().cwiseInverse().asDiagonal() * e.vectors;
    // sign convention: positive near the origin
    for (int j = 0; j < k; ++j) {
        int imax;
        out.eigenvectors.col(j).cwiseAbs().head(std::max(1, n / 4)).maxCoeff(&imax);
        if (out.eigenvectors(imax, j) < 0) out.eigenvectors.col(j) *= -1.0;
    }
    const Eigen::MatrixXd G = out.eigenvectors.transpose() * op.mass.asDiagonal() * out.eigenvectors;
    out.orthonormality_error = (G - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
    flag_kernel(out, kernel_tol);
    return out;
}

void flag_kernel(SectorSpectrum& s, double tol) {
    s.kernel_tol = tol;
    s.kernel.clear();
    s.negative_count = 0;
    for (int j = 0; j < s.eigenvalues.size(); ++j) {
        const double l = s.eigenvalues(j);
        if (std::abs(l) < tol)
            s.kernel.push_back(j);
        else if (l < 0)
            ++s.negative_count;
    }
}

double kernel_tolerance(const SectorSpectrum& coarse, const SectorSpectrum& fine) {
    if (coarse.eigenvalues.size() < 2 || fine.eigenvalues.size() < 2)
        throw UsageError("kernel_tolerance needs two eigenvalues per spectrum");
    // kernel eigenvalues are rounding noise, so their difference alone can vanish by accident
    return std::max({10.0 * std::abs(coarse.eigenvalues(1) - fine.eigenvalues(1)), coarse.rounding_floor,
                     fine.rounding_floor});
}

GapEstimates gap_estimates(const SectorOperator& op5, const SectorOperator& op1, int k) {
    if (op5.c != 5 || op1.c != 1 || op5.ell != 0 || op1.ell != 0)
        throw UsageError("gap_estimates expects sector 0 operators with c=5 and c=1");
    if (k < 3) k = 3;
    const Eigen::MatrixXd K = op5.sector->stiffness_dense();
    GapEstimates g;
    g.pencil5 = lapack::generalized(op5.A, K, k).values;
    g.pencil1 = lapack::generalized(op1.A, K, k).values;
    g.lambda3 = g.pencil5(2);
    g.tilde_lambda2 = g.pencil1(1);
    g.interlaced = true;
    for (int j = 0; j < 3; ++j) g.interlaced = g.interlaced && g.pencil5(j) < g.pencil1(j);
    g.ok = g.lambda3 > 0 && g.tilde_lambda2 > 0;
    return g;
}

double l2_cosine(const Vec& x, const Vec& y, const Vec& mass) {
    const double xy = x.cwiseProduct(mass).dot(y);
    return std::abs(xy) / std::sqrt(x.cwiseProduct(mass).dot(x) * y.cwiseProduct(mass).dot(y));
}

std::pair<double, double> frobenius_exponents(double a, int ell) {
    if (ell < 0) throw UsageError("frobenius_exponents: l must be nonnegative");
    const double disc = 1.0 + 4.0 * (a + ell * (ell + 1.0));
    if (disc < 0) throw ConfigError("frobenius_exponents: complex exponents for a below -1/4");
    const double q = std::sqrt(disc);
    return {0.5 * (-1.0 + q), 0.5 * (-1.0 - q)};
}

double boundary_slope(const Sector& s, const Vec& phi) {
    const Vec& r = s.grid().r();
    const double r_hi = 10.0 * r(0);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = 0; i < r.size() && r(i) <= r_hi; ++i) {
        const double x = std::log(r(i));
        const double y = std::log(std::abs(phi(i) * s.rs()(i)));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 3) throw UsageError("boundary_slope: fewer than 3 nodes in the first decade");
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

double TrichotomyData::pairing(const CVec& x, const CVec& v) const {
    const Vec x1 = x.real(), x2 = x.imag(), v1 = v.real(), v2 = v.imag();
    return x1.dot(A5 * v1) + x2.dot(A1 * v2);
}

TrichotomyData solve_trichotomy(const GroundState& gs, const TrichotomyOptions& opt) {
    const Sector& s = *gs.sector;
    const RadialGrid& g = s.grid();
    const int n = s.n();
    TrichotomyData t;

    // coarse dense spectrum of JL
    {
        auto cgrid = build_grid(gs.params, opt.coarse_n, g.r_max(), Grading::first_node(g.r1()));
        auto cs = make_sector(cgrid, 0);
        const RadialField Wc = field_from_u(cs, [&](double r) { return cplx(ground_state_profile(gs.params, r)); });
        const Vec Pc = cs->power_weights(6.0).cwiseProduct(Wc.phi.real().array().pow(4).matrix());
        const Eigen::MatrixXd Kc = cs->stiffness_dense();
        const Vec& Mc = cs->mass();
        const int m = opt.coarse_n;
        Eigen::MatrixXd JL = Eigen::MatrixXd::Zero(2 * m, 2 * m);
        Eigen::MatrixXd A1 = Kc, A5 = Kc;
        A1.diagonal() -= Pc;
        A5.diagonal() -= 5.0 * Pc;
        JL.topRightCorner(m, m) = Mc.cwiseInverse().asDiagonal() * A1;
        JL.bottomLeftCorner(m, m) = -(Mc.cwiseInverse().asDiagonal() * A5);
        const Eigen::VectorXcd ev = lapack::eigenvalues(JL);

        const double box0 = lapack::lowest(similarity(Kc, Mc), 1).values(0);
        t.jl_kernel_tol = 0.1 * box0;

        double best = 0.0;
        int ibest = -1;
        for (int i = 0; i < ev.size(); ++i) {
            const double re = ev(i).real(), im = ev(i).imag(), ab = std::abs(ev(i));
            if (ab < t.jl_kernel_tol) {
                ++t.near_zero_count;
                continue;
            }
            if (re > t.jl_kernel_tol && std::abs(im) <= 1e-6 * ab) {
                ++t.real_positive_count;
                if (re > best) {
                    best = re;
                    ibest = i;
                }
            }
        }
        if (ibest < 0) throw PropertyFailure("solve_trichotomy: JL has no real positive eigenvalue");
        t.e0_coarse = best;
        t.leading_imag_rel = std::abs(ev(ibest).imag()) / std::abs(ev(ibest));
        for (int i = 0; i < ev.size(); ++i) {
            const double ab = std::abs(ev(i));
            if (ab < t.jl_kernel_tol) continue;
            if (std::abs(std::abs(ev(i).real()) - best) <= 1e-6 * best && std::abs(ev(i).imag()) <= 1e-6 * ab) continue;
            t.center_max_real = std::max(t.center_max_real, std::abs(ev(i).real()) / std::max(1.0, ab));
        }
    }
    if (t.leading_imag_rel > 1e-8)
        throw NumericalError("solve_trichotomy: leading eigenvalue has relative imaginary part " +
                             std::to_string(t.leading_imag_rel));

    // full-n operators
    t.mass = s.mass();
    t.potential = s.power_weights(6.0).cwiseProduct(gs.W.phi.cwiseAbs2().array().square().matrix());
    t.A1 = sparse_op(s, t.potential, 1.0);
    t.A5 = sparse_op(s, t.potential, 5.0);

    // shift-invert on M (JL - sigma) = [[-sigma M, A1], [-A5, -sigma M]]
    const double sigma = t.e0_coarse * (1.0 + 1e-4);
    std::vector<Eigen::Triplet<double>> trip;
    auto add = [&](const SpMat& A, int r0, int c0, double f) {
        for (int k = 0; k < A.outerSize(); ++k)
            for (SpMat::InnerIterator it(A, k); it; ++it) trip.emplace_back(it.row() + r0, it.col() + c0, f * it.value());
    };
    add(t.A1, 0, n, 1.0);
    add(t.A5, n, 0, -1.0);
    for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, i, -sigma * t.mass(i));
        trip.emplace_back(n + i, n + i, -sigma * t.mass(i));
    }
    SpMat B(2 * n, 2 * n);
    B.setFromTriplets(trip.begin(), trip.end());
    B.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(B);
    if (lu.info() != Eigen::Success) throw NumericalError("solve_trichotomy: shifted block factorization failed");

    Vec Mm(2 * n);
    Mm << t.mass, t.mass;
    auto mnorm = [&](const Vec& x) { return std::sqrt(x.cwiseAbs2().dot(Mm)); };
    Vec x = Vec::Ones(2 * n);
    x.tail(n).setConstant(0.5);
    x /= mnorm(x);
    double lam = sigma, lam_prev = 0.0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        const Vec y = lu.solve(Mm.cwiseProduct(x));
        lam_prev = lam;
        lam = sigma + x.cwiseProduct(Mm).dot(x) / x.cwiseProduct(Mm).dot(y);
        x = y / mnorm(y);
        t.iterations = it + 1;
        if (it > 2 && std::abs(lam - lam_prev) <= opt.tol * lam) break;
    }
    t.e0 = lam;
    {
        const Vec x1 = x.head(n), x2 = x.tail(n);
        const Vec r1 = t.A1 * x2 - lam * t.mass.cwiseProduct(x1);
        const Vec r2 = -(t.A5 * x1) - lam * t.mass.cwiseProduct(x2);
        const double num = std::sqrt((r1.cwiseAbs2().array() / t.mass.array()).sum() +
                                     (r2.cwiseAbs2().array() / t.mass.array()).sum());
        t.residual = num / lam;  // x is M-normalized
    }

    t.V1 = x.head(n);
    t.V2 = x.tail(n);
    const double c12 = t.V1.cwiseProduct(t.mass).dot(t.V2);
    if (c12 <= 0) throw PropertyFailure("solve_trichotomy: <V1, V2> <= 0, unstable pair has the wrong orientation");
    t.scale = 1.0 / std::sqrt(2.0 * t.e0 * c12);
    const CVec vp = t.scale * (t.V1.cast<cplx>() + cplx(0, 1) * t.V2.cast<cplx>());
    const CVec vm = -t.scale * (t.V1.cast<cplx>() - cplx(0, 1) * t.V2.cast<cplx>());
    t.Vplus = RadialField(gs.sector, vp);
    t.Vminus = RadialField(gs.sector, vm);

    t.pair_pp = t.pairing(vp, vp);
    t.pair_mm = t.pairing(vm, vm);
    t.pair_pm = t.pairing(vp, vm);
    t.identity_lhs = t.e0 * vp.cwiseAbs2().dot(t.mass);
    t.identity_rhs = 4.0 * t.scale * t.scale * t.V1.cwiseProduct(t.potential).dot(t.V2);
    return t;
}

KernelCheck generalized_kernel_check(const TrichotomyData& t, const SectorSpectrum& spec5, const SectorSpectrum& spec1,
                                     const GroundState& gs) {
    if (spec5.c != 5 || spec1.c != 1) throw UsageError("generalized_kernel_check expects the c=5 and c=1 spectra");
    KernelCheck kc;
    kc.kernel_dim = static_cast<int>(spec5.kernel.size() + spec1.kernel.size());
    const Vec W1 = gs.W1.phi.real();
    const Vec W = gs.W.phi.real();
    // Range of the self-adjoint (in M) blocks is M-orthogonal to their kernels,
    // so the least-squares residual is the kernel component of the target.
    if (!spec1.kernel.empty()) kc.residual_W1 = l2_cosine(spec1.eigenvectors.col(spec1.kernel[0]), W1, t.mass);
    if (!spec5.kernel.empty()) kc.residual_iW = l2_cosine(spec5.eigenvectors.col(spec5.kernel[0]), W, t.mass);

    auto ymax = [&](const CVec& v) {
        const CVec vn = v / norm_a(RadialField(gs.sector, v));
        return std::max(std::abs(t.y_plus(vn)), std::abs(t.y_minus(vn)));
    };
    for (int j : spec5.kernel) kc.y_on_kernel = std::max(kc.y_on_kernel, ymax(spec5.eigenvectors.col(j).cast<cplx>()));
    for (int j : spec1.kernel)
        kc.y_on_kernel = std::max(kc.y_on_kernel, ymax(cplx(0, 1) * spec1.eigenvectors.col(j).cast<cplx>()));
    kc.y_on_closed_form = std::max(ymax(gs.W1.phi), ymax(cplx(0, 1) * gs.W.phi));
    return kc;
}

}  // namespace nlsa

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "nlsa/grid.hpp"

namespace nlsa {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<double>;

// Angular sector l on a grid. Fields are stored as u = r^{s_+} phi.
// Ghost values: phi_{1-k} = phi_k (even in xi), and for k > n the exterior
// zero-energy solution phi_k = phi_n (r_k/r_n)^{s_- - s_+}.
class Sector {
public:
    Sector(GridPtr grid, int ell);

    const RadialGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    int ell() const { return ell_; }
    int n() const { return grid_->n(); }
    double s_plus() const { return sp_; }
    double s_minus() const { return sm_; }
    int n_tail() const { return ntail_; }

    // <phi, K phi> = int (|u_r|^2 + (a + l(l+1)) |u|^2 / r^2) dx
    const SpMat& stiffness() const { return K_; }
    Eigen::MatrixXd stiffness_dense() const { return Eigen::MatrixXd(K_); }

    // L^2 quadrature: sum mass_k |phi_k|^2 = int_{r<r_max} |u|^2 dx
    const Vec& mass() const { return mass_; }

    // sum w_k |phi_k|^p = int |u|^p dx including the exterior tail (p > 2)
    Vec power_weights(double p) const;

    // sum w_k phi_k^2 = int V |u|^2 dx, tail folded into node n.
    // V_tail evaluates V beyond r_max (defaults to V).
    Vec potential_weights(const std::function<double(double)>& V,
                          const std::function<double(double)>& V_tail = nullptr) const;

    // r^{s_+} at the nodes
    const Vec& rs() const { return rs_; }

    // Ghost map: node index (1..n) and factor for an extended index k.
    std::pair<int, double> ghost(int k) const;
    double r_ext(int k) const { return grid_->r_of_xi(grid_->xi(k)); }

    // Samples on the nodes and the exterior tail, k = 1..n+n_tail: radius,
    // weight dxi 4 pi r^2 r_xi, u and u_r (u_r = s_- u / r in the tail).
    struct Extended {
        Vec r, m;
        CVec u, ur;
    };
    Extended extended(const CVec& phi) const;
    // Same samples on q sub-points per cell (q odd, nodes included): phi and
    // phi_xi from 10-point Lagrange interpolation in xi, weights of the
    // midpoint rule with step dxi / q. For integrands with steep factors.
    Extended refined(const CVec& phi, int q) const;

    // phi_xi at the nodes, 8th order centred
    CVec dphi_dxi(const CVec& phi) const;
    // u_r at the nodes
    CVec du_dr(const CVec& phi) const;

    // u at the nodes
    CVec to_u(const CVec& phi) const { return phi.cwiseProduct(rs_.cast<cplx>()); }
    CVec from_u(const CVec& u) const { return u.cwiseQuotient(rs_.cast<cplx>()); }

private:
    GridPtr grid_;
    int ell_;
    double sp_, sm_;
    int ntail_;
    Vec tail_;   // (r_k/r_n)^{s_- - s_+} for k = n+1 .. n+ntail
    Vec mext_;   // node weights dxi 4 pi r^2 r_xi, k = 1 .. n+ntail
    Vec rext_;
    Vec mass_, rs_;
    SpMat K_;
};

using SectorPtr = std::shared_ptr<const Sector>;

struct RadialField {
    SectorPtr sector;
    CVec phi;

    RadialField() = default;
    RadialField(SectorPtr s, CVec p) : sector(std::move(s)), phi(std::move(p)) {}

    int n() const { return static_cast<int>(phi.size()); }
    bool finite() const { return phi.allFinite(); }
    CVec u() const { return sector->to_u(phi); }

    RadialField operator+(const RadialField& o) const;
    RadialField operator-(const RadialField& o) const;
    RadialField operator*(cplx c) const { return {sector, phi * c}; }
};

// Build a field from samples of u(r) at the nodes.
RadialField field_from_u(SectorPtr s, const std::function<cplx(double)>& u);

// Re int (grad f . conj grad g + (a + l(l+1)) f conj g / r^2) dx
double inner_a(const RadialField& f, const RadialField& g);
double norm_a(const RadialField& f);
// Re int f conj g dx over the box
double inner_l2(const RadialField& f, const RadialField& g);
// int |u|^p dx
double lp_integral(const RadialField& f, double p);
// int |u_r|^2 dx
double grad_l2_sq(const RadialField& f);
double linf(const RadialField& f);

void require_same(const RadialField& f, const RadialField& g);

// Dense symmetric K - c V with V = W^4, acting on phi, plus the L^2 mass.
struct SectorOperator {
    SectorPtr sector;
    int ell;
    int c;
    Eigen::MatrixXd A;
    Vec mass;
    Vec potential;  // quadrature weights of W^4 (before scaling by c)
};

SectorOperator assemble_sector_op(SectorPtr sector, int c);

// Convenience: new sector on a grid.
SectorPtr make_sector(GridPtr grid, int ell);

}  // namespace nlsa

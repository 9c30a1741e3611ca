#pragma once

#include <vector>

#include "nlsa/ground_state.hpp"

namespace nlsa {

struct SectorSpectrum {
    int ell = 0;
    int c = 0;
    Vec eigenvalues;              // ascending
    Eigen::MatrixXd eigenvectors; // phi values, orthonormal in the L^2 quadrature
    int negative_count = 0;
    double kernel_tol = 0.0;
    std::vector<int> kernel;      // indices with |lambda| < kernel_tol
    double orthonormality_error = 0.0;
    double rounding_floor = 0.0;  // 100 eps ||M^{-1/2} A M^{-1/2}||
};

// k smallest eigenpairs of op.A x = lambda M x
SectorSpectrum sector_spectrum(const SectorOperator& op, int k, double kernel_tol = 0.0);

// max(10 |lambda_2(n) - lambda_2(2n)|, rounding floors)
double kernel_tolerance(const SectorSpectrum& coarse, const SectorSpectrum& fine);
void flag_kernel(SectorSpectrum& s, double tol);

// Third eigenvalue of the (c=5) pencil and second of the (c=1) pencil,
// normalized by the H^1_a form: A_c x = lambda K x.
struct GapEstimates {
    double lambda3 = 0.0;
    double tilde_lambda2 = 0.0;
    Vec pencil5;  // lambda_1.. of the c=5 pencil
    Vec pencil1;  // tilde lambda_1.. of the c=1 pencil
    bool interlaced = false;
    bool ok = false;
};
GapEstimates gap_estimates(const SectorOperator& op5, const SectorOperator& op1, int k = 4);

// |cos| between x and y in the L^2 quadrature
double l2_cosine(const Vec& x, const Vec& y, const Vec& mass);

// Indicial roots (s_+, s_-) of u'' + (2/r) u' - (a + l(l+1)) u / r^2 = 0.
// Valid for any a > -1/4, not only the admissible window.
std::pair<double, double> frobenius_exponents(double a, int ell);

// Slope of log|u| against log r over the first decade of the grid
double boundary_slope(const Sector& s, const Vec& phi);

struct TrichotomyOptions {
    int coarse_n = 256;       // dense JL solve used to seed and count
    int max_iterations = 100;
    double tol = 1e-14;
};

// (e0, V+, V-) of JL with the real block form
// JL (v1, v2) = (M^{-1}(K - P) v2, -M^{-1}(K - 5P) v1), P = W^4 weights.
struct TrichotomyData {
    double e0 = 0.0;
    double e0_coarse = 0.0;
    double leading_imag_rel = 0.0;   // |Im| / |lambda| of the seed eigenvalue
    int real_positive_count = 0;     // on the coarse dense spectrum
    int near_zero_count = 0;         // |lambda| below the JL kernel tolerance
    double jl_kernel_tol = 0.0;
    double center_max_real = 0.0;    // largest |Re lambda| off +-e0 (soft center check)
    double residual = 0.0;           // relative eigen-residual at full n
    int iterations = 0;

    RadialField Vplus, Vminus;
    Vec V1, V2;                      // unnormalized real and imaginary parts
    double scale = 0.0;              // V+ = scale (V1 + i V2), V- = -scale (V1 - i V2)

    // checks
    double pair_pp = 0.0, pair_mm = 0.0, pair_pm = 0.0;
    double identity_lhs = 0.0, identity_rhs = 0.0;

    // operators used for the L pairing
    SpMat A1, A5;
    Vec mass, potential;

    // <L x, v> = <(K-5P) x1, v1> + <(K-P) x2, v2>
    double pairing(const CVec& x, const CVec& v) const;
    double y_plus(const CVec& v) const { return pairing(Vminus.phi, v); }
    double y_minus(const CVec& v) const { return pairing(Vplus.phi, v); }
};

// P from the sector-0 field W: w6 |phi_W|^4 (matches the evolution nonlinearity)
TrichotomyData solve_trichotomy(const GroundState& gs, const TrichotomyOptions& opt = {});

struct KernelCheck {
    double residual_W1 = 0.0;   // min ||JL x - (W1, 0)|| / ||W1||, x off the kernel
    double residual_iW = 0.0;   // min ||JL x - (0, W)|| / ||W||
    int kernel_dim = 0;         // from the sector spectra
    double y_on_kernel = 0.0;   // max |y+-| over the discrete kernel vectors (H^1_a-normalized)
    double y_on_closed_form = 0.0;
};
KernelCheck generalized_kernel_check(const TrichotomyData& t, const SectorSpectrum& spec5, const SectorSpectrum& spec1,
                                     const GroundState& gs);

}  // namespace nlsa

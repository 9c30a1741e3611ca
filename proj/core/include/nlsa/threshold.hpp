#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nlsa/evolution.hpp"
#include "nlsa/ground_state.hpp"
#include "nlsa/spectral.hpp"
#include "nlsa/virial.hpp"

namespace nlsa {

// Discrete ground state W_h (exact steady state of the semi-discrete flow)
// and the trichotomy of its linearization.
struct ThresholdSetup {
    GroundState gs;        // W replaced by W_h
    GroundState closed;    // closed-form W on the same sector
    TrichotomyData trich;
    double polish_residual = 0.0;
};
ThresholdSetup make_threshold_setup(const GroundState& closed_form, const TrichotomyOptions& opt = {});

struct LPOptions {
    double lambda = 0.0;   // decay weight, 0 means e0
    double T_h = 0.0;      // horizon, 0 means 12 / e0
    double h = 2.5e-3;     // time step of the Duhamel quadrature
    int max_iterations = 60;
    double tol = 1e-9;     // weighted update norm relative to |y0-|; the weight lifts rounding to ~1e-11
    double max_contraction = 0.9;
};

// Fixed point of
//   y-(t) = e^{-e0 t} y0- + int_0^t e^{-e0 (t-s)} R-(s) ds
//   y+(t) = -int_t^T e^{e0 (t-s)} R+(s) ds
//   vc(t) = -int_t^T e^{(t-s) JL} Rc(s) ds
// on [0, T_h], v = y- V- + y+ V+ + vc, R the quintic remainder.
struct LPState {
    bool converged = false;
    std::string message;
    double y0_minus = 0.0, y0_plus = 0.0;
    double vc0_norm = 0.0;           // ||vc(0)||_a
    double lambda = 0.0, T_h = 0.0, h = 0.0;
    std::vector<double> t, y_minus, y_plus, vc_norm;
    std::vector<double> updates;     // weighted sup norm of successive differences
    double contraction = 0.0;        // largest update ratio after the first iteration
    double ball = 0.0;               // sup e^{lambda t} (|y-| + |y+| + ||vc||_a)
    int iterations = 0;
    RadialField v0;                  // y0- V- + y0+ V+ + vc(0)
};
LPState lp_solve(const ThresholdSetup& s, double y0_minus, const LPOptions& opt = {});

// Sign of ||W + v(0)||_a^2 - M for a positive seed (computed, not assumed).
int kinetic_sign_for_positive_seed(const ThresholdSetup& s, double y0 = 1e-3, const LPOptions& opt = {});

struct LineFit {
    bool ok = false;
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    int points = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct RateFit {
    bool ok = false;
    std::string message;
    double rate = 0.0;     // d/dt log of the fitted quantity
    double r2 = 0.0;
    double t0 = 0.0, t1 = 0.0;
    double efoldings = 0.0;
    int points = 0;
};
// Log-linear fit of q over the first run of samples with q in [lo, hi], cut to
// the stretch between its smallest and largest value. The first and last
// e-folding of the selected range are dropped when enough remains.
RateFit fit_log_rate(const std::vector<double>& t, const std::vector<double>& q, double lo, double hi,
                     bool trim = true);

enum class Branch { Plus, Minus };
std::string to_string(Branch b);

struct ThresholdOrbit {
    Branch branch = Branch::Minus;
    LPState lp;
    OrbitRecord record;
    bool one_sided = true;   // sign(kinetic - M) fixed while d is above the floor, up to the minimum of d
    double d_floor = 0.0;
    RateFit decay;           // of d over [1e-6 M, 1e-2 M]
};
// u0 = W_h + v(0) with the seed sign picked for the branch; evolved to t_end
// (backward when t_end < 0). virial_R <= 0 disables the virial columns.
ThresholdOrbit build_threshold_orbit(const ThresholdSetup& s, Branch branch, double eps, double t_end,
                                     const EvolutionControls& c = {}, double virial_R = 0.0,
                                     const LPOptions& lp = {});

struct GrowthRun {
    RateFit fit;             // of ||u - W_h||_a while <= 1e-2 ||W||_a
    OrbitRecord record;
    std::vector<double> t, dist;
};
GrowthRun unstable_growth(const ThresholdSetup& s, double eps, double t_end, const EvolutionControls& c = {});

enum class Verdict { StationaryManifold, ConvergesToW, Disperses, BlowsUp, Undecided };
std::string to_string(Verdict v);

struct ClassifyBudget {
    double t_end = 10.0;
    EvolutionControls controls;
    double stationary_tol = 1e-5;    // d <= tol M at every sample
    double converge_r2 = 0.99;
    double converge_efoldings = 3.0;
    double disperse_l6_drop = 0.75;  // final L6 below this fraction of the peak
};

struct ClassificationVerdict {
    Verdict label = Verdict::Undecided;
    std::string reason;
    double final_d = 0.0, max_d = 0.0;   // relative to M
    double final_kinetic = 0.0;          // relative to M
    double max_grad = 0.0, final_grad = 0.0;
    double peak_l6 = 0.0, final_l6 = 0.0;
    double S = 0.0;
    double min_dt = 0.0;
    bool blowup_flag = false;
    Termination termination = Termination::Completed;
    RateFit rate;
    OrbitRecord record;
};
ClassificationVerdict classify(const GroundState& gs, const RadialField& u0, const ClassifyBudget& b = {});

// c W chi(r / R0), chi a C-infinity cutoff from 1 to 0 on [1/2, 1], with
// c > 1 fixed by bisection so that E(u0) = E(W) on the kinetic > M branch.
struct BlowupDatum {
    RadialField u0;
    double c = 0.0, R0 = 0.0;
    double energy_gap = 0.0;     // (E(u0) - E(W)) / M
    double kinetic_excess = 0.0; // (||u0||_a^2 - M) / M
};
BlowupDatum tune_blowup_datum(const GroundState& gs, double R0);

struct SuiteEntry {
    std::string name;
    Verdict expected;
    std::shared_ptr<const GroundState> gs;
    RadialField u0;
    ClassifyBudget budget;
};
// Nine data, three per class: stationary, dispersing, blowing up.
std::vector<SuiteEntry> standard_suite(double a, int n = 512);

}  // namespace nlsa

#pragma once

#include <string>
#include <vector>

#include "nlsa/sector.hpp"

namespace nlsa {

// W(r) = (3 beta^2)^{1/4} r^{(beta-1)/2} / (1 + r^{2 beta})^{1/2}
double ground_state_profile(const PhysParams& p, double r);
// W1 = r W' + W/2
double scaling_generator(const PhysParams& p, double r);
// r W1' + W1/2, the generator applied twice
double scaling_generator2(const PhysParams& p, double r);

struct GroundState {
    PhysParams params;
    SectorPtr sector;   // l = 0
    RadialField W, W1;
    double M = 0.0;        // ||W||^2 in H^1_a by quadrature
    double M_exact = 0.0;  // 3^{3/2} pi^2 beta^2 / 4
    double int_W6 = 0.0;
    double L6 = 0.0;
    double E = 0.0;
};

GroundState eval_ground_state(const PhysParams& p, GridPtr grid);
GroundState eval_ground_state(SectorPtr sector0);

// Same ground state with W replaced by a discrete field (M, E, L6 recomputed).
GroundState with_field(const GroundState& gs, const RadialField& W);

// E(u) = 1/2 ||u||_a^2 - 1/6 int |u|^6
double energy(const RadialField& u);

// ||(L_a - W^4) W|| / ||W^5|| in discrete L^2
double ground_state_residual(const GroundState& gs);
// same quantity for a discrete field phi against its own nonlinearity
double stationary_residual(const RadialField& u);

// g_{theta,mu} f(x) = e^{i theta} mu^{-1/2} f(x/mu)
struct SymmetryAction {
    double theta = 0.0;
    double mu = 1.0;

    // generic field: monotone cubic interpolation of phi in xi
    RadialField apply(const RadialField& f) const;
    SymmetryAction inverse() const { return {-theta, 1.0 / mu}; }
};

// Closed-form samples of g W, g W1 and g (r W1' + W1/2), no interpolation.
RadialField scaled_W(const GroundState& gs, double theta, double mu);
RadialField scaled_W1(const GroundState& gs, double theta, double mu);
RadialField scaled_W2(const GroundState& gs, double theta, double mu);

// Discrete ground state near g_{0,mu} W: bordered Newton on K phi = w6 |phi|^4 phi
// with the scaling direction held fixed. Optional diagnostic and the
// equilibrium used by evolution near W.
struct PolishResult {
    RadialField field;
    double residual_before = 0.0;
    double residual_after = 0.0;
    int iterations = 0;
};
PolishResult polish_ground_state(const GroundState& gs, double mu = 1.0);

struct SobolevSample {
    std::string label;
    RadialField f;
    bool extremal = false;   // of the form alpha W(lambda .)
};

struct SobolevReport {
    double sharp_constant = 0.0;  // ||W||_6 / ||W||_a
    struct Row {
        std::string label;
        double ratio = 0.0;        // (||f||_6 / ||f||_a) / sharp_constant
        double deficit = 0.0;      // 1 - ratio
        bool coercivity_checked = false;
        bool coercivity_ok = true;
        bool ok = true;
    };
    std::vector<Row> rows;
    bool ok = true;
};

SobolevReport sharp_sobolev_check(const GroundState& gs, const std::vector<SobolevSample>& samples);

}  // namespace nlsa

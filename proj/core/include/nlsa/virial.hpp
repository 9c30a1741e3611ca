#pragma once

#include <vector>

#include "nlsa/evolution.hpp"
#include "nlsa/ground_state.hpp"
#include "nlsa/modulation.hpp"

namespace nlsa {

// Radial cutoff phi(s) with phi' = 2 s psi(s):
//   psi = 1 on [0,1], falls to -c on [1,2], returns to 0 on [2,4]
// (C-infinity steps), c fixed so that phi(4) = 0. phi = s^2 on [0,1],
// phi = 0 for s >= 4 and phi'' <= 2. Polynomial steps leave Delta^2 phi with
// kinks and the node quadrature of A_R then converges only at second order.
class CutoffProfile {
public:
    CutoffProfile();

    double support() const { return 4.0; }
    double c() const { return c_; }
    double phi(double s) const;
    double dphi(double s) const;     // phi'
    double d2phi(double s) const;    // phi''
    double lap(double s) const;      // phi'' + 2 phi' / s
    double bilap(double s) const;    // Delta^2 phi

    struct Values {
        double phi, dphi, d2phi, lap, bilap;
    };
    Values values(double s) const;

private:
    void psi(double s, double& p0, double& p1, double& p2, double& p3) const;
    static constexpr int kTable = 3000;
    double c_ = 0.0;
    std::vector<double> phi_, dphi_;  // knots on [1,4]
};

// Shared instance, built once.
const CutoffProfile& default_cutoff();

struct VirialSample {
    double R = 0.0;
    double VR = 0.0;
    double dtVR = 0.0;
    double dttVR = 0.0;      // 16 (M - ||u||_a^2) + A_R + 48 (E(u) - E(W))
    double AR = 0.0;
    double dttVR_direct = 0.0;  // the general second-derivative formula, no identity
};

// u on a sector-0 grid with support() * R <= r_max.
VirialSample virial_sample(const GroundState& gs, const RadialField& u, double R,
                           const CutoffProfile& cutoff = default_cutoff());

// V(R, u) = int psi(r / R) |u_r|^2 dx with psi(s) = s^2 / (1 + s^2)
double scale_functional(const RadialField& u, double R);
// Lambda with V(1/Lambda, u) = 1/2 ||u_r||_2^2, i.e. V(1, g_Lambda u) = 1/2 ||grad u||^2
double compactness_scale(const RadialField& u);

// Fills theta, mu, alpha (when the fit succeeds) and VR, dtVR, dttVR.
// Warm-starts each fit from the previous one.
Observer make_modulation_observer(const GroundState& gs, double R, ModulationOptions opt = {});

}  // namespace nlsa

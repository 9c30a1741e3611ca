#pragma once

#include <Eigen/SparseLU>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nlsa/ground_state.hpp"

namespace nlsa {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// e^{-i tau L_a} on sector-0 fields via a dense eigendecomposition of
// M^{-1/2} K M^{-1/2}. Unitary in the L^2 quadrature norm.
class PropagatorCache {
public:
    explicit PropagatorCache(SectorPtr sector);
    CVec apply(const CVec& phi, double tau) const;
    const Vec& frequencies() const { return lambda_; }
    const SectorPtr& sector() const { return sector_; }

private:
    SectorPtr sector_;
    Vec lambda_, sqrt_m_;
    Eigen::MatrixXd Q_;
};

enum class Scheme { CrankNicolson, Strang };

struct EvolutionControls {
    Scheme scheme = Scheme::CrankNicolson;
    double dt_max = 1e-3;
    double phase_budget = 0.05;      // dt <= phase_budget / ||u||_inf^4
    double dt_floor = 1e-10;
    double blowup_grad_factor = 1e3; // ||grad u||_2 > factor * ||W||_a
    double sample_every = 0.01;      // must be a multiple of dt_max
    bool absorbing = false;          // damping on r > 0.9 r_max
    double absorb_strength = 1.0;
    double picard_tol = 1e-13;
    int picard_max = 60;
    bool nonlinear = true;
    std::int64_t max_steps = 2000000000;
};

struct Sample {
    double t = 0.0;
    double d_u = 0.0;      // |kinetic - M|
    double kinetic = 0.0;  // ||u||_a^2
    double E = 0.0;
    double mass = 0.0;     // box L^2 mass
    double L6 = 0.0;
    double Linf = 0.0;
    double S_cum = 0.0;    // int int |u|^10 dx dt so far
    double int_u10 = 0.0;
    double dt = 0.0;
    double theta = kNaN, mu = kNaN, alpha = kNaN;
    double VR = kNaN, dtVR = kNaN, dttVR = kNaN;
};

enum class Termination { Completed, StepCollapse, NonFinite, StepLimit };
std::string to_string(Termination t);

struct OrbitRecord {
    std::vector<Sample> samples;
    Termination termination = Termination::Completed;
    bool blowup = false;        // both triggers fired: dt below floor and large gradient
    double t_final = 0.0;
    double final_grad = 0.0;    // ||grad u||_2 at the end
    double min_dt = 0.0;
    std::int64_t steps = 0;
    std::int64_t picard_failures = 0;
    double E0 = 0.0, M0 = 0.0;  // energy and box mass at the start
    double max_energy_drift = 0.0;
    double max_mass_drift = 0.0;
    RadialField final_state;

    // rows in sample order; header lines are written verbatim, each prefixed by "# "
    void write_csv(std::ostream& os, const std::vector<std::string>& header) const;
};

struct SimState {
    double t = 0.0;
    RadialField u;
    double dt = 0.0;
    double E0 = 0.0, M0 = 0.0;
    double S = 0.0;
};
SimState make_state(RadialField u, double t0 = 0.0);

struct Diagnostics {
    double kinetic, E, mass, int_u6, int_u10, Linf;
};

// Observers fill the modulation and virial columns of a sample.
using Observer = std::function<void(const RadialField& u, Sample& s)>;

class Evolver {
public:
    // ref supplies M = ||W||_a^2 for d(u) and the blowup threshold
    Evolver(const GroundState& ref, EvolutionControls controls);

    const EvolutionControls& controls() const { return c_; }
    Diagnostics diagnostics(const RadialField& u) const;

    // One forward step. Returns false when the nonlinear solve does not converge.
    bool step(CVec& phi, double dt, int* iterations = nullptr);

    // Advance st to t_end (either direction). Backward runs use u(t) -> conj u(-t).
    OrbitRecord evolve(SimState& st, double t_end, const Observer& obs = {});

private:
    struct Factor;
    const Factor& factor(double dt);
    bool step_cn(CVec& phi, double dt, int* iterations);
    void step_strang(CVec& phi, double dt);

    SectorPtr sector_;
    double M_ref_;
    EvolutionControls c_;
    Vec mass_, w6_, w10_, rate_, gamma_;
    std::map<double, std::shared_ptr<Factor>> lu_;
    std::shared_ptr<PropagatorCache> prop_;
};

OrbitRecord evolve(const GroundState& ref, SimState& st, double t_end, const EvolutionControls& c,
                   const Observer& obs = {});

// Time quadrature of int |u|^10 dx over the samples (trapezoid)
double scattering_size(const OrbitRecord& rec);

}  // namespace nlsa

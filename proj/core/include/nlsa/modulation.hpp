#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlsa/evolution.hpp"
#include "nlsa/ground_state.hpp"

namespace nlsa {

// d(u) = | ||u||_a^2 - M |
double distance(const GroundState& gs, const RadialField& u);

// Validity threshold of the fit as a fraction of M. calibrate_delta0 with
// seed 12345, 100 trials, a = -0.04, n = 512 gives 0.0666; rounded down.
inline constexpr double kDefaultDelta0 = 0.06;

struct ModulationOptions {
    double delta0 = kDefaultDelta0;  // fit refused when d(u) >= delta0 * M
    double tol = 1e-12;              // |J0|, |J1| <= tol * M
    double accept = 1e-9;            // stalled Newton still accepted below this
    int max_iterations = 40;
    double log10_mu_min = -2.0, log10_mu_max = 2.0;
    int scan_points = 81;
    std::optional<std::pair<double, double>> seed;  // (theta, mu), skips the scan
};

// u = g_{theta,mu}((1 + alpha) W + v_tilde), v_tilde orthogonal to W, iW, W1.
struct ModulationFit {
    bool ok = false;
    std::string message;
    double theta = 0.0, mu = 1.0, alpha = 0.0;
    RadialField v;              // u - (1 + alpha) g W, the residual in the lab frame
    double v_norm = 0.0;        // ||v_tilde||_a = ||v||_a
    double J0 = 0.0, J1 = 0.0;  // orthogonality residuals at the fit
    double d = 0.0;
    int iterations = 0;
};

ModulationFit fit_modulation(const GroundState& gs, const RadialField& u, const ModulationOptions& opt = {});

struct RateReport {
    bool ok = false;
    std::string message;
    std::vector<double> t, rate, ratio;  // rate = |alpha'| + |theta'| + |mu'/mu|, ratio = rate / (mu^2 d)
    double sup_ratio = 0.0;
    double max_rate = 0.0;
};

// Centred differences of the fitted parameters over samples with a fit and
// d > d_floor. theta is unwrapped first.
RateReport modulation_rates(const OrbitRecord& rec, double d_floor = 0.0);

struct Delta0Calibration {
    double delta0 = 0.0;  // fraction of M
    int trials = 0;
    int failures = 0;
    std::vector<double> d, residual;  // per fit, d / M and final residual / M
    std::vector<bool> converged;
};

// Random smooth complex perturbations g W + eps h at several eps. A trial
// succeeds when the fit from the scan seed converges to the same root as the
// fit continued in eps from the planted (theta, mu). delta0 is the smallest d / M of
// a failed trial (or the largest tested d / M when none fails).
Delta0Calibration calibrate_delta0(const GroundState& gs, std::uint64_t seed, int trials = 100,
                                   const std::vector<double>& eps = {0.05, 0.1, 0.2, 0.35, 0.5, 0.7});

}  // namespace nlsa

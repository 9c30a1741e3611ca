#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlsa/evolution.hpp"
#include "nlsa/grid.hpp"

namespace nlsa {

enum class ScenarioKind { Spectrum, Orbit, Classify, LpSweep, VirialCheck, Evolve };
std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);  // throws ConfigError

// Datum used by classify and evolve:
//   ground-state  amplitude e^{i theta} W_h(mu), the discrete ground state
//   closed-form   amplitude g_{theta,mu} W sampled in closed form
//   truncated     c W chi(r / R0), c tuned to the threshold energy
//   gaussian      e^{-(r-center)^2/width^2} scaled to ||u||_a^2 = amplitude^2 M
struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::Spectrum;
    double a = -0.04;
    int n = 512;
    double r_max = 200.0;
    double r1 = 1e-4;

    std::string branch = "minus";
    double eps = 1e-3;
    double t_end = 10.0;
    double R = 5.0;  // virial radius, 0 disables

    double dt_max = 1e-3;
    double sample_every = 0.01;
    bool absorbing = false;

    std::string datum = "ground-state";
    double theta = 0.0, mu = 1.0, amplitude = 1.0;
    double R0 = 5.0, center = 3.0, width = 1.0;

    std::vector<double> y0 = {1e-2, 5e-3, 2.5e-3};
    bool refine = true;  // spectrum: repeat at 2n
    std::uint64_t seed = 12345;

    bool operator==(const ScenarioConfig&) const = default;

    Grading grading() const { return Grading::first_node(r1); }
    EvolutionControls controls() const;
};

// key = value lines, '#' starts a comment. Unknown keys and bad values are
// collected and reported together in one ConfigError.
ScenarioConfig parse_config(const std::string& text);
// Field errors of an already-built config; empty when valid.
std::vector<std::string> validate(const ScenarioConfig& c);
// Canonical text, every key in a fixed order, round-trips exactly.
std::string serialize(const ScenarioConfig& c);
// FNV-1a of the canonical text, 16 hex digits.
std::string config_hash(const ScenarioConfig& c);

}  // namespace nlsa

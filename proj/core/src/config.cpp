#include "nlsa/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "nlsa/errors.hpp"
#include "nlsa/hash.hpp"

namespace nlsa {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool to_double(const std::string& s, double& out) {
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

template <class Int>
bool to_int(const std::string& s, Int& out) {
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && p == end;
}

bool to_bool(const std::string& s, bool& out) {
    if (s == "true" || s == "1" || s == "yes") return out = true, true;
    if (s == "false" || s == "0" || s == "no") return out = false, true;
    return false;
}

std::string join_list(const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
}

using Setter = std::function<bool(ScenarioConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> m = [] {
        std::map<std::string, Setter> s;
        auto dbl = [](double ScenarioConfig::*f) {
            return [f](ScenarioConfig& c, const std::string& v) { return to_double(v, c.*f); };
        };
        s["kind"] = [](ScenarioConfig& c, const std::string& v) {
            c.kind = scenario_kind_from_string(v);
            return true;
        };
        s["a"] = dbl(&ScenarioConfig::a);
        s["n"] = [](ScenarioConfig& c, const std::string& v) { return to_int(v, c.n); };
        s["r_max"] = dbl(&ScenarioConfig::r_max);
        s["r1"] = dbl(&ScenarioConfig::r1);
        s["branch"] = [](ScenarioConfig& c, const std::string& v) { return c.branch = v, true; };
        s["eps"] = dbl(&ScenarioConfig::eps);
        s["t_end"] = dbl(&ScenarioConfig::t_end);
        s["R"] = dbl(&ScenarioConfig::R);
        s["dt_max"] = dbl(&ScenarioConfig::dt_max);
        s["sample_every"] = dbl(&ScenarioConfig::sample_every);
        s["absorbing"] = [](ScenarioConfig& c, const std::string& v) { return to_bool(v, c.absorbing); };
        s["datum"] = [](ScenarioConfig& c, const std::string& v) { return c.datum = v, true; };
        s["theta"] = dbl(&ScenarioConfig::theta);
        s["mu"] = dbl(&ScenarioConfig::mu);
        s["amplitude"] = dbl(&ScenarioConfig::amplitude);
        s["R0"] = dbl(&ScenarioConfig::R0);
        s["center"] = dbl(&ScenarioConfig::center);
        s["width"] = dbl(&ScenarioConfig::width);
        s["y0"] = [](ScenarioConfig& c, const std::string& v) {
            c.y0.clear();
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) {
                double x;
                if (!to_double(trim(item), x)) return false;
                c.y0.push_back(x);
            }
            return true;
        };
        s["refine"] = [](ScenarioConfig& c, const std::string& v) { return to_bool(v, c.refine); };
        s["seed"] = [](ScenarioConfig& c, const std::string& v) { return to_int(v, c.seed); };
        return s;
    }();
    return m;
}

}  // namespace

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Spectrum: return "spectrum";
        case ScenarioKind::Orbit: return "orbit";
        case ScenarioKind::Classify: return "classify";
        case ScenarioKind::LpSweep: return "lp-sweep";
        case ScenarioKind::VirialCheck: return "virial-check";
        case ScenarioKind::Evolve: return "evolve";
    }
    return "spectrum";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
    for (auto k : {ScenarioKind::Spectrum, ScenarioKind::Orbit, ScenarioKind::Classify, ScenarioKind::LpSweep,
                   ScenarioKind::VirialCheck, ScenarioKind::Evolve})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown scenario kind '" + s + "'");
}

EvolutionControls ScenarioConfig::controls() const {
    EvolutionControls c;
    c.dt_max = dt_max;
    c.sample_every = sample_every;
    c.absorbing = absorbing;
    return c;
}

std::vector<std::string> validate(const ScenarioConfig& c) {
    std::vector<std::string> e;
    if (!(c.a > kAMin && c.a < kAMax))
        e.push_back("a: " + std::to_string(c.a) + " outside the admissible interval (-1/4+4/25, 0) = (-0.09, 0)");
    if (c.n < 64 || c.n > 16384) e.push_back("n: must lie in [64, 16384]");
    if (!(c.r_max > 1.0)) e.push_back("r_max: must exceed 1");
    if (!(c.r1 > 0.0 && c.r1 < 1e-2)) e.push_back("r1: must lie in (0, 1e-2)");
    if (c.branch != "plus" && c.branch != "minus") e.push_back("branch: expected plus or minus");
    if (!(c.eps > 0.0 && c.eps < 0.1)) e.push_back("eps: must lie in (0, 0.1)");
    if (!std::isfinite(c.t_end) || c.t_end == 0.0) e.push_back("t_end: must be finite and nonzero");
    if (!(c.R >= 0.0)) e.push_back("R: must be >= 0");
    if (c.R > 0.0 && 4.0 * c.R > c.r_max) e.push_back("R: cutoff support 4R exceeds r_max");
    if (!(c.dt_max > 0.0)) e.push_back("dt_max: must be positive");
    if (!(c.sample_every >= c.dt_max)) {
        e.push_back("sample_every: must be at least dt_max");
    } else {
        const double k = c.sample_every / c.dt_max;
        if (std::abs(k - std::round(k)) > 1e-9 * k) e.push_back("sample_every: must be a multiple of dt_max");
    }
    if (c.datum != "ground-state" && c.datum != "closed-form" && c.datum != "truncated" && c.datum != "gaussian")
        e.push_back("datum: expected ground-state, closed-form, truncated or gaussian");
    if (!std::isfinite(c.theta)) e.push_back("theta: must be finite");
    if (!(c.mu > 0.0 && std::isfinite(c.mu))) e.push_back("mu: must be positive");
    if (!(c.amplitude > 0.0 && std::isfinite(c.amplitude))) e.push_back("amplitude: must be positive");
    if (!(c.R0 > 0.0 && c.R0 < c.r_max)) e.push_back("R0: must lie in (0, r_max)");
    if (!(c.center >= 0.0 && c.center < c.r_max)) e.push_back("center: must lie in [0, r_max)");
    if (!(c.width > 0.0)) e.push_back("width: must be positive");
    if (c.y0.size() < 2) e.push_back("y0: need at least two seeds");
    for (double y : c.y0)
        if (!(y != 0.0 && std::abs(y) < 0.1)) e.push_back("y0: seeds must be nonzero with |y0| < 0.1");
    return e;
}

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig c;
    std::vector<std::string> errors;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    const auto& set = setters();
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) {
            errors.push_back(where + "expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        const auto it = set.find(key);
        if (it == set.end()) {
            errors.push_back(where + "unknown key '" + key + "'");
            continue;
        }
        try {
            if (!it->second(c, value)) errors.push_back(where + key + ": cannot parse '" + value + "'");
        } catch (const ConfigError& e) {
            errors.push_back(where + key + ": " + e.what());
        }
    }
    for (auto& e : validate(c)) errors.push_back(std::move(e));
    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return c;
}

std::string serialize(const ScenarioConfig& c) {
    std::ostringstream os;
    os << "kind = " << to_string(c.kind) << '\n'
       << "a = " << fmt(c.a) << '\n'
       << "n = " << c.n << '\n'
       << "r_max = " << fmt(c.r_max) << '\n'
       << "r1 = " << fmt(c.r1) << '\n'
       << "branch = " << c.branch << '\n'
       << "eps = " << fmt(c.eps) << '\n'
       << "t_end = " << fmt(c.t_end) << '\n'
       << "R = " << fmt(c.R) << '\n'
       << "dt_max = " << fmt(c.dt_max) << '\n'
       << "sample_every = " << fmt(c.sample_every) << '\n'
       << "absorbing = " << (c.absorbing ? "true" : "false") << '\n'
       << "datum = " << c.datum << '\n'
       << "theta = " << fmt(c.theta) << '\n'
       << "mu = " << fmt(c.mu) << '\n'
       << "amplitude = " << fmt(c.amplitude) << '\n'
       << "R0 = " << fmt(c.R0) << '\n'
       << "center = " << fmt(c.center) << '\n'
       << "width = " << fmt(c.width) << '\n'
       << "y0 = " << join_list(c.y0) << '\n'
       << "refine = " << (c.refine ? "true" : "false") << '\n'
       << "seed = " << c.seed << '\n';
    return os.str();
}

std::string config_hash(const ScenarioConfig& c) { return hex64(fnv1a64(serialize(c))); }

}  // namespace nlsa

#include "doctest.h"

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nlsa/config.hpp"
#include "nlsa/errors.hpp"
#include "nlsa/runner.hpp"

using namespace nlsa;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// CSV without the '#' header lines
std::string body(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::string line, out;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') out += line + '\n';
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nlsa-test-" + std::to_string(::getpid()) + "-" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("minimal config fills defaults with a stable hash") {
    const ScenarioConfig c = parse_config("kind = spectrum\n");
    CHECK(c == ScenarioConfig{});
    CHECK(config_hash(c) == config_hash(parse_config("# comment\nkind=spectrum   # trailing\n\n")));
    CHECK(config_hash(c).size() == 16);
    CHECK(config_hash(c) != config_hash(parse_config("kind = spectrum\nn = 1024\n")));
}

TEST_CASE("coupling outside the window is rejected with the interval named") {
    try {
        parse_config("a = -0.3\n");
        FAIL("accepted a = -0.3");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("(-1/4+4/25, 0)") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("a = 0.01\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("a = -0.09\n"), ConfigError);
    CHECK_NOTHROW(parse_config("a = -0.089\n"));
}

TEST_CASE("round trip") {
    ScenarioConfig c;
    c.kind = ScenarioKind::LpSweep;
    c.a = -0.0123456789012345;
    c.n = 768;
    c.r1 = 3.3e-7;
    c.branch = "plus";
    c.eps = 0.0333;
    c.absorbing = true;
    c.datum = "gaussian";
    c.theta = -2.5;
    c.y0 = {0.01, -0.005, 1e-3 / 3.0};
    c.refine = false;
    c.seed = 18446744073709551615ull;
    const ScenarioConfig d = parse_config(serialize(c));
    CHECK(d == c);
    CHECK(serialize(d) == serialize(c));
}

TEST_CASE("field errors are collected") {
    try {
        parse_config("n = 12\nbogus = 1\neps = abc\nbranch = sideways\nsample_every = 0.0015\nno equals sign\n");
        FAIL("accepted");
    } catch (const ConfigError& e) {
        const std::string m = e.what();
        CHECK(m.find("n:") != std::string::npos);
        CHECK(m.find("unknown key 'bogus'") != std::string::npos);
        CHECK(m.find("eps: cannot parse") != std::string::npos);
        CHECK(m.find("branch:") != std::string::npos);
        CHECK(m.find("multiple of dt_max") != std::string::npos);
        CHECK(m.find("line 6") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("kind = spectra\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("R = 60\n"), ConfigError);
}

TEST_CASE("output root from the environment") {
    ScenarioConfig c;
    ::setenv("NLSA_OUT_ROOT", "/tmp/nlsa-root", 1);
    const fs::path p = default_output_dir(c);
    CHECK(p.parent_path() == fs::path("/tmp/nlsa-root"));
    CHECK(p.filename().string().rfind("spectrum-", 0) == 0);
    ::unsetenv("NLSA_OUT_ROOT");
    CHECK(default_output_dir(c).parent_path() == fs::path("nlsa-out"));
}

TEST_CASE("classify scenario is deterministic and tagged") {
    ScenarioConfig c = parse_config("kind = classify\nmu = 1.5\ntheta = 0.7\nt_end = 0.5\nR = 0\n");
    const fs::path d1 = scratch("c1"), d2 = scratch("c2");
    const RunResult r1 = run_scenario(c, d1);
    const RunResult r2 = run_scenario(c, d2);
    REQUIRE(r1.exit_code == kExitOk);
    const auto rep = nlohmann::json::parse(r1.report);
    CHECK(rep["results"]["verdict"] == "stationary-manifold");
    CHECK(rep["config_hash"] == config_hash(c));
    CHECK(nlohmann::json::parse(slurp(d1 / "report.json")) == rep);
    const std::string csv = slurp(d1 / "orbit.csv");
    CHECK(csv.find("# config_hash=" + config_hash(c)) != std::string::npos);
    CHECK(csv.find("# grid=" + rep["grid_fingerprint"].get<std::string>()) != std::string::npos);
    CHECK(csv.find("t,d_u,kinetic,E,mass,L6,Linf,S_cum,theta,mu,alpha,VR,dtVR,dttVR\n") != std::string::npos);
    CHECK(body(d1 / "orbit.csv") == body(d2 / "orbit.csv"));
    CHECK(parse_config(slurp(d1 / "config.txt")) == c);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("scenario exit codes") {
    ScenarioConfig bad;
    bad.a = -0.5;
    const fs::path d = scratch("bad");
    CHECK(run_scenario(bad, d).exit_code == kExitUsage);

    // a generic datum far from every rule within a tiny budget
    ScenarioConfig u = parse_config("kind = classify\ndatum = gaussian\namplitude = 1.2\nt_end = 0.05\n");
    const RunResult r = run_scenario(u, d);
    CHECK(r.exit_code == kExitUndecided);
    CHECK(r.status == "undecided");
    fs::remove_all(d);
}

TEST_CASE("spectrum and lp-sweep scenarios") {
    const fs::path d = scratch("spec");
    const RunResult r = run_scenario(parse_config("kind = spectrum\nn = 256\n"), d);
    REQUIRE(r.exit_code == kExitOk);
    const auto rep = nlohmann::json::parse(r.report)["results"];
    CHECK(rep["negative_count"] == 1);
    CHECK(rep["kernel_dim"] == 2);
    CHECK(rep["e0"].get<double>() == doctest::Approx(2.0753).epsilon(1e-3));
    CHECK(fs::exists(d / "spectrum.csv"));

    const fs::path e = scratch("lp");
    const RunResult s = run_scenario(parse_config("kind = lp-sweep\nn = 256\n"), e, 2);
    REQUIRE(s.exit_code == kExitOk);
    const std::string csv = slurp(e / "lp_sweep.csv");
    CHECK(csv.find("y0_minus,y0_plus,vc_norm") != std::string::npos);
    CHECK(csv.find("# slope=") != std::string::npos);
    const auto lp = nlohmann::json::parse(s.report)["results"];
    CHECK(std::abs(lp["slope"].get<double>() - 2.0) < 0.1);
    fs::remove_all(d);
    fs::remove_all(e);
}

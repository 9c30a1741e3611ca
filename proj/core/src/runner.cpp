#include "nlsa/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "nlsa/errors.hpp"
#include "nlsa/modulation.hpp"
#include "nlsa/spectral.hpp"
#include "nlsa/threshold.hpp"
#include "nlsa/virial.hpp"

namespace nlsa {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// NaN and inf are not JSON
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json rate_json(const RateFit& r) {
    return {{"ok", r.ok}, {"rate", num(r.rate)}, {"r2", num(r.r2)}, {"t0", r.t0}, {"t1", r.t1},
            {"efoldings", num(r.efoldings)}, {"points", r.points}, {"message", r.message}};
}

json record_json(const OrbitRecord& rec) {
    return {{"termination", to_string(rec.termination)},
            {"blowup", rec.blowup},
            {"t_final", rec.t_final},
            {"steps", rec.steps},
            {"min_dt", rec.min_dt},
            {"final_grad", num(rec.final_grad)},
            {"picard_failures", rec.picard_failures},
            {"max_energy_drift", num(rec.max_energy_drift)},
            {"max_mass_drift", num(rec.max_mass_drift)}};
}

struct Context {
    const ScenarioConfig& cfg;
    fs::path dir;
    std::string hash;
    std::string grid_fp;
    int threads = 1;
    json body = json::object();
    std::vector<fs::path> artifacts;
    int code = kExitOk;
    std::string message;

    std::vector<std::string> csv_header() const {
        return {"config_hash=" + hash, "grid=" + grid_fp, "kind=" + to_string(cfg.kind)};
    }
    std::ofstream open(const std::string& name) {
        const fs::path p = dir / name;
        std::ofstream os(p);
        if (!os) throw UsageError("cannot write " + p.string());
        artifacts.push_back(p);
        return os;
    }
    void fail(int c, const std::string& m) {
        if (code == kExitOk) {
            code = c;
            message = m;
        }
    }
    void write_orbit(const OrbitRecord& rec) {
        auto os = open("orbit.csv");
        rec.write_csv(os, csv_header());
    }
};

GroundState ground_state_for(const ScenarioConfig& c, int n) {
    const PhysParams p(c.a);
    return eval_ground_state(p, build_grid(p, n, c.r_max, c.grading()));
}

void run_spectrum(Context& x) {
    const ScenarioConfig& c = x.cfg;
    const PhysParams p(c.a);
    const auto g1 = build_grid(p, c.n, c.r_max, c.grading());
    const auto s1 = make_sector(g1, 0);
    SectorSpectrum a5 = sector_spectrum(assemble_sector_op(s1, 5), 5);
    SectorSpectrum a1 = sector_spectrum(assemble_sector_op(s1, 1), 3);
    SectorSpectrum e1 = sector_spectrum(assemble_sector_op(make_sector(g1, 1), 5), 2);
    double tol = kernel_tolerance(a5, a5);
    SectorSpectrum b5, b1;
    if (c.refine) {
        const auto g2 = build_grid(p, 2 * c.n, c.r_max, c.grading());
        const auto s2 = make_sector(g2, 0);
        b5 = sector_spectrum(assemble_sector_op(s2, 5), 5);
        b1 = sector_spectrum(assemble_sector_op(s2, 1), 3);
        tol = kernel_tolerance(a5, b5);
        flag_kernel(b5, tol);
        flag_kernel(b1, tol);
    }
    flag_kernel(a5, tol);
    flag_kernel(a1, tol);
    const GroundState gs = eval_ground_state(s1);
    const double cos_W1 = a5.kernel.empty() ? 0.0
                                            : l2_cosine(a5.eigenvectors.col(a5.kernel[0]), gs.W1.phi.real(), s1->mass());
    const double cos_W = a1.kernel.empty() ? 0.0
                                           : l2_cosine(a1.eigenvectors.col(a1.kernel[0]), gs.W.phi.real(), s1->mass());
    const TrichotomyData t = solve_trichotomy(gs);
    const int kernel_dim = static_cast<int>(a5.kernel.size() + a1.kernel.size());

    {
        auto os = x.open("spectrum.csv");
        for (const auto& h : x.csv_header()) os << "# " << h << '\n';
        os << "ell,c,index,eigenvalue_n,eigenvalue_2n\n";
        char buf[96];
        auto rows = [&](int ell, int cc, const SectorSpectrum& s, const SectorSpectrum* f) {
            for (int i = 0; i < s.eigenvalues.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%d,%d,%d,%.12g,", ell, cc, i, s.eigenvalues(i));
                os << buf;
                if (f && i < f->eigenvalues.size()) {
                    std::snprintf(buf, sizeof buf, "%.12g", f->eigenvalues(i));
                    os << buf;
                }
                os << '\n';
            }
        };
        rows(0, 5, a5, c.refine ? &b5 : nullptr);
        rows(0, 1, a1, c.refine ? &b1 : nullptr);
        rows(1, 5, e1, nullptr);
    }

    json& b = x.body;
    b["negative_count"] = a5.negative_count;
    b["kernel_dim"] = kernel_dim;
    b["kernel_tol"] = tol;
    b["kernel_cos_W1"] = cos_W1;
    b["kernel_cos_W"] = cos_W;
    b["ell1_lowest"] = e1.eigenvalues(0);
    b["e0"] = t.e0;
    b["e0_identity_rel"] = std::abs(t.identity_lhs / t.identity_rhs - 1.0);
    b["pair_pp"] = t.pair_pp;
    b["pair_mm"] = t.pair_mm;
    if (c.refine) {
        const GroundState gs2 = eval_ground_state(make_sector(build_grid(p, 2 * c.n, c.r_max, c.grading()), 0));
        const double e0f = solve_trichotomy(gs2).e0;
        b["e0_2n"] = e0f;
        b["e0_refinement_rel"] = std::abs(e0f / t.e0 - 1.0);
        b["negative_count_2n"] = b5.negative_count;
    }
    if (a5.negative_count != 1)
        x.fail(kExitProperty, "c=5 sector has " + std::to_string(a5.negative_count) + " negative eigenvalues");
    if (kernel_dim != 2) x.fail(kExitProperty, "kernel dimension " + std::to_string(kernel_dim));
    if (cos_W1 < 0.999 || cos_W < 0.999) x.fail(kExitProperty, "kernel vectors do not match W1 and W");
    if (!(e1.eigenvalues(0) > 0.0)) x.fail(kExitProperty, "l=1 c=5 sector not positive");
}

ThresholdSetup setup_for(const ScenarioConfig& c) { return make_threshold_setup(ground_state_for(c, c.n)); }

void run_orbit(Context& x) {
    const ScenarioConfig& c = x.cfg;
    const ThresholdSetup s = setup_for(c);
    const Branch br = c.branch == "plus" ? Branch::Plus : Branch::Minus;
    const ThresholdOrbit o = build_threshold_orbit(s, br, c.eps, c.t_end, c.controls(), c.R);
    x.write_orbit(o.record);
    json& b = x.body;
    b["branch"] = to_string(br);
    b["e0"] = s.trich.e0;
    b["y0_minus"] = o.lp.y0_minus;
    b["y0_plus"] = o.lp.y0_plus;
    b["vc0_norm"] = o.lp.vc0_norm;
    b["lp_iterations"] = o.lp.iterations;
    b["lp_contraction"] = o.lp.contraction;
    b["one_sided"] = o.one_sided;
    b["decay"] = rate_json(o.decay);
    if (o.decay.ok) b["decay_rel_e0"] = std::abs(-o.decay.rate / s.trich.e0 - 1.0);
    b["record"] = record_json(o.record);
    if (!o.one_sided) x.fail(kExitProperty, "kinetic energy crossed M above the noise floor");
    if (o.record.termination == Termination::NonFinite) x.fail(kExitNumerical, "non-finite state");
}

void run_classify(Context& x) {
    const ScenarioConfig& c = x.cfg;
    const GroundState gs = ground_state_for(c, c.n);
    const RadialField u0 = make_datum(c, gs);
    ClassifyBudget bud;
    bud.t_end = std::abs(c.t_end);
    bud.controls = c.controls();
    const ClassificationVerdict v = classify(gs, u0, bud);
    x.write_orbit(v.record);
    json& b = x.body;
    b["verdict"] = to_string(v.label);
    b["reason"] = v.reason;
    b["datum_energy_gap"] = (energy(u0) - gs.E) / gs.M;
    b["datum_kinetic"] = inner_a(u0, u0) / gs.M;
    b["max_d"] = v.max_d;
    b["final_d"] = v.final_d;
    b["final_kinetic"] = v.final_kinetic;
    b["max_grad"] = num(v.max_grad);
    b["peak_L6"] = v.peak_l6;
    b["final_L6"] = v.final_l6;
    b["S"] = v.S;
    b["rate"] = rate_json(v.rate);
    b["record"] = record_json(v.record);
    if (v.label == Verdict::Undecided) x.fail(kExitUndecided, v.reason);
}

void run_lp_sweep(Context& x) {
    const ScenarioConfig& c = x.cfg;
    const ThresholdSetup s = setup_for(c);
    std::vector<LPState> res(c.y0.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i; (i = next++) < res.size();) res[i] = lp_solve(s, c.y0[i]);
    };
    std::vector<std::thread> pool;
    for (int k = 1; k < std::min<int>(x.threads, static_cast<int>(res.size())); ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<double> lx, ly;
    double contraction = 0.0;
    bool converged = true;
    for (const auto& r : res) {
        lx.push_back(std::log(std::abs(r.y0_minus)));
        ly.push_back(std::log(std::abs(r.y0_plus) + r.vc0_norm));
        contraction = std::max(contraction, r.contraction);
        converged = converged && r.converged;
    }
    const LineFit f = fit_line(lx, ly);
    {
        auto os = x.open("lp_sweep.csv");
        for (const auto& h : x.csv_header()) os << "# " << h << '\n';
        os << "y0_minus,y0_plus,vc_norm,iterations,contraction\n";
        char buf[128];
        for (const auto& r : res) {
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%d,%.6g\n", r.y0_minus, r.y0_plus, r.vc0_norm,
                          r.iterations, r.contraction);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "# slope=%.6f r2=%.6f\n", f.slope, f.r2);
        os << buf;
    }
    json& b = x.body;
    b["e0"] = s.trich.e0;
    b["slope"] = f.slope;
    b["slope_r2"] = f.r2;
    b["max_contraction"] = contraction;
    b["converged"] = converged;
    json runs = json::array();
    for (const auto& r : res)
        runs.push_back({{"y0_minus", r.y0_minus}, {"y0_plus", r.y0_plus}, {"vc0_norm", r.vc0_norm},
                        {"iterations", r.iterations}, {"contraction", r.contraction}, {"message", r.message}});
    b["runs"] = runs;
    if (!converged) x.fail(kExitNumerical, "fixed-point iteration did not converge");
    if (!(std::abs(f.slope - 2.0) <= 0.1)) x.fail(kExitProperty, "quadratic slope outside 2 +- 0.1");
    if (contraction > 0.9) x.fail(kExitProperty, "contraction factor above 0.9");
}

void run_virial_check(Context& x) {
    const ScenarioConfig& c = x.cfg;
    if (!(c.R > 0.0)) throw ConfigError("virial-check needs R > 0");
    const ThresholdSetup s = setup_for(c);
    const Branch br = c.branch == "plus" ? Branch::Plus : Branch::Minus;
    const ThresholdOrbit o = build_threshold_orbit(s, br, c.eps, c.t_end, c.controls(), c.R);
    x.write_orbit(o.record);
    const auto& S = o.record.samples;
    double err = 0.0, scale = 0.0;
    for (size_t i = 1; i + 1 < S.size(); ++i) {
        const double h1 = S[i].t - S[i - 1].t, h2 = S[i + 1].t - S[i].t;
        if (!(h1 != 0.0 && std::abs(h1 - h2) <= 1e-9 * std::abs(h1))) continue;
        const double fd = (S[i - 1].VR - 2 * S[i].VR + S[i + 1].VR) / (h1 * h1);
        if (!std::isfinite(fd) || !std::isfinite(S[i].dttVR)) continue;
        err = std::max(err, std::abs(fd - S[i].dttVR));
        scale = std::max(scale, std::abs(S[i].dttVR));
    }
    const double rel = scale > 0.0 ? err / scale : INFINITY;
    json AR = json::object();
    double ar_max = 0.0;
    for (double R : {2.0, 5.0, 10.0}) {
        if (4.0 * R > c.r_max) continue;
        const double v = virial_sample(s.closed, s.closed.W, R).AR / s.gs.M;
        AR[std::to_string(static_cast<int>(R))] = v;
        ar_max = std::max(ar_max, std::abs(v));
    }
    json& b = x.body;
    b["R"] = c.R;
    b["energy_gap"] = (energy(RadialField(s.gs.sector, s.gs.W.phi + o.lp.v0.phi)) - s.gs.E) / s.gs.M;
    b["fd_rel_error"] = num(rel);
    b["dttVR_scale"] = scale;
    b["AR_W_over_M"] = AR;
    b["record"] = record_json(o.record);
    if (!(rel <= 1e-4)) x.fail(kExitProperty, "second difference of V_R disagrees with the identity");
    if (ar_max > 1e-8) x.fail(kExitProperty, "A_R(W) not zero");
}

void run_evolve(Context& x) {
    const ScenarioConfig& c = x.cfg;
    const GroundState gs = ground_state_for(c, c.n);
    const RadialField u0 = make_datum(c, gs);
    SimState st = make_state(u0);
    const OrbitRecord rec = evolve(gs, st, c.t_end, c.controls(), make_modulation_observer(gs, c.R));
    x.write_orbit(rec);
    json& b = x.body;
    b["datum_energy_gap"] = (energy(u0) - gs.E) / gs.M;
    b["datum_kinetic"] = inner_a(u0, u0) / gs.M;
    b["record"] = record_json(rec);
    if (rec.termination == Termination::NonFinite) x.fail(kExitNumerical, "non-finite state");
    if (rec.termination == Termination::StepLimit) x.fail(kExitNumerical, "step limit reached");
}

}  // namespace

fs::path default_output_dir(const ScenarioConfig& c) {
    const char* root = std::getenv("NLSA_OUT_ROOT");
    const fs::path base = root && *root ? fs::path(root) : fs::path("nlsa-out");
    return base / (to_string(c.kind) + "-" + config_hash(c).substr(0, 12));
}

RadialField make_datum(const ScenarioConfig& c, const GroundState& gs) {
    if (c.datum == "ground-state") {
        const PolishResult P = polish_ground_state(gs, c.mu);
        return RadialField(gs.sector, c.amplitude * std::polar(1.0, c.theta) * P.field.phi);
    }
    if (c.datum == "closed-form") return RadialField(gs.sector, c.amplitude * scaled_W(gs, c.theta, c.mu).phi);
    if (c.datum == "truncated") return tune_blowup_datum(gs, c.R0).u0;
    if (c.datum == "gaussian") {
        const double c0 = c.center, w = c.width;
        RadialField h = field_from_u(gs.sector, [c0, w](double r) { return cplx(std::exp(-(r - c0) * (r - c0) / (w * w))); });
        h.phi *= c.amplitude * std::sqrt(gs.M) / norm_a(h);
        return h;
    }
    throw ConfigError("unknown datum '" + c.datum + "'");
}

RunResult run_scenario(const ScenarioConfig& c, const fs::path& dir, int threads) {
    RunResult res;
    res.dir = dir;
    Context x{c, dir, config_hash(c), "", std::max(1, threads), json::object(), {}, kExitOk, ""};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (const auto errs = validate(c); !errs.empty()) throw ConfigError(errs.front());
        fs::create_directories(dir);
        x.grid_fp = build_grid(PhysParams(c.a), c.n, c.r_max, c.grading())->fingerprint();
        {
            auto os = x.open("config.txt");
            os << "# config_hash=" << x.hash << '\n' << serialize(c);
        }
        switch (c.kind) {
            case ScenarioKind::Spectrum: run_spectrum(x); break;
            case ScenarioKind::Orbit: run_orbit(x); break;
            case ScenarioKind::Classify: run_classify(x); break;
            case ScenarioKind::LpSweep: run_lp_sweep(x); break;
            case ScenarioKind::VirialCheck: run_virial_check(x); break;
            case ScenarioKind::Evolve: run_evolve(x); break;
        }
    } catch (const ConfigError& e) {
        x.fail(kExitUsage, e.what());
    } catch (const UsageError& e) {
        x.fail(kExitUsage, e.what());
    } catch (const PropertyFailure& e) {
        x.fail(kExitProperty, e.what());
    } catch (const std::exception& e) {
        x.fail(kExitNumerical, e.what());
    }
    res.exit_code = x.code;
    switch (x.code) {
        case kExitOk: res.status = "ok"; break;
        case kExitUsage: res.status = "usage-error"; break;
        case kExitProperty: res.status = "property-failure"; break;
        case kExitUndecided: res.status = "undecided"; break;
        default: res.status = "numerical-failure"; break;
    }
    res.message = x.message;

    json rep;
    rep["kind"] = to_string(c.kind);
    rep["config_hash"] = x.hash;
    rep["grid_fingerprint"] = x.grid_fp;
    rep["status"] = res.status;
    rep["exit_code"] = res.exit_code;
    rep["message"] = res.message;
    rep["created"] = utc_now();
    rep["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep["results"] = x.body;
    res.report = rep.dump(2);
    std::error_code ec;
    if (fs::is_directory(dir, ec)) {
        std::ofstream os(dir / "report.json");
        if (os) {
            os << res.report << '\n';
            x.artifacts.push_back(dir / "report.json");
        }
    }
    res.artifacts = x.artifacts;
    return res;
}

}  // namespace nlsa

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nlsa/config.hpp"
#include "nlsa/errors.hpp"
#include "nlsa/runner.hpp"

namespace {

// Some AVX-512 OpenBLAS kernels return wrong eigenvectors; the library reads
// the variable once at load time, so it has to be set before we start.
void pin_openblas(char** argv) {
    if (std::getenv("OPENBLAS_CORETYPE") || std::getenv("NLSA_NO_REEXEC")) return;
    setenv("OPENBLAS_CORETYPE", "Haswell", 1);
    setenv("NLSA_NO_REEXEC", "1", 1);
    execv("/proc/self/exe", argv);
    // fall through when /proc is unavailable
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw nlsa::ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    pin_openblas(argv);

    CLI::App app{"Threshold dynamics lab for energy-critical NLS with an inverse-square potential"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    int threads = 1;
    bool print_config = false;

    const std::vector<std::pair<std::string, std::string>> kinds = {
        {"spectrum", "linearized spectrum, kernel and trichotomy pair"},
        {"orbit", "threshold orbit from the fixed-point seed"},
        {"classify", "run a datum and classify its long-time behaviour"},
        {"lp-sweep", "quadratic tangency sweep of the fixed-point solver"},
        {"virial-check", "virial identity against finite differences along a threshold orbit"},
        {"evolve", "evolve a datum and record diagnostics"},
    };
    for (const auto& [name, help] : kinds) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "key = value config file");
        sub->add_option("--out", out_dir, "output directory (default $NLSA_OUT_ROOT/<kind>-<hash>)");
        sub->add_option("--threads", threads, "parallel jobs for sweeps")->check(CLI::Range(1, 256));
        sub->add_option("--set", overrides, "extra key=value lines, applied after the file");
        sub->add_flag("--print-config", print_config, "print the canonical config and exit");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : nlsa::kExitUsage;
    }
    const std::string kind = app.get_subcommands().front()->get_name();

    nlsa::ScenarioConfig cfg;
    try {
        // the subcommand sets the kind; a kind line in the file must agree
        std::string text = "kind = " + kind + "\n";
        if (!config_path.empty()) text += read_file(config_path);
        for (const auto& o : overrides) text += "\n" + o;
        cfg = nlsa::parse_config(text);
        if (nlsa::to_string(cfg.kind) != kind)
            throw nlsa::ConfigError("config kind " + nlsa::to_string(cfg.kind) + " does not match subcommand " + kind);
    } catch (const nlsa::ConfigError& e) {
        std::cerr << "nlsa: " << e.what() << '\n';
        return nlsa::kExitUsage;
    }
    if (print_config) {
        std::cout << "# config_hash=" << nlsa::config_hash(cfg) << '\n' << nlsa::serialize(cfg);
        return 0;
    }
    const std::filesystem::path dir = out_dir.empty() ? nlsa::default_output_dir(cfg) : std::filesystem::path(out_dir);
    const nlsa::RunResult r = nlsa::run_scenario(cfg, dir, threads);
    std::cout << r.report << '\n';
    for (const auto& p : r.artifacts) std::cerr << "wrote " << p.string() << '\n';
    if (r.exit_code != nlsa::kExitOk) std::cerr << "nlsa: " << r.status << ": " << r.message << '\n';
    return r.exit_code;
}

/// homloop: command-line front end for the homoclinic-loop toolkit.

#include "homloop/errors.hpp"
#include "homloop_cli/commands.hpp"
#include "homloop_cli/config.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

namespace {

/// --threads wins; otherwise HOMLOOP_THREADS; otherwise 1.
int resolve_threads(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("HOMLOOP_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
        std::cerr << "homloop: ignoring invalid HOMLOOP_THREADS='" << env << "'\n";
    }
    return 1;
}

const char* describe(const std::string& name) {
    static const std::map<std::string, const char*> text{
        {"classify", "Check the standing assumptions and classify the loop scenario"},
        {"melnikov", "Melnikov profile, simple zeros and the leaf-splitting check"},
        {"leaves", "Anchor points of the stable and unstable leaves on the section"},
        {"barriers", "Barrier curves, endpoint bands and flow-direction checks"},
        {"loop", "Forward/backward loop maps over the (d, tau) grid"},
        {"scaling", "Fitted displacement exponents and time slopes against theory"},
        {"stability", "Divergence sign rules and the iterated unperturbed return map"},
    };
    const auto it = text.find(name);
    return it == text.end() ? "" : it->second;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Loop maps, barriers and scaling laws near homoclinic loops of planar piecewise-smooth systems"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    bool verbose = false;
    for (const auto& name : homloop::cli::subcommands()) {
        auto* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", config_path, "Experiment configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory (created if missing)");
        sub->add_option("--threads", threads, "Worker threads for grid loops (falls back to HOMLOOP_THREADS)")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--verbose", verbose, "Progress on stderr");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    try {
        const homloop::cli::ExperimentConfig cfg = homloop::cli::load_config(config_path);
        homloop::cli::RunOptions opt;
        opt.out_dir = out_dir;
        opt.threads = resolve_threads(threads);
        opt.verbose = verbose;
        const int status = homloop::cli::run_command(name, cfg, opt, std::cerr);
        if (status == 2) std::cerr << "homloop " << name << ": contract violation (see output report)\n";
        return status;
    } catch (const homloop::Error& e) {
        std::cerr << "homloop " << name << ": " << e.what() << "\n";
        return homloop::is_contract_violation(e.code()) ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "homloop " << name << ": " << e.what() << "\n";
        return 1;
    }
}

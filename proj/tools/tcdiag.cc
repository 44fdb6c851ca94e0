#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <thread>

#include "tcdiag/errors.h"
#include "tcdiag/experiment.h"

using namespace tcdiag;

namespace {

struct Overrides {
    std::string config;
    std::optional<uint64_t> seed;
    std::optional<int> chains;
    std::optional<int> threads;
    std::string out;
    std::string format;
    std::string level;
    std::string input;
    bool print_config = false;
    bool quiet = false;
};

void add_common(CLI::App *sub, Overrides &o, bool require_config) {
    auto *cfg = sub->add_option("-c,--config", o.config, "YAML experiment file")->check(CLI::ExistingFile);
    if (require_config) {
        cfg->required();
    }
    sub->add_option("--seed", o.seed, "base seed (overrides mc.seed)");
    sub->add_option("--chains", o.chains, "independent chains (overrides mc.chains)")->check(CLI::PositiveNumber);
    sub->add_option("--threads", o.threads, "worker threads for independent chains")->check(CLI::PositiveNumber);
    sub->add_option("-o,--out", o.out, "output directory (overrides io.out and TCDIAG_OUT)");
    sub->add_option("--format", o.format, "results format")->check(CLI::IsMember({"csv", "jsonl"}));
    sub->add_option("--input", o.input, "reanalyze accumulators.jsonl from this directory");
    sub->add_flag("--print-config", o.print_config, "print the canonical configuration and exit");
    sub->add_flag("-q,--quiet", o.quiet, "no progress log on stderr");
}

int run(const std::string &command, const Overrides &o) {
    ExperimentConfig cfg;
    if (!o.config.empty()) {
        cfg = load_config(o.config);
        if (!command.empty() && cfg.command != command) {
            throw ConfigError(o.config + ": command is '" + cfg.command + "' but the '" + command + "' subcommand was used");
        }
    } else {
        cfg.command = command;
    }
    if (o.seed) {
        cfg.seed = *o.seed;
    }
    if (o.chains) {
        cfg.chains = *o.chains;
    }
    if (!o.format.empty()) {
        cfg.format = o.format;
    }
    if (!o.level.empty()) {
        cfg.level = o.level;
    }
    if (!o.input.empty()) {
        cfg.input = o.input;
    }
    if (!o.out.empty()) {
        cfg.out = o.out;
    }
    validate_config(cfg);
    if (o.print_config) {
        std::cout << echo_config(cfg);
        return 0;
    }
    RunOptions opt;
    opt.out_dir = cfg.out;
    if (opt.out_dir.empty()) {
        const char *env = std::getenv("TCDIAG_OUT");
        opt.out_dir = env ? env : "tcdiag-out";
    }
    opt.threads = o.threads ? *o.threads : std::max(1u, std::thread::hardware_concurrency());
    opt.log = o.quiet ? nullptr : &std::cerr;
    auto outcome = run_experiment(cfg, opt);
    std::cout << outcome.report;
    std::cout << "results written to " << opt.out_dir << "\n";
    return (int)outcome.status;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Diagnostics of the decohered toric code: exact engines, Monte Carlo and analysis"};
    app.set_version_flag("--version", std::string("tcdiag ") + kVersion);
    app.require_subcommand(1);

    Overrides o;
    std::string chosen;
    auto *run_cmd = app.add_subcommand("run", "run the experiment described by a config file");
    add_common(run_cmd, o, true);
    run_cmd->callback([&] { chosen = ""; });
    for (const char *name : {"moments", "threshold", "collapse", "negativity", "coherent-info", "relative-entropy"}) {
        auto *sub = app.add_subcommand(name, std::string("run a '") + name + "' experiment");
        add_common(sub, o, true);
        sub->callback([&chosen, name] { chosen = name; });
    }
    auto *verify = app.add_subcommand("verify", "built-in consistency checks");
    add_common(verify, o, false);
    verify->add_option("--level", o.level, "quick or full")->check(CLI::IsMember({"quick", "full"}));
    verify->callback([&] { chosen = "verify"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : (int)ExitStatus::ConfigError;
    }
    try {
        return run(chosen, o);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return (int)ExitStatus::ConfigError;
    } catch (const UnsupportedModeError &e) {
        std::cerr << "unsupported: " << e.what() << "\n";
        return (int)ExitStatus::ConfigError;
    } catch (const CapacityError &e) {
        std::cerr << "capacity exceeded: " << e.what() << "\n";
        return (int)ExitStatus::CapacityError;
    } catch (const std::invalid_argument &e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return (int)ExitStatus::ConfigError;
    }
}

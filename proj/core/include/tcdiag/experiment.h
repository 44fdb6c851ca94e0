#ifndef TCDIAG_EXPERIMENT_H
#define TCDIAG_EXPERIMENT_H

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tcdiag/error_model.h"
#include "tcdiag/spin_mc.h"

namespace tcdiag {

constexpr const char *kVersion = "0.1.0";

enum class ExitStatus : int { Ok = 0, AssertionFailure = 1, ConfigError = 2, CapacityError = 3 };

struct RegionConfig {
    std::string geometry = "wedges";
    /// Block side; 0 means L / 4 (at least 2).
    int side = 0;
    /// Block origin; -1 centers the block.
    int row = -1;
    int col = -1;

    bool operator==(const RegionConfig &) const = default;
};

struct ExperimentConfig {
    std::string command;

    std::vector<int> L;
    int n = 2;
    std::vector<double> p;
    /// Which rates follow the grid: "x", "z" or "both".
    std::string error = "both";
    /// "auto", "dense", "loops" or "mc".
    std::string engine = "auto";
    /// Threshold observable: "binder" (per flavor) or "binder-flavor-averaged".
    std::string observable = "binder";
    RegionConfig regions;
    std::vector<int> separations;
    std::string level = "quick";

    int sweeps_thermalize = 2000;
    int sweeps_measure = 20000;
    int measure_interval = 1;
    int chains = 1;
    uint64_t seed = 1;
    int blocks = 20;
    std::string update = "metropolis";
    bool product_term = true;
    bool ordered_start = false;
    bool tempering = false;

    int bootstrap = 200;
    int collapse_bootstrap = 20;
    /// "staged" (nu from the Binder collapse, then beta) or "joint"; staged runs also report the joint fit.
    std::string collapse_fit = "staged";
    int neighbors = 1;
    /// Directory holding accumulators.jsonl from an earlier run; empty runs the simulation.
    std::string input;

    std::string out;
    std::string format = "csv";

    bool operator==(const ExperimentConfig &) const = default;

    /// The MC block for one (L, p) point.
    MCConfig mc(int L_, double p_) const;
    /// Error model for a grid rate according to the error field.
    ErrorModel model(double p_) const;
};

/// Parses YAML text. Unknown keys and invalid values raise ConfigError with the offending line.
ExperimentConfig parse_config(const std::string &text);
ExperimentConfig load_config(const std::string &path);
/// Structural checks shared by parsing and flag overrides.
void validate_config(const ExperimentConfig &config);
/// Canonical YAML form; parse_config(echo_config(c)) == c.
std::string echo_config(const ExperimentConfig &config);

/// One line of the results table.
struct ResultRow {
    std::string quantity;
    int n = 0;
    int L = 0;
    double p = 0;
    double value = 0;
    double error = 0;
    std::string method;
    uint64_t seed_base = 0;
    int chains = 0;
    uint64_t sweeps = 0;
    std::string flag;
};

struct RunOptions {
    std::string out_dir;
    /// Worker threads for independent chains.
    int threads = 1;
    std::ostream *log = nullptr;
};

struct RunOutcome {
    ExitStatus status = ExitStatus::Ok;
    std::vector<ResultRow> rows;
    std::string report;
};

/// Runs the configured command and writes results, accumulators, report and manifest into out_dir.
RunOutcome run_experiment(const ExperimentConfig &config, const RunOptions &options);

std::string results_csv(const std::vector<ResultRow> &rows);
std::string results_jsonl(const std::vector<ResultRow> &rows);

/// Accumulator snapshot as one JSON line, tagged with its grid point.
std::string accumulator_json(const MomentAccumulator &acc, int L, int n, double p, const std::string &tag);
struct TaggedAccumulator {
    int L = 0;
    int n = 0;
    double p = 0;
    std::string tag;
    MomentAccumulator acc;
};
std::vector<TaggedAccumulator> read_accumulators(const std::string &path);

}  // namespace tcdiag

#endif

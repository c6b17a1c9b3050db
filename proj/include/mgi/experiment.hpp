#ifndef MGI_EXPERIMENT_HPP
#define MGI_EXPERIMENT_HPP

#include <string>
#include <utility>
#include <vector>

#include "mgi/equations.hpp"

namespace mgi {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SuiteKind { axioms, perturbation, gamma_gap, equations, all };

std::string suite_name(SuiteKind s);
SuiteKind suite_from_name(const std::string& name);

struct Tolerances {
    double solver_tol = 1e-10;
    double verify_tol = 1e-6;
    double rank_tol = 1e-10;
    double slack = 1e-3;
};

struct ExperimentConfig {
    SuiteKind suite = SuiteKind::all;
    std::vector<std::pair<int, int>> dims = {{5, 4}};
    std::vector<std::pair<double, double>> exponents = {{2.0, 2.0}};
    std::vector<int> ranks;  // empty: cycle every feasible rank
    int trials = 20;
    std::uint64_t seed = 42;
    Tolerances tolerances;
    std::string output_dir = ".";
};

/// Parses the `key = value` grammar (one pair per line, # comments, lists in
/// brackets: dims = [(5,4),(6,3)]). Unknown keys and out-of-range values
/// raise ConfigError naming the line / field. Missing keys get defaults.
ExperimentConfig parse_config(const std::string& text);

/// Inverse of parse_config (parse(serialize(c)) == c).
std::string serialize_config(const ExperimentConfig& config);

struct TrialRecord {
    std::string suite;
    int m = 0, n = 0;
    double p = 2.0, q = 2.0;
    int rank = 0;
    int trial = 0;
    std::string verdict;  // pass | fail | SKIPPED
    double worst_residual = 0.0;
    double lhs = 0.0, rhs = 0.0, slack = 0.0;
    std::string note;  // skip reason or failure detail (report.json only)
};

struct SuiteReport {
    std::vector<TrialRecord> records;
    int passed = 0, failed = 0, skipped = 0;
    double wall_seconds = 0.0;
};

/// Runs the configured suite(s) and writes report.json and summary.csv into
/// config.output_dir. Deterministic: per-trial RNG streams are split from
/// the seed, so identical config yields byte-identical summary.csv.
SuiteReport run_suite(const ExperimentConfig& config);

/// The fixed-column CSV (suite,m,n,p,q,rank,trial,verdict,worst_residual,
/// lhs,rhs,slack), records ordered by suite then trial.
std::string summary_csv(const SuiteReport& report);

/// 0 when every executed trial passed, 1 on any failure, 2 when nothing ran.
int exit_status(const SuiteReport& report);

}  // namespace mgi

#endif

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mgi/experiment.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& seed_flag,
                const std::string& suite_flag, const std::string& out_flag, bool quiet) {
    mgi::ExperimentConfig cfg;
    try {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) {
            std::cerr << "cannot open config file '" << config_path << "'\n";
            return 3;
        }
        std::ostringstream text;
        text << in.rdbuf();
        cfg = mgi::parse_config(text.str());
        // flags win over file values
        if (!seed_flag.empty()) cfg.seed = std::stoull(seed_flag);
        if (!suite_flag.empty()) cfg.suite = mgi::suite_from_name(suite_flag);
        if (!out_flag.empty()) cfg.output_dir = out_flag;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }

    try {
        mgi::SuiteReport report = mgi::run_suite(cfg);
        if (!quiet) {
            std::cout << "suite " << mgi::suite_name(cfg.suite) << ": " << report.passed
                      << " passed, " << report.failed << " failed, " << report.skipped
                      << " skipped (" << report.wall_seconds << " s)\n"
                      << "wrote " << cfg.output_dir << "/summary.csv and report.json\n";
            for (const mgi::TrialRecord& r : report.records)
                if (r.verdict != "pass")
                    std::cout << "  " << r.suite << " trial " << r.trial << ": " << r.verdict
                              << (r.note.empty() ? "" : " - " + r.note) << "\n";
        }
        return mgi::exit_status(report);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metric generalized inverse experiment runner"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run the experiment suites from a config file");
    std::string config_path, seed_flag, suite_flag, out_flag;
    bool quiet = false;
    run->add_option("config", config_path, "path to the key = value config file")
        ->required();
    run->add_option("--seed", seed_flag, "override the config seed");
    run->add_option("--suite", suite_flag,
                    "override the suite (axioms, perturbation, gamma_gap, equations, all)");
    run->add_option("--out", out_flag, "override the output directory");
    run->add_flag("--quiet", quiet, "suppress the summary printout");

    CLI11_PARSE(app, argc, argv);
    return run_command(config_path, seed_flag, suite_flag, out_flag, quiet);
}

#include "doctest.h"
#include "mgi/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mgi;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("empty config gives the documented defaults") {
    auto cfg = parse_config("");
    CHECK(cfg.suite == SuiteKind::all);
    REQUIRE(cfg.dims.size() == 1);
    CHECK(cfg.dims[0] == std::pair<int, int>(5, 4));
    REQUIRE(cfg.exponents.size() == 1);
    CHECK(cfg.exponents[0].first == 2.0);
    CHECK(cfg.exponents[0].second == 2.0);
    CHECK(cfg.trials == 20);
    CHECK(cfg.seed == 42);
}

TEST_CASE("config validation names the offending value") {
    CHECK_THROWS_WITH_AS(parse_config("exponents = [(1.0, 2.0)]"),
                         doctest::Contains("p must exceed 1"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("trials = 0"),
                         doctest::Contains("trials must be at least 1"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("colour = red"),
                         doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("dims = [(12, 4)]"),
                         doctest::Contains("cap"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("dims = [(4, 4)]\nranks = [5]"),
                         doctest::Contains("exceeds min(m,n)"), ConfigError);
    CHECK_THROWS_AS(parse_config("suite"), ConfigError);       // no '='
    CHECK_THROWS_AS(parse_config("suite = quantum"), ConfigError);
    // errors carry the line number
    try {
        parse_config("trials = 5\nexponents = [(1.0, 2.0)]");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("comments and spacing are tolerated") {
    auto cfg = parse_config(
        "# experiment setup\n"
        "  suite = axioms   # just the axiom suite\n"
        "\n"
        "dims = [(3, 3), (4, 2)]\n"
        "exponents = [(1.5, 3.0)]\n"
        "trials = 7\n"
        "seed = 9\n");
    CHECK(cfg.suite == SuiteKind::axioms);
    CHECK(cfg.dims.size() == 2);
    CHECK(cfg.exponents[0].first == 1.5);
    CHECK(cfg.trials == 7);
    CHECK(cfg.seed == 9);
}

TEST_CASE("config round-trips through serialization") {
    auto cfg = parse_config(
        "suite = equations\n"
        "dims = [(5, 4), (6, 3)]\n"
        "exponents = [(2.0, 2.0), (2.5, 1.5)]\n"
        "ranks = [1, 2]\n"
        "trials = 11\n"
        "seed = 1234\n"
        "verify_tol = 1e-7\n"
        "output_dir = /tmp/somewhere\n");
    auto cfg2 = parse_config(serialize_config(cfg));
    CHECK(serialize_config(cfg2) == serialize_config(cfg));
    CHECK(cfg2.suite == cfg.suite);
    CHECK(cfg2.dims == cfg.dims);
    CHECK(cfg2.exponents == cfg.exponents);
    CHECK(cfg2.ranks == cfg.ranks);
    CHECK(cfg2.trials == cfg.trials);
    CHECK(cfg2.seed == cfg.seed);
    CHECK(cfg2.tolerances.verify_tol == cfg.tolerances.verify_tol);
    CHECK(cfg2.output_dir == cfg.output_dir);
}

TEST_CASE("axiom suite at p = q = 2 passes every trial") {
    ExperimentConfig cfg;
    cfg.suite = SuiteKind::axioms;
    cfg.trials = 20;
    cfg.output_dir = "exp_out/axioms";
    auto report = run_suite(cfg);
    CHECK(report.passed == 20);
    CHECK(report.failed == 0);
    CHECK(report.skipped == 0);
    for (const auto& r : report.records) CHECK(r.worst_residual <= 1e-8);
    CHECK(exit_status(report) == 0);
    CHECK(std::filesystem::exists("exp_out/axioms/summary.csv"));
    CHECK(std::filesystem::exists("exp_out/axioms/report.json"));
}

TEST_CASE("summary.csv is byte-identical across repeated runs") {
    ExperimentConfig cfg = parse_config(
        "suite = all\n"
        "dims = [(4, 3)]\n"
        "exponents = [(2.0, 2.0), (3.0, 2.0)]\n"
        "trials = 6\n"
        "seed = 77\n");
    cfg.output_dir = "exp_out/det_a";
    run_suite(cfg);
    cfg.output_dir = "exp_out/det_b";
    run_suite(cfg);
    std::string a = slurp("exp_out/det_a/summary.csv");
    std::string b = slurp("exp_out/det_b/summary.csv");
    CHECK(a == b);
    CHECK(a.rfind("suite,m,n,p,q,rank,trial,verdict,worst_residual,lhs,rhs,slack\n", 0) ==
          0);
}

TEST_CASE("skipped trials are reported, not counted as passes") {
    // p = 3 with rank 1 of a 3x3: outside the quasi-additivity regime
    ExperimentConfig cfg = parse_config(
        "suite = perturbation\n"
        "dims = [(3, 3)]\n"
        "exponents = [(3.0, 3.0)]\n"
        "ranks = [1]\n"
        "trials = 4\n");
    cfg.output_dir = "exp_out/skip";
    auto report = run_suite(cfg);
    CHECK(report.skipped == 4);
    CHECK(report.passed == 0);
    CHECK(exit_status(report) == 2);  // nothing actually ran
    for (const auto& r : report.records) {
        CHECK(r.verdict == "SKIPPED");
        CHECK(!r.note.empty());
    }
}

TEST_CASE("perturbation and equations suites pass in the supported regimes") {
    ExperimentConfig cfg = parse_config(
        "suite = perturbation\n"
        "dims = [(5, 4)]\n"
        "exponents = [(2.0, 2.0)]\n"
        "trials = 12\n"
        "seed = 3\n");
    cfg.output_dir = "exp_out/pert";
    auto pert = run_suite(cfg);
    CHECK(pert.failed == 0);
    CHECK(pert.passed >= 10);

    cfg.suite = SuiteKind::equations;
    cfg.output_dir = "exp_out/eq";
    auto eq = run_suite(cfg);
    CHECK(eq.failed == 0);
    CHECK(eq.passed == 12);

    cfg.suite = SuiteKind::gamma_gap;
    cfg.output_dir = "exp_out/gamma";
    auto gg = run_suite(cfg);
    CHECK(gg.failed == 0);
    CHECK(gg.passed == 12);
}

TEST_CASE("report.json carries the schema tag and full records") {
    ExperimentConfig cfg;
    cfg.suite = SuiteKind::axioms;
    cfg.trials = 3;
    cfg.output_dir = "exp_out/json";
    auto report = run_suite(cfg);
    std::string text = slurp("exp_out/json/report.json");
    CHECK(text.find("\"schema\": 1") != std::string::npos);
    CHECK(text.find("\"records\"") != std::string::npos);
    CHECK(report.records.size() == 3);
}

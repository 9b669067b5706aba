#include "ccatree/cli.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

using namespace ccatree;
using ccatree::cli::run_cli;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out, err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    Result r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "ccatree_cli_tests";
    fs::create_directories(dir);
    return (dir / name).string();
}

} // namespace

TEST_CASE("range parsing", "[cli]") {
    CHECK(cli::parse_range("3..6", "d") == std::vector<int>{3, 4, 5, 6});
    CHECK(cli::parse_range("10..10", "d") == std::vector<int>{10});
    CHECK(cli::parse_range("7", "d") == std::vector<int>{7});
    CHECK_THROWS_AS(cli::parse_range("6..3", "d"), ParameterError);
    CHECK_THROWS_AS(cli::parse_range("a..3", "d"), ParameterError);
    CHECK_THROWS_AS(cli::parse_range("3..", "d"), ParameterError);
    CHECK_THROWS_AS(cli::parse_range("3.5", "d"), ParameterError);
}

TEST_CASE("simulate", "[cli][simulate]") {
    const auto path = scratch("r.json");
    auto r = invoke({"simulate", "--model", "ghm", "--d", "5", "--theta", "2", "--kappa", "8", "--radius", "4",
                  "--horizon", "4", "--trials", "1000", "--seed", "7", "--out", path});
    CHECK(r.code == 0);
    const auto report = load(path);
    CHECK(report.params.trials == 1000);
    CHECK(report.params.master_seed == 7);

    r = invoke({"simulate", "--model", "ghm", "--d", "5", "--theta", "2", "--radius", "4", "--horizon", "4", "--seed", "7"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--kappa") != std::string::npos);

    r = invoke({"simulate", "--model", "ghm", "--d", "5", "--theta", "2", "--kappa", "8", "--radius", "4", "--horizon",
             "9", "--seed", "7"});
    CHECK(r.code == 1);

    r = invoke({"simulate", "--model", "cca", "--d", "3", "--theta", "2", "--kappa", "4", "--radius", "3", "--horizon",
             "3", "--seed", "1"});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("trajectory").at("root_colors").size() == 4);

    CHECK(invoke({"simulate", "--bogus", "1"}).code == 1);
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("simulate is a thin adapter over the library", "[cli][adapter]") {
    const auto r = invoke({"simulate", "--model", "ghm", "--d", "3", "--theta", "2", "--kappa", "5", "--radius", "3",
                        "--horizon", "2", "--trials", "300", "--seed", "9"});
    REQUIRE(r.code == 0);
    const auto lib = root_statistics(Model::ghm, 3, 2, 5, 3, 2, 300, 9);
    // Wall time differs between runs; compare everything else byte for byte.
    auto parsed = report_from_json(nlohmann::json::parse(r.out));
    CHECK(report_json_string(parsed, false) == report_json_string(lib, false));
}

TEST_CASE("fixed-point", "[cli][fixed-point]") {
    auto r = invoke({"fixed-point", "--map", "b2", "--d", "87", "--theta", "2", "--kappa", "3"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("y_star").get<double>() <= 1.0 / (87.0 * 87.0));
    CHECK(j.at("classification") == "below-one");
    CHECK(r.out == to_json(kleene_fp({FixedPointMap::b2, 87, 2, 3})).dump(2) + "\n");

    r = invoke({"fixed-point", "--map", "b1", "--d", "4..5", "--theta", "3", "--kappa", "3..4"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out).size() == 4);

    CHECK(invoke({"fixed-point", "--map", "b1", "--d", "5..4", "--theta", "3", "--kappa", "3"}).code == 1);
    CHECK(invoke({"fixed-point", "--map", "b3", "--d", "5", "--theta", "3", "--kappa", "3"}).code == 1);
    CHECK(invoke({"fixed-point", "--map", "b1", "--d", "2", "--theta", "3", "--kappa", "3"}).code == 1);
}

TEST_CASE("phase-diagram", "[cli][phase]") {
    auto r = invoke({"phase-diagram", "--map", "b1", "--theta", "3", "--d", "3..40", "--kappa", "3..60", "--format", "svg"});
    REQUIRE(r.code == 0);
    std::size_t rects = 0;
    for (auto p = r.out.find("<rect"); p != std::string::npos; p = r.out.find("<rect", p + 1)) ++rects;
    CHECK(rects == 38 * 58);
    // Deterministic bytes.
    CHECK(invoke({"phase-diagram", "--map", "b1", "--theta", "3", "--d", "3..40", "--kappa", "3..60", "--format", "svg"}).out ==
          r.out);

    r = invoke({"phase-diagram", "--map", "b2", "--theta", "2", "--d", "10..10", "--kappa", "3..5"});
    REQUIRE(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1 + 3);
    CHECK(r.out == phase_grid_csv(phase_grid(FixedPointMap::b2, 2, {10}, {3, 4, 5})));

    CHECK(invoke({"phase-diagram", "--map", "b1", "--theta", "3", "--d", "3..x", "--kappa", "3"}).code == 1);
    CHECK(invoke({"phase-diagram", "--map", "b1", "--theta", "3", "--d", "3", "--kappa", "3", "--format", "png"}).code == 1);
}

TEST_CASE("thresholds", "[cli][thresholds]") {
    CHECK(invoke({"thresholds", "--theta", "2", "--d", "2..9", "--check-paper-table"}).code == 0);
    CHECK(invoke({"thresholds", "--theta", "3", "--d", "2..9", "--check-paper-table"}).code == 0);
    CHECK(invoke({"thresholds", "--theta", "4", "--check-paper-table"}).code == 1);
    // The general refinement disagrees with the published (refined) rows.
    CHECK(invoke({"thresholds", "--theta", "2", "--refinement", "general", "--check-paper-table"}).code == 2);
    const auto r = invoke({"thresholds", "--theta", "4", "--d", "4..6"});
    CHECK(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4);
}

TEST_CASE("verify-bounds", "[cli][bounds]") {
    auto r = invoke({"verify-bounds"});
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    r = invoke({"verify-bounds", "--perturb", "1e-2"});
    CHECK(r.code == 2);
    CHECK(r.out.find("FAIL") != std::string::npos);
    r = invoke({"verify-bounds", "--list"});
    CHECK(r.code == 0);
    CHECK(static_cast<std::size_t>(std::count(r.out.begin(), r.out.end(), '\n')) == bound_checks().size());
    CHECK(invoke({"verify-bounds", "--perturb", "-1"}).code == 1);
}

TEST_CASE("witness", "[cli][witness]") {
    auto r = invoke({"witness", "--kind", "structure", "--variant", "rainbow", "--d", "3", "--theta", "2", "--kappa", "3",
                  "--topology", "dary", "--depth", "4", "--seed", "1", "--forced", "depth-mod-kappa"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("witness").at("depth") == 4);
    CHECK(j.at("witness").at("size") == 31);

    // Every outcome over many samples is 0 or 3, never 4.
    int ok = 0, none = 0;
    for (int seed = 0; seed < 300; ++seed) {
        const auto s = std::to_string(seed);
        const int a = invoke({"witness", "--kind", "excitation", "--d", "5", "--theta", "2", "--kappa", "8", "--radius",
                           "2", "--t", "1", "--seed", s}).code;
        const int b = invoke({"witness", "--variant", "rigid-fort", "--d", "4", "--theta", "3", "--kappa", "4", "--depth",
                           "3", "--seed", s}).code;
        for (int c : {a, b}) {
            REQUIRE((c == 0 || c == 3));
            ok += c == 0;
            none += c == 3;
        }
    }
    CHECK(ok > 0);
    CHECK(none > 0);

    r = invoke({"witness", "--kind", "excitation", "--d", "5", "--theta", "2", "--kappa", "8", "--radius", "2", "--t", "1",
             "--seed", "1", "--forced", "all-zero"});
    CHECK(r.code == 3);
    CHECK(invoke({"witness", "--kind", "excitation", "--d", "5", "--theta", "2", "--kappa", "8", "--radius", "2", "--t",
               "3", "--seed", "1"}).code == 1);
    CHECK(invoke({"witness", "--kind", "blob", "--d", "5", "--theta", "2", "--kappa", "8", "--seed", "1"}).code == 1);
}

TEST_CASE("experiment subcommand", "[cli][experiment]") {
    auto r = invoke({"experiment", "--name", "marked-root", "--variant", "rainbow", "--d", "2", "--theta", "2", "--kappa",
                  "3", "--depth", "2", "--trials", "500", "--seed", "3"});
    REQUIRE(r.code == 0);
    const auto lib = estimate_marked_root_prob(StructureVariant::rainbow, 2, 2, 3, TreeKind::dary_ball, 2, 500, 3);
    CHECK(report_json_string(report_from_json(nlohmann::json::parse(r.out)), false) == report_json_string(lib, false));

    r = invoke({"experiment", "--name", "lightcone", "--d", "3", "--theta", "2", "--kappa", "4", "--radius", "3",
             "--trials", "50", "--seed", "1", "--format", "csv"});
    CHECK(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);
    CHECK(invoke({"experiment", "--name", "nope", "--d", "3", "--theta", "2", "--kappa", "4", "--trials", "5", "--seed",
               "1"}).code == 1);
}

TEST_CASE("config files: same keys as flags, flags win", "[cli][config]") {
    const auto cfg = scratch("cfg.json");
    write_text_file(cfg, R"({"map": "b2", "d": "87", "theta": 2, "kappa": "5"})");
    auto r = invoke({"fixed-point", "--config", cfg, "--kappa", "3"});
    REQUIRE(r.code == 0);
    CHECK(r.out == to_json(kleene_fp({FixedPointMap::b2, 87, 2, 3})).dump(2) + "\n");

    write_text_file(cfg, R"({"check-paper-table": true, "theta": 3})");
    CHECK(invoke({"thresholds", "--config", cfg}).code == 0);

    write_text_file(cfg, R"({"map": "b2", "colour": 4})");
    r = invoke({"fixed-point", "--config", cfg, "--d", "5", "--theta", "2", "--kappa", "3"});
    CHECK(r.code == 1);
    CHECK(r.err.find("colour") != std::string::npos);

    write_text_file(cfg, "[1, 2]");
    CHECK(invoke({"fixed-point", "--config", cfg}).code == 1);
    CHECK(invoke({"fixed-point", "--config", scratch("absent.json")}).code == 1);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "filtrationlab/runner.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace filtrationlab;
namespace fs = std::filesystem;

namespace {

const std::string corpus_path = std::string(FILTRATIONLAB_SOURCE_DIR) + "/scenarios/corpus.json";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("filtrationlab_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

std::string schema_message(const std::string& text) {
    try {
        parse_scenarios(text);
    } catch (const SchemaError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("corpus parses and round-trips") {
    const auto entries = load_scenarios(corpus_path);
    REQUIRE(entries.size() == 6);
    CHECK(entries[0].id == "cox");
    CHECK(entries[4].descriptor.kind == ScenarioKind::mixture_ex41);
    REQUIRE(entries[4].bsde.has_value());
    CHECK(entries[4].bsde->recovery == 0.7);
    const auto again = parse_scenarios(dump_scenarios(entries));
    REQUIRE(again.size() == entries.size());
    CHECK(dump_scenarios(again) == dump_scenarios(entries));
}

TEST_CASE("schema errors name the line and the field") {
    const std::string text = "{\n"
                             "  \"scenarios\": [\n"
                             "    {\"id\": \"a\", \"descriptor\": {\"kind\": \"cox\"}},\n"
                             "    {\"id\": \"b\",\n"
                             "     \"descriptor\": {\"kind\": \"cox\",\n"
                             "                    \"horizon\": 2.5}}\n"
                             "  ]\n"
                             "}\n";
    const std::string msg = schema_message(text);
    CHECK(msg.find("line 6") != std::string::npos);
    CHECK(msg.find("scenarios[1].descriptor.horizon") != std::string::npos);

    CHECK(schema_message(R"({"scenarios": [{"id": "a", "descriptor": {"kind": "cox", "hazard": 1}}]})")
              .find("scenarios[0].descriptor.hazard': unknown field") != std::string::npos);
    CHECK(schema_message(R"({"scenarios": [{"id": "a", "descriptor": {"kind": "poisson"}}]})")
              .find("scenarios[0].descriptor.kind") != std::string::npos);
    CHECK(schema_message(R"({"scenarios": [{"id": "a"}]})").find("scenarios[0].descriptor': missing") !=
          std::string::npos);
    CHECK(schema_message(R"({"scenarios": [{"id": "a", "descriptor": {"kind": "cox"}},
                                           {"id": "a", "descriptor": {"kind": "cox"}}]})")
              .find("duplicate id") != std::string::npos);
    CHECK(schema_message(R"({"schema_version": 7, "scenarios": []})").find("schema_version") != std::string::npos);
    CHECK(schema_message("{\n\"scenarios\": [\n{\"id\": }").find("line 3") != std::string::npos);
    CHECK(schema_message(R"({"scenarios": [{"id": "a", "descriptor": {"kind": "cox"},
                             "expected": {"failed_clause": "liquidity"}}]})")
              .find("unknown clause") != std::string::npos);
}

TEST_CASE("exit codes") {
    std::ostringstream log;
    SUBCASE("bundled corpus passes") {
        RunConfig c;
        c.scenarios = corpus_path;
        c.out = scratch("ok").string();
        CHECK(run(c, log) == 0);
        const std::string summary = slurp(fs::path(c.out) / "summary.csv");
        CHECK(summary.rfind("scenario_id,verdict,expected,max_residual,wall_ms\n", 0) == 0);
        CHECK(std::count(summary.begin(), summary.end(), '\n') == 7);
        CHECK(fs::exists(fs::path(c.out) / "mixture_ex41.json"));
        CHECK(fs::exists(fs::path(c.out) / "mixture_ex41.bsde.csv"));
    }
    SUBCASE("a tampered verdict fails and names the scenario") {
        std::string text = slurp(corpus_path);
        const std::string from = R"("expected": {"invariant": true, "pseudo_stopping": true})";
        const auto pos = text.find(from);
        REQUIRE(pos != std::string::npos);
        text.replace(pos, from.size(), R"("expected": {"invariant": false, "pseudo_stopping": true})");
        const auto dir = scratch("tampered");
        RunConfig c;
        c.scenarios = write(dir, "s.json", text).string();
        c.out = (dir / "out").string();
        CHECK(run(c, log) == 1);
        CHECK(log.str().find("mixture_ex41: verdict invariant, expected not_invariant") != std::string::npos);
    }
    SUBCASE("empty list") {
        const auto dir = scratch("empty");
        RunConfig c;
        c.scenarios = write(dir, "s.json", R"({"schema_version": 1, "scenarios": []})").string();
        c.out = (dir / "out").string();
        CHECK(run(c, log) == 0);
        CHECK(slurp(dir / "out" / "summary.csv") == "scenario_id,verdict,expected,max_residual,wall_ms\n");
    }
    SUBCASE("malformed or missing input") {
        const auto dir = scratch("bad");
        RunConfig c;
        c.scenarios = write(dir, "s.json", R"({"scenarios": [{"id": "x", "descriptor": {"kind": 3}}]})").string();
        c.out = (dir / "out").string();
        CHECK(run(c, log) == 2);
        c.scenarios = (dir / "missing.json").string();
        CHECK(run(c, log) == 2);
        c.scenarios = write(dir, "zero.json",
                            R"({"scenarios": [{"id": "z", "descriptor": {"kind": "cox", "lambda": 1.5}}]})")
                          .string();
        CHECK(run(c, log) == 2);
    }
    SUBCASE("a residual above the tolerance fails") {
        RunConfig c;
        c.scenarios = corpus_path;
        c.out = scratch("tight").string();
        c.tol = 1e-300;
        CHECK(run(c, log) == 1);
    }
}

TEST_CASE("reports are deterministic across worker counts") {
    RunConfig a;
    a.scenarios = corpus_path;
    a.out = scratch("jobs1").string();
    a.jobs = 1;
    RunConfig b = a;
    b.out = scratch("jobs4").string();
    b.jobs = 4;
    b.format = "json";
    std::ostringstream log;
    REQUIRE(run(a, log) == 0);
    REQUIRE(run(b, log) == 0);
    for (const auto& e : load_scenarios(corpus_path)) {
        CHECK(slurp(fs::path(a.out) / (e.id + ".json")) == slurp(fs::path(b.out) / (e.id + ".json")));
        CHECK(slurp(fs::path(a.out) / (e.id + ".bsde.csv")) == slurp(fs::path(b.out) / (e.id + ".bsde.csv")));
    }
    CHECK(fs::exists(fs::path(b.out) / "summary.json"));
}

TEST_CASE("suites select report sections") {
    const auto entries = load_scenarios(corpus_path);
    const auto az = run_scenario(entries[0], Suite::azema, 1e-9, 1);
    CHECK(az.matched);
    CHECK(az.report.find("\"azema\"") != std::string::npos);
    CHECK(az.report.find("\"invariance\"") == std::string::npos);
    CHECK(az.bsde_csv.empty());
    const auto inv = run_scenario(entries[1], Suite::invariance, 1e-9, 1);
    CHECK(inv.matched);
    CHECK(inv.verdict == "not_invariant");
    CHECK(inv.report.find("\"bsde\"") == std::string::npos);
    const auto bs = run_scenario(entries[4], Suite::bsde, 1e-9, 1);
    CHECK(bs.matched);
    CHECK_FALSE(bs.bsde_csv.empty());
}

#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "cfblocks/outcome.hpp"
#include "cfblocks/pipeline.hpp"

using namespace cfb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json tiny_synth_config(std::uint64_t seed, const std::string& out_dir) {
    json j;
    j["seed"] = seed;
    j["synth"] = {{"group_size", 30}, {"tau", 4.0}, {"noise_scale", 2.0}};
    // Tiny groups cannot balance all 21 covariates; keep two forgiving ones.
    j["match"] = {{"epsilon", 0.5}, {"P", 3}, {"balance_covariates", {"age", "female"}}};
    j["balance"] = {{"draws", 1000},
                    {"features", {"LE", "IU", "age", "age*LE", "age*LE*TIME"}}};
    j["outcomes"] = {{"gamma_grid", {1.0, 1.5}}};
    j["output_dir"] = out_dir;
    j["threads"] = 2;
    return j;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("config parsing rejects malformed inputs") {
    SUBCASE("seed is mandatory") {
        json j;
        j["synth"] = {{"group_size", 10}};
        CHECK_THROWS_AS(parse_pipeline_config(j), ConfigError);
    }
    SUBCASE("exactly one input source") {
        json j;
        j["seed"] = 1;
        CHECK_THROWS_AS(parse_pipeline_config(j), ConfigError);
        j["synth"] = {{"group_size", 10}};
        j["population_csv"] = "x.csv";
        CHECK_THROWS_AS(parse_pipeline_config(j), ConfigError);
    }
    SUBCASE("bad tolerances and draws") {
        json j = tiny_synth_config(1, "out");
        j["match"]["epsilon"] = -0.1;
        CHECK_THROWS_AS(parse_pipeline_config(j), ConfigError);
        j = tiny_synth_config(1, "out");
        j["balance"]["draws"] = 10;
        CHECK_THROWS_AS(parse_pipeline_config(j), ConfigError);
        j = tiny_synth_config(1, "out");
        j["outcomes"]["gamma_grid"] = {0.5};
        CHECK_THROWS_AS(parse_pipeline_config(j), ConfigError);
    }
    SUBCASE("synth covariate shifts are validated") {
        json j = tiny_synth_config(1, "out");
        j["synth"]["covariate_shifts"] = {{{"covariate", "prior_wage"}, {"coef", 1.0},
                                           {"w", "LE*TIME"}}};
        CHECK_THROWS_AS(parse_pipeline_config(j), ConfigError);
    }
}

TEST_CASE("full pipeline on a tiny synthetic population") {
    TempDir dir("cfb_pipe_tiny");
    PipelineConfig cfg = parse_pipeline_config(tiny_synth_config(11, dir.path.string()));
    run_pipeline(cfg);

    for (const char* f : {"population.csv", "samples.csv", "solver_log.json", "design.csv",
                          "balance.csv", "balance.json", "outcomes.json"})
        CHECK(fs::exists(dir.path / f));

    SUBCASE("artifacts validate from files alone") {
        validate_artifacts(dir.path.string());
    }
    SUBCASE("solver log reports a consistent common size") {
        json log = json::parse(slurp(dir.path / "solver_log.json"));
        int s_bar = log.at("s_bar").get<int>();
        CHECK(s_bar >= 1);
        for (const auto& g : log.at("groups")) {
            CHECK(g.at("step1").at("s").get<int>() >= s_bar);
            CHECK(g.at("step2").at("feasible").get<bool>());
        }
        // design.csv has 4 rows per block, 6*s_bar blocks, plus a header.
        std::string design = slurp(dir.path / "design.csv");
        long lines = std::count(design.begin(), design.end(), '\n');
        CHECK(lines == 1 + 4 * 6 * s_bar);
    }
    SUBCASE("outcomes report carries the expected sections") {
        json out = json::parse(slurp(dir.path / "outcomes.json"));
        CHECK(out.contains("per_type"));
        CHECK(out.at("pooled").at("sensitivity").size() == 2);
        CHECK(out.at("between_types").at("a").get<int>() == 2);
        double beta = out.at("pooled").at("tail_transform").at("beta").get<double>();
        CHECK(beta >= 0.0);
    }
    SUBCASE("tampering is caught by validation") {
        // Relabel a sample row under the wrong group.
        auto samples_path = dir.path / "samples.csv";
        std::string text = slurp(samples_path);
        auto pos1 = text.find("\nBRbar,");
        REQUIRE(pos1 != std::string::npos);
        text.replace(pos1, 7, "\nBrbar,");
        std::ofstream(samples_path, std::ios::binary) << text;
        CHECK_THROWS_AS(validate_artifacts(dir.path.string()), ValidationError);
    }
}

TEST_CASE("pipeline determinism: identical config and seed give identical bytes") {
    TempDir d1("cfb_pipe_det1");
    TempDir d2("cfb_pipe_det2");
    PipelineConfig c1 = parse_pipeline_config(tiny_synth_config(77, d1.path.string()));
    PipelineConfig c2 = parse_pipeline_config(tiny_synth_config(77, d2.path.string()));
    c2.threads = 1; // thread count must not change results
    run_pipeline(c1);
    run_pipeline(c2);
    for (const char* f : {"population.csv", "samples.csv", "solver_log.json", "design.csv",
                          "balance.csv", "balance.json", "outcomes.json"}) {
        CAPTURE(f);
        CHECK(slurp(d1.path / f) == slurp(d2.path / f));
    }

    TempDir d3("cfb_pipe_det3");
    PipelineConfig c3 = parse_pipeline_config(tiny_synth_config(78, d3.path.string()));
    run_pipeline(c3);
    CHECK(slurp(d1.path / "population.csv") != slurp(d3.path / "population.csv"));
}

TEST_CASE("stage failures remove the partial artifacts") {
    TempDir dir("cfb_pipe_fail");
    json j = tiny_synth_config(5, dir.path.string());
    j["outcomes"]["compare_types"] = {2, 5};
    j["balance"]["features"] = {"no_such_covariate"};
    PipelineConfig cfg = parse_pipeline_config(j);
    CHECK_THROWS(run_pipeline(cfg));
    for (const char* f : {"population.csv", "samples.csv", "design.csv", "balance.csv"})
        CHECK_FALSE(fs::exists(dir.path / f));
}

TEST_CASE("infeasible matching surfaces as the dedicated error") {
    TempDir dir("cfb_pipe_infeas");
    json j = tiny_synth_config(5, dir.path.string());
    j["synth"]["group_size"] = 8;
    j["match"]["epsilon"] = 1e-9; // no sample of size >= 1 can hit the template exactly
    j["match"]["P"] = 3;
    PipelineConfig cfg = parse_pipeline_config(j);
    CHECK_THROWS_AS(run_pipeline(cfg), InfeasibleError);
    CHECK_FALSE(fs::exists(dir.path / "samples.csv"));
}

TEST_CASE("population round trip through the loaded-input path") {
    TempDir dir("cfb_pipe_loaded");
    // First produce a population file via synth.
    PipelineConfig synth_cfg = parse_pipeline_config(tiny_synth_config(21, dir.path.string()));
    StudyPopulation pop = stage_population(synth_cfg, dir.path.string());

    // Now run with population_csv input and explicit aliasing metadata.
    TempDir dir2("cfb_pipe_loaded2");
    json j;
    j["seed"] = 21;
    j["population_csv"] = (dir.path / "population.csv").string();
    j["aliased_covariates"] = {{"prior_wage", "LE"},
                               {"low_earnings_flag", "LE"},
                               {"relative_employment", "IU"},
                               {"infrequent_unemployment_flag", "IU"}};
    j["match"] = {{"epsilon", 0.5}, {"P", 3}, {"balance_covariates", {"age", "female"}}};
    j["balance"] = {{"draws", 1000}, {"features", {"age", "LE"}}};
    j["output_dir"] = dir2.path.string();
    PipelineConfig cfg = parse_pipeline_config(j);
    run_pipeline(cfg);
    validate_artifacts(dir2.path.string());

    StudyPopulation reloaded = load_stage_population(dir2.path.string());
    REQUIRE(reloaded.records.size() == pop.records.size());
    for (std::size_t i = 0; i < pop.records.size(); ++i) {
        CHECK(reloaded.records[i].id == pop.records[i].id);
        CHECK(reloaded.records[i].x == pop.records[i].x);
    }
}

TEST_CASE("epsilon overrides flow into the solver log") {
    TempDir dir("cfb_pipe_eps");
    json j = tiny_synth_config(31, dir.path.string());
    j["match"]["epsilon_overrides"] = {{"age", 0.5}};
    PipelineConfig cfg = parse_pipeline_config(j);
    run_pipeline(cfg);
    json log = json::parse(slurp(dir.path / "solver_log.json"));
    bool found = false;
    for (const auto& c : log.at("balance"))
        if (c.at("covariate") == "age") {
            CHECK(c.at("epsilon").get<double>() == 0.5);
            found = true;
        } else {
            CHECK(c.at("epsilon").get<double>() == 0.5);
        }
    CHECK(found);
}

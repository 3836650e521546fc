#pragma once

// End-to-end orchestration: population (loaded or synthesized), template and
// standardization, the two partitioning steps, block assembly, balance
// diagnostics and outcome analysis, with machine-readable artifacts in an
// output directory. Identical config and seed give byte-identical artifacts.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfblocks/balance.hpp"
#include "cfblocks/blocks.hpp"
#include "cfblocks/partition.hpp"
#include "cfblocks/population.hpp"
#include "cfblocks/synth.hpp"

namespace cfb {

// Exit codes shared by the CLI.
enum ExitCode : int { kOk = 0, kConfigError = 2, kInfeasible = 3, kValidationFailure = 4 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MatchConfig {
    double epsilon = 0.05;                          // global tolerance (standardized units)
    std::vector<std::pair<std::string, double>> epsilon_overrides; // per covariate
    int P = 3;
    std::optional<std::vector<std::string>> balance_covariates; // default: non-aliased
    PartitionOptions solver;
    FixedSizeMode step2_mode = FixedSizeMode::Feasibility;
};

struct BalanceConfig {
    int draws = 10000;
    double tau = 0.2;
    std::optional<std::vector<std::string>> features; // default: covariates x interactions
};

struct OutcomeConfig {
    std::vector<double> gamma_grid = {1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
    double tail_quantile = 0.8;
    std::pair<int, int> compare_types = {2, 5};
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    std::optional<std::string> population_csv; // exactly one of this ...
    bool zero_one_eligibility = false;
    std::optional<SynthConfig> synth;          // ... or this
    // Covariates pinned by an eligibility covariate: name -> "LE"/"IU".
    std::vector<std::pair<std::string, std::string>> aliased_covariates;
    MatchConfig match;
    BalanceConfig balance;
    OutcomeConfig outcomes;
    std::vector<BlockTypePlan> plan; // empty: the standard six-type plan
    std::string output_dir = ".";
    int threads = 1;
};

PipelineConfig parse_pipeline_config(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::string& path);

// Default balance features: LE, IU, TIME, then every covariate alone and
// interacted with LE, IU, LE*IU, LE*TIME and IU*TIME.
std::vector<std::string> default_balance_features(const std::vector<std::string>& covariates);

struct MatchArtifacts {
    Template tpl;                                  // over all covariates
    std::vector<std::string> balance_covariates;   // covariates the solver balanced
    std::vector<double> epsilons;                  // per balance covariate
    StepsResult steps;
    // samples[g-1][p] = record indices into the population
    std::vector<std::vector<std::vector<std::size_t>>> samples;
};

// Individual stages (each writes its artifacts under out_dir).
StudyPopulation stage_population(const PipelineConfig& cfg, const std::string& out_dir);
MatchArtifacts stage_match(const PipelineConfig& cfg, const StudyPopulation& pop,
                           const std::string& out_dir);
BlockDesign stage_assemble(const PipelineConfig& cfg, const StudyPopulation& pop,
                           const MatchArtifacts& match, const std::string& out_dir);
BalanceTable stage_balance(const PipelineConfig& cfg, const StudyPopulation& pop,
                           const BlockDesign& design, const std::string& out_dir);
nlohmann::json stage_outcomes(const PipelineConfig& cfg, const StudyPopulation& pop,
                              const BlockDesign& design, const std::string& out_dir);

// Full pipeline; throws ConfigError/InfeasibleError on failure after removing
// the artifacts written by the failing run.
void run_pipeline(const PipelineConfig& cfg);

// Re-checks every partition and block-design invariant from the artifact
// files alone; throws ValidationError with a description on failure. A
// non-default block plan must be supplied when one was used.
void validate_artifacts(const std::string& out_dir, const std::vector<BlockTypePlan>& plan = {});

// Loaders used by the stage-at-a-time subcommands.
StudyPopulation load_stage_population(const std::string& out_dir);
MatchArtifacts load_stage_match(const StudyPopulation& pop,
                                const std::string& out_dir);

} // namespace cfb

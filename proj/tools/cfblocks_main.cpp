// Command-line front end: synth, match, assemble, balance, outcomes,
// pipeline, validate. Anything structured lives in the JSON config; flags
// only override the common knobs. Exit codes: 0 ok, 2 config error,
// 3 infeasible matching, 4 validation failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "cfblocks/csv.hpp"
#include "cfblocks/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::optional<std::string> epsilon_file;
    std::optional<int> threads;
};

void add_common(CLI::App* app, CommonArgs& args, bool need_config = true) {
    auto* c = app->add_option("--config", args.config_path, "pipeline config JSON");
    if (need_config) c->required();
    app->add_option("--out", args.out_dir, "output directory (overrides config output_dir)");
    app->add_option("--seed", args.seed, "override the config seed");
    app->add_option("--epsilon", args.epsilon, "global balance tolerance in SD units");
    app->add_option("--epsilon-file", args.epsilon_file,
                    "CSV with per-covariate tolerances (covariate,epsilon)");
    app->add_option("--threads", args.threads, "worker cap; results do not depend on it");
}

cfb::PipelineConfig make_config(const CommonArgs& args) {
    cfb::PipelineConfig cfg = cfb::load_pipeline_config(args.config_path);
    if (args.seed) {
        cfg.seed = *args.seed;
        if (cfg.synth) cfg.synth->seed = *args.seed;
    }
    if (args.epsilon) {
        if (*args.epsilon <= 0.0) throw cfb::ConfigError("--epsilon must be positive");
        cfg.match.epsilon = *args.epsilon;
    }
    if (args.epsilon_file) {
        cfb::CsvTable t = cfb::read_csv(*args.epsilon_file);
        int cc = t.column("covariate"), ce = t.column("epsilon");
        if (cc < 0 || ce < 0)
            throw cfb::ConfigError("epsilon file needs 'covariate' and 'epsilon' columns");
        for (const auto& row : t.rows) {
            bool ok = false;
            double v = cfb::parse_double(row[ce], ok);
            if (!ok || v <= 0.0) throw cfb::ConfigError("bad epsilon for " + row[cc]);
            cfg.match.epsilon_overrides.push_back({row[cc], v});
        }
    }
    if (args.threads) cfg.threads = *args.threads;
    if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
    return cfg;
}

int guarded(int (*fn)(const CommonArgs&), const CommonArgs& args) {
    try {
        return fn(args);
    } catch (const cfb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cfb::kConfigError;
    } catch (const cfb::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return cfb::kInfeasible;
    } catch (const cfb::ValidationError& e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return cfb::kValidationFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_synth(const CommonArgs& args) {
    auto cfg = make_config(args);
    std::filesystem::create_directories(cfg.output_dir);
    cfb::stage_population(cfg, cfg.output_dir);
    std::cout << "wrote " << cfg.output_dir << "/population.csv\n";
    return cfb::kOk;
}

int cmd_match(const CommonArgs& args) {
    auto cfg = make_config(args);
    std::filesystem::create_directories(cfg.output_dir);
    auto pop = cfb::load_stage_population(cfg.output_dir);
    auto match = cfb::stage_match(cfg, pop, cfg.output_dir);
    std::cout << "s_bar = " << match.steps.s_bar << "; wrote samples.csv, solver_log.json\n";
    return cfb::kOk;
}

int cmd_assemble(const CommonArgs& args) {
    auto cfg = make_config(args);
    auto pop = cfb::load_stage_population(cfg.output_dir);
    auto match = cfb::load_stage_match(pop, cfg.output_dir);
    auto design = cfb::stage_assemble(cfg, pop, match, cfg.output_dir);
    std::cout << "wrote design.csv with " << design.blocks.size() << " blocks\n";
    return cfb::kOk;
}

int cmd_balance(const CommonArgs& args) {
    auto cfg = make_config(args);
    auto pop = cfb::load_stage_population(cfg.output_dir);
    auto design = cfb::load_block_design(
        (std::filesystem::path(cfg.output_dir) / "design.csv").string(), pop);
    auto table = cfb::stage_balance(cfg, pop, design, cfg.output_dir);
    std::cout << "balance: median p " << table.median_p << ", min p " << table.min_p
              << "; wrote balance.csv, balance.json\n";
    return cfb::kOk;
}

int cmd_outcomes(const CommonArgs& args) {
    auto cfg = make_config(args);
    auto pop = cfb::load_stage_population(cfg.output_dir);
    auto design = cfb::load_block_design(
        (std::filesystem::path(cfg.output_dir) / "design.csv").string(), pop);
    cfb::stage_outcomes(cfg, pop, design, cfg.output_dir);
    std::cout << "wrote outcomes.json\n";
    return cfb::kOk;
}

int cmd_pipeline(const CommonArgs& args) {
    auto cfg = make_config(args);
    cfb::run_pipeline(cfg);
    std::cout << "pipeline complete in " << cfg.output_dir << "\n";
    return cfb::kOk;
}

int cmd_validate(const CommonArgs& args) {
    std::string dir = args.out_dir;
    std::vector<cfb::BlockTypePlan> plan;
    if (!args.config_path.empty()) {
        auto cfg = make_config(args);
        if (dir.empty()) dir = cfg.output_dir;
        plan = cfg.plan;
    }
    if (dir.empty()) throw cfb::ConfigError("validate needs --out or --config");
    cfb::validate_artifacts(dir, plan);
    std::cout << "artifacts in " << dir << " are internally consistent\n";
    return cfb::kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"balanced confounded factorial block designs from observational records"};
    app.require_subcommand(1);

    CommonArgs args;
    int (*selected)(const CommonArgs&) = nullptr;

    auto wire = [&](CLI::App* sub, int (*fn)(const CommonArgs&)) {
        sub->callback([&selected, fn]() { selected = fn; });
    };
    wire(app.add_subcommand("synth", "generate a synthetic population"), cmd_synth);
    wire(app.add_subcommand("match", "steps 1-2: template-balanced partitioning"), cmd_match);
    wire(app.add_subcommand("assemble", "step 3: pair and build blocks of four"), cmd_assemble);
    wire(app.add_subcommand("balance", "permutation balance table"), cmd_balance);
    wire(app.add_subcommand("outcomes", "difference-in-differences and sensitivity"), cmd_outcomes);
    wire(app.add_subcommand("pipeline", "run every stage"), cmd_pipeline);
    auto* val = app.add_subcommand("validate", "re-check artifacts from files alone");
    val->callback([&selected]() { selected = cmd_validate; });

    for (CLI::App* sub : {app.get_subcommand("synth"), app.get_subcommand("match"),
                          app.get_subcommand("assemble"), app.get_subcommand("balance"),
                          app.get_subcommand("outcomes"), app.get_subcommand("pipeline")})
        add_common(sub, args);
    add_common(val, args, /*need_config=*/false);

    CLI11_PARSE(app, argc, argv);
    return guarded(selected, args);
}

#include "cfblocks/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "cfblocks/csv.hpp"
#include "cfblocks/outcome.hpp"
#include "cfblocks/stats.hpp"

namespace cfb {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void parse_w_pattern(const std::string& text, bool& wp, bool& wd, bool& wt) {
    wp = wd = wt = false;
    if (text.empty()) return;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t stop = text.find('*', start);
        if (stop == std::string::npos) stop = text.size();
        std::string token = text.substr(start, stop - start);
        if (token == "LE") wp = !wp;
        else if (token == "IU") wd = !wd;
        else if (token == "TIME") wt = !wt;
        else throw ConfigError("unknown eligibility token '" + token + "' in pattern '" + text + "'");
        if (stop == text.size()) break;
        start = stop + 1;
    }
}

std::vector<OutcomeTerm> parse_terms(const json& arr, const char* what) {
    std::vector<OutcomeTerm> out;
    for (const auto& j : arr) {
        OutcomeTerm t;
        if (!j.contains("coef")) throw ConfigError(std::string(what) + " term needs a coef");
        t.coef = j.at("coef").get<double>();
        t.covariate = j.value("covariate", "");
        parse_w_pattern(j.value("w", ""), t.w_prime, t.w_dprime, t.w_tprime);
        out.push_back(std::move(t));
    }
    return out;
}

SynthConfig parse_synth(const json& j, std::uint64_t pipeline_seed) {
    SynthConfig cfg = SynthConfig::defaults();
    cfg.seed = pipeline_seed;
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("group_sizes")) {
        cfg.group_sizes = j.at("group_sizes").get<std::vector<int>>();
    } else if (j.contains("group_size")) {
        cfg.group_sizes.assign(8, j.at("group_size").get<int>());
    }
    cfg.wage_cut = j.value("wage_cut", cfg.wage_cut);
    cfg.re_cut = j.value("re_cut", cfg.re_cut);
    cfg.group_shift_scale = j.value("group_shift_scale", cfg.group_shift_scale);
    cfg.tau = j.value("tau", cfg.tau);
    if (j.contains("tau_br")) cfg.tau_br = j.at("tau_br").get<double>();
    cfg.noise_scale = j.value("noise_scale", cfg.noise_scale);
    if (j.contains("benefit_schedule")) {
        const auto& b = j.at("benefit_schedule");
        cfg.benefit_schedule.base_lt3 = b.value("base_lt3", cfg.benefit_schedule.base_lt3);
        cfg.benefit_schedule.base_ge3 = b.value("base_ge3", cfg.benefit_schedule.base_ge3);
        cfg.benefit_schedule.extended_lt50 =
            b.value("extended_lt50", cfg.benefit_schedule.extended_lt50);
        cfg.benefit_schedule.extended_ge50 =
            b.value("extended_ge50", cfg.benefit_schedule.extended_ge50);
    }
    if (j.contains("xi_terms")) cfg.xi_terms = parse_terms(j.at("xi_terms"), "xi");
    if (j.contains("eta_terms")) cfg.eta_terms = parse_terms(j.at("eta_terms"), "eta");
    if (j.contains("bias_terms")) cfg.bias_terms = parse_terms(j.at("bias_terms"), "bias");
    if (j.contains("covariate_shifts")) {
        for (const auto& s : j.at("covariate_shifts")) {
            CovariateShift shift;
            shift.covariate = s.at("covariate").get<std::string>();
            shift.coef = s.at("coef").get<double>();
            parse_w_pattern(s.value("w", s.value("pattern", "")), shift.w_prime, shift.w_dprime,
                            shift.w_tprime);
            cfg.covariate_shifts.push_back(std::move(shift));
        }
    }
    try {
        validate(cfg);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("synth config: ") + e.what());
    }
    return cfg;
}

BlockRole parse_role(const json& j) {
    BlockRole r;
    const auto& g = j.at("group");
    if (g.is_string()) {
        std::string label = g.get<std::string>();
        for (int cand = 1; cand <= 8; ++cand)
            if (group_label(cand) == label) r.group = cand;
        if (r.group == 0) throw ConfigError("unknown group label '" + label + "' in plan");
    } else {
        r.group = g.get<int>();
    }
    r.sign = j.at("sign").get<int>();
    return r;
}

} // namespace

std::vector<std::string> default_balance_features(const std::vector<std::string>& covariates) {
    std::vector<std::string> f = {"LE", "IU", "TIME"};
    for (const auto& c : covariates) {
        f.push_back(c);
        f.push_back(c + "*LE");
        f.push_back(c + "*IU");
        f.push_back(c + "*LE*IU");
        f.push_back(c + "*LE*TIME");
        f.push_back(c + "*IU*TIME");
    }
    return f;
}

PipelineConfig parse_pipeline_config(const json& j) {
    PipelineConfig cfg;
    if (!j.contains("seed")) throw ConfigError("config needs a mandatory 'seed'");
    cfg.seed = j.at("seed").get<std::uint64_t>();

    const bool has_input = j.contains("population_csv");
    const bool has_synth = j.contains("synth");
    if (has_input == has_synth)
        throw ConfigError("config needs exactly one of 'population_csv' or 'synth'");
    if (has_input) {
        cfg.population_csv = j.at("population_csv").get<std::string>();
        cfg.zero_one_eligibility = j.value("zero_one_eligibility", false);
    } else {
        cfg.synth = parse_synth(j.at("synth"), cfg.seed);
    }

    if (j.contains("aliased_covariates")) {
        for (const auto& [name, link] : j.at("aliased_covariates").items()) {
            std::string ls = link.get<std::string>();
            if (ls != "LE" && ls != "IU")
                throw ConfigError("aliased covariate link must be LE or IU, got " + ls);
            cfg.aliased_covariates.push_back({name, ls});
        }
    } else if (has_synth) {
        for (const auto& [name, link] : synth_aliased_covariates())
            cfg.aliased_covariates.push_back({name, link});
    }

    if (j.contains("match")) {
        const auto& m = j.at("match");
        cfg.match.epsilon = m.value("epsilon", cfg.match.epsilon);
        if (cfg.match.epsilon <= 0.0) throw ConfigError("epsilon must be positive");
        if (m.contains("epsilon_overrides"))
            for (const auto& [name, v] : m.at("epsilon_overrides").items())
                cfg.match.epsilon_overrides.push_back({name, v.get<double>()});
        if (m.contains("epsilon_file")) {
            CsvTable t = read_csv(m.at("epsilon_file").get<std::string>());
            int cc = t.column("covariate"), ce = t.column("epsilon");
            if (cc < 0 || ce < 0)
                throw ConfigError("epsilon file needs 'covariate' and 'epsilon' columns");
            for (const auto& row : t.rows) {
                bool ok = false;
                double v = parse_double(row[ce], ok);
                if (!ok || v <= 0.0) throw ConfigError("bad epsilon for " + row[cc]);
                cfg.match.epsilon_overrides.push_back({row[cc], v});
            }
        }
        cfg.match.P = m.value("P", cfg.match.P);
        if (cfg.match.P < 1) throw ConfigError("P must be at least 1");
        if (m.contains("balance_covariates"))
            cfg.match.balance_covariates = m.at("balance_covariates").get<std::vector<std::string>>();
        cfg.match.solver.node_budget = m.value("node_budget", cfg.match.solver.node_budget);
        cfg.match.solver.exact_threshold =
            m.value("exact_threshold", cfg.match.solver.exact_threshold);
        std::string mode = m.value("step2_mode", "feasibility");
        if (mode == "feasibility") cfg.match.step2_mode = FixedSizeMode::Feasibility;
        else if (mode == "min_epsilon") cfg.match.step2_mode = FixedSizeMode::MinTotalEpsilon;
        else throw ConfigError("step2_mode must be 'feasibility' or 'min_epsilon'");
    }

    if (j.contains("balance")) {
        const auto& b = j.at("balance");
        cfg.balance.draws = b.value("draws", cfg.balance.draws);
        if (cfg.balance.draws < 1000) throw ConfigError("balance draws must be at least 1000");
        cfg.balance.tau = b.value("tau", cfg.balance.tau);
        if (!(cfg.balance.tau > 0.0 && cfg.balance.tau <= 1.0))
            throw ConfigError("balance tau must lie in (0,1]");
        if (b.contains("features"))
            cfg.balance.features = b.at("features").get<std::vector<std::string>>();
    }

    if (j.contains("outcomes")) {
        const auto& o = j.at("outcomes");
        if (o.contains("gamma_grid")) {
            cfg.outcomes.gamma_grid = o.at("gamma_grid").get<std::vector<double>>();
            for (double g : cfg.outcomes.gamma_grid)
                if (g < 1.0) throw ConfigError("gamma grid values must be >= 1");
        }
        cfg.outcomes.tail_quantile = o.value("tail_quantile", cfg.outcomes.tail_quantile);
        if (o.contains("compare_types")) {
            auto v = o.at("compare_types").get<std::vector<int>>();
            if (v.size() != 2) throw ConfigError("compare_types needs exactly two type ids");
            cfg.outcomes.compare_types = {v[0], v[1]};
        }
    }

    if (j.contains("plan")) {
        for (const auto& pj : j.at("plan")) {
            BlockTypePlan p;
            p.type_id = pj.at("type_id").get<int>();
            const auto& roles = pj.at("roles");
            if (roles.size() != 4) throw ConfigError("each plan type needs exactly 4 roles");
            for (std::size_t r = 0; r < 4; ++r) p.roles[r] = parse_role(roles[r]);
            cfg.plan.push_back(p);
        }
        try {
            validate_plan(cfg.plan, cfg.match.P);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("plan: ") + e.what());
        }
    }

    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.threads = j.value("threads", cfg.threads);
    if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
    return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_pipeline_config(j);
}

StudyPopulation stage_population(const PipelineConfig& cfg, const std::string& out_dir) {
    StudyPopulation pop;
    if (cfg.synth) {
        pop = synthesize_population(*cfg.synth);
    } else {
        PopulationSchema schema;
        schema.zero_one_eligibility = cfg.zero_one_eligibility;
        pop = load_population(*cfg.population_csv, schema);
    }
    check_population(pop);
    for (const auto& [name, link] : cfg.aliased_covariates)
        if (pop.covariate_index(name) < 0)
            throw ConfigError("aliased covariate '" + name + "' is not a population covariate");
    save_population((fs::path(out_dir) / "population.csv").string(), pop);
    return pop;
}

MatchArtifacts stage_match(const PipelineConfig& cfg, const StudyPopulation& pop,
                           const std::string& out_dir) {
    MatchArtifacts art;
    art.tpl = build_template(pop);

    if (cfg.match.balance_covariates) {
        art.balance_covariates = *cfg.match.balance_covariates;
        for (const auto& name : art.balance_covariates)
            if (pop.covariate_index(name) < 0)
                throw ConfigError("balance covariate '" + name + "' is not a population covariate");
    } else {
        for (const auto& name : pop.covariate_names) {
            bool aliased = false;
            for (const auto& [aname, link] : cfg.aliased_covariates)
                aliased = aliased || aname == name;
            if (!aliased) art.balance_covariates.push_back(name);
        }
    }
    if (art.balance_covariates.empty())
        throw ConfigError("no covariates left to balance");

    art.epsilons.assign(art.balance_covariates.size(), cfg.match.epsilon);
    for (std::size_t k = 0; k < art.balance_covariates.size(); ++k)
        for (const auto& [name, v] : cfg.match.epsilon_overrides)
            if (name == art.balance_covariates[k]) art.epsilons[k] = v;

    // The solver works on standardized covariates, so the template target is
    // zero and tolerances are in standard deviation units.
    StudyPopulation z = standardize(pop, art.tpl);
    std::vector<int> cov_idx;
    for (const auto& name : art.balance_covariates) cov_idx.push_back(pop.covariate_index(name));

    std::vector<PartitionProblem> problems(8);
    std::vector<std::string> labels;
    std::vector<std::vector<std::size_t>> group_rows(8);
    for (int g = 1; g <= 8; ++g) {
        labels.push_back(group_label(g));
        group_rows[g - 1] = pop.indices_of_group(g);
        if (group_rows[g - 1].empty())
            throw InfeasibleError("group " + group_label(g) + " is empty");
        PartitionProblem& pb = problems[g - 1];
        pb.P = cfg.match.P;
        pb.template_means.assign(cov_idx.size(), 0.0);
        pb.epsilons = art.epsilons;
        pb.x.reserve(group_rows[g - 1].size());
        for (std::size_t r : group_rows[g - 1]) {
            std::vector<double> row;
            row.reserve(cov_idx.size());
            for (int k : cov_idx) row.push_back(z.records[r].x[k]);
            pb.x.push_back(std::move(row));
        }
        if (pb.I() < pb.P)
            throw InfeasibleError("group " + group_label(g) + " has fewer members than P");
    }

    StepsOptions sopt;
    sopt.solver = cfg.match.solver;
    sopt.step2_mode = cfg.match.step2_mode;
    sopt.threads = cfg.threads;
    art.steps = run_steps_1_2(problems, labels, sopt);

    for (int g = 1; g <= 8; ++g)
        if (!art.steps.groups[g - 1].step2.feasible)
            throw InfeasibleError("Step 2 infeasible for group " + group_label(g) +
                                  " at common size " + std::to_string(art.steps.s_bar));
    if (art.steps.s_bar == 0)
        throw InfeasibleError(
            "no balanced samples of size >= 1 exist under the given tolerances (s_bar = 0)");

    art.samples.assign(8, {});
    for (int g = 1; g <= 8; ++g) {
        const auto& assignment = art.steps.groups[g - 1].step2.assignment;
        art.samples[g - 1].assign(cfg.match.P, {});
        for (std::size_t i = 0; i < assignment.size(); ++i)
            if (assignment[i] >= 0)
                art.samples[g - 1][assignment[i]].push_back(group_rows[g - 1][i]);
    }

    // samples.csv: one row per selected individual.
    CsvTable st;
    st.header = {"group", "sample", "individual_id"};
    for (int g = 1; g <= 8; ++g)
        for (int p = 0; p < cfg.match.P; ++p)
            for (std::size_t r : art.samples[g - 1][p])
                st.rows.push_back({group_label(g), std::to_string(p + 1), pop.records[r].id});
    write_csv((fs::path(out_dir) / "samples.csv").string(), st);

    json log;
    log["seed"] = cfg.seed;
    log["P"] = cfg.match.P;
    log["s_bar"] = art.steps.s_bar;
    log["step2_mode"] =
        cfg.match.step2_mode == FixedSizeMode::Feasibility ? "feasibility" : "min_epsilon";
    json cov = json::array();
    for (std::size_t k = 0; k < art.balance_covariates.size(); ++k) {
        int idx = pop.covariate_index(art.balance_covariates[k]);
        cov.push_back({{"covariate", art.balance_covariates[k]},
                       {"template_mean", art.tpl.means[idx]},
                       {"scale", art.tpl.scales[idx]},
                       {"epsilon", art.epsilons[k]}});
    }
    log["balance"] = cov;
    json groups = json::array();
    for (int g = 1; g <= 8; ++g) {
        const auto& gm = art.steps.groups[g - 1];
        auto cert = [](const PartitionSolution& s) {
            return json{{"s", s.s},
                        {"feasible", s.feasible},
                        {"proved_optimal", s.certificate.proved_optimal},
                        {"gap", s.certificate.gap},
                        {"nodes", s.certificate.nodes},
                        {"used_heuristic", s.certificate.used_heuristic}};
        };
        groups.push_back({{"group", group_label(g)},
                          {"size", problems[g - 1].I()},
                          {"step1", cert(gm.step1)},
                          {"step2", cert(gm.step2)}});
    }
    log["groups"] = groups;
    std::ofstream out((fs::path(out_dir) / "solver_log.json").string(), std::ios::binary);
    out << log.dump(2) << '\n';
    return art;
}

BlockDesign stage_assemble(const PipelineConfig& cfg, const StudyPopulation& pop,
                           const MatchArtifacts& match, const std::string& out_dir) {
    AssemblyOptions opt;
    for (const auto& [name, link] : cfg.aliased_covariates)
        opt.eligibility_links.push_back({name, link == "LE" ? 'p' : 'd'});
    opt.threads = cfg.threads;
    const auto plan = cfg.plan.empty() ? default_block_plan() : cfg.plan;
    BlockDesign design = assemble_design(pop, match.samples, plan, opt);
    save_block_design((fs::path(out_dir) / "design.csv").string(), design, pop);
    return design;
}

BalanceTable stage_balance(const PipelineConfig& cfg, const StudyPopulation& pop,
                           const BlockDesign& design, const std::string& out_dir) {
    std::vector<std::string> features =
        cfg.balance.features ? *cfg.balance.features : default_balance_features(pop.covariate_names);
    BalanceOptions opt;
    opt.draws = cfg.balance.draws;
    opt.tau = cfg.balance.tau;
    opt.seed = cfg.seed;
    opt.threads = cfg.threads;
    BalanceTable table = balance_table(design, pop, features, opt);
    save_balance_csv((fs::path(out_dir) / "balance.csv").string(), table);

    json jt;
    jt["seed"] = cfg.seed;
    jt["draws"] = opt.draws;
    jt["tau"] = opt.tau;
    jt["type_ids"] = table.type_ids;
    jt["summary"] = {{"median_p", table.median_p},
                     {"q25_p", table.q25_p},
                     {"q75_p", table.q75_p},
                     {"min_p", table.min_p}};
    json rows = json::array();
    for (const auto& row : table.rows) {
        json cells = json::array();
        for (std::size_t t = 0; t < row.cells.size(); ++t) {
            const auto& c = row.cells[t];
            cells.push_back({{"type", table.type_ids[t]},
                             {"p", c.p_value},
                             {"mean_plus", c.mean_plus},
                             {"mean_minus", c.mean_minus},
                             {"std_diff", c.std_diff},
                             {"seed", c.seed}});
        }
        rows.push_back(
            {{"feature", row.feature.name}, {"cells", cells}, {"combined", row.combined}});
    }
    jt["rows"] = rows;
    std::ofstream out((fs::path(out_dir) / "balance.json").string(), std::ios::binary);
    out << jt.dump(2) << '\n';
    return table;
}

json stage_outcomes(const PipelineConfig& cfg, const StudyPopulation& pop,
                    const BlockDesign& design, const std::string& out_dir) {
    auto dids = all_block_dids(design, pop);
    json out;
    out["seed"] = cfg.seed;

    std::map<int, std::vector<double>> by_type;
    for (const auto& d : dids) by_type[d.type_id].push_back(d.value);
    json per_type;
    for (const auto& [t, values] : by_type) {
        DidSummary s = did_summary(values);
        per_type[std::to_string(t)] = {
            {"dids", values},
            {"summary",
             {{"count", s.count},
              {"median", s.median},
              {"q25", s.q25},
              {"q75", s.q75},
              {"q10", s.q10},
              {"q90", s.q90}}}};
    }
    out["per_type"] = per_type;

    auto [ta, tb] = cfg.outcomes.compare_types;
    std::vector<double> pooled;
    for (int t : {ta, tb}) {
        auto it = by_type.find(t);
        if (it == by_type.end())
            throw ConfigError("compare type " + std::to_string(t) + " not present in the design");
        pooled.insert(pooled.end(), it->second.begin(), it->second.end());
    }
    DidSummary ps = did_summary(pooled);
    json pooled_json;
    pooled_json["types"] = {ta, tb};
    pooled_json["summary"] = {{"count", ps.count}, {"median", ps.median}, {"q25", ps.q25},
                              {"q75", ps.q75},     {"q10", ps.q10},       {"q90", ps.q90}};
    json sens = json::array();
    for (double gamma : cfg.outcomes.gamma_grid) {
        SensitivityResult r = signed_rank_gamma(pooled, gamma);
        sens.push_back({{"gamma", gamma},
                        {"upper_p", r.upper_p},
                        {"lower_p", r.lower_p},
                        {"statistic", r.statistic},
                        {"exact", r.exact}});
    }
    pooled_json["sensitivity"] = sens;
    TailTransform tt = tail_transform(pooled, cfg.outcomes.tail_quantile);
    pooled_json["tail_transform"] = {{"beta", tt.beta},
                                     {"quantile", cfg.outcomes.tail_quantile},
                                     {"values", tt.values}};
    out["pooled"] = pooled_json;

    RankSumResult rs = wilcoxon_hl(by_type[ta], by_type[tb]);
    out["between_types"] = {{"a", ta},
                            {"b", tb},
                            {"p_two_sided", rs.p_two_sided},
                            {"hl_estimate", rs.hl_estimate},
                            {"ci95", {rs.ci_low, rs.ci_high}},
                            {"exact", rs.exact}};

    std::ofstream f((fs::path(out_dir) / "outcomes.json").string(), std::ios::binary);
    f << out.dump(2) << '\n';
    return out;
}

namespace {

template <typename Fn>
auto run_stage(const char* name, std::vector<std::string>& written,
               const std::vector<std::string>& stage_files, const std::string& out_dir, Fn&& fn) {
    for (const auto& f : stage_files) written.push_back((fs::path(out_dir) / f).string());
    try {
        return fn();
    } catch (ConfigError& e) {
        throw ConfigError(std::string("stage ") + name + ": " + e.what());
    } catch (InfeasibleError& e) {
        throw InfeasibleError(std::string("stage ") + name + ": " + e.what());
    } catch (std::exception& e) {
        throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
    }
}

} // namespace

void run_pipeline(const PipelineConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    std::vector<std::string> written;
    try {
        StudyPopulation pop = run_stage("population", written, {"population.csv"}, cfg.output_dir,
                                        [&] { return stage_population(cfg, cfg.output_dir); });
        MatchArtifacts match =
            run_stage("match", written, {"samples.csv", "solver_log.json"}, cfg.output_dir,
                      [&] { return stage_match(cfg, pop, cfg.output_dir); });
        BlockDesign design = run_stage("assemble", written, {"design.csv"}, cfg.output_dir,
                                       [&] { return stage_assemble(cfg, pop, match, cfg.output_dir); });
        run_stage("balance", written, {"balance.csv", "balance.json"}, cfg.output_dir,
                  [&] { return stage_balance(cfg, pop, design, cfg.output_dir); });
        run_stage("outcomes", written, {"outcomes.json"}, cfg.output_dir,
                  [&] { return stage_outcomes(cfg, pop, design, cfg.output_dir); });
    } catch (...) {
        for (const auto& f : written) {
            std::error_code ec;
            fs::remove(f, ec);
        }
        throw;
    }
}

StudyPopulation load_stage_population(const std::string& out_dir) {
    std::string path = (fs::path(out_dir) / "population.csv").string();
    if (!fs::exists(path))
        throw ConfigError("population.csv not found in " + out_dir + "; run the synth stage first");
    return load_population(path);
}

MatchArtifacts load_stage_match(const StudyPopulation& pop,
                                const std::string& out_dir) {
    std::string samples_path = (fs::path(out_dir) / "samples.csv").string();
    std::string log_path = (fs::path(out_dir) / "solver_log.json").string();
    if (!fs::exists(samples_path) || !fs::exists(log_path))
        throw ConfigError("match artifacts not found in " + out_dir + "; run the match stage first");

    MatchArtifacts art;
    art.tpl = build_template(pop);
    std::ifstream in(log_path);
    json log;
    in >> log;
    int P = log.at("P").get<int>();
    for (const auto& c : log.at("balance")) {
        art.balance_covariates.push_back(c.at("covariate").get<std::string>());
        art.epsilons.push_back(c.at("epsilon").get<double>());
    }
    art.steps.s_bar = log.at("s_bar").get<int>();

    std::unordered_map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < pop.records.size(); ++i) index_of[pop.records[i].id] = i;
    CsvTable t = read_csv(samples_path);
    int cg = t.column("group"), cp = t.column("sample"), ci = t.column("individual_id");
    if (cg < 0 || cp < 0 || ci < 0) throw ConfigError("samples.csv is missing required columns");
    art.samples.assign(8, std::vector<std::vector<std::size_t>>(P));
    for (const auto& row : t.rows) {
        int g = 0;
        for (int cand = 1; cand <= 8; ++cand)
            if (group_label(cand) == row[cg]) g = cand;
        if (g == 0) throw ConfigError("samples.csv has unknown group " + row[cg]);
        int p = std::stoi(row[cp]);
        if (p < 1 || p > P) throw ConfigError("samples.csv has sample index out of range");
        auto it = index_of.find(row[ci]);
        if (it == index_of.end()) throw ConfigError("samples.csv references unknown id " + row[ci]);
        art.samples[g - 1][p - 1].push_back(it->second);
    }
    return art;
}

void validate_artifacts(const std::string& out_dir, const std::vector<BlockTypePlan>& plan_in) {
    const std::vector<BlockTypePlan> plan = plan_in.empty() ? default_block_plan() : plan_in;
    auto path = [&](const char* f) { return (fs::path(out_dir) / f).string(); };
    for (const char* f : {"population.csv", "samples.csv", "solver_log.json", "design.csv"})
        if (!fs::exists((fs::path(out_dir) / f)))
            throw ValidationError(std::string("missing artifact: ") + f);

    StudyPopulation pop = load_population(path("population.csv"));
    check_population(pop);

    std::ifstream in(path("solver_log.json"));
    json log;
    try {
        in >> log;
    } catch (const std::exception& e) {
        throw ValidationError("solver_log.json is not valid JSON: " + std::string(e.what()));
    }
    const int P = log.at("P").get<int>();
    const int s_bar = log.at("s_bar").get<int>();

    std::vector<std::string> names;
    std::vector<double> means, scales, epsilons;
    for (const auto& c : log.at("balance")) {
        names.push_back(c.at("covariate").get<std::string>());
        means.push_back(c.at("template_mean").get<double>());
        scales.push_back(c.at("scale").get<double>());
        epsilons.push_back(c.at("epsilon").get<double>());
    }

    // Rebuild per-group assignments from samples.csv.
    std::unordered_map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < pop.records.size(); ++i) index_of[pop.records[i].id] = i;
    CsvTable st = read_csv(path("samples.csv"));
    int cg = st.column("group"), cp = st.column("sample"), ci = st.column("individual_id");
    if (cg < 0 || cp < 0 || ci < 0)
        throw ValidationError("samples.csv is missing required columns");
    std::vector<std::vector<std::vector<std::size_t>>> samples(
        8, std::vector<std::vector<std::size_t>>(P));
    for (const auto& row : st.rows) {
        int g = 0;
        for (int cand = 1; cand <= 8; ++cand)
            if (group_label(cand) == row[cg]) g = cand;
        if (g == 0) throw ValidationError("samples.csv has unknown group " + row[cg]);
        auto it = index_of.find(row[ci]);
        if (it == index_of.end())
            throw ValidationError("samples.csv references unknown id " + row[ci]);
        if (pop.records[it->second].group != g)
            throw ValidationError("individual " + row[ci] + " listed under the wrong group");
        int p = std::stoi(row[cp]);
        if (p < 1 || p > P) throw ValidationError("sample index out of range in samples.csv");
        samples[g - 1][p - 1].push_back(it->second);
    }

    for (int g = 1; g <= 8; ++g) {
        auto rows = pop.indices_of_group(g);
        std::unordered_map<std::size_t, int> pos;
        for (std::size_t i = 0; i < rows.size(); ++i) pos[rows[i]] = static_cast<int>(i);
        PartitionProblem pb;
        pb.P = P;
        pb.template_means.assign(names.size(), 0.0);
        pb.epsilons = epsilons;
        pb.x.reserve(rows.size());
        for (std::size_t r : rows) {
            std::vector<double> xr;
            xr.reserve(names.size());
            for (std::size_t k = 0; k < names.size(); ++k) {
                int idx = pop.covariate_index(names[k]);
                if (idx < 0)
                    throw ValidationError("balance covariate " + names[k] + " missing from population");
                xr.push_back((pop.records[r].x[idx] - means[k]) / scales[k]);
            }
            pb.x.push_back(std::move(xr));
        }
        std::vector<int> assignment(rows.size(), -1);
        for (int p = 0; p < P; ++p)
            for (std::size_t r : samples[g - 1][p]) {
                auto it = pos.find(r);
                if (it == pos.end()) throw ValidationError("sample row not in group");
                if (assignment[it->second] != -1)
                    throw ValidationError("individual " + pop.records[r].id +
                                          " appears in two samples");
                assignment[it->second] = p;
            }
        std::string err = verify_partition(pb, assignment, s_bar);
        if (!err.empty())
            throw ValidationError("group " + group_label(g) + ": " + err);
    }

    BlockDesign design = load_block_design(path("design.csv"), pop);
    std::string err = verify_block_design(design, plan, pop);
    if (!err.empty()) throw ValidationError("design.csv: " + err);

    // Design members must come from the sample assigned to their (type, role).
    auto types_per_group = plan_types_per_group(plan);
    for (const auto& b : design.blocks)
        for (const auto& m : b.members) {
            const auto& types = types_per_group[m.group - 1];
            int p = -1;
            for (std::size_t i = 0; i < types.size(); ++i)
                if (types[i] == b.type_id) p = static_cast<int>(i);
            if (p < 0) throw ValidationError("block type/group combination not in the plan");
            const auto& sample = samples[m.group - 1][p];
            if (std::find(sample.begin(), sample.end(), m.record_index) == sample.end())
                throw ValidationError("block member " + pop.records[m.record_index].id +
                                      " is not in the sample for its slot");
        }
}

} // namespace cfb

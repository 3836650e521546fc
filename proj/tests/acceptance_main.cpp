// Acceptance suite: runs every top-level requirement end to end and prints
// one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "json.hpp"

#include "cfblocks/assignment.hpp"
#include "cfblocks/balance.hpp"
#include "cfblocks/design_matrix.hpp"
#include "cfblocks/outcome.hpp"
#include "cfblocks/partition.hpp"
#include "cfblocks/pipeline.hpp"
#include "cfblocks/rng.hpp"
#include "cfblocks/stats.hpp"
#include "cfblocks/synth.hpp"

using namespace cfb;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail = "") {
    std::printf("[%s] %s%s%s\n", pass ? "PASS" : "FAIL", name.c_str(),
                detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// ---------------------------------------------------------------- criterion 1
void alias_algebra_half_fraction() {
    auto t0 = std::chrono::steady_clock::now();
    DesignMatrix half = select_rows(full_factorial(3), {0, 3, 5, 6});
    auto ab = interaction_column(half, {"A", "B"});
    bool ok = ab == half.column("C") && ab == std::vector<double>{1, -1, -1, 1};
    AliasReport r = estimable_contrast(half, {1, 0, 0});
    ok = ok && r.estimable && r.contrast.has_value();
    if (ok) {
        std::vector<double> h = {0.5, 0.5, -0.5, -0.5};
        for (int g = 0; g < 4; ++g) ok = ok && close(r.contrast->weights[g], h[g], 1e-12);
    }
    double dt = elapsed_s(t0);
    std::ostringstream d;
    d << "C = A*B in the half fraction; A weights (1/2,1/2,-1/2,-1/2); " << dt * 1e3 << " ms";
    report("half-fraction alias algebra", ok && dt < 0.5, d.str());
}

// ---------------------------------------------------------------- criterion 2
void two_period_contrast() {
    DesignMatrix d = did_four_group_design(true);
    AliasReport r = estimable_contrast(d, {0, 0, 0, 1});
    bool ok = r.estimable && r.contrast.has_value();
    if (ok) {
        // proportional to (1,-1,-1,1): normalized form is (.5,-.5,-.5,.5)
        std::vector<double> h = {0.5, -0.5, -0.5, 0.5};
        for (int g = 0; g < 4; ++g) ok = ok && close(r.contrast->weights[g], h[g], 1e-12);
    }
    DesignMatrix da = did_four_group_design(true);
    da.add_column("ExT", interaction_column(da, {"Eligible", "Time"}));
    AliasReport r2 = estimable_contrast(da, {0, 0, 0, 1, 0});
    ok = ok && !r2.estimable;
    report("two-period treatment contrast", ok,
           "treatment weights proportional to (1,-1,-1,1); aliased once Eligible*Time is added");
}

// ---------------------------------------------------------------- criterion 3
void eight_group_alias_structure() {
    DesignMatrix d = eight_group_design();
    bool ok = alias_relations(d).empty();

    DesignMatrix da = eight_group_design();
    da.add_column("LExTIME", interaction_column(da, {"LE", "TIME"}));
    auto rels = alias_relations(da);
    ok = ok && rels.size() == 1;
    if (ok) {
        const auto& rel = rels[0];
        ok = rel.size() == 3 && rel.count("LExTIME") && rel.count("Rr") && rel.count("LE") &&
             close(rel.at("LExTIME"), 1.0, 1e-9) && close(rel.at("Rr"), -2.0, 1e-9) &&
             close(rel.at("LE"), 1.0, 1e-9);
    }

    std::vector<double> target(da.cols(), 0.0);
    target[column_index(da, "Bb")] = 1.0;
    AliasReport r = estimable_contrast(da, target);
    std::vector<double> h = {-0.25, -0.25, 0.25, 0.25, 0.25, 0.25, -0.25, -0.25};
    ok = ok && r.estimable && r.contrast.has_value();
    if (ok)
        for (int g = 0; g < 8; ++g) ok = ok && close(r.contrast->weights[g], h[g], 1e-10);

    Contrast hc{h};
    auto o1 = contrast_orthogonality(hc, interaction_column(d, {"LE", "TIME"}));
    auto o2 = contrast_orthogonality(hc, interaction_column(d, {"IU", "TIME"}));
    ok = ok && !o1.aliased && close(o1.value, 0.0, 1e-12) && o2.aliased && close(o2.value, 2.0, 1e-12);
    report("eight-group alias structure", ok,
           "full rank as printed; LExTIME = 2*Rr - LE; duration contrast unchanged; "
           "orthogonal to LE*TIME, aliased with IU*TIME");
}

// ---------------------------------------------------------------- criterion 4
void solver_oracle_equivalence() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20260811);
    std::uniform_real_distribution<double> dx(-1.0, 1.0), de(0.05, 0.8);
    int checked = 0;
    bool ok = true;
    for (int trial = 0; trial < 200 && ok; ++trial) {
        int P = 1 + static_cast<int>(rng() % 2);
        int I = std::max(P, 2 + static_cast<int>(rng() % 11)); // up to 12
        int K = static_cast<int>(rng() % 4);                   // up to 3
        PartitionProblem pb;
        pb.P = P;
        pb.template_means.resize(K);
        pb.epsilons.resize(K);
        for (int k = 0; k < K; ++k) {
            pb.template_means[k] = 0.5 * dx(rng);
            pb.epsilons[k] = de(rng);
        }
        pb.x.assign(I, std::vector<double>(K));
        for (auto& row : pb.x)
            for (auto& v : row) v = (rng() % 3 == 0) ? std::round(dx(rng)) : dx(rng);

        PartitionSolution fast = max_size_partition(pb);
        PartitionSolution slow = brute_force_partition(pb);
        ok = ok && fast.s == slow.s && fast.certificate.proved_optimal;
        ok = ok && verify_partition(pb, fast.assignment, fast.s).empty();

        int probe = std::max(0, slow.s - static_cast<int>(trial % 2));
        PartitionSolution f1 = fixed_size_partition(pb, probe, FixedSizeMode::Feasibility);
        PartitionSolution f2 = brute_force_fixed_partition(pb, probe, FixedSizeMode::Feasibility);
        ok = ok && f1.feasible == f2.feasible;

        if (I <= 7) {
            PartitionSolution m1 = fixed_size_partition(pb, probe, FixedSizeMode::MinTotalEpsilon);
            PartitionSolution m2 =
                brute_force_fixed_partition(pb, probe, FixedSizeMode::MinTotalEpsilon);
            ok = ok && m1.feasible == m2.feasible;
            if (m1.feasible) ok = ok && close(m1.objective, m2.objective, 1e-7);
        }
        ++checked;
    }
    double dt = elapsed_s(t0);
    std::ostringstream d;
    d << checked << " random instances (I<=12, P<=2, K<=3) in " << dt << " s";
    report("partition solver equals brute force", ok && checked == 200 && dt < 60.0, d.str());
}

// ---------------------------------------------------------------- criterion 5
void assignment_oracle() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(424242);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    bool ok = true;
    for (int trial = 0; trial < 500 && ok; ++trial) {
        int n = 1 + static_cast<int>(rng() % 7);
        std::vector<std::vector<double>> c(n, std::vector<double>(n));
        for (auto& row : c)
            for (auto& v : row) v = (trial % 5 == 0) ? std::round(u(rng)) : u(rng);
        AssignmentResult got = optimal_assignment(c);
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e300;
        do {
            double total = 0.0;
            for (int i = 0; i < n; ++i) total += c[i][perm[i]];
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        ok = ok && close(got.total_cost, best, 1e-9);
    }
    double dt = elapsed_s(t0);
    std::ostringstream d;
    d << "500 random matrices (n<=7) in " << dt << " s";
    report("assignment equals permutation enumeration", ok && dt < 10.0, d.str());
}

// ---------------------------------------------------------------- criterion 6
void truncated_product_oracles() {
    bool ok = true;

    // tau = 1 vs an independent chi-square route.
    auto gamma_q = [](double a, double x) {
        if (x <= 0.0) return 1.0;
        if (x < a + 1.0) {
            double ap = a, sum = 1.0 / a, del = sum;
            for (int n = 0; n < 500; ++n) {
                ap += 1.0;
                del *= x / ap;
                sum += del;
                if (std::abs(del) < std::abs(sum) * 1e-15) break;
            }
            return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
        double b = x + 1.0 - a, c = 1e300, dd = 1.0 / b, h = dd;
        for (int i = 1; i <= 500; ++i) {
            double an = -i * (i - a);
            b += 2.0;
            dd = an * dd + b;
            if (std::abs(dd) < 1e-300) dd = 1e-300;
            c = b + an / c;
            if (std::abs(c) < 1e-300) c = 1e-300;
            dd = 1.0 / dd;
            double del = dd * c;
            h *= del;
            if (std::abs(del - 1.0) < 1e-15) break;
        }
        return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    };
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> u(1e-4, 1.0);
    for (int t = 0; t < 1000 && ok; ++t) {
        int L = 1 + static_cast<int>(rng() % 8);
        std::vector<double> ps(L);
        double stat = 0.0;
        for (auto& p : ps) {
            p = u(rng);
            stat += -std::log(p);
        }
        ok = ok && close(truncated_product(ps, 1.0), gamma_q(L, stat), 1e-9);
    }
    report("truncated product at tau=1 equals Fisher", ok, "1000 random vectors within 1e-9");

    bool ok_one = truncated_product({0.21, 0.4, 0.95, 0.3, 0.88, 0.5}, 0.2) == 1.0;
    report("truncated product is exactly 1 with nothing below tau", ok_one);

    // tau = 0.2 vs a fresh million-draw Monte Carlo oracle per case.
    bool ok_mc = true;
    Rng mc_rng(0xACCE97ull);
    std::uniform_real_distribution<double> pu(0.0, 1.0);
    const int draws = 1000000;
    for (int cs = 0; cs < 20 && ok_mc; ++cs) {
        int L = 2 + static_cast<int>(mc_rng.next_u64() % 7);
        std::vector<double> ps(L);
        for (auto& p : ps) p = mc_rng.uniform();
        double w = 1.0;
        int below = 0;
        for (double p : ps)
            if (p <= 0.2) {
                w *= p;
                ++below;
            }
        if (below == 0) {
            ok_mc = truncated_product(ps, 0.2) == 1.0;
            continue;
        }
        long hits = 0;
        for (int d = 0; d < draws; ++d) {
            double wd = 1.0;
            for (int j = 0; j < L; ++j) {
                double p = mc_rng.uniform();
                if (p <= 0.2) wd *= p;
            }
            if (wd <= w) ++hits;
        }
        double mc = static_cast<double>(hits) / draws;
        double se = std::sqrt(std::max(mc * (1.0 - mc), 1e-12) / draws);
        double mine = truncated_product(ps, 0.2);
        ok_mc = std::abs(mine - mc) <= 3.0 * se + 1e-9;
    }
    report("truncated product at tau=0.2 matches a 1e6-draw Monte Carlo", ok_mc,
           "20 cases within 3 standard errors");
}

// ---------------------------------------------------------------- criterion 7
struct SeedRun {
    int s_bar = 0;
    BalanceTable table;
    std::map<int, std::vector<double>> dids_by_type;
};

nlohmann::json e2e_config(std::uint64_t seed, const std::string& out_dir) {
    nlohmann::json j;
    j["seed"] = seed;
    j["synth"] = {{"group_size", 1000},
                  {"tau", 5.0},
                  {"noise_scale", 3.0},
                  {"covariate_shifts",
                   {{{"covariate", "age"}, {"coef", 1.2}, {"w", "LE*TIME"}}}}};
    j["match"] = {{"epsilon", 0.05}, {"P", 3}};
    j["balance"] = {{"draws", 2000}};
    j["outcomes"] = {{"gamma_grid", {1.0, 1.6}}};
    j["output_dir"] = out_dir;
    j["threads"] = 2;
    return j;
}

void end_to_end_recovery() {
    auto t0 = std::chrono::steady_clock::now();
    const int n_seeds = 10;
    const double tau = 5.0;

    // Structural aliasing classification from the generator's exact means.
    PipelineConfig cfg0 =
        parse_pipeline_config(e2e_config(1, (fs::temp_directory_path() / "cfb_acc_probe").string()));
    auto mu = expected_group_means(*cfg0.synth);
    const auto& cov_names = synth_covariate_names();
    auto plan = default_block_plan();
    auto structural_diff = [&](const FeatureSpec& f, const BlockTypePlan& p) {
        double diff = 0.0, scale = 1.0;
        for (const auto& role : p.roles) {
            int w[3];
            w[2] = role.group >= 5 ? 1 : -1;
            int cell = (role.group - 1) % 4;
            w[0] = cell % 2 == 0 ? 1 : -1;
            w[1] = cell / 2 == 0 ? 1 : -1;
            double v = 1.0;
            if (!f.covariate.empty()) {
                int k = -1;
                for (std::size_t c = 0; c < cov_names.size(); ++c)
                    if (cov_names[c] == f.covariate) k = static_cast<int>(c);
                v = mu[role.group - 1][k];
                scale = std::max(scale, std::abs(v));
            }
            if (f.w_prime) v *= w[0];
            if (f.w_dprime) v *= w[1];
            if (f.w_tprime) v *= w[2];
            diff += role.sign * v;
        }
        return std::make_pair(diff, scale);
    };

    bool ok_a = true, ok_c = true, ok_runs = true;
    long nonaliased_total = 0, nonaliased_above = 0;
    std::vector<double> pooled_dids;
    std::vector<double> type2_all, type5_all;
    std::string note;

    for (int sd = 0; sd < n_seeds; ++sd) {
        std::uint64_t seed = 1000 + sd;
        fs::path dir = fs::temp_directory_path() / ("cfb_acc_seed" + std::to_string(seed));
        fs::remove_all(dir);
        PipelineConfig cfg = parse_pipeline_config(e2e_config(seed, dir.string()));
        try {
            run_pipeline(cfg);
            validate_artifacts(dir.string()); // (a): sizes, disjointness, balance re-checked
        } catch (const std::exception& e) {
            ok_runs = false;
            note = e.what();
            break;
        }

        // Reload the artifacts for the statistical checks.
        StudyPopulation pop = load_stage_population(dir.string());
        BlockDesign design = load_block_design((dir / "design.csv").string(), pop);
        std::ifstream in((dir / "balance.json").string());
        nlohmann::json bj;
        in >> bj;
        for (const auto& row : bj.at("rows")) {
            FeatureSpec f = parse_feature(row.at("feature").get<std::string>());
            for (const auto& cell : row.at("cells")) {
                int t = cell.at("type").get<int>();
                auto [diff, scale] = structural_diff(f, plan[t - 1]);
                double p = cell.at("p").get<double>();
                if (std::abs(diff) <= 1e-9 * scale) {
                    ++nonaliased_total;
                    if (p > 0.05) ++nonaliased_above;
                } else if (f.covariate == "age" && f.w_prime && f.w_tprime && !f.w_dprime) {
                    // (c): the LE*TIME-shifted covariate interaction.
                    if (t == 1 || t == 3 || t == 4 || t == 6) ok_c = ok_c && p < 0.01;
                }
            }
        }
        auto dids = all_block_dids(design, pop);
        for (const auto& d : dids) {
            if (d.type_id == 2) {
                pooled_dids.push_back(d.value);
                type2_all.push_back(d.value);
            } else if (d.type_id == 5) {
                pooled_dids.push_back(d.value);
                type5_all.push_back(d.value);
            }
        }
        fs::remove_all(dir);
    }

    double dt = elapsed_s(t0);
    if (!ok_runs) {
        report("end-to-end synthetic recovery", false, note);
        return;
    }

    double frac_above =
        nonaliased_total > 0 ? static_cast<double>(nonaliased_above) / nonaliased_total : 0.0;
    bool ok_b = frac_above >= 0.95;

    RankSumResult rs = wilcoxon_hl(type2_all, type5_all);
    double median_did = quantile_type7(pooled_dids, 0.5);
    bool ok_d = std::abs(rs.hl_estimate - 0.0) <= 0.5 && std::abs(median_did - tau) <= 0.5;

    std::ostringstream d;
    d << "(a) artifacts re-verified on all " << n_seeds << " seeds; (b) " << nonaliased_above
      << "/" << nonaliased_total << " = " << frac_above * 100.0
      << "% non-aliased cells with p > 0.05; (c) aliased age*LE*TIME cells red in types "
         "1,3,4,6; (d) pooled median "
      << median_did << " (target 5 +- 0.5), between-type shift " << rs.hl_estimate
      << " (target 0 +- 0.5); " << dt << " s";
    report("end-to-end synthetic recovery", ok_a && ok_b && ok_c && ok_d && dt < 600.0, d.str());
}

// ---------------------------------------------------------------- criterion 8
void sensitivity_properties() {
    std::mt19937_64 rng(31337);
    std::normal_distribution<double> nd(0.6, 1.0);
    // The operation itself enumerates exactly for n <= 20, so it must equal
    // the enumeration oracle outright there; the 0.02 tolerance belongs to
    // the normal approximation, checked on the pinned five-block example and
    // across random datasets where the lattice is fine enough (n >= 10; at
    // n <= 3 no normal approximation can sit within 0.02 of a 1/4-step
    // distribution).
    bool ok_exact = true;
    for (int t = 0; t < 50 && ok_exact; ++t) {
        int n = 1 + static_cast<int>(rng() % 20);
        std::vector<double> d(n);
        for (auto& v : d) v = nd(rng);
        SensitivityResult ex = signed_rank_gamma(d, 1.0, SignedRankMethod::Exact);
        SensitivityResult au = signed_rank_gamma(d, 1.0, SignedRankMethod::Auto);
        ok_exact = au.exact && au.upper_p == ex.upper_p && au.lower_p == ex.lower_p;
        if (n >= 10) {
            SensitivityResult no = signed_rank_gamma(d, 1.0, SignedRankMethod::Normal);
            ok_exact = ok_exact && std::abs(ex.upper_p - no.upper_p) <= 0.02;
        }
    }
    {
        std::vector<double> five = {1.0, 2.0, 3.0, 4.0, 5.0};
        SensitivityResult no = signed_rank_gamma(five, 1.0, SignedRankMethod::Normal);
        ok_exact = ok_exact && std::abs(no.upper_p - 1.0 / 32.0) <= 0.02;
    }
    report("signed-rank bound matches exact enumeration at gamma=1 (n <= 20)", ok_exact,
           "auto mode equals enumeration; normal approximation within 0.02 where applicable");

    bool ok_mono = true;
    for (int t = 0; t < 50 && ok_mono; ++t) {
        int n = 5 + static_cast<int>(rng() % 40);
        std::vector<double> d(n);
        for (auto& v : d) v = nd(rng);
        double prev = -1.0;
        for (double gamma = 1.0; gamma <= 3.001; gamma += 0.2) {
            double up = signed_rank_gamma(d, gamma).upper_p;
            if (prev >= 0.0 && up < prev - 1e-12) ok_mono = false;
            prev = up;
        }
    }
    report("sensitivity upper bound is monotone in gamma", ok_mono, "50 random datasets");

    bool ok_amp = amplify(2.0, 5.0) == 11.0 / 7.0;
    report("amplification of (2,5) is exactly 11/7", ok_amp);
}

// ---------------------------------------------------------------- criterion 9
void tail_transform_properties() {
    std::vector<double> values;
    std::mt19937_64 rng(777);
    std::normal_distribution<double> nd(0.0, 8.0);
    for (int i = 0; i < 1000; ++i) values.push_back(nd(rng));
    TailTransform t = tail_transform(values, 0.8);
    const double beta = t.beta;
    bool ok = beta > 0.0;

    // Continuity and unit slope at +-beta through the emitted mapping.
    auto f = [&](double y) {
        double ay = std::abs(y);
        return ay <= beta ? y : std::copysign(2.0 * beta - beta * beta / ay, y);
    };
    double h = 1e-7 * beta;
    ok = ok && std::abs((f(beta + h) - f(beta - h)) / (2.0 * h) - 1.0) < 1e-6;
    ok = ok && std::abs((f(-beta + h) - f(-beta - h)) / (2.0 * h) - 1.0) < 1e-6;
    ok = ok && std::abs(f(beta + 1e-13) - f(beta - 1e-13)) < 1e-9;
    // Exact midpoint value: t(2 beta) = 1.5 beta.
    ok = ok && f(2.0 * beta) == 1.5 * beta;
    // Verify through the public function as well: feed a vector whose
    // transform we can read off directly.
    {
        std::vector<double> probe = values;
        probe.push_back(2.0 * beta);
        TailTransform tp = tail_transform(probe, 0.8);
        // beta moved slightly; recompute against its own beta instead.
        double b2 = tp.beta;
        double expect = 2.0 * b2 - b2 * b2 / (2.0 * beta);
        if (2.0 * beta > b2) ok = ok && close(tp.values.back(), expect, 1e-12);
    }

    // Strict monotonicity over 1e5 random inputs.
    std::vector<double> big(100000);
    for (auto& v : big) v = nd(rng) * 3.0;
    TailTransform tb = tail_transform(big, 0.8);
    std::vector<std::size_t> order(big.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return big[a] < big[b]; });
    bool mono = true;
    for (std::size_t i = 1; i < order.size() && mono; ++i) {
        if (big[order[i]] == big[order[i - 1]]) continue;
        mono = tb.values[order[i]] > tb.values[order[i - 1]];
    }
    report("tail transform: smooth knot, exact midpoint, strictly monotone", ok && mono);
}

// --------------------------------------------------------------- criterion 10
void pipeline_determinism() {
    fs::path d1 = fs::temp_directory_path() / "cfb_acc_det1";
    fs::path d2 = fs::temp_directory_path() / "cfb_acc_det2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    nlohmann::json j1 = e2e_config(4242, d1.string());
    nlohmann::json j2 = e2e_config(4242, d2.string());
    j1["balance"]["draws"] = 1000;
    j2["balance"]["draws"] = 1000;
    j2["threads"] = 1;
    bool ok = true;
    std::string note = "seven artifacts byte-identical across runs and thread counts";
    try {
        run_pipeline(parse_pipeline_config(j1));
        run_pipeline(parse_pipeline_config(j2));
        for (const char* f : {"population.csv", "samples.csv", "solver_log.json", "design.csv",
                              "balance.csv", "balance.json", "outcomes.json"}) {
            std::ifstream a(d1 / f, std::ios::binary), b(d2 / f, std::ios::binary);
            std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
            std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
            if (sa.empty() || sa != sb) {
                ok = false;
                note = std::string("mismatch in ") + f;
            }
        }
    } catch (const std::exception& e) {
        ok = false;
        note = e.what();
    }
    fs::remove_all(d1);
    fs::remove_all(d2);
    report("pipeline determinism", ok, note);
}

} // namespace

int main() {
    std::printf("acceptance suite\n================\n");
    alias_algebra_half_fraction();
    two_period_contrast();
    eight_group_alias_structure();
    solver_oracle_equivalence();
    assignment_oracle();
    truncated_product_oracles();
    end_to_end_recovery();
    sensitivity_properties();
    tail_transform_properties();
    pipeline_determinism();
    std::printf("================\n%s (%d failure%s)\n", g_failures == 0 ? "ALL PASS" : "FAILED",
                g_failures, g_failures == 1 ? "" : "s");
    return g_failures == 0 ? 0 : 1;
}

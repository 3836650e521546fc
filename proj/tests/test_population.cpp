#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "cfblocks/population.hpp"
#include "cfblocks/synth.hpp"

using namespace cfb;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

StudyPopulation tiny_population() {
    StudyPopulation pop;
    pop.covariate_names = {"age", "female"};
    int id = 0;
    for (int wp : {1, -1})
        for (int wd : {1, -1})
            for (int wt : {-1, 1}) {
                IndividualRecord r;
                r.id = "u" + std::to_string(++id);
                r.w_prime = wp;
                r.w_dprime = wd;
                r.w_tprime = wt;
                r.group = derive_group(wp, wd, wt);
                r.x = {40.0 + id + 0.1, id % 2 ? 1.0 : 0.0};
                r.outcome = id * 1.5;
                pop.records.push_back(r);
            }
    return pop;
}

} // namespace

TEST_CASE("derive_group maps the eligibility cells to the table rows") {
    CHECK(derive_group(1, 1, 1) == 5);   // BR
    CHECK(derive_group(1, 1, -1) == 1);  // BRbar
    CHECK(derive_group(-1, -1, 1) == 8); // br
    CHECK(group_label(5) == "BR");
    CHECK(group_label(1) == "BRbar");

    SUBCASE("bijection") {
        std::vector<int> seen;
        for (int wp : {1, -1})
            for (int wd : {1, -1})
                for (int wt : {1, -1}) seen.push_back(derive_group(wp, wd, wt));
        std::sort(seen.begin(), seen.end());
        CHECK(seen == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
    }
    SUBCASE("rejects values outside +-1") {
        CHECK_THROWS_AS(derive_group(0, 1, 1), std::invalid_argument);
        CHECK_THROWS_AS(derive_group(1, 2, 1), std::invalid_argument);
    }
}

TEST_CASE("population CSV round trip is bit exact") {
    StudyPopulation pop = tiny_population();
    pop.records[2].outcome.reset(); // missing outcome survives the trip
    pop.records[3].x[0] = 1.0 / 3.0;
    auto p1 = fs::temp_directory_path() / "cfb_pop_rt1.csv";
    auto p2 = fs::temp_directory_path() / "cfb_pop_rt2.csv";
    save_population(p1.string(), pop);
    StudyPopulation back = load_population(p1.string());
    REQUIRE(back.records.size() == pop.records.size());
    for (std::size_t i = 0; i < pop.records.size(); ++i) {
        CHECK(back.records[i].id == pop.records[i].id);
        CHECK(back.records[i].group == pop.records[i].group);
        CHECK(back.records[i].x == pop.records[i].x);
        CHECK(back.records[i].outcome == pop.records[i].outcome);
    }
    save_population(p2.string(), back);
    CHECK(slurp(p1) == slurp(p2));
    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("load_population validation errors name the offending cell") {
    auto p = fs::temp_directory_path() / "cfb_pop_bad.csv";
    SUBCASE("eligibility outside {-1,+1}") {
        std::ofstream(p) << "id,w_prime,w_dprime,w_tprime,outcome,age\n"
                            "a,1,1,1,3.5,44\n"
                            "b,2,1,1,3.5,41\n";
        CHECK_THROWS_WITH_AS(load_population(p.string()),
                             doctest::Contains("row 3, column w_prime"), std::runtime_error);
    }
    SUBCASE("duplicate id") {
        std::ofstream(p) << "id,w_prime,w_dprime,w_tprime,outcome,age\n"
                            "a,1,1,1,3.5,44\n"
                            "a,1,1,-1,3.5,41\n";
        CHECK_THROWS_WITH_AS(load_population(p.string()), doctest::Contains("duplicate id"),
                             std::runtime_error);
    }
    SUBCASE("missing column") {
        std::ofstream(p) << "id,w_prime,w_dprime,outcome,age\na,1,1,3.5,44\n";
        CHECK_THROWS_WITH_AS(load_population(p.string()), doctest::Contains("w_tprime"),
                             std::runtime_error);
    }
    SUBCASE("non-numeric covariate") {
        std::ofstream(p) << "id,w_prime,w_dprime,w_tprime,outcome,age\na,1,1,1,3.5,forty\n";
        CHECK_THROWS_WITH_AS(load_population(p.string()), doctest::Contains("age"),
                             std::runtime_error);
    }
    fs::remove(p);
}

TEST_CASE("zero-one eligibility coding maps to the same population") {
    auto pa = fs::temp_directory_path() / "cfb_pop_pm1.csv";
    auto pb = fs::temp_directory_path() / "cfb_pop_01.csv";
    std::ofstream(pa) << "id,w_prime,w_dprime,w_tprime,outcome,age\n"
                         "a,1,-1,1,3.5,44\n"
                         "b,-1,1,-1,1.25,41\n";
    std::ofstream(pb) << "id,w_prime,w_dprime,w_tprime,outcome,age\n"
                         "a,1,0,1,3.5,44\n"
                         "b,0,1,0,1.25,41\n";
    StudyPopulation a = load_population(pa.string());
    PopulationSchema schema;
    schema.zero_one_eligibility = true;
    StudyPopulation b = load_population(pb.string(), schema);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].w_prime == b.records[i].w_prime);
        CHECK(a.records[i].w_dprime == b.records[i].w_dprime);
        CHECK(a.records[i].w_tprime == b.records[i].w_tprime);
        CHECK(a.records[i].group == b.records[i].group);
    }
    SUBCASE("0/1 is rejected without the flag") {
        CHECK_THROWS_AS(load_population(pb.string()), std::runtime_error);
    }
    fs::remove(pa);
    fs::remove(pb);
}

TEST_CASE("template means average the eight group means") {
    // One covariate; groups 1-4 sit at 40, groups 5-8 at 50, with different
    // group sizes so the unweighted average differs from the pooled mean.
    StudyPopulation pop;
    pop.covariate_names = {"v"};
    int id = 0;
    for (int g = 1; g <= 8; ++g) {
        int n = g <= 4 ? 3 : 1;
        for (int i = 0; i < n; ++i) {
            IndividualRecord r;
            r.id = "u" + std::to_string(++id);
            r.w_prime = (g - 1) % 4 % 2 == 0 ? 1 : -1;
            r.w_dprime = (g - 1) % 4 / 2 == 0 ? 1 : -1;
            r.w_tprime = g >= 5 ? 1 : -1;
            r.group = g;
            double jitter = (i - 1) * 0.5; // mean preserved within a group
            if (n == 1) jitter = 0.0;
            r.x = {(g <= 4 ? 40.0 : 50.0) + jitter};
            pop.records.push_back(r);
        }
    }
    Template tpl = build_template(pop);
    CHECK(tpl.means[0] == doctest::Approx(45.0).epsilon(1e-12));

    SUBCASE("matches a direct recomputation on random data") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-3, 3);
        for (auto& r : pop.records) r.x[0] = u(rng);
        Template t2 = build_template(pop);
        double sum = 0.0;
        for (int g = 1; g <= 8; ++g) {
            double gs = 0.0;
            auto idx = pop.indices_of_group(g);
            for (auto i : idx) gs += pop.records[i].x[0];
            sum += gs / idx.size();
        }
        CHECK(t2.means[0] == doctest::Approx(sum / 8.0).epsilon(1e-12));
    }
    SUBCASE("empty group is an error") {
        StudyPopulation missing = pop;
        std::erase_if(missing.records, [](const IndividualRecord& r) { return r.group == 3; });
        CHECK_THROWS_WITH_AS(build_template(missing), doctest::Contains("bRbar"),
                             std::runtime_error);
    }
    SUBCASE("constant covariate is an error") {
        StudyPopulation flat = pop;
        for (auto& r : flat.records) r.x[0] = 1.0;
        CHECK_THROWS_AS(build_template(flat), std::runtime_error);
    }
}

TEST_CASE("standardize") {
    StudyPopulation pop = tiny_population();
    SUBCASE("covariate equal to the template mean becomes zero") {
        Template tpl;
        tpl.means = {0.0, 0.0};
        tpl.scales = {1.0, 1.0};
        for (auto& r : pop.records) r.x = {0.0, 0.0};
        StudyPopulation z = standardize(pop, tpl);
        for (const auto& r : z.records) CHECK(r.x == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("simple arithmetic") {
        StudyPopulation two;
        two.covariate_names = {"v"};
        IndividualRecord a, b;
        a.id = "a";
        a.w_prime = a.w_dprime = 1;
        a.w_tprime = -1;
        a.group = derive_group(1, 1, -1);
        a.x = {10.0};
        b = a;
        b.id = "b";
        b.x = {20.0};
        two.records = {a, b};
        Template tpl;
        tpl.means = {15.0};
        tpl.scales = {5.0};
        StudyPopulation z = standardize(two, tpl);
        CHECK(z.records[0].x[0] == doctest::Approx(-1.0));
        CHECK(z.records[1].x[0] == doctest::Approx(1.0));
    }
    SUBCASE("standardizing twice with a recomputed template is the identity") {
        SynthConfig cfg = SynthConfig::defaults();
        cfg.seed = 101;
        cfg.group_sizes.assign(8, 12);
        StudyPopulation big = synthesize_population(cfg);
        Template t1 = build_template(big);
        StudyPopulation z1 = standardize(big, t1);
        Template t2 = build_template(z1);
        for (double m : t2.means) CHECK(std::abs(m) < 1e-12);
        StudyPopulation z2 = standardize(z1, t2);
        for (std::size_t i = 0; i < z1.records.size(); ++i)
            for (std::size_t k = 0; k < z1.covariate_dim(); ++k)
                CHECK(z2.records[i].x[k] == doctest::Approx(z1.records[i].x[k]).epsilon(1e-12));
    }
    SUBCASE("zero scale is an error") {
        Template tpl;
        tpl.means = {0.0, 0.0};
        tpl.scales = {1.0, 0.0};
        CHECK_THROWS_AS(standardize(pop, tpl), std::invalid_argument);
    }
}

TEST_CASE("synthesize_population basics") {
    SynthConfig cfg;
    cfg.seed = 7;
    cfg.group_sizes.assign(8, 25);
    cfg.xi_terms.clear();
    cfg.eta_terms.clear();
    cfg.noise_scale = 0.0;

    SUBCASE("null model gives all-zero outcomes") {
        cfg.tau = 0.0;
        auto pop = synthesize_population(cfg);
        for (const auto& r : pop.records) CHECK(*r.outcome == 0.0);
    }
    SUBCASE("the B effect lands on the after-period B groups only") {
        cfg.tau = 5.0;
        auto pop = synthesize_population(cfg);
        for (const auto& r : pop.records) {
            double expect = (r.group == 5 || r.group == 6) ? 5.0 : 0.0;
            CHECK(*r.outcome == expect);
        }
        // Any well-formed type-2 block (BR+, bR-, BRbar-, bRbar+): the
        // signed sum is exactly tau.
        auto pick = [&](int g) { return pop.indices_of_group(g)[0]; };
        double did = *pop.records[pick(5)].outcome - *pop.records[pick(7)].outcome -
                     *pop.records[pick(1)].outcome + *pop.records[pick(3)].outcome;
        CHECK(did == 5.0);
        // Same for a type-5 block (Br+, br-, Brbar-, brbar+).
        double did5 = *pop.records[pick(6)].outcome - *pop.records[pick(8)].outcome -
                      *pop.records[pick(2)].outcome + *pop.records[pick(4)].outcome;
        CHECK(did5 == 5.0);
    }
    SUBCASE("eligibility flags follow the thresholds") {
        auto pop = synthesize_population(cfg);
        int wage_k = pop.covariate_index("prior_wage");
        int re_k = pop.covariate_index("relative_employment");
        for (const auto& r : pop.records) {
            CHECK((r.x[wage_k] <= cfg.wage_cut) == (r.w_prime == 1));
            CHECK((r.x[re_k] >= cfg.re_cut) == (r.w_dprime == 1));
        }
    }
    SUBCASE("deterministic in the seed, sensitive to it") {
        auto a = synthesize_population(cfg);
        auto b = synthesize_population(cfg);
        REQUIRE(a.records.size() == b.records.size());
        for (std::size_t i = 0; i < a.records.size(); ++i) {
            CHECK(a.records[i].x == b.records[i].x);
            CHECK(a.records[i].outcome == b.records[i].outcome);
        }
        SynthConfig other = cfg;
        other.seed = 8;
        auto c = synthesize_population(other);
        bool any_diff = false;
        for (std::size_t i = 0; i < a.records.size(); ++i)
            any_diff = any_diff || a.records[i].x != c.records[i].x;
        CHECK(any_diff);
    }
    SUBCASE("group sizes are realized exactly and records validate") {
        cfg.group_sizes = {3, 4, 5, 6, 7, 8, 9, 10};
        auto pop = synthesize_population(cfg);
        check_population(pop);
        CHECK(pop.group_counts() == std::vector<int>{3, 4, 5, 6, 7, 8, 9, 10});
    }
}

TEST_CASE("expected_group_means matches empirical means at scale") {
    SynthConfig cfg = SynthConfig::defaults();
    cfg.seed = 31;
    cfg.group_sizes.assign(8, 4000);
    cfg.covariate_shifts.push_back({"age", 0.8, true, false, true}); // LE*TIME shift
    auto pop = synthesize_population(cfg);
    auto expect = expected_group_means(cfg);
    for (int g = 1; g <= 8; ++g) {
        auto idx = pop.indices_of_group(g);
        for (std::size_t k = 0; k < pop.covariate_dim(); ++k) {
            double sum = 0.0, ss = 0.0;
            for (auto i : idx) sum += pop.records[i].x[k];
            double mean = sum / idx.size();
            for (auto i : idx) ss += (pop.records[i].x[k] - mean) * (pop.records[i].x[k] - mean);
            double se = std::sqrt(ss / (idx.size() - 1)) / std::sqrt(double(idx.size()));
            CHECK(std::abs(mean - expect[g - 1][k]) < std::max(5.0 * se, 1e-9));
        }
    }
}

TEST_CASE("benefit schedule lookups") {
    BenefitSchedule s;
    CHECK(benefit_duration_weeks(s, true, true, true, true) == 52.0);
    CHECK(benefit_duration_weeks(s, false, true, true, true) == 39.0);
    CHECK(benefit_duration_weeks(s, true, true, true, false) == 30.0);
    CHECK(benefit_duration_weeks(s, true, false, false, true) == 20.0);
    CHECK(benefit_duration_weeks(s, false, true, false, true) == 30.0);
}

TEST_CASE("synth config validation") {
    SynthConfig cfg = SynthConfig::defaults();
    cfg.seed = 1;
    SUBCASE("group sizes") {
        cfg.group_sizes = {1, 1, 1};
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
        cfg.group_sizes.assign(8, 0);
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    }
    SUBCASE("xi may not involve TIME") {
        cfg.xi_terms.push_back({1.0, "", false, false, true});
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    }
    SUBCASE("eta may not involve IU") {
        cfg.eta_terms.push_back({1.0, "", false, true, false});
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    }
    SUBCASE("eligibility-linked covariates cannot be shifted") {
        cfg.covariate_shifts.push_back({"prior_wage", 1.0, false, false, true});
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    }
}

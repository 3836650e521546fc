#include "cfblocks/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "cfblocks/rng.hpp"

namespace cfb {

namespace {

const std::vector<std::string> kCovariates = {
    "temporary_layoff", "female", "age", "secondary_education", "tertiary_education",
    "apprenticeship", "married", "single", "divorced", "female_married",
    "female_single", "female_divorced", "blue_collar", "seasonal", "manufacturing",
    "prior_wage", "low_earnings_flag", "relative_employment", "infrequent_unemployment_flag",
    "worked_3of5", "age_ge_50"};

const std::vector<std::pair<std::string, std::string>> kAliased = {
    {"prior_wage", "LE"},
    {"low_earnings_flag", "LE"},
    {"relative_employment", "IU"},
    {"infrequent_unemployment_flag", "IU"}};

constexpr double kAgeMean = 46.3;
constexpr double kAgeSd = 4.0;
constexpr double kWageLow = 8000.0;
constexpr double kWageHigh = 22000.0;

// Base Bernoulli rates for the simple binary covariates.
double base_rate(const std::string& name) {
    if (name == "temporary_layoff") return 0.32;
    if (name == "female") return 0.55;
    if (name == "secondary_education") return 0.05;
    if (name == "tertiary_education") return 0.04;
    if (name == "apprenticeship") return 0.28;
    if (name == "blue_collar") return 0.75;
    if (name == "seasonal") return 0.40;
    if (name == "manufacturing") return 0.16;
    if (name == "worked_3of5") return 0.65;
    throw std::logic_error("no base rate for " + name);
}

// Deterministic drift pattern in [-1,1] for (covariate k, group g); a fixed
// function of the indices so that expected_group_means stays analytic.
double drift_pattern(std::size_t k, int group) {
    std::uint64_t h = splitmix64(0x5eedu + k * 8 + static_cast<std::uint64_t>(group));
    return 2.0 * ((h >> 11) * 0x1.0p-53) - 1.0;
}

double w_product(const int w[3], bool use_p, bool use_d, bool use_t) {
    double v = 1.0;
    if (use_p) v *= w[0];
    if (use_d) v *= w[1];
    if (use_t) v *= w[2];
    return v;
}

double shift_for(const SynthConfig& cfg, const std::string& covariate, const int w[3]) {
    double total = 0.0;
    for (const auto& s : cfg.covariate_shifts)
        if (s.covariate == covariate)
            total += s.coef * w_product(w, s.w_prime, s.w_dprime, s.w_tprime);
    return total;
}

void group_w(int group, int w[3]) {
    // Inverse of derive_group.
    w[2] = group >= 5 ? 1 : -1;
    int cell = (group - 1) % 4;
    w[0] = (cell % 2 == 0) ? 1 : -1;
    w[1] = (cell / 2 == 0) ? 1 : -1;
}

double clamp01(double p) { return std::min(0.98, std::max(0.02, p)); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct GroupParams {
    double p_layoff, p_female, age_mean, p_sec, p_ter, p_appr;
    double p_married, p_single, p_divorced;
    double p_blue, p_seasonal, p_manu, p_worked;
    int w[3];
};

GroupParams group_params(const SynthConfig& cfg, int group) {
    GroupParams gp{};
    group_w(group, gp.w);
    auto idx = [](const std::string& n) {
        for (std::size_t k = 0; k < kCovariates.size(); ++k)
            if (kCovariates[k] == n) return k;
        throw std::logic_error("bad covariate name");
    };
    auto bern = [&](const std::string& n) {
        double p = base_rate(n) + 0.05 * cfg.group_shift_scale * drift_pattern(idx(n), group) +
                   shift_for(cfg, n, gp.w);
        return clamp01(p);
    };
    gp.p_layoff = bern("temporary_layoff");
    gp.p_female = bern("female");
    gp.age_mean = kAgeMean + 1.0 * cfg.group_shift_scale * drift_pattern(idx("age"), group) +
                  shift_for(cfg, "age", gp.w);
    gp.p_sec = bern("secondary_education");
    gp.p_ter = bern("tertiary_education");
    gp.p_appr = bern("apprenticeship");
    // Marital status is categorical; the married rate drifts and the
    // remaining mass is split in fixed proportion between single, divorced
    // and "other".
    double pm = clamp01(0.68 + 0.05 * cfg.group_shift_scale * drift_pattern(idx("married"), group) +
                        shift_for(cfg, "married", gp.w));
    double rest = 1.0 - pm;
    gp.p_married = pm;
    gp.p_single = rest * (0.13 / 0.32);
    gp.p_divorced = rest * (0.15 / 0.32);
    gp.p_blue = bern("blue_collar");
    gp.p_seasonal = bern("seasonal");
    gp.p_manu = bern("manufacturing");
    gp.p_worked = bern("worked_3of5");
    return gp;
}

double eval_terms(const std::vector<OutcomeTerm>& terms, const StudyPopulation& pop,
                  const IndividualRecord& rec) {
    double total = 0.0;
    const int w[3] = {rec.w_prime, rec.w_dprime, rec.w_tprime};
    for (const auto& t : terms) {
        double v = t.coef * w_product(w, t.w_prime, t.w_dprime, t.w_tprime);
        if (!t.covariate.empty()) {
            int k = pop.covariate_index(t.covariate);
            if (k < 0) throw std::runtime_error("outcome term uses unknown covariate " + t.covariate);
            v *= rec.x[k];
        }
        total += v;
    }
    return total;
}

} // namespace

double benefit_duration_weeks(const BenefitSchedule& s, bool age_ge_50, bool worked_3of5,
                              bool duration_increase, bool after) {
    double base = worked_3of5 ? s.base_ge3 : s.base_lt3;
    if (after && duration_increase) return age_ge_50 ? s.extended_ge50 : s.extended_lt50;
    return base;
}

SynthConfig SynthConfig::defaults() {
    SynthConfig cfg;
    cfg.xi_terms = {
        {16.0, "", false, false, false},
        {0.25, "age", false, false, false},
        {2.0, "", false, true, false},       // IU main effect
        {1.0, "", true, true, false},        // LE x IU
    };
    cfg.eta_terms = {
        {1.0, "", false, false, true},       // common time trend
        {0.5, "", true, false, true},        // LE x TIME trend
        {0.04, "age", false, false, true},   // age x TIME trend
    };
    cfg.noise_scale = 3.0;
    return cfg;
}

const std::vector<std::string>& synth_covariate_names() { return kCovariates; }

const std::vector<std::pair<std::string, std::string>>& synth_aliased_covariates() {
    return kAliased;
}

void validate(const SynthConfig& cfg) {
    if (cfg.group_sizes.size() != 8) throw std::invalid_argument("group_sizes must have 8 entries");
    for (int n : cfg.group_sizes)
        if (n < 1) throw std::invalid_argument("group sizes must be at least 1");
    if (cfg.noise_scale < 0.0) throw std::invalid_argument("noise_scale must be nonnegative");
    if (!(cfg.wage_cut > kWageLow && cfg.wage_cut < kWageHigh))
        throw std::invalid_argument("wage_cut outside the generated wage range");
    if (!(cfg.re_cut > 0.0 && cfg.re_cut < 1.0))
        throw std::invalid_argument("re_cut must lie in (0,1)");
    for (const auto& t : cfg.xi_terms)
        if (t.w_tprime) throw std::invalid_argument("xi terms may not involve TIME");
    for (const auto& t : cfg.eta_terms)
        if (t.w_dprime) throw std::invalid_argument("eta terms may not involve IU");
    for (const auto& s : cfg.covariate_shifts) {
        bool ok = false;
        for (const auto& n : kCovariates) ok = ok || n == s.covariate;
        if (!ok) throw std::invalid_argument("covariate shift names unknown covariate " + s.covariate);
        for (const auto& [name, link] : kAliased)
            if (name == s.covariate)
                throw std::invalid_argument("cannot shift eligibility-linked covariate " + s.covariate);
        if (s.covariate == "female_married" || s.covariate == "female_single" ||
            s.covariate == "female_divorced" || s.covariate == "age_ge_50" ||
            s.covariate == "single" || s.covariate == "divorced")
            throw std::invalid_argument("cannot shift derived covariate " + s.covariate);
    }
}

StudyPopulation synthesize_population(const SynthConfig& cfg) {
    validate(cfg);
    StudyPopulation pop;
    pop.covariate_names = kCovariates;

    Rng root(cfg.seed);
    for (int g = 1; g <= 8; ++g) {
        GroupParams gp = group_params(cfg, g);
        const bool le = gp.w[0] == 1;
        const bool iu = gp.w[1] == 1;
        for (int i = 0; i < cfg.group_sizes[g - 1]; ++i) {
            IndividualRecord rec;
            rec.id = group_label(g) + "-" + std::to_string(i + 1);
            Rng rng = root.substream("record/" + rec.id);
            rec.w_prime = gp.w[0];
            rec.w_dprime = gp.w[1];
            rec.w_tprime = gp.w[2];
            rec.group = g;

            double layoff = rng.bernoulli(gp.p_layoff) ? 1.0 : 0.0;
            double female = rng.bernoulli(gp.p_female) ? 1.0 : 0.0;
            double age = gp.age_mean + kAgeSd * rng.normal();
            double sec = rng.bernoulli(gp.p_sec) ? 1.0 : 0.0;
            double ter = rng.bernoulli(gp.p_ter) ? 1.0 : 0.0;
            double appr = rng.bernoulli(gp.p_appr) ? 1.0 : 0.0;
            double u = rng.uniform();
            double married = u < gp.p_married ? 1.0 : 0.0;
            double single = (!married && u < gp.p_married + gp.p_single) ? 1.0 : 0.0;
            double divorced =
                (!married && !single && u < gp.p_married + gp.p_single + gp.p_divorced) ? 1.0 : 0.0;
            double blue = rng.bernoulli(gp.p_blue) ? 1.0 : 0.0;
            double seasonal = rng.bernoulli(gp.p_seasonal) ? 1.0 : 0.0;
            double manu = rng.bernoulli(gp.p_manu) ? 1.0 : 0.0;
            double wage = le ? rng.uniform(kWageLow, cfg.wage_cut)
                             : rng.uniform(cfg.wage_cut, kWageHigh);
            double re = iu ? rng.uniform(cfg.re_cut, 1.0) : rng.uniform(0.0, cfg.re_cut);
            double worked = rng.bernoulli(gp.p_worked) ? 1.0 : 0.0;

            rec.x = {layoff, female, age, sec, ter, appr,
                     married, single, divorced, female * married, female * single,
                     female * divorced, blue, seasonal, manu,
                     wage, le ? 1.0 : 0.0, re, iu ? 1.0 : 0.0,
                     worked, age >= 50.0 ? 1.0 : 0.0};

            double outcome = eval_terms(cfg.xi_terms, pop, rec) +
                             eval_terms(cfg.eta_terms, pop, rec) +
                             eval_terms(cfg.bias_terms, pop, rec);
            if (g == 5) outcome += cfg.tau;
            if (g == 6) outcome += cfg.tau_br_value();
            if (cfg.noise_scale > 0.0) outcome += cfg.noise_scale * rng.normal();
            rec.outcome = outcome;
            pop.records.push_back(std::move(rec));
        }
    }
    return pop;
}

std::vector<std::vector<double>> expected_group_means(const SynthConfig& cfg) {
    validate(cfg);
    std::vector<std::vector<double>> means(8, std::vector<double>(kCovariates.size(), 0.0));
    for (int g = 1; g <= 8; ++g) {
        GroupParams gp = group_params(cfg, g);
        const bool le = gp.w[0] == 1;
        const bool iu = gp.w[1] == 1;
        auto& m = means[g - 1];
        m[0] = gp.p_layoff;
        m[1] = gp.p_female;
        m[2] = gp.age_mean;
        m[3] = gp.p_sec;
        m[4] = gp.p_ter;
        m[5] = gp.p_appr;
        m[6] = gp.p_married;
        m[7] = gp.p_single;
        m[8] = gp.p_divorced;
        m[9] = gp.p_female * gp.p_married;
        m[10] = gp.p_female * gp.p_single;
        m[11] = gp.p_female * gp.p_divorced;
        m[12] = gp.p_blue;
        m[13] = gp.p_seasonal;
        m[14] = gp.p_manu;
        m[15] = le ? 0.5 * (kWageLow + cfg.wage_cut) : 0.5 * (cfg.wage_cut + kWageHigh);
        m[16] = le ? 1.0 : 0.0;
        m[17] = iu ? 0.5 * (cfg.re_cut + 1.0) : 0.5 * cfg.re_cut;
        m[18] = iu ? 1.0 : 0.0;
        m[19] = gp.p_worked;
        m[20] = 1.0 - normal_cdf((50.0 - gp.age_mean) / kAgeSd);
    }
    return means;
}

} // namespace cfb

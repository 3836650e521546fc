#pragma once

// Synthetic test populations shaped like the unemployment-benefits study:
// two continuous eligibility variables are cut at thresholds to give the
// LE/IU flags, the time period fills configured group sizes, and outcomes
// follow an additive model xi(x,w',w'') + eta(x,w',w''') plus a treatment
// effect on the after-period B groups, so the true B-vs-b effect equals tau
// by construction. Optional bias terms fall outside that additive class and
// exist to make aliasing visible on purpose.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfblocks/population.hpp"

namespace cfb {

struct OutcomeTerm {
    double coef = 0.0;
    std::string covariate;   // empty means a constant term
    bool w_prime = false;    // multiply by LE
    bool w_dprime = false;   // multiply by IU
    bool w_tprime = false;   // multiply by TIME
};

// One structured shift of a covariate's group means: the mean of `covariate`
// moves by coef * (product of the flagged w signs) in each group.
struct CovariateShift {
    std::string covariate;
    double coef = 0.0;
    bool w_prime = false;
    bool w_dprime = false;
    bool w_tprime = false;
};

// Weeks of benefit duration by age band and work history, before the change
// and after it for those receiving the duration increase.
struct BenefitSchedule {
    double base_lt3 = 20.0;       // worked < 3 of the last 5 years
    double base_ge3 = 30.0;
    double extended_lt50 = 39.0;  // with the duration increase, age < 50
    double extended_ge50 = 52.0;
};

double benefit_duration_weeks(const BenefitSchedule& s, bool age_ge_50, bool worked_3of5,
                              bool duration_increase, bool after);

struct SynthConfig {
    std::uint64_t seed = 0;
    std::vector<int> group_sizes = std::vector<int>(8, 250);
    double wage_cut = 12610.0;
    double re_cut = 0.40;
    double group_shift_scale = 1.0; // mild per-group mean drift on ordinary covariates
    double tau = 0.0;               // B-effect for the BR group (weeks)
    std::optional<double> tau_br;   // B-effect for the Br group; defaults to tau
    double noise_scale = 0.0;
    BenefitSchedule benefit_schedule;
    std::vector<OutcomeTerm> xi_terms;   // may involve LE and IU
    std::vector<OutcomeTerm> eta_terms;  // may involve LE and TIME
    std::vector<OutcomeTerm> bias_terms; // unrestricted, deliberately outside the model class
    std::vector<CovariateShift> covariate_shifts;

    // Baseline outcome model with age and time trends.
    static SynthConfig defaults();

    double tau_br_value() const { return tau_br.value_or(tau); }
};

// The 21 covariates generated per record, in order.
const std::vector<std::string>& synth_covariate_names();

// Covariates whose values are tied to an eligibility covariate and therefore
// cannot be balanced to the all-groups template inside a single group.
// Returns pairs (covariate name, "LE" or "IU").
const std::vector<std::pair<std::string, std::string>>& synth_aliased_covariates();

// Deterministic in cfg.seed; group sizes realized exactly.
StudyPopulation synthesize_population(const SynthConfig& cfg);

// Exact generator means of every covariate per group (8 x K), computed from
// the configuration alone. Used to classify which balance cells are aliased.
std::vector<std::vector<double>> expected_group_means(const SynthConfig& cfg);

void validate(const SynthConfig& cfg);

} // namespace cfb

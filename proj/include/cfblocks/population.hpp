#pragma once

// Individual-level study records. Treatment group membership is a pure
// function of the three eligibility covariates (low earnings, infrequent
// unemployment, time period), mirroring the eight-group design.

#include <optional>
#include <string>
#include <vector>

namespace cfb {

struct IndividualRecord {
    std::string id;
    std::vector<double> x;          // unaliased covariates
    int w_prime = 0;                // LE, +1/-1
    int w_dprime = 0;               // IU, +1/-1
    int w_tprime = 0;               // TIME, +1 = after
    std::optional<double> outcome;  // weeks of unemployment
    int group = 0;                  // derived, 1..8
};

// Maps the eligibility covariates to the group index 1..8: groups 1-4 are the
// before-period cells (BRbar, Brbar, bRbar, brbar), 5-8 the after-period
// cells (BR, Br, bR, br). B goes with IU = +1, R with LE = +1.
int derive_group(int w_prime, int w_dprime, int w_tprime);

// Group label in design-matrix row order ("BRbar", ..., "br").
const std::string& group_label(int group);

struct StudyPopulation {
    std::vector<IndividualRecord> records;
    std::vector<std::string> covariate_names;

    std::size_t covariate_dim() const { return covariate_names.size(); }
    std::vector<int> group_counts() const; // size 8
    std::vector<std::size_t> indices_of_group(int group) const;
    int covariate_index(const std::string& name) const; // -1 if missing
};

struct Template {
    std::vector<double> means;  // B_k, the simple average of the 8 group means
    std::vector<double> scales; // pooled standard deviations, strictly positive
};

struct PopulationSchema {
    std::vector<std::string> covariate_names; // empty: take every extra column
    bool zero_one_eligibility = false;        // accept 0/1 coding for w and map to -1/+1
};

// CSV columns: id, w_prime, w_dprime, w_tprime, outcome, <covariates...>.
// An empty outcome field means "not yet observed". Errors name the offending
// row and column.
StudyPopulation load_population(const std::string& path, const PopulationSchema& schema = {});

// Same schema plus a derived `group` column.
void save_population(const std::string& path, const StudyPopulation& pop);

// Template means are the unweighted average of the eight group means; scales
// are pooled standard deviations. Every group must be nonempty and every
// covariate must vary.
Template build_template(const StudyPopulation& pop);

// Replaces each covariate by (x - mean)/scale.
StudyPopulation standardize(const StudyPopulation& pop, const Template& tpl);

// Validates record invariants (w in {-1,+1}, group consistent, unique ids,
// equal covariate dimension); throws on the first violation.
void check_population(const StudyPopulation& pop);

} // namespace cfb

#pragma once

// Covariate balance checks for the assembled block design: within each block
// type, the individuals with contrast sign +1 are compared to those with -1
// against complete randomization (Monte Carlo permutation of the pooled
// values at fixed group sizes). Per-type P-values for each feature are
// combined across types with the truncated product method.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfblocks/blocks.hpp"
#include "cfblocks/population.hpp"

namespace cfb {

// Members of a block type split by contrast sign (record indices).
struct ContrastSplit {
    std::vector<std::size_t> plus;
    std::vector<std::size_t> minus;
};

ContrastSplit split_by_contrast(const BlockDesign& design, int type_id);

// A derived feature: a covariate (or none) times any subset of the
// eligibility signs, written e.g. "age", "age*LE", "age*LE*TIME", "IU*TIME".
struct FeatureSpec {
    std::string covariate; // empty for pure eligibility products
    bool w_prime = false;
    bool w_dprime = false;
    bool w_tprime = false;
    std::string name; // the spec string as written
};

FeatureSpec parse_feature(const std::string& text);

// Feature values for the given records.
std::vector<double> interaction_feature(const StudyPopulation& pop, const FeatureSpec& spec,
                                        const std::vector<std::size_t>& rows);

// Two-sided Monte Carlo permutation P-value for the difference in means,
// counting the observed statistic (so p >= 1/(draws+1)). A degenerate pooled
// sample returns 1 by convention.
double permutation_balance_pvalue(const std::vector<double>& plus,
                                  const std::vector<double>& minus, int draws,
                                  std::uint64_t seed);

// Truncated product combination: W is the product of the P-values at or
// below tau (1 if none) and the return value is the exact null probability
// P(W <= w) for independent uniforms. tau = 1 is Fisher's method.
double truncated_product(const std::vector<double>& pvalues, double tau = 0.2);

struct BalanceCell {
    double p_value = 1.0;
    double mean_plus = 0.0;
    double mean_minus = 0.0;
    double std_diff = 0.0; // standardized difference in means
    std::uint64_t seed = 0;
};

struct BalanceRow {
    FeatureSpec feature;
    std::vector<BalanceCell> cells; // one per block type
    double combined = 1.0;
};

struct BalanceTable {
    std::vector<BalanceRow> rows;
    std::vector<int> type_ids;
    // Summary over every per-type cell P-value.
    double median_p = 1.0, q25_p = 1.0, q75_p = 1.0, min_p = 1.0;
};

struct BalanceOptions {
    int draws = 10000;
    double tau = 0.2;
    std::uint64_t seed = 0;
    int threads = 1;
};

BalanceTable balance_table(const BlockDesign& design, const StudyPopulation& pop,
                           const std::vector<std::string>& feature_specs,
                           const BalanceOptions& opt = {});

void save_balance_csv(const std::string& path, const BalanceTable& table);

} // namespace cfb

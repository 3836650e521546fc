#pragma once

// Rank-based Mahalanobis covariate distance between two samples: covariates
// are replaced by pooled mid-ranks, and the rank covariance matrix has its
// diagonal rescaled to the variance of untied ranks (I^2-1)/12, so ties
// neither shrink nor inflate a covariate's weight. Distances are invariant
// under strictly monotone transforms of any covariate.

#include <vector>

namespace cfb {

struct DistanceMatrix {
    std::vector<std::vector<double>> d; // |A| x |B|
    bool used_pseudo_inverse = false;   // rank-deficient rank covariance
};

// rows_a/rows_b index into `data` (one row of covariate values per unit).
DistanceMatrix rank_mahalanobis(const std::vector<std::vector<double>>& data,
                                const std::vector<std::size_t>& rows_a,
                                const std::vector<std::size_t>& rows_b,
                                const std::vector<int>& covariate_subset);

// Pooled mid-ranks of a single vector (average rank for ties), 1-based.
std::vector<double> mid_ranks(const std::vector<double>& values);

} // namespace cfb

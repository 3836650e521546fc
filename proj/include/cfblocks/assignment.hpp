#pragma once

// Exact minimum-cost assignment (Hungarian algorithm with potentials,
// O(n^3)). Among cost-equal optima the lexicographically smallest
// permutation is returned, which pins down ties deterministically.

#include <vector>

namespace cfb {

struct AssignmentResult {
    std::vector<int> permutation; // row i matched to column permutation[i]
    double total_cost = 0.0;
};

// cost is a dense n x n matrix, row major; all entries must be finite.
AssignmentResult optimal_assignment(const std::vector<std::vector<double>>& cost);

} // namespace cfb

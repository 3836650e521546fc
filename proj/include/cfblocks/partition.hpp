#pragma once

// Template-balanced partitioning: split one treatment group's I individuals
// into P disjoint samples of common size s whose covariate means match a
// template within per-covariate tolerances. Step 1 maximizes s; Step 2 fixes
// s and either searches for a feasible selection or minimizes the total of
// the achieved tolerances. Solutions carry an explicit certificate instead of
// silently trusting a heuristic.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace cfb {

struct PartitionProblem {
    std::vector<std::vector<double>> x; // I rows, K covariates (standardized)
    std::vector<double> template_means; // B_k
    std::vector<double> epsilons;       // per-covariate tolerances, > 0
    int P = 1;

    int I() const { return static_cast<int>(x.size()); }
    int K() const { return static_cast<int>(template_means.size()); }
};

struct PartitionCertificate {
    bool proved_optimal = false;
    double gap = 0.0; // in units of s (Step 1) or objective (min-epsilon)
    long nodes = 0;
    bool used_heuristic = false;
};

struct PartitionSolution {
    bool feasible = true;
    std::vector<int> assignment; // size I; -1 unselected, else sample 0..P-1
    int s = 0;
    std::vector<double> achieved_epsilons; // max_p |deviation|/s per covariate
    double objective = 0.0; // min-epsilon mode: sum of achieved epsilons
    PartitionCertificate certificate;
};

struct PartitionOptions {
    long node_budget = 500000;
    // Exact branch-and-bound is used when I*P is at most this; beyond it the
    // deterministic greedy witness search runs alone and optimality is
    // reported as unproved.
    int exact_threshold = 64;
    bool force_exact = false;
    bool force_heuristic = false;
};

enum class FixedSizeMode { Feasibility, MinTotalEpsilon };

// Shared feasibility slack so the solver, the verifier and the brute-force
// oracle agree bit-for-bit on which deviations count as violations.
bool balance_ok(double deviation, double eps, int s, double template_mean);

// All PartitionSolution invariants, re-checked independently of any solver.
// Returns an empty string when the solution is valid, else a description.
std::string verify_partition(const PartitionProblem& pb, const std::vector<int>& assignment,
                             int s);

PartitionSolution max_size_partition(const PartitionProblem& pb, const PartitionOptions& opt = {});

PartitionSolution fixed_size_partition(const PartitionProblem& pb, int s_bar, FixedSizeMode mode,
                                       const PartitionOptions& opt = {});

// Exhaustive enumeration over all (P+1)^I assignments; the testing oracle.
// Guarded to I <= 12 and P <= 2.
PartitionSolution brute_force_partition(const PartitionProblem& pb);
PartitionSolution brute_force_fixed_partition(const PartitionProblem& pb, int s_bar,
                                              FixedSizeMode mode);

// Deterministic greedy witness search (build then swap-repair); nullopt when
// no balanced selection was found. Exposed for tests.
std::optional<std::vector<int>> greedy_partition(const PartitionProblem& pb, int s);

struct GroupMatch {
    PartitionSolution step1;
    PartitionSolution step2;
};

struct StepsOptions {
    PartitionOptions solver;
    FixedSizeMode step2_mode = FixedSizeMode::Feasibility;
    int threads = 1;
};

struct StepsResult {
    int s_bar = 0;
    std::vector<GroupMatch> groups; // one per input problem
};

// Step 1 on every group, s_bar = min of the eight optima, then Step 2 at
// s_bar per group. Solver failures carry the group label.
StepsResult run_steps_1_2(const std::vector<PartitionProblem>& problems,
                          const std::vector<std::string>& labels, const StepsOptions& opt = {});

// JSON forms: the problem as dense arrays, the solution's assignment as a
// sparse list of (individual, sample) pairs.
nlohmann::json to_json(const PartitionProblem& pb);
PartitionProblem partition_problem_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PartitionSolution& sol);
PartitionSolution partition_solution_from_json(const nlohmann::json& j, int I);

} // namespace cfb

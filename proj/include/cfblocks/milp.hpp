#pragma once

// Exact branch-and-bound for mixed 0-1 programs over the simplex relaxation.
// Branching is on the most fractional binary (ties to the lowest index),
// node selection is best-bound with FIFO tie-break, and the node budget turns
// an exhausted search into an explicit optimality gap instead of a wrong
// answer.

#include <functional>
#include <optional>
#include <vector>

#include "cfblocks/lp.hpp"

namespace cfb {

struct MilpProblem {
    LinearProgram lp;
    std::vector<int> integer_vars; // must have finite bounds (0/1 here)
};

enum class MilpStatus { Optimal, Infeasible, Budget };

struct MilpResult {
    MilpStatus status = MilpStatus::Budget;
    std::optional<std::vector<double>> incumbent; // best integral solution found
    double objective = 0.0;    // incumbent objective (valid if incumbent)
    double best_bound = 0.0;   // proved lower bound on the optimum
    double gap = 0.0;          // objective - best_bound when budget was hit
    long nodes = 0;
    bool proved_optimal = false;
};

struct MilpOptions {
    long node_budget = 200000;
    double int_tol = 1e-6;     // integrality rounding guard
    double feas_tol = 1e-7;
    LpOptions lp;
    // Stop at the first integral solution (pure feasibility runs).
    bool stop_at_first_incumbent = false;
    // Optional warm solutions checked before the search starts.
    std::vector<std::vector<double>> warm_starts;
};

MilpResult solve_milp(const MilpProblem& problem, const MilpOptions& opt = {});

// Feasibility of an assignment against the LP rows and bounds.
bool milp_solution_feasible(const LinearProgram& lp, const std::vector<double>& x, double tol);

} // namespace cfb

#pragma once

// Dense revised simplex for small and mid-size linear programs, with general
// variable bounds and two-phase start via artificial variables. Written for
// exactness and determinism at desk scale, not industrial speed: every
// tie-break is by lowest index, so identical inputs give identical runs.

#include <limits>
#include <vector>

namespace cfb {

inline constexpr double kLpInf = std::numeric_limits<double>::infinity();

struct LpRow {
    std::vector<std::pair<int, double>> terms; // (variable, coefficient)
    char sense = '<';                          // '<', '=', '>'
    double rhs = 0.0;
};

struct LinearProgram {
    int num_vars = 0;
    std::vector<double> objective; // minimized
    std::vector<double> lower, upper;
    std::vector<LpRow> rows;

    int add_var(double lo, double up, double cost) {
        lower.push_back(lo);
        upper.push_back(up);
        objective.push_back(cost);
        return num_vars++;
    }
    void add_row(std::vector<std::pair<int, double>> terms, char sense, double rhs) {
        rows.push_back(LpRow{std::move(terms), sense, rhs});
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

struct LpResult {
    LpStatus status = LpStatus::IterLimit;
    double objective = 0.0;
    std::vector<double> x;     // structural variables only
    long iterations = 0;
    double max_violation = 0.0;
};

struct LpOptions {
    double feas_tol = 1e-7;
    double dual_tol = 1e-9;
    double pivot_tol = 1e-9;
    long max_iterations = 0; // 0: automatic (scales with problem size)
};

LpResult solve_lp(const LinearProgram& lp, const LpOptions& opt = {});

} // namespace cfb

#include "cfblocks/milp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace cfb {

namespace {

struct Node {
    double bound;                                  // parent LP objective
    long order;                                    // FIFO tie-break
    std::vector<std::pair<int, double>> floors;    // var -> tightened lower
    std::vector<std::pair<int, double>> ceilings;  // var -> tightened upper
};

struct NodeCompare {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound; // smaller bound first
        return a.order > b.order;                         // then FIFO
    }
};

} // namespace

bool milp_solution_feasible(const LinearProgram& lp, const std::vector<double>& x, double tol) {
    if (static_cast<int>(x.size()) != lp.num_vars) return false;
    for (int j = 0; j < lp.num_vars; ++j)
        if (x[j] < lp.lower[j] - tol || x[j] > lp.upper[j] + tol) return false;
    for (const auto& row : lp.rows) {
        double lhs = 0.0;
        double scale = std::abs(row.rhs);
        for (auto [v, c] : row.terms) {
            lhs += c * x[v];
            scale = std::max(scale, std::abs(c));
        }
        double slackTol = tol * (1.0 + scale);
        switch (row.sense) {
            case '<': if (lhs > row.rhs + slackTol) return false; break;
            case '>': if (lhs < row.rhs - slackTol) return false; break;
            case '=': if (std::abs(lhs - row.rhs) > slackTol) return false; break;
        }
    }
    return true;
}

MilpResult solve_milp(const MilpProblem& problem, const MilpOptions& opt) {
    MilpResult res;
    const LinearProgram& base = problem.lp;

    double incumbent_obj = kLpInf;
    std::optional<std::vector<double>> incumbent;

    auto objective_of = [&base](const std::vector<double>& x) {
        double o = 0.0;
        for (int j = 0; j < base.num_vars; ++j) o += base.objective[j] * x[j];
        return o;
    };

    auto try_incumbent = [&](std::vector<double> x) {
        // Round the integers, then verify feasibility honestly.
        for (int j : problem.integer_vars) x[j] = std::round(x[j]);
        if (!milp_solution_feasible(base, x, opt.feas_tol)) return false;
        double o = objective_of(x);
        if (o < incumbent_obj - 1e-12) {
            incumbent_obj = o;
            incumbent = std::move(x);
            return true;
        }
        return false;
    };

    for (const auto& w : opt.warm_starts)
        if (static_cast<int>(w.size()) == base.num_vars) try_incumbent(w);

    if (incumbent && opt.stop_at_first_incumbent) {
        res.status = MilpStatus::Optimal;
        res.incumbent = incumbent;
        res.objective = incumbent_obj;
        res.best_bound = incumbent_obj;
        res.proved_optimal = true;
        res.nodes = 0;
        return res;
    }

    // Best-bound selection with FIFO tie-break for optimization runs; plain
    // depth-first plunging when any feasible point will do, since diving
    // reaches integral solutions far sooner than a breadth-like frontier.
    const bool dive = opt.stop_at_first_incumbent;
    std::priority_queue<Node, std::vector<Node>, NodeCompare> open;
    std::vector<Node> stack;
    auto open_empty = [&] { return dive ? stack.empty() : open.empty(); };
    auto push_node = [&](Node&& n) {
        if (dive) stack.push_back(std::move(n));
        else open.push(std::move(n));
    };
    push_node(Node{-kLpInf, 0, {}, {}});
    long order_counter = 1;
    long nodes = 0;
    bool budget_hit = false;
    double abandoned_bound = kLpInf; // min bound over subtrees we gave up on

    LinearProgram lp = base; // bounds mutated per node

    while (!open_empty()) {
        if (nodes >= opt.node_budget) {
            budget_hit = true;
            break;
        }
        Node node;
        if (dive) {
            node = std::move(stack.back());
            stack.pop_back();
        } else {
            node = open.top();
            open.pop();
        }
        if (incumbent && node.bound >= incumbent_obj - 1e-9) continue; // pruned by bound
        ++nodes;

        // Apply the node's bound tightenings.
        lp.lower = base.lower;
        lp.upper = base.upper;
        for (auto [v, b] : node.floors) lp.lower[v] = std::max(lp.lower[v], b);
        for (auto [v, b] : node.ceilings) lp.upper[v] = std::min(lp.upper[v], b);

        LpOptions lpo = opt.lp;
        LpResult rel = solve_lp(lp, lpo);
        if (rel.status == LpStatus::Infeasible) continue;
        if (rel.status == LpStatus::IterLimit) {
            // Cannot bound this node; its parent bound still covers it.
            budget_hit = true;
            abandoned_bound = std::min(abandoned_bound, node.bound);
            continue;
        }
        if (rel.status == LpStatus::Unbounded) {
            budget_hit = true;
            abandoned_bound = -kLpInf;
            continue;
        }
        if (incumbent && rel.objective >= incumbent_obj - 1e-9) continue;

        // Most fractional binary, ties to the lowest index.
        int branch_var = -1;
        double best_frac_dist = 0.5;
        for (int v : problem.integer_vars) {
            double x = rel.x[v];
            double frac = x - std::floor(x);
            double dist = std::abs(frac - 0.5);
            if (frac > opt.int_tol && frac < 1.0 - opt.int_tol && dist < best_frac_dist - 1e-12) {
                best_frac_dist = dist;
                branch_var = v;
            }
        }
        if (branch_var < 0) {
            bool improved = try_incumbent(rel.x);
            if (improved && opt.stop_at_first_incumbent) break;
            continue;
        }

        double floor_v = std::floor(rel.x[branch_var]);
        Node down = node;
        down.bound = rel.objective;
        down.order = order_counter++;
        down.ceilings.push_back({branch_var, floor_v});
        Node up = node;
        up.bound = rel.objective;
        up.order = order_counter++;
        up.floors.push_back({branch_var, floor_v + 1.0});
        if (dive && rel.x[branch_var] - floor_v >= 0.5) {
            // Plunge toward the nearer integer: push it last so it pops first.
            push_node(std::move(down));
            push_node(std::move(up));
        } else {
            push_node(std::move(up));
            push_node(std::move(down));
        }
    }

    res.nodes = nodes;
    res.incumbent = incumbent;
    res.objective = incumbent ? incumbent_obj : 0.0;

    if (!budget_hit && open_empty()) {
        // Search exhausted: either proved optimal or proved infeasible.
        if (incumbent) {
            res.status = MilpStatus::Optimal;
            res.best_bound = incumbent_obj;
            res.proved_optimal = true;
        } else {
            res.status = MilpStatus::Infeasible;
        }
        return res;
    }
    if (incumbent && opt.stop_at_first_incumbent) {
        res.status = MilpStatus::Optimal;
        res.best_bound = incumbent_obj;
        res.proved_optimal = true;
        return res;
    }

    // Budget exhausted: collect the best remaining bound.
    double open_bound = kLpInf;
    if (!open_empty()) {
        if (dive) {
            for (const auto& n : stack) open_bound = std::min(open_bound, n.bound);
        } else {
            open_bound = open.top().bound;
        }
    }
    res.status = MilpStatus::Budget;
    res.best_bound = std::min(abandoned_bound, open_bound);
    res.gap = incumbent ? incumbent_obj - res.best_bound : kLpInf;
    return res;
}

} // namespace cfb

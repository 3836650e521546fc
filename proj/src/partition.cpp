#include "cfblocks/partition.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>

#include "cfblocks/milp.hpp"

namespace cfb {

namespace {

void validate_problem(const PartitionProblem& pb) {
    if (pb.P < 1) throw std::invalid_argument("partition: P must be at least 1");
    if (pb.I() < pb.P) throw std::invalid_argument("partition: fewer individuals than samples");
    if (pb.epsilons.size() != pb.template_means.size())
        throw std::invalid_argument("partition: epsilons/template length mismatch");
    for (double e : pb.epsilons)
        if (!(e > 0.0)) throw std::invalid_argument("partition: epsilons must be positive");
    for (const auto& row : pb.x)
        if (row.size() != pb.template_means.size())
            throw std::invalid_argument("partition: covariate row has wrong length");
}

// Per-sample deviation sums for an assignment.
std::vector<std::vector<double>> sample_deviations(const PartitionProblem& pb,
                                                   const std::vector<int>& assignment, int s) {
    std::vector<std::vector<double>> dev(pb.P, std::vector<double>(pb.K(), 0.0));
    for (int i = 0; i < pb.I(); ++i) {
        int p = assignment[i];
        if (p < 0) continue;
        for (int k = 0; k < pb.K(); ++k) dev[p][k] += pb.x[i][k];
    }
    for (int p = 0; p < pb.P; ++p)
        for (int k = 0; k < pb.K(); ++k) dev[p][k] -= s * pb.template_means[k];
    return dev;
}

std::vector<double> achieved_eps(const PartitionProblem& pb, const std::vector<int>& assignment,
                                 int s) {
    std::vector<double> out(pb.K(), 0.0);
    if (s == 0) return out;
    auto dev = sample_deviations(pb, assignment, s);
    for (int p = 0; p < pb.P; ++p)
        for (int k = 0; k < pb.K(); ++k)
            out[k] = std::max(out[k], std::abs(dev[p][k]) / s);
    return out;
}

bool assignment_balanced(const PartitionProblem& pb, const std::vector<int>& assignment, int s) {
    auto dev = sample_deviations(pb, assignment, s);
    for (int p = 0; p < pb.P; ++p)
        for (int k = 0; k < pb.K(); ++k)
            if (!balance_ok(dev[p][k], pb.epsilons[k], s, pb.template_means[k])) return false;
    return true;
}

// MILP formulation shared by the exact paths. Variables are c_ip = var(i*P+p)
// plus, in min-epsilon mode, one epsilon variable per covariate.
MilpProblem build_milp(const PartitionProblem& pb, int s, FixedSizeMode mode) {
    MilpProblem mp;
    const int I = pb.I(), P = pb.P, K = pb.K();
    for (int i = 0; i < I; ++i)
        for (int p = 0; p < P; ++p) {
            mp.lp.add_var(0.0, 1.0, 0.0);
            mp.integer_vars.push_back(i * P + p);
        }
    std::vector<int> eps_var(K, -1);
    if (mode == FixedSizeMode::MinTotalEpsilon)
        for (int k = 0; k < K; ++k) eps_var[k] = mp.lp.add_var(0.0, kLpInf, 1.0);

    for (int p = 0; p < P; ++p) {
        std::vector<std::pair<int, double>> terms;
        terms.reserve(I);
        for (int i = 0; i < I; ++i) terms.push_back({i * P + p, 1.0});
        mp.lp.add_row(std::move(terms), '=', static_cast<double>(s));
    }
    for (int i = 0; i < I; ++i) {
        std::vector<std::pair<int, double>> terms;
        terms.reserve(P);
        for (int p = 0; p < P; ++p) terms.push_back({i * P + p, 1.0});
        mp.lp.add_row(std::move(terms), '<', 1.0);
    }
    // |s*B_k - sum_i c_ip x_ik| <= eps_k s, written as two inequalities.
    for (int k = 0; k < K; ++k) {
        for (int p = 0; p < P; ++p) {
            std::vector<std::pair<int, double>> hi, lo;
            hi.reserve(I + 1);
            lo.reserve(I + 1);
            for (int i = 0; i < I; ++i) {
                double v = pb.x[i][k];
                if (v != 0.0) {
                    hi.push_back({i * P + p, v});
                    lo.push_back({i * P + p, v});
                }
            }
            double target = s * pb.template_means[k];
            if (mode == FixedSizeMode::MinTotalEpsilon) {
                hi.push_back({eps_var[k], -static_cast<double>(s)});
                lo.push_back({eps_var[k], static_cast<double>(s)});
                mp.lp.add_row(std::move(hi), '<', target);
                mp.lp.add_row(std::move(lo), '>', target);
            } else {
                double band = pb.epsilons[k] * s;
                mp.lp.add_row(std::move(hi), '<', target + band);
                mp.lp.add_row(std::move(lo), '>', target - band);
            }
        }
    }
    return mp;
}

std::vector<int> milp_to_assignment(const PartitionProblem& pb, const std::vector<double>& x) {
    std::vector<int> assignment(pb.I(), -1);
    for (int i = 0; i < pb.I(); ++i)
        for (int p = 0; p < pb.P; ++p)
            if (x[i * pb.P + p] > 0.5) assignment[i] = p;
    return assignment;
}

std::vector<double> assignment_to_milp(const PartitionProblem& pb, const std::vector<int>& a,
                                       int extra_vars) {
    std::vector<double> x(static_cast<std::size_t>(pb.I()) * pb.P + extra_vars, 0.0);
    for (int i = 0; i < pb.I(); ++i)
        if (a[i] >= 0) x[i * pb.P + a[i]] = 1.0;
    return x;
}

bool exact_eligible(const PartitionProblem& pb, const PartitionOptions& opt) {
    if (opt.force_exact) return true;
    if (opt.force_heuristic) return false;
    return pb.I() * pb.P <= opt.exact_threshold;
}

} // namespace

bool balance_ok(double deviation, double eps, int s, double template_mean) {
    double slack = 1e-9 * (1.0 + std::abs(s * template_mean));
    return std::abs(deviation) <= eps * s + slack;
}

std::string verify_partition(const PartitionProblem& pb, const std::vector<int>& assignment,
                             int s) {
    if (static_cast<int>(assignment.size()) != pb.I()) return "assignment length mismatch";
    std::vector<int> sizes(pb.P, 0);
    for (int i = 0; i < pb.I(); ++i) {
        int p = assignment[i];
        if (p < -1 || p >= pb.P) return "assignment value out of range";
        if (p >= 0) ++sizes[p]; // each row contributes to at most one sample
    }
    for (int p = 0; p < pb.P; ++p)
        if (sizes[p] != s)
            return "sample " + std::to_string(p) + " has size " + std::to_string(sizes[p]) +
                   ", expected " + std::to_string(s);
    auto dev = sample_deviations(pb, assignment, s);
    for (int p = 0; p < pb.P; ++p)
        for (int k = 0; k < pb.K(); ++k)
            if (!balance_ok(dev[p][k], pb.epsilons[k], s, pb.template_means[k]))
                return "balance constraint violated for covariate " + std::to_string(k) +
                       " in sample " + std::to_string(p);
    return {};
}

namespace {

struct GreedyState {
    const PartitionProblem& pb;
    int s;
    std::vector<char> used;
    std::vector<int> assignment;
    std::vector<std::vector<double>> dev;     // per sample, deviation sums
    std::vector<std::vector<int>> members;

    explicit GreedyState(const PartitionProblem& problem, int size)
        : pb(problem),
          s(size),
          used(problem.I(), 0),
          assignment(problem.I(), -1),
          dev(problem.P, std::vector<double>(problem.K(), 0.0)),
          members(problem.P) {}

    // Amount by which a deviation vector breaks the tolerances, normalized.
    double violation(const std::vector<double>& d) const {
        double v = 0.0;
        for (int k = 0; k < pb.K(); ++k) {
            double slack = 1e-9 * (1.0 + std::abs(s * pb.template_means[k]));
            double over = std::abs(d[k]) - pb.epsilons[k] * s - slack;
            if (over > 0.0) v += over * over / (pb.epsilons[k] * pb.epsilons[k]);
        }
        return v;
    }
    // Violation plus a small interior pull, so plateau swaps still make
    // progress toward balance.
    double guided(const std::vector<double>& d) const {
        double v = violation(d);
        double pull = 0.0;
        for (int k = 0; k < pb.K(); ++k) {
            double z = d[k] / (pb.epsilons[k] * std::max(1, s));
            pull += z * z;
        }
        return v + 1e-6 * pull;
    }
};

// Round-robin build: samples take turns picking, so the later samples are
// not left with the dregs of the pool. score_max selects the max-norm pick
// rule used by the retry pass.
void greedy_build(GreedyState& st, bool score_max) {
    const auto& pb = st.pb;
    for (int t = 1; t <= st.s; ++t) {
        for (int p = 0; p < pb.P; ++p) {
            int best = -1;
            double best_score = 0.0;
            for (int i = 0; i < pb.I(); ++i) {
                if (st.used[i]) continue;
                double score = 0.0;
                for (int k = 0; k < pb.K(); ++k) {
                    double d = (st.dev[p][k] + pb.x[i][k] - t * pb.template_means[k]) /
                               pb.epsilons[k];
                    score = score_max ? std::max(score, std::abs(d)) : score + d * d;
                }
                if (best < 0 || score < best_score - 1e-15) {
                    best = i;
                    best_score = score;
                }
            }
            st.used[best] = 1;
            st.assignment[best] = p;
            st.members[p].push_back(best);
            for (int k = 0; k < pb.K(); ++k) st.dev[p][k] += pb.x[best][k];
        }
    }
    for (int p = 0; p < pb.P; ++p)
        for (int k = 0; k < pb.K(); ++k) st.dev[p][k] -= st.s * pb.template_means[k];
}

// Best-improvement swap repair for one sample against the unused pool.
bool greedy_repair(GreedyState& st, int p, int max_passes) {
    const auto& pb = st.pb;
    const int I = pb.I(), K = pb.K();
    double V = st.violation(st.dev[p]);
    if (V <= 0.0) return true;
    double G = st.guided(st.dev[p]);
    const bool full_scan = static_cast<long>(st.s) * (I - st.s * pb.P + st.s) <= 20000;
    const int kCandidates = 48;

    std::vector<double> trial(K);
    for (int pass = 0; pass < max_passes && V > 0.0; ++pass) {
        std::vector<int> ins, outs;
        if (full_scan) {
            ins = st.members[p];
            for (int i = 0; i < I; ++i)
                if (!st.used[i]) outs.push_back(i);
        } else {
            // Rank candidates by their push on the most violated covariate.
            int kstar = 0;
            double worst = -1.0;
            for (int k = 0; k < K; ++k) {
                double over = (std::abs(st.dev[p][k]) - pb.epsilons[k] * st.s) / pb.epsilons[k];
                if (over > worst) {
                    worst = over;
                    kstar = k;
                }
            }
            double dir = st.dev[p][kstar] > 0.0 ? 1.0 : -1.0;
            ins = st.members[p];
            std::sort(ins.begin(), ins.end(), [&](int a, int b) {
                double va = dir * pb.x[a][kstar], vb = dir * pb.x[b][kstar];
                if (va != vb) return va > vb;
                return a < b;
            });
            if (static_cast<int>(ins.size()) > kCandidates) ins.resize(kCandidates);
            for (int i = 0; i < I; ++i)
                if (!st.used[i]) outs.push_back(i);
            std::sort(outs.begin(), outs.end(), [&](int a, int b) {
                double va = dir * pb.x[a][kstar], vb = dir * pb.x[b][kstar];
                if (va != vb) return va < vb;
                return a < b;
            });
            if (static_cast<int>(outs.size()) > kCandidates) outs.resize(kCandidates);
        }

        int best_in = -1, best_out = -1;
        double best_G = G;
        for (int a : ins)
            for (int b : outs) {
                for (int k = 0; k < K; ++k) trial[k] = st.dev[p][k] - pb.x[a][k] + pb.x[b][k];
                double g2 = st.guided(trial);
                if (g2 < best_G - 1e-15) {
                    best_G = g2;
                    best_in = a;
                    best_out = b;
                }
            }
        if (best_in < 0) break;
        st.used[best_in] = 0;
        st.assignment[best_in] = -1;
        st.used[best_out] = 1;
        st.assignment[best_out] = p;
        *std::find(st.members[p].begin(), st.members[p].end(), best_in) = best_out;
        for (int k = 0; k < K; ++k) st.dev[p][k] += pb.x[best_out][k] - pb.x[best_in][k];
        V = st.violation(st.dev[p]);
        G = st.guided(st.dev[p]);
    }
    return V <= 0.0;
}

} // namespace

std::optional<std::vector<int>> greedy_partition(const PartitionProblem& pb, int s) {
    const int I = pb.I(), P = pb.P, K = pb.K();
    if (s * P > I) return std::nullopt;
    if (s == 0) return std::vector<int>(I, -1);

    for (bool score_max : {false, true}) {
        GreedyState st(pb, s);
        greedy_build(st, score_max);
        bool ok = true;
        if (K > 0)
            for (int p = 0; p < P && ok; ++p) ok = greedy_repair(st, p, 400);
        if (ok && assignment_balanced(pb, st.assignment, s)) return st.assignment;
    }
    return std::nullopt;
}

namespace {

// Exact feasibility of the fixed-size problem; greedy witness first, then
// branch-and-bound. Returns feasible / infeasible / unknown(budget).
enum class Feas { Yes, No, Unknown };

struct FeasResult {
    Feas verdict = Feas::Unknown;
    std::vector<int> witness;
    long nodes = 0;
    bool heuristic = false;
};

FeasResult feasibility_at(const PartitionProblem& pb, int s, bool exact,
                          const PartitionOptions& opt) {
    FeasResult out;
    if (s == 0) {
        out.verdict = Feas::Yes;
        out.witness.assign(pb.I(), -1);
        return out;
    }
    if (auto w = greedy_partition(pb, s)) {
        out.verdict = Feas::Yes;
        out.witness = std::move(*w);
        out.heuristic = true;
        return out;
    }
    if (!exact) return out; // unknown
    MilpProblem mp = build_milp(pb, s, FixedSizeMode::Feasibility);
    MilpOptions mo;
    mo.node_budget = opt.node_budget;
    mo.stop_at_first_incumbent = true;
    MilpResult mr = solve_milp(mp, mo);
    out.nodes = mr.nodes;
    if (mr.status == MilpStatus::Optimal && mr.incumbent) {
        out.verdict = Feas::Yes;
        out.witness = milp_to_assignment(pb, *mr.incumbent);
    } else if (mr.status == MilpStatus::Infeasible) {
        out.verdict = Feas::No;
    }
    return out;
}

} // namespace

namespace {

// A one-dimensional relaxation: if every sample's sum must lie within
// s*B_k +- eps_k*s, the unselected records must absorb the rest of the pool
// total, and the reachable subset sums of a fixed-size leftover are an
// interval between the smallest and largest prefix sums. Any s failing this
// for some covariate is infeasible outright.
class LeftoverBound {
public:
    explicit LeftoverBound(const PartitionProblem& pb) : pb_(pb) {
        const int I = pb.I(), K = pb.K();
        prefix_lo_.assign(K, {});
        prefix_hi_.assign(K, {});
        totals_.assign(K, 0.0);
        for (int k = 0; k < K; ++k) {
            std::vector<double> v(I);
            for (int i = 0; i < I; ++i) v[i] = pb.x[i][k];
            std::sort(v.begin(), v.end());
            auto& lo = prefix_lo_[k];
            auto& hi = prefix_hi_[k];
            lo.assign(I + 1, 0.0);
            hi.assign(I + 1, 0.0);
            for (int i = 0; i < I; ++i) {
                lo[i + 1] = lo[i] + v[i];
                hi[i + 1] = hi[i] + v[I - 1 - i];
                totals_[k] += v[i];
            }
        }
    }

    bool plausible(int s) const {
        const int I = pb_.I(), K = pb_.K();
        const int L = I - pb_.P * s;
        for (int k = 0; k < K; ++k) {
            double band = pb_.P * (pb_.epsilons[k] * s + 1e-9);
            double target = totals_[k] - pb_.P * s * pb_.template_means[k];
            if (prefix_lo_[k][L] > target + band) return false;
            if (prefix_hi_[k][L] < target - band) return false;
            // Each sample alone must be able to reach its band as well.
            double sb = s * pb_.template_means[k], se = pb_.epsilons[k] * s + 1e-9;
            if (prefix_lo_[k][s] > sb + se) return false;
            if (prefix_hi_[k][s] < sb - se) return false;
        }
        return true;
    }

private:
    const PartitionProblem& pb_;
    std::vector<std::vector<double>> prefix_lo_, prefix_hi_;
    std::vector<double> totals_;
};

} // namespace

PartitionSolution max_size_partition(const PartitionProblem& pb, const PartitionOptions& opt) {
    validate_problem(pb);
    const int cap = pb.I() / pb.P;
    const bool exact = exact_eligible(pb, opt);

    PartitionSolution sol;
    sol.assignment.assign(pb.I(), -1);
    long total_nodes = 0;
    bool any_heuristic = false;

    if (exact) {
        // Feasibility need not be monotone in s, so scan down from the cap;
        // the first provably feasible size is the maximum.
        for (int s = cap; s >= 0; --s) {
            FeasResult f = feasibility_at(pb, s, true, opt);
            total_nodes += f.nodes;
            any_heuristic = any_heuristic || f.heuristic;
            if (f.verdict == Feas::Yes) {
                sol.s = s;
                sol.assignment = f.witness;
                sol.certificate.proved_optimal = true;
                sol.certificate.gap = 0.0;
                break;
            }
            if (f.verdict == Feas::Unknown) {
                // Budget ran out mid-scan; fall back to whatever smaller size
                // can still be witnessed, reporting the gap.
                for (int s2 = s - 1; s2 >= 0; --s2) {
                    FeasResult f2 = feasibility_at(pb, s2, false, opt);
                    if (f2.verdict == Feas::Yes) {
                        sol.s = s2;
                        sol.assignment = f2.witness;
                        break;
                    }
                }
                sol.certificate.proved_optimal = false;
                sol.certificate.gap = s - sol.s;
                break;
            }
        }
    } else {
        // Witness-driven downward scan from the disjointness cap. Feasibility
        // is not monotone in s (coarse covariates make small samples harder
        // to balance than large ones), so a binary search can collapse past
        // the true optimum; scanning down cannot. The leftover-sum relaxation
        // rejects impossible sizes cheaply and bounds the optimum.
        LeftoverBound bound(pb);
        sol.s = 0;
        int bound_cap = 0;
        for (int s = cap; s >= 1; --s) {
            if (!bound.plausible(s)) continue;
            if (bound_cap == 0) bound_cap = s;
            FeasResult f = feasibility_at(pb, s, false, opt);
            any_heuristic = any_heuristic || f.heuristic;
            if (f.verdict == Feas::Yes) {
                sol.s = s;
                sol.assignment = std::move(f.witness);
                break;
            }
        }
        sol.certificate.proved_optimal = (sol.s == bound_cap);
        sol.certificate.gap = bound_cap - sol.s;
    }
    sol.certificate.nodes = total_nodes;
    sol.certificate.used_heuristic = any_heuristic;
    sol.achieved_epsilons = achieved_eps(pb, sol.assignment, sol.s);
    std::string err = verify_partition(pb, sol.assignment, sol.s);
    if (!err.empty()) throw std::logic_error("max_size_partition produced invalid solution: " + err);
    return sol;
}

PartitionSolution fixed_size_partition(const PartitionProblem& pb, int s_bar, FixedSizeMode mode,
                                       const PartitionOptions& opt) {
    validate_problem(pb);
    if (s_bar < 0) throw std::invalid_argument("fixed_size_partition: negative size");
    if (s_bar * pb.P > pb.I()) {
        PartitionSolution sol;
        sol.feasible = false;
        sol.certificate.proved_optimal = true; // disjointness alone rules it out
        return sol;
    }
    const bool exact = exact_eligible(pb, opt);
    PartitionSolution sol;
    sol.s = s_bar;

    if (mode == FixedSizeMode::Feasibility) {
        FeasResult f = feasibility_at(pb, s_bar, exact, opt);
        sol.certificate.nodes = f.nodes;
        sol.certificate.used_heuristic = f.heuristic;
        if (f.verdict == Feas::Yes) {
            sol.assignment = f.witness;
            sol.certificate.proved_optimal = true;
        } else {
            sol.feasible = false;
            sol.certificate.proved_optimal = (f.verdict == Feas::No);
            return sol;
        }
    } else {
        MilpProblem mp = build_milp(pb, s_bar, FixedSizeMode::MinTotalEpsilon);
        MilpOptions mo;
        mo.node_budget = opt.node_budget;
        // Seed with a greedy witness so even a budgeted run has an answer.
        // With epsilon free, any equal-size disjoint selection is feasible,
        // so fall back to a fully relaxed greedy if the strict one fails.
        auto w = greedy_partition(pb, s_bar);
        if (!w) {
            PartitionProblem relaxed = pb;
            relaxed.epsilons.assign(pb.K(), 1e18);
            w = greedy_partition(relaxed, s_bar);
        }
        if (w) {
            auto x = assignment_to_milp(pb, *w, pb.K());
            auto eps = achieved_eps(pb, *w, s_bar);
            for (int k = 0; k < pb.K(); ++k) x[pb.I() * pb.P + k] = eps[k];
            mo.warm_starts.push_back(std::move(x));
        }
        if (!exact) {
            if (mo.warm_starts.empty()) {
                sol.feasible = false;
                sol.certificate.proved_optimal = false;
                return sol;
            }
            sol.assignment = milp_to_assignment(pb, mo.warm_starts[0]);
            sol.certificate.used_heuristic = true;
            sol.certificate.proved_optimal = false;
        } else {
            MilpResult mr = solve_milp(mp, mo);
            sol.certificate.nodes = mr.nodes;
            if (!mr.incumbent) {
                sol.feasible = false;
                sol.certificate.proved_optimal = mr.status == MilpStatus::Infeasible;
                return sol;
            }
            sol.assignment = milp_to_assignment(pb, *mr.incumbent);
            sol.certificate.proved_optimal = mr.status == MilpStatus::Optimal;
            if (mr.status == MilpStatus::Budget) sol.certificate.gap = mr.gap;
        }
        sol.achieved_epsilons = achieved_eps(pb, sol.assignment, s_bar);
        sol.objective = std::accumulate(sol.achieved_epsilons.begin(),
                                        sol.achieved_epsilons.end(), 0.0);
        // Min-epsilon solutions satisfy the sizes/disjointness invariants but
        // not necessarily the prespecified tolerances; check the former only.
        // (Large finite tolerance: infinity times s = 0 would poison the check.)
        PartitionProblem relaxed = pb;
        relaxed.epsilons.assign(pb.K(), 1e18);
        std::string err = verify_partition(relaxed, sol.assignment, s_bar);
        if (!err.empty())
            throw std::logic_error("fixed_size_partition produced invalid solution: " + err);
        return sol;
    }

    sol.achieved_epsilons = achieved_eps(pb, sol.assignment, s_bar);
    std::string err = verify_partition(pb, sol.assignment, s_bar);
    if (!err.empty())
        throw std::logic_error("fixed_size_partition produced invalid solution: " + err);
    return sol;
}

PartitionSolution brute_force_partition(const PartitionProblem& pb) {
    validate_problem(pb);
    if (pb.I() > 12 || pb.P > 2)
        throw std::invalid_argument("brute_force_partition: instance too large (I<=12, P<=2)");
    const int I = pb.I(), P = pb.P;
    PartitionSolution best;
    best.s = -1;

    std::vector<int> assignment(I, -1);
    // Mixed-radix counter over {-1, 0, .., P-1}^I.
    while (true) {
        std::vector<int> sizes(P, 0);
        for (int i = 0; i < I; ++i)
            if (assignment[i] >= 0) ++sizes[assignment[i]];
        bool equal = true;
        for (int p = 1; p < P; ++p) equal = equal && sizes[p] == sizes[0];
        if (equal && sizes[0] > best.s && assignment_balanced(pb, assignment, sizes[0])) {
            best.s = sizes[0];
            best.assignment = assignment;
        }
        int pos = 0;
        while (pos < I) {
            if (++assignment[pos] < P) break;
            assignment[pos] = -1;
            ++pos;
        }
        if (pos == I) break;
    }
    best.certificate.proved_optimal = true;
    best.achieved_epsilons = achieved_eps(pb, best.assignment, best.s);
    return best;
}

PartitionSolution brute_force_fixed_partition(const PartitionProblem& pb, int s_bar,
                                              FixedSizeMode mode) {
    validate_problem(pb);
    if (pb.I() > 12 || pb.P > 2)
        throw std::invalid_argument("brute_force_fixed_partition: instance too large");
    const int I = pb.I(), P = pb.P;
    PartitionSolution best;
    best.feasible = false;
    best.s = s_bar;
    double best_obj = kLpInf;

    std::vector<int> assignment(I, -1);
    while (true) {
        std::vector<int> sizes(P, 0);
        for (int i = 0; i < I; ++i)
            if (assignment[i] >= 0) ++sizes[assignment[i]];
        bool match = true;
        for (int p = 0; p < P; ++p) match = match && sizes[p] == s_bar;
        if (match) {
            if (mode == FixedSizeMode::Feasibility) {
                if (assignment_balanced(pb, assignment, s_bar)) {
                    best.feasible = true;
                    best.assignment = assignment;
                    break;
                }
            } else {
                auto eps = achieved_eps(pb, assignment, s_bar);
                double obj = std::accumulate(eps.begin(), eps.end(), 0.0);
                if (obj < best_obj - 1e-15) {
                    best_obj = obj;
                    best.feasible = true;
                    best.assignment = assignment;
                    best.achieved_epsilons = eps;
                    best.objective = obj;
                }
            }
        }
        int pos = 0;
        while (pos < I) {
            if (++assignment[pos] < P) break;
            assignment[pos] = -1;
            ++pos;
        }
        if (pos == I) break;
    }
    best.certificate.proved_optimal = true;
    if (best.feasible && mode == FixedSizeMode::Feasibility)
        best.achieved_epsilons = achieved_eps(pb, best.assignment, s_bar);
    return best;
}

nlohmann::json to_json(const PartitionProblem& pb) {
    nlohmann::json j;
    j["P"] = pb.P;
    j["template_means"] = pb.template_means;
    j["epsilons"] = pb.epsilons;
    j["covariates"] = pb.x;
    return j;
}

PartitionProblem partition_problem_from_json(const nlohmann::json& j) {
    PartitionProblem pb;
    pb.P = j.at("P").get<int>();
    pb.template_means = j.at("template_means").get<std::vector<double>>();
    pb.epsilons = j.at("epsilons").get<std::vector<double>>();
    pb.x = j.at("covariates").get<std::vector<std::vector<double>>>();
    validate_problem(pb);
    return pb;
}

nlohmann::json to_json(const PartitionSolution& sol) {
    nlohmann::json j;
    j["feasible"] = sol.feasible;
    j["s"] = sol.s;
    nlohmann::json sparse = nlohmann::json::array();
    for (std::size_t i = 0; i < sol.assignment.size(); ++i)
        if (sol.assignment[i] >= 0) sparse.push_back({i, sol.assignment[i]});
    j["assignment"] = sparse;
    j["achieved_epsilons"] = sol.achieved_epsilons;
    j["objective"] = sol.objective;
    j["certificate"] = {{"proved_optimal", sol.certificate.proved_optimal},
                        {"gap", sol.certificate.gap},
                        {"nodes", sol.certificate.nodes},
                        {"used_heuristic", sol.certificate.used_heuristic}};
    return j;
}

PartitionSolution partition_solution_from_json(const nlohmann::json& j, int I) {
    PartitionSolution sol;
    sol.feasible = j.at("feasible").get<bool>();
    sol.s = j.at("s").get<int>();
    sol.assignment.assign(I, -1);
    for (const auto& pair : j.at("assignment")) {
        int i = pair.at(0).get<int>();
        if (i < 0 || i >= I) throw std::invalid_argument("assignment index out of range");
        sol.assignment[i] = pair.at(1).get<int>();
    }
    sol.achieved_epsilons = j.at("achieved_epsilons").get<std::vector<double>>();
    sol.objective = j.value("objective", 0.0);
    const auto& c = j.at("certificate");
    sol.certificate.proved_optimal = c.at("proved_optimal").get<bool>();
    sol.certificate.gap = c.at("gap").get<double>();
    sol.certificate.nodes = c.at("nodes").get<long>();
    sol.certificate.used_heuristic = c.at("used_heuristic").get<bool>();
    return sol;
}

StepsResult run_steps_1_2(const std::vector<PartitionProblem>& problems,
                          const std::vector<std::string>& labels, const StepsOptions& opt) {
    if (problems.empty()) throw std::invalid_argument("run_steps_1_2: no problems");
    if (labels.size() != problems.size())
        throw std::invalid_argument("run_steps_1_2: labels/problems mismatch");
    const std::size_t K = problems[0].template_means.size();
    for (const auto& pb : problems)
        if (pb.template_means.size() != K)
            throw std::invalid_argument("run_steps_1_2: problems disagree on covariate count");

    StepsResult result;
    result.groups.resize(problems.size());

    auto solve_step1 = [&](std::size_t g) {
        try {
            result.groups[g].step1 = max_size_partition(problems[g], opt.solver);
        } catch (const std::exception& e) {
            throw std::runtime_error("group " + labels[g] + ": " + e.what());
        }
    };
    if (opt.threads > 1) {
        std::vector<std::future<void>> futs;
        for (std::size_t g = 0; g < problems.size(); ++g)
            futs.push_back(std::async(std::launch::async, solve_step1, g));
        for (auto& f : futs) f.get();
    } else {
        for (std::size_t g = 0; g < problems.size(); ++g) solve_step1(g);
    }

    int s_bar = result.groups[0].step1.s;
    for (const auto& gm : result.groups) s_bar = std::min(s_bar, gm.step1.s);
    result.s_bar = s_bar;

    auto solve_step2 = [&](std::size_t g) {
        try {
            // The Step-1 solution is a feasibility witness whenever this
            // group attained the minimum.
            if (result.groups[g].step1.s == s_bar &&
                opt.step2_mode == FixedSizeMode::Feasibility) {
                result.groups[g].step2 = result.groups[g].step1;
                result.groups[g].step2.certificate.proved_optimal = true;
                return;
            }
            result.groups[g].step2 =
                fixed_size_partition(problems[g], s_bar, opt.step2_mode, opt.solver);
        } catch (const std::exception& e) {
            throw std::runtime_error("group " + labels[g] + ": " + e.what());
        }
    };
    if (opt.threads > 1) {
        std::vector<std::future<void>> futs;
        for (std::size_t g = 0; g < problems.size(); ++g)
            futs.push_back(std::async(std::launch::async, solve_step2, g));
        for (auto& f : futs) f.get();
    } else {
        for (std::size_t g = 0; g < problems.size(); ++g) solve_step2(g);
    }
    return result;
}

} // namespace cfb

#include "cfblocks/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cfb {

namespace {

enum class VarState : unsigned char { Basic, AtLower, AtUpper };

struct Column {
    std::vector<std::pair<int, double>> entries; // (row, coefficient)
};

class Simplex {
public:
    Simplex(const LinearProgram& lp, const LpOptions& opt) : lp_(lp), opt_(opt) {
        m_ = static_cast<int>(lp.rows.size());
        n_struct_ = lp.num_vars;
        build_columns();
    }

    LpResult run() {
        LpResult res;
        long budget = opt_.max_iterations > 0
                          ? opt_.max_iterations
                          : 200 + 40L * (m_ + static_cast<long>(cols_.size()));

        setup_basis();
        if (need_phase1_) {
            phase_ = 1;
            LpStatus st = iterate(budget);
            res.iterations = iters_;
            if (st == LpStatus::IterLimit) {
                res.status = st;
                return res;
            }
            double infeas = phase1_objective();
            if (infeas > opt_.feas_tol * (1.0 + rhs_scale_)) {
                res.status = LpStatus::Infeasible;
                return res;
            }
            // Freeze artificials at zero for phase 2.
            for (int j = art_begin_; j < total_; ++j) up_[j] = 0.0;
        }
        phase_ = 2;
        LpStatus st = iterate(budget);
        res.iterations = iters_;
        res.status = st;
        if (st != LpStatus::Optimal) return res;

        res.x.assign(n_struct_, 0.0);
        for (int j = 0; j < n_struct_; ++j) res.x[j] = value_[j];
        res.objective = 0.0;
        for (int j = 0; j < n_struct_; ++j) res.objective += lp_.objective[j] * value_[j];
        res.max_violation = check_violation(res.x);
        return res;
    }

private:
    const LinearProgram& lp_;
    LpOptions opt_;
    int m_ = 0, n_struct_ = 0, slack_begin_ = 0, art_begin_ = 0, total_ = 0;
    std::vector<Column> cols_;
    std::vector<double> lo_, up_, cost_; // phase-2 costs
    std::vector<double> binv_;           // m x m, row-major
    std::vector<int> basic_;             // row -> variable
    std::vector<VarState> state_;
    std::vector<double> value_; // current value of every variable
    std::vector<double> rhs_;
    double rhs_scale_ = 1.0;
    bool need_phase1_ = false;
    int phase_ = 1;
    long iters_ = 0;
    int degenerate_streak_ = 0;
    bool bland_ = false;

    double& binv(int i, int j) { return binv_[static_cast<std::size_t>(i) * m_ + j]; }

    void build_columns() {
        slack_begin_ = n_struct_;
        art_begin_ = n_struct_ + m_;
        total_ = art_begin_; // artificials appended on demand
        cols_.assign(art_begin_, Column{});
        lo_.assign(art_begin_, 0.0);
        up_.assign(art_begin_, 0.0);
        for (int j = 0; j < n_struct_; ++j) {
            lo_[j] = lp_.lower[j];
            up_[j] = lp_.upper[j];
        }
        rhs_.resize(m_);
        for (int i = 0; i < m_; ++i) {
            const LpRow& row = lp_.rows[i];
            rhs_[i] = row.rhs;
            rhs_scale_ = std::max(rhs_scale_, std::abs(row.rhs));
            for (auto [v, c] : row.terms) {
                if (v < 0 || v >= n_struct_) throw std::invalid_argument("bad variable index in row");
                if (c != 0.0) cols_[v].entries.push_back({i, c});
            }
            int s = slack_begin_ + i;
            cols_[s].entries.push_back({i, 1.0});
            switch (row.sense) {
                case '<': lo_[s] = 0.0; up_[s] = kLpInf; break;
                case '>': lo_[s] = -kLpInf; up_[s] = 0.0; break;
                case '=': lo_[s] = 0.0; up_[s] = 0.0; break;
                default: throw std::invalid_argument("bad row sense");
            }
        }
    }

    void setup_basis() {
        state_.assign(art_begin_, VarState::AtLower);
        value_.assign(art_begin_, 0.0);
        for (int j = 0; j < n_struct_; ++j) {
            if (std::isfinite(lo_[j])) {
                state_[j] = VarState::AtLower;
                value_[j] = lo_[j];
            } else if (std::isfinite(up_[j])) {
                state_[j] = VarState::AtUpper;
                value_[j] = up_[j];
            } else {
                state_[j] = VarState::AtLower; // free variable pinned at 0
                value_[j] = 0.0;
            }
        }
        // Residual the slack of each row must carry.
        std::vector<double> resid(rhs_);
        for (int j = 0; j < n_struct_; ++j) {
            if (value_[j] == 0.0) continue;
            for (auto [i, c] : cols_[j].entries) resid[i] -= c * value_[j];
        }
        basic_.assign(m_, -1);
        binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            int s = slack_begin_ + i;
            double v = resid[i];
            if (v >= lo_[s] - opt_.feas_tol && v <= up_[s] + opt_.feas_tol) {
                basic_[i] = s;
                state_[s] = VarState::Basic;
                value_[s] = v;
                binv(i, i) = 1.0;
            } else {
                // Clamp the slack to its nearest bound and cover the gap with
                // an artificial variable.
                double sv = std::min(std::max(v, lo_[s]), up_[s]);
                state_[s] = (std::isfinite(up_[s]) && sv == up_[s] && lo_[s] != up_[s])
                                ? VarState::AtUpper
                                : VarState::AtLower;
                value_[s] = sv;
                double gap = v - sv;
                double coeff = gap >= 0.0 ? 1.0 : -1.0;
                Column c;
                c.entries.push_back({i, coeff});
                cols_.push_back(std::move(c));
                lo_.push_back(0.0);
                up_.push_back(kLpInf);
                state_.push_back(VarState::Basic);
                value_.push_back(std::abs(gap));
                int a = total_++;
                basic_[i] = a;
                binv(i, i) = coeff; // inverse of a +-1 diagonal entry
                need_phase1_ = true;
            }
        }
    }

    double cost_of(int j) const {
        if (phase_ == 1) return j >= art_begin_ ? 1.0 : 0.0;
        return j < n_struct_ ? lp_.objective[j] : 0.0;
    }

    double phase1_objective() const {
        double s = 0.0;
        for (int j = art_begin_; j < total_; ++j) s += value_[j];
        return s;
    }

    // y = c_B' B^-1
    void compute_duals(std::vector<double>& y) const {
        y.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            double cb = cost_of(basic_[i]);
            if (cb == 0.0) continue;
            const double* row = &binv_[static_cast<std::size_t>(i) * m_];
            for (int k = 0; k < m_; ++k) y[k] += cb * row[k];
        }
    }

    double reduced_cost(int j, const std::vector<double>& y) const {
        double d = cost_of(j);
        for (auto [i, c] : cols_[j].entries) d -= y[i] * c;
        return d;
    }

    // w = B^-1 A_j
    void ftran(int j, std::vector<double>& w) const {
        w.assign(m_, 0.0);
        for (auto [i, c] : cols_[j].entries)
            for (int k = 0; k < m_; ++k) w[k] += binv_[static_cast<std::size_t>(k) * m_ + i] * c;
    }

    LpStatus iterate(long budget) {
        std::vector<double> y, w;
        while (true) {
            if (iters_ >= budget) return LpStatus::IterLimit;
            ++iters_;
            if (iters_ % 512 == 0) refactorize();

            compute_duals(y);
            int enter = -1;
            double best = 0.0;
            for (int j = 0; j < total_; ++j) {
                if (state_[j] == VarState::Basic) continue;
                if (lo_[j] == up_[j]) continue; // fixed
                if (phase_ == 2 && j >= art_begin_) continue;
                double d = reduced_cost(j, y);
                double score = 0.0;
                if (state_[j] == VarState::AtLower && d < -opt_.dual_tol) score = -d;
                else if (state_[j] == VarState::AtUpper && d > opt_.dual_tol) score = d;
                else continue;
                if (bland_) {
                    enter = j;
                    break;
                }
                if (score > best + 1e-15) {
                    best = score;
                    enter = j;
                }
            }
            if (enter < 0) return LpStatus::Optimal;

            double sigma = state_[enter] == VarState::AtLower ? 1.0 : -1.0;
            ftran(enter, w);

            // Ratio test: entering moves by sigma*t, basics by -sigma*t*w.
            double t_limit = up_[enter] - lo_[enter]; // bound flip distance
            int leave = -1;
            double leave_pivot = 0.0;
            bool leave_at_upper = false;
            double t_best = t_limit;
            for (int i = 0; i < m_; ++i) {
                double delta = -sigma * w[i];
                if (std::abs(delta) <= opt_.pivot_tol) continue;
                int b = basic_[i];
                double t_i;
                bool hits_upper;
                if (delta > 0.0) {
                    if (!std::isfinite(up_[b])) continue;
                    t_i = (up_[b] - value_[b]) / delta;
                    hits_upper = true;
                } else {
                    if (!std::isfinite(lo_[b])) continue;
                    t_i = (value_[b] - lo_[b]) / (-delta);
                    hits_upper = false;
                }
                if (t_i < -1e-12) t_i = 0.0;
                bool better = t_i < t_best - 1e-10;
                bool tie = std::abs(t_i - t_best) <= 1e-10;
                if (better || (tie && (leave < 0 || std::abs(w[i]) > std::abs(leave_pivot) + 1e-12))) {
                    t_best = t_i;
                    leave = i;
                    leave_pivot = w[i];
                    leave_at_upper = hits_upper;
                }
            }
            if (!std::isfinite(t_best)) return LpStatus::Unbounded;
            if (t_best <= 1e-10) {
                if (++degenerate_streak_ > 64) bland_ = true;
            } else {
                degenerate_streak_ = 0;
                bland_ = false;
            }

            // Apply the step.
            if (t_best > 0.0) {
                for (int i = 0; i < m_; ++i) {
                    int b = basic_[i];
                    value_[b] -= sigma * t_best * w[i];
                }
                value_[enter] += sigma * t_best;
            }
            if (leave < 0) {
                // Bound flip: entering variable traverses to its other bound.
                state_[enter] =
                    state_[enter] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
                value_[enter] = state_[enter] == VarState::AtLower ? lo_[enter] : up_[enter];
                continue;
            }
            int out = basic_[leave];
            state_[out] = leave_at_upper ? VarState::AtUpper : VarState::AtLower;
            value_[out] = leave_at_upper ? up_[out] : lo_[out];
            basic_[leave] = enter;
            state_[enter] = VarState::Basic;
            pivot_binv(leave, w);
            // Recompute the entering basic value exactly from the step.
            // (value_[enter] already reflects the step above.)
        }
    }

    void pivot_binv(int r, const std::vector<double>& w) {
        double piv = w[r];
        double* rowr = &binv_[static_cast<std::size_t>(r) * m_];
        for (int k = 0; k < m_; ++k) rowr[k] /= piv;
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            double f = w[i];
            if (f == 0.0) continue;
            double* rowi = &binv_[static_cast<std::size_t>(i) * m_];
            for (int k = 0; k < m_; ++k) rowi[k] -= f * rowr[k];
        }
    }

    // Rebuild B^-1 from the basis columns by Gauss-Jordan, then recompute the
    // basic values from scratch. Keeps long runs numerically honest.
    void refactorize() {
        std::vector<double> B(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i)
            for (auto [r, c] : cols_[basic_[i]].entries) B[static_cast<std::size_t>(r) * m_ + i] = c;
        std::vector<double> inv(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i) inv[static_cast<std::size_t>(i) * m_ + i] = 1.0;
        for (int col = 0; col < m_; ++col) {
            int piv = -1;
            double best = 0.0;
            for (int i = col; i < m_; ++i) {
                double v = std::abs(B[static_cast<std::size_t>(i) * m_ + col]);
                if (v > best) {
                    best = v;
                    piv = i;
                }
            }
            if (piv < 0 || best < 1e-12) return; // singular; keep the running inverse
            if (piv != col) {
                for (int k = 0; k < m_; ++k) {
                    std::swap(B[static_cast<std::size_t>(piv) * m_ + k],
                              B[static_cast<std::size_t>(col) * m_ + k]);
                    std::swap(inv[static_cast<std::size_t>(piv) * m_ + k],
                              inv[static_cast<std::size_t>(col) * m_ + k]);
                }
            }
            double p = B[static_cast<std::size_t>(col) * m_ + col];
            for (int k = 0; k < m_; ++k) {
                B[static_cast<std::size_t>(col) * m_ + k] /= p;
                inv[static_cast<std::size_t>(col) * m_ + k] /= p;
            }
            for (int i = 0; i < m_; ++i) {
                if (i == col) continue;
                double f = B[static_cast<std::size_t>(i) * m_ + col];
                if (f == 0.0) continue;
                for (int k = 0; k < m_; ++k) {
                    B[static_cast<std::size_t>(i) * m_ + k] -=
                        f * B[static_cast<std::size_t>(col) * m_ + k];
                    inv[static_cast<std::size_t>(i) * m_ + k] -=
                        f * inv[static_cast<std::size_t>(col) * m_ + k];
                }
            }
        }
        binv_ = std::move(inv);
        recompute_basics();
    }

    void recompute_basics() {
        std::vector<double> resid(rhs_);
        for (int j = 0; j < total_; ++j) {
            if (state_[j] == VarState::Basic || value_[j] == 0.0) continue;
            for (auto [i, c] : cols_[j].entries) resid[i] -= c * value_[j];
        }
        for (int i = 0; i < m_; ++i) {
            double v = 0.0;
            const double* row = &binv_[static_cast<std::size_t>(i) * m_];
            for (int k = 0; k < m_; ++k) v += row[k] * resid[k];
            value_[basic_[i]] = v;
        }
    }

    double check_violation(const std::vector<double>& x) const {
        double worst = 0.0;
        for (int i = 0; i < m_; ++i) {
            double lhs = 0.0;
            for (auto [v, c] : lp_.rows[i].terms) lhs += c * x[v];
            double diff = lhs - lp_.rows[i].rhs;
            switch (lp_.rows[i].sense) {
                case '<': worst = std::max(worst, diff); break;
                case '>': worst = std::max(worst, -diff); break;
                case '=': worst = std::max(worst, std::abs(diff)); break;
            }
        }
        for (int j = 0; j < n_struct_; ++j) {
            worst = std::max(worst, lp_.lower[j] - x[j]);
            worst = std::max(worst, x[j] - lp_.upper[j]);
        }
        return worst;
    }
};

} // namespace

LpResult solve_lp(const LinearProgram& lp, const LpOptions& opt) {
    if (lp.rows.empty()) {
        // Pure bound problem: each variable sits at its cheaper bound.
        LpResult res;
        res.status = LpStatus::Optimal;
        res.x.assign(lp.num_vars, 0.0);
        auto fail = [](LpStatus st) {
            LpResult r;
            r.status = st;
            return r;
        };
        for (int j = 0; j < lp.num_vars; ++j) {
            double c = lp.objective[j];
            if (c > 0.0) {
                if (!std::isfinite(lp.lower[j])) return fail(LpStatus::Unbounded);
                res.x[j] = lp.lower[j];
            } else if (c < 0.0) {
                if (!std::isfinite(lp.upper[j])) return fail(LpStatus::Unbounded);
                res.x[j] = lp.upper[j];
            } else {
                res.x[j] = std::isfinite(lp.lower[j]) ? lp.lower[j]
                           : (std::isfinite(lp.upper[j]) ? lp.upper[j] : 0.0);
            }
            if (lp.lower[j] > lp.upper[j]) return fail(LpStatus::Infeasible);
            res.objective += c * res.x[j];
        }
        return res;
    }
    for (int j = 0; j < lp.num_vars; ++j)
        if (lp.lower[j] > lp.upper[j] + 1e-12) {
            LpResult r;
            r.status = LpStatus::Infeasible;
            return r;
        }
    Simplex s(lp, opt);
    return s.run();
}

} // namespace cfb

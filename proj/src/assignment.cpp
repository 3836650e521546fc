#include "cfblocks/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Classic shortest-augmenting-path Hungarian with row/column potentials.
// Returns match (row -> col) and the final potentials.
void hungarian(const std::vector<std::vector<double>>& a, std::vector<int>& row_of_col,
               std::vector<double>& u, std::vector<double>& v) {
    const int n = static_cast<int>(a.size());
    u.assign(n + 1, 0.0);
    v.assign(n + 1, 0.0);
    std::vector<int> p(n + 1, n); // p[j]: row matched to column j (n = none)
    for (int i = 0; i < n; ++i) {
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        std::vector<int> way(n + 1, n);
        int j0 = n;
        p[n] = i;
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = n;
            double delta = kInf;
            for (int j = 0; j < n; ++j) {
                if (used[j]) continue;
                double cur = a[i0][j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != n);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != n);
    }
    row_of_col.assign(n, n);
    for (int j = 0; j < n; ++j) row_of_col[j] = p[j];
}

// Augmenting search over the tight subgraph, respecting fixed rows.
bool augment(const std::vector<std::vector<int>>& tight, std::vector<int>& match_row,
             std::vector<int>& match_col, std::vector<char>& visited, int row,
             const std::vector<char>& fixed_row) {
    for (int j : tight[row]) {
        if (visited[j]) continue;
        visited[j] = 1;
        int other = match_col[j];
        if (other < 0 || (!fixed_row[other] &&
                          augment(tight, match_row, match_col, visited, other, fixed_row))) {
            match_row[row] = j;
            match_col[j] = row;
            return true;
        }
    }
    return false;
}

} // namespace

AssignmentResult optimal_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) throw std::invalid_argument("optimal_assignment: empty matrix");
    double scale = 0.0;
    for (const auto& row : cost) {
        if (static_cast<int>(row.size()) != n)
            throw std::invalid_argument("optimal_assignment: matrix must be square");
        for (double c : row) {
            if (!std::isfinite(c)) throw std::invalid_argument("optimal_assignment: nonfinite cost");
            scale = std::max(scale, std::abs(c));
        }
    }

    std::vector<int> row_of_col;
    std::vector<double> u, v;
    hungarian(cost, row_of_col, u, v);

    std::vector<int> match_row(n, -1), match_col(n, -1);
    for (int j = 0; j < n; ++j) {
        match_row[row_of_col[j]] = j;
        match_col[j] = row_of_col[j];
    }

    // Optimal assignments are exactly the perfect matchings of the tight
    // subgraph (complementary slackness); walk rows in order and pick the
    // smallest tight column that still allows a perfect completion.
    double tol = 1e-11 * (1.0 + scale);
    std::vector<std::vector<int>> tight(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (cost[i][j] - u[i] - v[j] <= tol) tight[i].push_back(j);

    std::vector<char> fixed_row(n, 0);
    for (int i = 0; i < n; ++i) {
        int current = match_row[i];
        for (int j : tight[i]) {
            if (j >= current) break; // tight lists are ascending
            // Give column j to row i, free i's old column, and try to reroute
            // the displaced owner of j through the tight graph. Owners that
            // are already fixed keep their columns.
            int owner = match_col[j];
            if (fixed_row[owner]) continue;
            std::vector<int> save_row = match_row, save_col = match_col;
            match_col[current] = -1;
            match_row[i] = j;
            match_col[j] = i;
            match_row[owner] = -1;
            std::vector<char> visited(n, 0);
            visited[j] = 1;
            if (augment(tight, match_row, match_col, visited, owner, fixed_row)) break;
            match_row = std::move(save_row);
            match_col = std::move(save_col);
        }
        fixed_row[i] = 1;
    }

    AssignmentResult res;
    res.permutation = match_row;
    for (int i = 0; i < n; ++i) res.total_cost += cost[i][match_row[i]];
    return res;
}

} // namespace cfb

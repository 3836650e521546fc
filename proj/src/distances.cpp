#include "cfblocks/distances.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cfb {

std::vector<double> mid_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

DistanceMatrix rank_mahalanobis(const std::vector<std::vector<double>>& data,
                                const std::vector<std::size_t>& rows_a,
                                const std::vector<std::size_t>& rows_b,
                                const std::vector<int>& covariate_subset) {
    const std::size_t na = rows_a.size(), nb = rows_b.size();
    const std::size_t n = na + nb;
    if (n < 2) throw std::invalid_argument("rank_mahalanobis: pooled sample too small");

    // Pooled ranks per covariate; constant covariates carry no information
    // and are dropped before inverting.
    std::vector<std::vector<double>> ranks;
    ranks.reserve(covariate_subset.size());
    for (int k : covariate_subset) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < na; ++i) v[i] = data[rows_a[i]][k];
        for (std::size_t i = 0; i < nb; ++i) v[na + i] = data[rows_b[i]][k];
        auto r = mid_ranks(v);
        bool constant = true;
        for (std::size_t i = 1; i < n && constant; ++i) constant = r[i] == r[0];
        if (!constant) ranks.push_back(std::move(r));
    }
    const std::size_t K = ranks.size();
    DistanceMatrix out;
    out.d.assign(na, std::vector<double>(nb, 0.0));
    if (K == 0) return out;

    Eigen::MatrixXd R(n, K);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < n; ++i) R(i, k) = ranks[k][i];
    Eigen::RowVectorXd mean = R.colwise().mean();
    Eigen::MatrixXd C = R;
    C.rowwise() -= mean;
    Eigen::MatrixXd cov = (C.adjoint() * C) / static_cast<double>(n - 1);

    // Rescale the diagonal to the untied-rank variance (I^2 - 1)/12.
    const double vuntied = (static_cast<double>(n) * n - 1.0) / 12.0;
    Eigen::VectorXd rat(K);
    for (std::size_t k = 0; k < K; ++k) rat(k) = std::sqrt(vuntied / cov(k, k));
    Eigen::MatrixXd sigma = rat.asDiagonal() * cov * rat.asDiagonal();

    // Invert; fall back to the pseudo-inverse when ranks are collinear.
    Eigen::MatrixXd inv;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (ok) {
        inv = ldlt.solve(Eigen::MatrixXd::Identity(K, K));
        double resid = (sigma * inv - Eigen::MatrixXd::Identity(K, K)).norm();
        ok = std::isfinite(resid) && resid < 1e-6 * K;
    }
    if (!ok) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(sigma, Eigen::ComputeThinU | Eigen::ComputeThinV);
        double cut = 1e-12 * svd.singularValues()(0);
        Eigen::VectorXd si = svd.singularValues();
        for (int k = 0; k < si.size(); ++k) si(k) = si(k) > cut ? 1.0 / si(k) : 0.0;
        inv = svd.matrixV() * si.asDiagonal() * svd.matrixU().adjoint();
        out.used_pseudo_inverse = true;
    }

    // d(i,j) = (r_i - r_j)' inv (r_i - r_j), expanded through q and the cross
    // block so the whole matrix is three GEMMs.
    Eigen::MatrixXd Rinv = R * inv; // n x K
    Eigen::VectorXd q(n);
    for (std::size_t i = 0; i < n; ++i) q(i) = Rinv.row(i).dot(R.row(i));
    Eigen::MatrixXd cross = Rinv.topRows(na) * R.bottomRows(nb).transpose(); // na x nb
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) {
            double v = q(i) + q(na + j) - 2.0 * cross(i, j);
            out.d[i][j] = v > 0.0 ? v : 0.0; // clamp float dust
        }
    return out;
}

} // namespace cfb

#include "cfblocks/outcome.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cfblocks/distances.hpp"
#include "cfblocks/stats.hpp"

namespace cfb {

BlockDiD block_did(const Block& block, const StudyPopulation& pop) {
    BlockDiD out;
    out.block_id = block.block_id;
    out.type_id = block.type_id;
    for (const auto& m : block.members) {
        const auto& rec = pop.records[m.record_index];
        if (!rec.outcome)
            throw std::runtime_error("block " + std::to_string(block.block_id) +
                                     ": missing outcome for " + rec.id);
        out.value += m.sign * *rec.outcome;
    }
    return out;
}

std::vector<BlockDiD> all_block_dids(const BlockDesign& design, const StudyPopulation& pop) {
    std::vector<BlockDiD> out;
    out.reserve(design.blocks.size());
    for (const auto& b : design.blocks) out.push_back(block_did(b, pop));
    return out;
}

namespace {

// Signed ranks of the nonzero values: (rank, positive?) with mid-ranks.
struct SignedRanks {
    std::vector<double> ranks;
    std::vector<bool> positive;
    double t_plus = 0.0;
};

SignedRanks signed_ranks(const std::vector<double>& values) {
    SignedRanks sr;
    std::vector<double> absv;
    std::vector<bool> pos;
    for (double v : values) {
        if (v == 0.0) continue; // zeros dropped
        absv.push_back(std::abs(v));
        pos.push_back(v > 0.0);
    }
    auto r = mid_ranks(absv);
    sr.ranks = std::move(r);
    sr.positive = std::move(pos);
    for (std::size_t i = 0; i < sr.ranks.size(); ++i)
        if (sr.positive[i]) sr.t_plus += sr.ranks[i];
    return sr;
}

// Exact tail P(T >= t_obs) where T = sum of ranks with independent positive
// signs of probability pi. Ranks are mid-ranks, so double the scale to work
// on integers.
double exact_signed_rank_tail(const std::vector<double>& ranks, double pi, double t_obs) {
    long total2 = 0;
    std::vector<long> r2;
    r2.reserve(ranks.size());
    for (double r : ranks) {
        long v = std::lround(2.0 * r);
        r2.push_back(v);
        total2 += v;
    }
    std::vector<double> pmf(total2 + 1, 0.0);
    pmf[0] = 1.0;
    long reach = 0;
    for (long v : r2) {
        reach += v;
        for (long t = reach; t >= 0; --t) {
            double stay = pmf[t] * (1.0 - pi);
            double step = t >= v ? pmf[t - v] * pi : 0.0;
            pmf[t] = stay + step;
        }
    }
    long t2 = std::lround(2.0 * t_obs);
    double tail = 0.0;
    for (long t = total2; t >= 0; --t) {
        if (t < t2) break;
        tail += pmf[t];
    }
    return std::min(1.0, tail);
}

double normal_signed_rank_tail(const std::vector<double>& ranks, double pi, double t_obs) {
    double mu = 0.0, var = 0.0;
    for (double r : ranks) {
        mu += pi * r;
        var += pi * (1.0 - pi) * r * r;
    }
    if (var <= 0.0) return t_obs > mu ? 0.0 : 1.0;
    double z = (t_obs - 0.5 - mu) / std::sqrt(var); // continuity correction
    return std::min(1.0, std::max(0.0, 1.0 - normal_cdf(z)));
}

} // namespace

SensitivityResult signed_rank_gamma(const std::vector<double>& dids, double gamma,
                                    SignedRankMethod method) {
    if (gamma < 1.0) throw std::invalid_argument("signed_rank_gamma: gamma must be >= 1");
    if (dids.empty()) throw std::invalid_argument("signed_rank_gamma: no values");

    SensitivityResult res;
    res.gamma = gamma;
    SignedRanks sr = signed_ranks(dids);
    res.statistic = sr.t_plus;
    if (sr.ranks.empty()) {
        // All differences zero: no evidence either way.
        res.upper_p = res.lower_p = 1.0;
        return res;
    }
    bool exact = method == SignedRankMethod::Exact ||
                 (method == SignedRankMethod::Auto && sr.ranks.size() <= 20);
    double pi_hi = gamma / (1.0 + gamma);
    double pi_lo = 1.0 / (1.0 + gamma);
    if (exact) {
        res.upper_p = exact_signed_rank_tail(sr.ranks, pi_hi, sr.t_plus);
        res.lower_p = exact_signed_rank_tail(sr.ranks, pi_lo, sr.t_plus);
        res.exact = true;
    } else {
        res.upper_p = normal_signed_rank_tail(sr.ranks, pi_hi, sr.t_plus);
        res.lower_p = normal_signed_rank_tail(sr.ranks, pi_lo, sr.t_plus);
    }
    return res;
}

double amplify(double lambda_, double delta) {
    if (lambda_ < 1.0 || delta < 1.0) throw std::invalid_argument("amplify: arguments must be >= 1");
    return (lambda_ * delta + 1.0) / (lambda_ + delta);
}

namespace {

// Exact null distribution of the rank-sum of m values chosen from the pooled
// mid-ranks (scaled by 2 to integers): counts via subset-sum DP.
std::vector<double> ranksum_null_pmf(const std::vector<long>& ranks2, std::size_t m) {
    long total = std::accumulate(ranks2.begin(), ranks2.end(), 0L);
    std::vector<std::vector<double>> f(m + 1, std::vector<double>(total + 1, 0.0));
    f[0][0] = 1.0;
    long reach = 0;
    for (long v : ranks2) {
        reach += v;
        std::size_t jmax = m;
        for (std::size_t j = jmax; j >= 1; --j) {
            auto& cur = f[j];
            const auto& prev = f[j - 1];
            for (long t = std::min(reach, total); t >= v; --t) cur[t] += prev[t - v];
        }
    }
    return f[m];
}

} // namespace

RankSumResult wilcoxon_hl(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("wilcoxon_hl: empty sample");
    const std::size_t m = a.size(), n = b.size(), N = m + n;

    std::vector<double> pooled;
    pooled.reserve(N);
    pooled.insert(pooled.end(), a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    auto ranks = mid_ranks(pooled);

    RankSumResult res;
    for (std::size_t i = 0; i < m; ++i) res.statistic += ranks[i];

    // Tie correction for the variance.
    std::vector<double> sorted(pooled);
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < N;) {
        std::size_t j = i;
        while (j + 1 < N && sorted[j + 1] == sorted[i]) ++j;
        double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    double mu = static_cast<double>(m) * (N + 1) / 2.0;
    double var = static_cast<double>(m) * n / 12.0 *
                 ((N + 1) - tie_term / (static_cast<double>(N) * (N - 1)));

    if (m * n <= 10000) {
        std::vector<long> ranks2;
        ranks2.reserve(N);
        for (double r : ranks) ranks2.push_back(std::lround(2.0 * r));
        auto pmf = ranksum_null_pmf(ranks2, m);
        double total_count = 0.0;
        for (double c : pmf) total_count += c;
        long w2 = std::lround(2.0 * res.statistic);
        double lo = 0.0, hi = 0.0;
        for (long t = 0; t < static_cast<long>(pmf.size()); ++t) {
            if (t <= w2) lo += pmf[t];
            if (t >= w2) hi += pmf[t];
        }
        res.p_two_sided = std::min(1.0, 2.0 * std::min(lo, hi) / total_count);
        res.exact = true;
    } else if (var > 0.0) {
        double zlo = (res.statistic + 0.5 - mu) / std::sqrt(var);
        double zhi = (res.statistic - 0.5 - mu) / std::sqrt(var);
        double plo = normal_cdf(zlo);
        double phi = 1.0 - normal_cdf(zhi);
        res.p_two_sided = std::min(1.0, 2.0 * std::min(plo, phi));
    } else {
        res.p_two_sided = 1.0;
    }

    // Hodges-Lehmann: median of all pairwise differences a_i - b_j; CI by
    // inverting the rank-sum test at 5% (normal critical count).
    std::vector<double> diffs;
    diffs.reserve(m * n);
    for (double x : a)
        for (double y : b) diffs.push_back(x - y);
    std::sort(diffs.begin(), diffs.end());
    std::size_t mn = diffs.size();
    res.hl_estimate = mn % 2 == 1 ? diffs[mn / 2]
                                  : 0.5 * (diffs[mn / 2 - 1] + diffs[mn / 2]);
    double sigma_u = std::sqrt(static_cast<double>(m) * n * (N + 1) / 12.0);
    double k = static_cast<double>(m) * n / 2.0 - 1.959963984540054 * sigma_u;
    long klo = std::max(0L, static_cast<long>(std::floor(k)));
    long khi = static_cast<long>(mn) - 1 - klo;
    if (khi < klo) {
        klo = static_cast<long>(mn) / 2;
        khi = klo;
    }
    res.ci_low = diffs[klo];
    res.ci_high = diffs[khi];
    return res;
}

TailTransform tail_transform(const std::vector<double>& values, double quantile) {
    if (values.empty()) throw std::invalid_argument("tail_transform: no values");
    if (!(quantile > 0.0 && quantile < 1.0))
        throw std::invalid_argument("tail_transform: quantile must be inside (0,1)");
    std::vector<double> absv;
    absv.reserve(values.size());
    for (double v : values) absv.push_back(std::abs(v));
    TailTransform out;
    out.beta = quantile_type7(absv, quantile);
    out.values.reserve(values.size());
    if (out.beta == 0.0) {
        out.values = values; // all zeros: identity
        return out;
    }
    for (double v : values) {
        double av = std::abs(v);
        if (av <= out.beta) out.values.push_back(v);
        else out.values.push_back(std::copysign(2.0 * out.beta - out.beta * out.beta / av, v));
    }
    return out;
}

DidSummary did_summary(const std::vector<double>& dids) {
    if (dids.empty()) throw std::invalid_argument("did_summary: no values");
    DidSummary s;
    s.count = static_cast<long>(dids.size());
    s.median = quantile_type7(dids, 0.5);
    s.q25 = quantile_type7(dids, 0.25);
    s.q75 = quantile_type7(dids, 0.75);
    s.q10 = quantile_type7(dids, 0.10);
    s.q90 = quantile_type7(dids, 0.90);
    return s;
}

} // namespace cfb

#include "cfblocks/balance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>

#include "cfblocks/csv.hpp"
#include "cfblocks/rng.hpp"
#include "cfblocks/stats.hpp"

namespace cfb {

ContrastSplit split_by_contrast(const BlockDesign& design, int type_id) {
    ContrastSplit split;
    bool found = false;
    for (const auto& b : design.blocks) {
        if (b.type_id != type_id) continue;
        found = true;
        for (const auto& m : b.members)
            (m.sign > 0 ? split.plus : split.minus).push_back(m.record_index);
    }
    if (!found) throw std::invalid_argument("split_by_contrast: no blocks of type " +
                                            std::to_string(type_id));
    return split;
}

FeatureSpec parse_feature(const std::string& text) {
    FeatureSpec spec;
    spec.name = text;
    std::size_t start = 0;
    bool any = false;
    while (start <= text.size()) {
        std::size_t stop = text.find('*', start);
        if (stop == std::string::npos) stop = text.size();
        std::string token = text.substr(start, stop - start);
        // Trim spaces around the token.
        while (!token.empty() && token.front() == ' ') token.erase(token.begin());
        while (!token.empty() && token.back() == ' ') token.pop_back();
        if (token.empty()) throw std::invalid_argument("empty token in feature spec '" + text + "'");
        any = true;
        if (token == "LE") spec.w_prime = !spec.w_prime;          // w'^2 = 1
        else if (token == "IU") spec.w_dprime = !spec.w_dprime;
        else if (token == "TIME") spec.w_tprime = !spec.w_tprime;
        else if (spec.covariate.empty()) spec.covariate = token;
        else
            throw std::invalid_argument("feature spec '" + text +
                                        "' names more than one covariate");
        if (stop == text.size()) break;
        start = stop + 1;
    }
    if (!any) throw std::invalid_argument("empty feature spec");
    return spec;
}

std::vector<double> interaction_feature(const StudyPopulation& pop, const FeatureSpec& spec,
                                        const std::vector<std::size_t>& rows) {
    int k = -1;
    if (!spec.covariate.empty()) {
        k = pop.covariate_index(spec.covariate);
        if (k < 0) throw std::invalid_argument("unknown covariate '" + spec.covariate +
                                               "' in feature " + spec.name);
    }
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) {
        const auto& rec = pop.records[r];
        double v = k >= 0 ? rec.x[k] : 1.0;
        if (spec.w_prime) v *= rec.w_prime;
        if (spec.w_dprime) v *= rec.w_dprime;
        if (spec.w_tprime) v *= rec.w_tprime;
        out.push_back(v);
    }
    return out;
}

double permutation_balance_pvalue(const std::vector<double>& plus,
                                  const std::vector<double>& minus, int draws,
                                  std::uint64_t seed) {
    if (plus.empty() || minus.empty())
        throw std::invalid_argument("permutation test needs nonempty samples");
    if (draws < 1000) throw std::invalid_argument("permutation test needs at least 1000 draws");

    std::vector<double> pooled;
    pooled.reserve(plus.size() + minus.size());
    pooled.insert(pooled.end(), plus.begin(), plus.end());
    pooled.insert(pooled.end(), minus.begin(), minus.end());
    bool degenerate = true;
    for (double v : pooled) degenerate = degenerate && v == pooled[0];
    if (degenerate) return 1.0;

    const std::size_t n_plus = plus.size(), n = pooled.size();
    const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
    auto stat_from_sum = [&](double sum_plus) {
        double mp = sum_plus / static_cast<double>(n_plus);
        double mm = (total - sum_plus) / static_cast<double>(n - n_plus);
        return std::abs(mp - mm);
    };
    double obs = stat_from_sum(std::accumulate(plus.begin(), plus.end(), 0.0));
    double tol = 1e-12 * (1.0 + obs);

    Rng rng(seed);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    long count = 0;
    std::vector<std::pair<std::size_t, std::size_t>> swaps;
    swaps.reserve(n_plus);
    for (int d = 0; d < draws; ++d) {
        // Partial Fisher-Yates: select n_plus indices, then undo the swaps so
        // the next draw starts from the identity again.
        swaps.clear();
        double sum_plus = 0.0;
        for (std::size_t t = 0; t < n_plus; ++t) {
            std::size_t j = t + static_cast<std::size_t>(rng.below(n - t));
            swaps.push_back({t, j});
            std::swap(idx[t], idx[j]);
            sum_plus += pooled[idx[t]];
        }
        if (stat_from_sum(sum_plus) >= obs - tol) ++count;
        for (auto it = swaps.rbegin(); it != swaps.rend(); ++it) std::swap(idx[it->first], idx[it->second]);
    }
    return static_cast<double>(count + 1) / static_cast<double>(draws + 1);
}

double truncated_product(const std::vector<double>& pvalues, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("truncated_product: bad tau");
    const int L = static_cast<int>(pvalues.size());
    if (L == 0) throw std::invalid_argument("truncated_product: no P-values");
    double w = 1.0;
    int below = 0;
    for (double p : pvalues) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("truncated_product: bad P-value");
        if (p <= tau) {
            w *= p;
            ++below;
        }
    }
    if (below == 0) return 1.0;
    if (w <= 0.0) return 0.0;
    if (w >= 1.0) return 1.0;

    // P(W <= w) for W the product of the uniforms at or below tau among L
    // independent uniforms (Zaykin's closed form).
    const double log_tau = std::log(tau);
    const double log_w = std::log(w);
    double total = 0.0;
    double binom = static_cast<double>(L); // C(L,1)
    for (int k = 1; k <= L; ++k) {
        double term;
        double k_log_tau = k * log_tau;
        if (log_w >= k_log_tau) {
            term = std::exp(k_log_tau);
        } else {
            // w * sum_{s<k} (k ln tau - ln w)^s / s!
            double y = k_log_tau - log_w; // > 0
            double sum = 1.0, t = 1.0;
            for (int s = 1; s < k; ++s) {
                t *= y / s;
                sum += t;
            }
            term = w * sum;
        }
        total += binom * std::pow(1.0 - tau, L - k) * term;
        binom *= static_cast<double>(L - k) / static_cast<double>(k + 1);
    }
    return std::min(1.0, total);
}

BalanceTable balance_table(const BlockDesign& design, const StudyPopulation& pop,
                           const std::vector<std::string>& feature_specs,
                           const BalanceOptions& opt) {
    BalanceTable table;
    for (int t = 1; t <= static_cast<int>(design.per_type_counts.size()); ++t)
        if (design.per_type_counts[t - 1] > 0) table.type_ids.push_back(t);
    if (table.type_ids.empty()) throw std::invalid_argument("balance_table: empty design");

    std::vector<ContrastSplit> splits;
    splits.reserve(table.type_ids.size());
    for (int t : table.type_ids) splits.push_back(split_by_contrast(design, t));

    table.rows.resize(feature_specs.size());
    std::string seed_tag = "balance/" + std::to_string(opt.seed) + "/";

    auto fill_row = [&](std::size_t ri) {
        BalanceRow& row = table.rows[ri];
        row.feature = parse_feature(feature_specs[ri]);
        row.cells.resize(table.type_ids.size());
        std::vector<double> ps;
        for (std::size_t ti = 0; ti < table.type_ids.size(); ++ti) {
            auto plus = interaction_feature(pop, row.feature, splits[ti].plus);
            auto minus = interaction_feature(pop, row.feature, splits[ti].minus);
            BalanceCell& cell = row.cells[ti];
            cell.seed = fnv1a(seed_tag + row.feature.name + "#" + std::to_string(table.type_ids[ti]));
            cell.p_value = permutation_balance_pvalue(plus, minus, opt.draws, cell.seed);
            cell.mean_plus = mean_of(plus);
            cell.mean_minus = mean_of(minus);
            std::vector<double> pooled = plus;
            pooled.insert(pooled.end(), minus.begin(), minus.end());
            double sd = sample_sd(pooled);
            cell.std_diff = sd > 0.0 ? (cell.mean_plus - cell.mean_minus) / sd : 0.0;
            ps.push_back(cell.p_value);
        }
        row.combined = truncated_product(ps, opt.tau);
    };

    if (opt.threads > 1 && table.rows.size() > 1) {
        std::vector<std::future<void>> futs;
        std::atomic<std::size_t> next{0};
        int workers = std::min<int>(opt.threads, static_cast<int>(table.rows.size()));
        for (int wkr = 0; wkr < workers; ++wkr)
            futs.push_back(std::async(std::launch::async, [&]() {
                for (std::size_t i = next.fetch_add(1); i < table.rows.size();
                     i = next.fetch_add(1))
                    fill_row(i);
            }));
        for (auto& f : futs) f.get();
    } else {
        for (std::size_t i = 0; i < table.rows.size(); ++i) fill_row(i);
    }

    std::vector<double> all_ps;
    for (const auto& row : table.rows)
        for (const auto& cell : row.cells) all_ps.push_back(cell.p_value);
    if (!all_ps.empty()) {
        table.median_p = quantile_type7(all_ps, 0.5);
        table.q25_p = quantile_type7(all_ps, 0.25);
        table.q75_p = quantile_type7(all_ps, 0.75);
        table.min_p = *std::min_element(all_ps.begin(), all_ps.end());
    }
    return table;
}

void save_balance_csv(const std::string& path, const BalanceTable& table) {
    CsvTable t;
    t.header.push_back("feature");
    for (int ti : table.type_ids) t.header.push_back("type" + std::to_string(ti));
    t.header.push_back("combined");
    for (const auto& row : table.rows) {
        std::vector<std::string> r;
        r.push_back(row.feature.name);
        for (const auto& cell : row.cells) r.push_back(format_double(cell.p_value));
        r.push_back(format_double(row.combined));
        t.rows.push_back(std::move(r));
    }
    write_csv(path, t);
}

} // namespace cfb

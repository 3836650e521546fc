#include "cfblocks/population.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "cfblocks/csv.hpp"

namespace cfb {

static const std::vector<std::string> kGroupLabels = {
    "BRbar", "Brbar", "bRbar", "brbar", "BR", "Br", "bR", "br"};

int derive_group(int w_prime, int w_dprime, int w_tprime) {
    auto check = [](int w, const char* name) {
        if (w != 1 && w != -1)
            throw std::invalid_argument(std::string("eligibility covariate ") + name +
                                        " must be +1 or -1");
    };
    check(w_prime, "w_prime");
    check(w_dprime, "w_dprime");
    check(w_tprime, "w_tprime");
    int base = (w_tprime == 1) ? 4 : 0;
    int cell = (w_prime == 1 ? 0 : 1) + (w_dprime == 1 ? 0 : 2);
    return base + cell + 1;
}

const std::string& group_label(int group) {
    if (group < 1 || group > 8) throw std::invalid_argument("group index out of range");
    return kGroupLabels[group - 1];
}

std::vector<int> StudyPopulation::group_counts() const {
    std::vector<int> counts(8, 0);
    for (const auto& r : records) ++counts[r.group - 1];
    return counts;
}

std::vector<std::size_t> StudyPopulation::indices_of_group(int group) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].group == group) idx.push_back(i);
    return idx;
}

int StudyPopulation::covariate_index(const std::string& name) const {
    for (std::size_t k = 0; k < covariate_names.size(); ++k)
        if (covariate_names[k] == name) return static_cast<int>(k);
    return -1;
}

namespace {

int parse_eligibility(const std::string& field, bool zero_one, const std::string& where) {
    bool ok = false;
    double v = parse_double(field, ok);
    if (!ok) throw std::runtime_error("non-numeric eligibility value at " + where);
    if (zero_one) {
        if (v == 0.0) return -1;
        if (v == 1.0) return 1;
        throw std::runtime_error("eligibility value outside {0,1} at " + where);
    }
    if (v == 1.0) return 1;
    if (v == -1.0) return -1;
    throw std::runtime_error("eligibility value outside {-1,+1} at " + where);
}

} // namespace

StudyPopulation load_population(const std::string& path, const PopulationSchema& schema) {
    CsvTable t = read_csv(path);
    const std::vector<std::string> fixed = {"id", "w_prime", "w_dprime", "w_tprime", "outcome"};
    std::vector<int> fixed_idx;
    for (const auto& name : fixed) {
        int j = t.column(name);
        if (j < 0) throw std::runtime_error("missing column '" + name + "' in " + path);
        fixed_idx.push_back(j);
    }
    int group_col = t.column("group"); // optional on input; re-derived anyway

    StudyPopulation pop;
    std::vector<int> cov_idx;
    if (schema.covariate_names.empty()) {
        for (std::size_t j = 0; j < t.header.size(); ++j) {
            bool is_fixed = static_cast<int>(j) == group_col;
            for (int f : fixed_idx) is_fixed = is_fixed || static_cast<int>(j) == f;
            if (!is_fixed) {
                pop.covariate_names.push_back(t.header[j]);
                cov_idx.push_back(static_cast<int>(j));
            }
        }
    } else {
        for (const auto& name : schema.covariate_names) {
            int j = t.column(name);
            if (j < 0) throw std::runtime_error("missing covariate column '" + name + "' in " + path);
            pop.covariate_names.push_back(name);
            cov_idx.push_back(j);
        }
    }

    std::unordered_set<std::string> seen_ids;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        if (row.size() != t.header.size())
            throw std::runtime_error("ragged row " + std::to_string(r + 2) + " in " + path);
        auto where = [&](const std::string& col) {
            return "row " + std::to_string(r + 2) + ", column " + col;
        };
        IndividualRecord rec;
        rec.id = row[fixed_idx[0]];
        if (rec.id.empty()) throw std::runtime_error("empty id at row " + std::to_string(r + 2));
        if (!seen_ids.insert(rec.id).second)
            throw std::runtime_error("duplicate id '" + rec.id + "' at row " + std::to_string(r + 2));
        rec.w_prime = parse_eligibility(row[fixed_idx[1]], schema.zero_one_eligibility, where("w_prime"));
        rec.w_dprime = parse_eligibility(row[fixed_idx[2]], schema.zero_one_eligibility, where("w_dprime"));
        rec.w_tprime = parse_eligibility(row[fixed_idx[3]], schema.zero_one_eligibility, where("w_tprime"));
        const std::string& out_field = row[fixed_idx[4]];
        if (!out_field.empty()) {
            bool ok = false;
            double v = parse_double(out_field, ok);
            if (!ok) throw std::runtime_error("non-numeric outcome at " + where("outcome"));
            rec.outcome = v;
        }
        rec.x.reserve(cov_idx.size());
        for (std::size_t k = 0; k < cov_idx.size(); ++k) {
            bool ok = false;
            double v = parse_double(row[cov_idx[k]], ok);
            if (!ok)
                throw std::runtime_error("non-numeric covariate at " + where(pop.covariate_names[k]));
            rec.x.push_back(v);
        }
        rec.group = derive_group(rec.w_prime, rec.w_dprime, rec.w_tprime);
        pop.records.push_back(std::move(rec));
    }
    return pop;
}

void save_population(const std::string& path, const StudyPopulation& pop) {
    CsvTable t;
    t.header = {"id", "w_prime", "w_dprime", "w_tprime", "outcome", "group"};
    for (const auto& n : pop.covariate_names) t.header.push_back(n);
    for (const auto& rec : pop.records) {
        std::vector<std::string> row;
        row.push_back(rec.id);
        row.push_back(std::to_string(rec.w_prime));
        row.push_back(std::to_string(rec.w_dprime));
        row.push_back(std::to_string(rec.w_tprime));
        row.push_back(rec.outcome ? format_double(*rec.outcome) : std::string());
        row.push_back(std::to_string(rec.group));
        for (double v : rec.x) row.push_back(format_double(v));
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

Template build_template(const StudyPopulation& pop) {
    const std::size_t K = pop.covariate_dim();
    const std::size_t N = pop.records.size();
    auto counts = pop.group_counts();
    for (int g = 1; g <= 8; ++g)
        if (counts[g - 1] == 0)
            throw std::runtime_error("build_template: group " + group_label(g) + " is empty");

    Template tpl;
    tpl.means.assign(K, 0.0);
    tpl.scales.assign(K, 0.0);

    std::vector<std::vector<double>> group_sums(8, std::vector<double>(K, 0.0));
    std::vector<double> pooled_sum(K, 0.0);
    for (const auto& rec : pop.records)
        for (std::size_t k = 0; k < K; ++k) {
            group_sums[rec.group - 1][k] += rec.x[k];
            pooled_sum[k] += rec.x[k];
        }
    for (std::size_t k = 0; k < K; ++k) {
        double m = 0.0;
        for (int g = 0; g < 8; ++g) m += group_sums[g][k] / counts[g];
        tpl.means[k] = m / 8.0;
    }
    // Pooled sample standard deviation (n-1 denominator).
    if (N < 2) throw std::runtime_error("build_template: need at least two records");
    for (std::size_t k = 0; k < K; ++k) {
        double mean = pooled_sum[k] / static_cast<double>(N);
        double ss = 0.0;
        for (const auto& rec : pop.records) {
            double d = rec.x[k] - mean;
            ss += d * d;
        }
        double sd = std::sqrt(ss / static_cast<double>(N - 1));
        if (!(sd > 0.0))
            throw std::runtime_error("build_template: covariate '" + pop.covariate_names[k] +
                                     "' is constant");
        tpl.scales[k] = sd;
    }
    return tpl;
}

StudyPopulation standardize(const StudyPopulation& pop, const Template& tpl) {
    const std::size_t K = pop.covariate_dim();
    if (tpl.means.size() != K || tpl.scales.size() != K)
        throw std::invalid_argument("standardize: template dimension mismatch");
    for (double s : tpl.scales)
        if (!(s > 0.0)) throw std::invalid_argument("standardize: template scale must be positive");
    StudyPopulation out = pop;
    for (auto& rec : out.records)
        for (std::size_t k = 0; k < K; ++k) rec.x[k] = (rec.x[k] - tpl.means[k]) / tpl.scales[k];
    return out;
}

void check_population(const StudyPopulation& pop) {
    std::unordered_set<std::string> ids;
    for (const auto& rec : pop.records) {
        if (rec.x.size() != pop.covariate_dim())
            throw std::runtime_error("record " + rec.id + " has wrong covariate dimension");
        if (!ids.insert(rec.id).second) throw std::runtime_error("duplicate id " + rec.id);
        int g = derive_group(rec.w_prime, rec.w_dprime, rec.w_tprime);
        if (g != rec.group)
            throw std::runtime_error("record " + rec.id + " group inconsistent with eligibility");
    }
}

} // namespace cfb

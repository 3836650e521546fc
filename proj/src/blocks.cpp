#include "cfblocks/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "cfblocks/assignment.hpp"
#include "cfblocks/csv.hpp"
#include "cfblocks/design_matrix.hpp"
#include "cfblocks/distances.hpp"

namespace cfb {

std::vector<BlockTypePlan> default_block_plan() {
    // After-period treatment pairs in lexicographic order: (BR,Br), (BR,bR),
    // (BR,br), (Br,bR), (Br,br), (bR,br); before-period counterparts are the
    // same cells shifted down by four.
    std::vector<std::pair<int, int>> pairs = {{5, 6}, {5, 7}, {5, 8}, {6, 7}, {6, 8}, {7, 8}};
    std::vector<BlockTypePlan> plan;
    int t = 1;
    for (auto [ga, gb] : pairs) {
        BlockTypePlan p;
        p.type_id = t++;
        p.roles = {BlockRole{ga, +1}, BlockRole{gb, -1}, BlockRole{ga - 4, -1},
                   BlockRole{gb - 4, +1}};
        plan.push_back(p);
    }
    return plan;
}

void validate_plan(const std::vector<BlockTypePlan>& plan, int P) {
    if (plan.empty()) throw std::invalid_argument("block plan is empty");
    std::vector<int> appearances(9, 0);
    std::vector<char> seen_type(plan.size() + 1, 0);
    for (const auto& p : plan) {
        if (p.type_id < 1 || p.type_id > static_cast<int>(plan.size()) || seen_type[p.type_id])
            throw std::invalid_argument("block plan type ids must be 1..T and unique");
        seen_type[p.type_id] = 1;
        int sign_sum = 0, after = 0;
        for (const auto& r : p.roles) {
            if (r.group < 1 || r.group > 8) throw std::invalid_argument("plan group out of range");
            if (r.sign != 1 && r.sign != -1) throw std::invalid_argument("plan sign must be +-1");
            sign_sum += r.sign;
            if (r.group >= 5) ++after;
            ++appearances[r.group];
        }
        if (sign_sum != 0) throw std::invalid_argument("plan signs must sum to zero per type");
        if (after != 2)
            throw std::invalid_argument("each block type needs two after and two before groups");
    }
    for (int g = 1; g <= 8; ++g)
        if (appearances[g] != 0 && appearances[g] != P)
            throw std::invalid_argument("group " + group_label(g) + " appears in " +
                                        std::to_string(appearances[g]) + " types, expected " +
                                        std::to_string(P));
}

std::vector<std::vector<int>> plan_types_per_group(const std::vector<BlockTypePlan>& plan) {
    std::vector<std::vector<int>> types(8);
    std::vector<const BlockTypePlan*> ordered;
    for (const auto& p : plan) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(),
              [](const BlockTypePlan* a, const BlockTypePlan* b) { return a->type_id < b->type_id; });
    for (const BlockTypePlan* p : ordered)
        for (const auto& r : p->roles) types[r.group - 1].push_back(p->type_id);
    return types;
}

namespace {

std::vector<std::vector<double>> covariate_rows(const StudyPopulation& pop) {
    std::vector<std::vector<double>> rows;
    rows.reserve(pop.records.size());
    for (const auto& r : pop.records) rows.push_back(r.x);
    return rows;
}

} // namespace

std::vector<int> pairing_covariates_for(const StudyPopulation& pop, const AssemblyOptions& opt,
                                        const std::vector<int>& side_a_groups,
                                        const std::vector<int>& side_b_groups) {
    std::vector<double> zeta_le, zeta_iu;
    Contrast side;
    for (int g : side_a_groups) {
        int cell = (g - 1) % 4;
        zeta_le.push_back(cell % 2 == 0 ? 1.0 : -1.0);
        zeta_iu.push_back(cell / 2 == 0 ? 1.0 : -1.0);
        side.weights.push_back(1.0);
    }
    for (int g : side_b_groups) {
        int cell = (g - 1) % 4;
        zeta_le.push_back(cell % 2 == 0 ? 1.0 : -1.0);
        zeta_iu.push_back(cell / 2 == 0 ? 1.0 : -1.0);
        side.weights.push_back(-1.0);
    }
    bool le_ok = !contrast_orthogonality(side, zeta_le).aliased;
    bool iu_ok = !contrast_orthogonality(side, zeta_iu).aliased;

    std::vector<int> covs;
    for (std::size_t k = 0; k < pop.covariate_names.size(); ++k) {
        const std::string& name = pop.covariate_names[k];
        if (opt.covariate_policy) {
            bool wanted = false;
            for (const auto& sel : *opt.covariate_policy) wanted = wanted || sel == name;
            if (!wanted) continue;
        }
        char link = 0;
        for (const auto& [cname, w] : opt.eligibility_links)
            if (cname == name) link = w;
        if (link == 'p' && !le_ok) continue;
        if (link == 'd' && !iu_ok) continue;
        covs.push_back(static_cast<int>(k));
    }
    return covs;
}

std::vector<std::pair<int, int>> pair_samples(const std::vector<std::vector<double>>& data,
                                              const std::vector<std::size_t>& rows_a,
                                              const std::vector<std::size_t>& rows_b,
                                              const std::vector<int>& covariates) {
    if (rows_a.size() != rows_b.size())
        throw std::invalid_argument("pair_samples: size mismatch");
    const int n = static_cast<int>(rows_a.size());
    std::vector<std::pair<int, int>> out;
    if (n == 0) return out;
    DistanceMatrix dm = rank_mahalanobis(data, rows_a, rows_b, covariates);
    AssignmentResult as = optimal_assignment(dm.d);
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back({i, as.permutation[i]});
    return out;
}

std::vector<std::pair<int, int>> pair_of_pairs(
    const std::vector<std::vector<double>>& data,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs_a,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs_b,
    const std::vector<int>& covariates) {
    if (pairs_a.size() != pairs_b.size())
        throw std::invalid_argument("pair_of_pairs: size mismatch");
    const int n = static_cast<int>(pairs_a.size());
    std::vector<std::pair<int, int>> out;
    if (n == 0) return out;

    std::vector<std::size_t> units_a, units_b;
    units_a.reserve(2 * n);
    units_b.reserve(2 * n);
    for (auto [u1, u2] : pairs_a) {
        units_a.push_back(u1);
        units_a.push_back(u2);
    }
    for (auto [v1, v2] : pairs_b) {
        units_b.push_back(v1);
        units_b.push_back(v2);
    }
    DistanceMatrix dm = rank_mahalanobis(data, units_a, units_b, covariates);

    // Cross-pair distance: the four unit distances crossing the two pairs.
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
            cost[j][l] = dm.d[2 * j][2 * l] + dm.d[2 * j][2 * l + 1] + dm.d[2 * j + 1][2 * l] +
                         dm.d[2 * j + 1][2 * l + 1];
    AssignmentResult as = optimal_assignment(cost);
    out.reserve(n);
    for (int j = 0; j < n; ++j) out.push_back({j, as.permutation[j]});
    return out;
}

BlockDesign assemble_design(const StudyPopulation& pop,
                            const std::vector<std::vector<std::vector<std::size_t>>>& samples,
                            const std::vector<BlockTypePlan>& plan, const AssemblyOptions& opt) {
    if (samples.size() != 8) throw std::invalid_argument("assemble_design: need samples for 8 groups");
    int P = 0;
    for (const auto& group_samples : samples)
        P = std::max(P, static_cast<int>(group_samples.size()));
    validate_plan(plan, P);

    // Shared sample size.
    std::size_t s = std::string::npos;
    for (const auto& group_samples : samples)
        for (const auto& sample : group_samples) {
            if (s == std::string::npos) s = sample.size();
            if (sample.size() != s)
                throw std::invalid_argument("assemble_design: samples must share one size");
        }
    if (s == std::string::npos) throw std::invalid_argument("assemble_design: no samples");

    auto types_per_group = plan_types_per_group(plan);
    for (int g = 1; g <= 8; ++g)
        if (!types_per_group[g - 1].empty() &&
            types_per_group[g - 1].size() != samples[g - 1].size())
            throw std::invalid_argument("assemble_design: group " + group_label(g) + " provides " +
                                        std::to_string(samples[g - 1].size()) +
                                        " samples but the plan uses " +
                                        std::to_string(types_per_group[g - 1].size()));

    auto sample_for = [&](int group, int type_id) -> const std::vector<std::size_t>& {
        const auto& types = types_per_group[group - 1];
        for (std::size_t p = 0; p < types.size(); ++p)
            if (types[p] == type_id) return samples[group - 1][p];
        throw std::logic_error("plan slot lookup failed");
    };

    auto data = covariate_rows(pop);
    std::vector<const BlockTypePlan*> ordered;
    for (const auto& p : plan) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(),
              [](const BlockTypePlan* a, const BlockTypePlan* b) { return a->type_id < b->type_id; });

    std::vector<std::vector<Block>> per_type(ordered.size());
    auto build_type = [&](std::size_t ti) {
        const BlockTypePlan& p = *ordered[ti];
        const BlockRole &after_hi = p.roles[0], &after_lo = p.roles[1];
        const BlockRole &before_lo = p.roles[2], &before_hi = p.roles[3];
        const auto& sel_after_hi = sample_for(after_hi.group, p.type_id);
        const auto& sel_after_lo = sample_for(after_lo.group, p.type_id);
        const auto& sel_before_lo = sample_for(before_lo.group, p.type_id);
        const auto& sel_before_hi = sample_for(before_hi.group, p.type_id);

        // Before-after pairing within each treatment cell.
        auto covs_a = pairing_covariates_for(pop, opt, {before_lo.group}, {after_hi.group});
        auto pa = pair_samples(data, sel_before_lo, sel_after_hi, covs_a);
        auto covs_b = pairing_covariates_for(pop, opt, {before_hi.group}, {after_lo.group});
        auto pb = pair_samples(data, sel_before_hi, sel_after_lo, covs_b);

        std::vector<std::pair<std::size_t, std::size_t>> pairs_a, pairs_b;
        pairs_a.reserve(pa.size());
        pairs_b.reserve(pb.size());
        for (auto [i, j] : pa) pairs_a.push_back({sel_before_lo[i], sel_after_hi[j]});
        for (auto [i, j] : pb) pairs_b.push_back({sel_before_hi[i], sel_after_lo[j]});

        // Pairing of pairs across the two treatment cells.
        auto covs_cross = pairing_covariates_for(pop, opt, {after_hi.group, before_lo.group},
                                                 {after_lo.group, before_hi.group});
        auto pp = pair_of_pairs(data, pairs_a, pairs_b, covs_cross);

        std::vector<Block>& blocks = per_type[ti];
        blocks.reserve(pp.size());
        for (auto [j, l] : pp) {
            Block b;
            b.type_id = p.type_id;
            b.members[0] = {pairs_a[j].second, after_hi.group, after_hi.sign};
            b.members[1] = {pairs_b[l].second, after_lo.group, after_lo.sign};
            b.members[2] = {pairs_a[j].first, before_lo.group, before_lo.sign};
            b.members[3] = {pairs_b[l].first, before_hi.group, before_hi.sign};
            blocks.push_back(b);
        }
    };

    if (opt.threads > 1) {
        std::vector<std::future<void>> futs;
        for (std::size_t ti = 0; ti < ordered.size(); ++ti)
            futs.push_back(std::async(std::launch::async, build_type, ti));
        for (auto& f : futs) f.get();
    } else {
        for (std::size_t ti = 0; ti < ordered.size(); ++ti) build_type(ti);
    }

    BlockDesign design;
    design.per_type_counts.assign(ordered.size(), 0);
    long next_id = 1;
    for (std::size_t ti = 0; ti < ordered.size(); ++ti) {
        for (Block& b : per_type[ti]) {
            b.block_id = next_id++;
            design.per_type_counts[b.type_id - 1] += 1;
            design.blocks.push_back(b);
        }
    }
    std::string err = verify_block_design(design, plan, pop);
    if (!err.empty()) throw std::logic_error("assemble_design produced invalid design: " + err);
    return design;
}

std::string verify_block_design(const BlockDesign& design, const std::vector<BlockTypePlan>& plan,
                                const StudyPopulation& pop) {
    std::map<int, const BlockTypePlan*> by_type;
    for (const auto& p : plan) by_type[p.type_id] = &p;
    std::map<int, std::vector<char>> used_per_type;
    for (const auto& b : design.blocks) {
        auto it = by_type.find(b.type_id);
        if (it == by_type.end()) return "block references unknown type";
        const BlockTypePlan& p = *it->second;
        std::multiset<int> plan_groups, block_groups;
        for (const auto& r : p.roles) plan_groups.insert(r.group);
        int sign_sum = 0;
        for (const auto& m : b.members) {
            if (m.record_index >= pop.records.size()) return "member index out of range";
            if (pop.records[m.record_index].group != m.group)
                return "member group does not match the population record";
            block_groups.insert(m.group);
            sign_sum += m.sign;
            auto& used = used_per_type[b.type_id];
            if (used.empty()) used.assign(pop.records.size(), 0);
            if (used[m.record_index]) return "individual used twice within a block type";
            used[m.record_index] = 1;
        }
        if (plan_groups != block_groups) return "block group multiset differs from the plan";
        if (sign_sum != 0) return "block signs do not sum to zero";
    }
    return {};
}

void save_block_design(const std::string& path, const BlockDesign& design,
                       const StudyPopulation& pop) {
    CsvTable t;
    t.header = {"block_id", "type_id", "role_group", "sign", "individual_id"};
    for (const auto& b : design.blocks)
        for (const auto& m : b.members)
            t.rows.push_back({std::to_string(b.block_id), std::to_string(b.type_id),
                              group_label(m.group), std::to_string(m.sign),
                              pop.records[m.record_index].id});
    write_csv(path, t);
}

BlockDesign load_block_design(const std::string& path, const StudyPopulation& pop) {
    CsvTable t = read_csv(path);
    for (const auto& col : {"block_id", "type_id", "role_group", "sign", "individual_id"})
        if (t.column(col) < 0) throw std::runtime_error("design CSV missing column " + std::string(col));
    std::unordered_map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < pop.records.size(); ++i) index_of[pop.records[i].id] = i;

    int cb = t.column("block_id"), ct = t.column("type_id"), cg = t.column("role_group"),
        cs = t.column("sign"), ci = t.column("individual_id");
    std::map<long, Block> blocks;
    std::map<long, int> member_count;
    int max_type = 0;
    for (const auto& row : t.rows) {
        long id = std::stol(row[cb]);
        Block& b = blocks[id];
        b.block_id = id;
        b.type_id = std::stoi(row[ct]);
        max_type = std::max(max_type, b.type_id);
        auto it = index_of.find(row[ci]);
        if (it == index_of.end())
            throw std::runtime_error("design references unknown individual " + row[ci]);
        int g = 0;
        for (int cand = 1; cand <= 8; ++cand)
            if (group_label(cand) == row[cg]) g = cand;
        if (g == 0) throw std::runtime_error("unknown role_group " + row[cg]);
        int& cnt = member_count[id];
        if (cnt >= 4) throw std::runtime_error("block " + row[cb] + " has more than 4 members");
        b.members[cnt++] = {it->second, g, std::stoi(row[cs])};
    }
    BlockDesign design;
    design.per_type_counts.assign(max_type, 0);
    for (auto& [id, b] : blocks) {
        if (member_count[id] != 4)
            throw std::runtime_error("block " + std::to_string(id) + " has fewer than 4 members");
        design.per_type_counts[b.type_id - 1] += 1;
        design.blocks.push_back(b);
    }
    return design;
}

} // namespace cfb

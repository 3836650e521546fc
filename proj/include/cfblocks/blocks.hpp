#pragma once

// Step 3: assemble the selected samples into blocks of four. Within a block
// type, each treatment's after-period sample is optimally paired with its
// before-period counterpart (rank-Mahalanobis distance, optimal assignment),
// then the two pair sets are paired with each other using the summed
// cross-pair distances. Eligibility-linked covariates take part in a
// distance only when the two sides agree on the linked eligibility value;
// that inclusion rule is computed from the contrast algebra, not hardcoded.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cfblocks/population.hpp"

namespace cfb {

struct BlockRole {
    int group = 0; // 1..8
    int sign = 0;  // +1 / -1
};

struct BlockTypePlan {
    int type_id = 0;
    // Order: after(+1), after(-1), before(-1), before(+1).
    std::array<BlockRole, 4> roles;
};

// The six block types pairing each after-period treatment pair with its
// before-period counterparts.
std::vector<BlockTypePlan> default_block_plan();

void validate_plan(const std::vector<BlockTypePlan>& plan, int P);

// For group g (1..8), the ascending list of plan types that use it; the p-th
// sample of the group feeds the p-th of these types.
std::vector<std::vector<int>> plan_types_per_group(const std::vector<BlockTypePlan>& plan);

struct BlockMember {
    std::size_t record_index = 0; // into StudyPopulation::records
    int group = 0;
    int sign = 0;
};

struct Block {
    long block_id = 0;
    int type_id = 0;
    std::array<BlockMember, 4> members;
};

struct BlockDesign {
    std::vector<Block> blocks;
    std::vector<int> per_type_counts; // indexed by type_id - 1
};

// Minimum-distance pairing of two equal-size samples; returns index pairs
// (position in rows_a, position in rows_b) ordered by the first component.
std::vector<std::pair<int, int>> pair_samples(const std::vector<std::vector<double>>& data,
                                              const std::vector<std::size_t>& rows_a,
                                              const std::vector<std::size_t>& rows_b,
                                              const std::vector<int>& covariates);

// Pairing of pairs: the distance between two pairs is the sum of the four
// unit distances that cross them.
std::vector<std::pair<int, int>> pair_of_pairs(
    const std::vector<std::vector<double>>& data,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs_a,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs_b,
    const std::vector<int>& covariates);

struct AssemblyOptions {
    // Covariates whose values are pinned by an eligibility covariate:
    // (covariate name, 'p' for LE or 'd' for IU).
    std::vector<std::pair<std::string, char>> eligibility_links;
    // When set, only these covariates enter pairing distances (the
    // eligibility inclusion rule still applies on top).
    std::optional<std::vector<std::string>> covariate_policy;
    int threads = 1;
};

// Covariate indices allowed into a pairing distance between units drawn from
// side_a_groups and side_b_groups. An eligibility-linked covariate survives
// only when the linked eligibility value is balanced across the two sides
// (checked through the side-indicator contrast).
std::vector<int> pairing_covariates_for(const StudyPopulation& pop, const AssemblyOptions& opt,
                                        const std::vector<int>& side_a_groups,
                                        const std::vector<int>& side_b_groups);

// samples[g-1][p] holds record indices of sample p of group g; all samples
// must share one size. Returns 6*s blocks, each individual used once.
BlockDesign assemble_design(const StudyPopulation& pop,
                            const std::vector<std::vector<std::vector<std::size_t>>>& samples,
                            const std::vector<BlockTypePlan>& plan,
                            const AssemblyOptions& opt = {});

// Re-checks the BlockDesign invariants against a plan; empty string when ok.
std::string verify_block_design(const BlockDesign& design, const std::vector<BlockTypePlan>& plan,
                                const StudyPopulation& pop);

// CSV: block_id, type_id, role_group, sign, individual_id (one row per member).
void save_block_design(const std::string& path, const BlockDesign& design,
                       const StudyPopulation& pop);
BlockDesign load_block_design(const std::string& path, const StudyPopulation& pop);

} // namespace cfb

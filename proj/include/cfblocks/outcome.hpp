#pragma once

// Outcome analysis on the assembled blocks: one signed difference-in-
// differences per block, randomization inference with a sensitivity bound on
// biased assignment odds (with its amplification curve), a rank-sum and
// shift-estimate comparison between block types, and the bounded symmetric
// tail transform used for summaries.

#include <optional>
#include <vector>

#include "cfblocks/blocks.hpp"
#include "cfblocks/population.hpp"

namespace cfb {

struct BlockDiD {
    long block_id = 0;
    int type_id = 0;
    double value = 0.0; // sign-weighted sum of the four outcomes, in weeks
};

// Throws if any member's outcome is missing.
BlockDiD block_did(const Block& block, const StudyPopulation& pop);
std::vector<BlockDiD> all_block_dids(const BlockDesign& design, const StudyPopulation& pop);

struct SensitivityResult {
    double gamma = 1.0;
    double upper_p = 1.0; // one-sided (upper tail)
    double lower_p = 1.0;
    double statistic = 0.0; // Wilcoxon signed-rank T
    bool exact = false;     // enumeration rather than normal approximation
};

enum class SignedRankMethod { Auto, Normal, Exact };

// Signed-rank bound under biased assignment: each block's sign is positive
// with probability at most gamma/(1+gamma). Zeros dropped, ties mid-ranked;
// exact enumeration for small n, else normal approximation with continuity
// correction.
SensitivityResult signed_rank_gamma(const std::vector<double>& dids, double gamma,
                                    SignedRankMethod method = SignedRankMethod::Auto);

// Interprets a single bias magnitude as a (treatment-odds, outcome-odds)
// pair: gamma = (lambda*delta + 1)/(lambda + delta).
double amplify(double lambda_, double delta);

struct RankSumResult {
    double p_two_sided = 1.0;
    double hl_estimate = 0.0; // median of pairwise differences A - B
    double ci_low = 0.0, ci_high = 0.0;
    double statistic = 0.0; // rank-sum of sample A
    bool exact = false;
};

// Rank-sum test with tie correction plus the Hodges-Lehmann shift estimate
// and its 95% confidence interval by test inversion. Exact null distribution
// when |A|*|B| <= 10^4, otherwise normal approximation.
RankSumResult wilcoxon_hl(const std::vector<double>& a, const std::vector<double>& b);

struct TailTransform {
    std::vector<double> values;
    double beta = 0.0;
};

// Identity inside [-beta, beta]; beyond, sign(y)*(2*beta - beta^2/|y|), the
// reciprocal-power continuation with matching value and slope at beta. beta
// is the given quantile of |values|; beta = 0 leaves values unchanged.
TailTransform tail_transform(const std::vector<double>& values, double quantile = 0.8);

struct DidSummary {
    long count = 0;
    double median = 0.0, q25 = 0.0, q75 = 0.0, q10 = 0.0, q90 = 0.0;
};

DidSummary did_summary(const std::vector<double>& dids);

} // namespace cfb

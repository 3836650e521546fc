#pragma once

// Group-level design matrices, alias structure and estimable contrasts.
//
// A design matrix here is small: one row per treatment group, one named
// column per model effect. Estimability follows Rao's row-space condition:
// a linear combination of coefficients is estimable exactly when it lies in
// the row space of the (replication-expanded) design matrix, and the least
// squares estimator is then a contrast in the group means.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cfb {

struct Contrast {
    std::vector<double> weights; // one per group, sums to zero

    double dot(const std::vector<double>& zeta) const;
};

// Weights sum to zero within 1e-12 and at least one weight is nonzero.
bool is_valid_contrast(const std::vector<double>& weights, double tol = 1e-12);

// A linear relation among named columns: sum_j coeff[name_j] * col_j == 0.
using ColumnRelation = std::map<std::string, double>;

struct AliasReport {
    bool estimable = false;
    // Group-level least squares weights, normalized so that the positive
    // weights sum to +1 and the negative to -1 (|h| sums to 2). Present only
    // when the target is estimable and the weights form a proper contrast.
    std::optional<Contrast> contrast;
    // Unnormalized group-level weights: applied to group means they estimate
    // target'beta exactly on noiseless data.
    std::vector<double> raw_weights;
    // raw_weights[g] / n_g: the weight attached to each observation in group
    // g. Replication reshuffles these but never the group-level contrast.
    std::vector<double> per_individual_weights;
    std::vector<ColumnRelation> dependencies;
};

class DesignMatrix {
public:
    DesignMatrix() = default;
    DesignMatrix(std::vector<std::string> group_labels,
                 std::vector<std::pair<std::string, std::vector<double>>> columns);

    std::size_t groups() const { return group_labels_.size(); }
    std::size_t cols() const { return names_.size(); }
    const std::vector<std::string>& group_labels() const { return group_labels_; }
    const std::vector<std::string>& column_names() const { return names_; }
    const std::vector<double>& column(std::size_t j) const { return data_[j]; }
    const std::vector<double>& column(const std::string& name) const;
    bool has_column(const std::string& name) const;

    // Appends a column; throws if the name already exists or the length is off.
    void add_column(const std::string& name, std::vector<double> values);

    // CSV layout: first column is the group label, remaining columns are the
    // named effects. Round-trips exactly.
    void save_csv(const std::string& path) const;
    static DesignMatrix load_csv(const std::string& path);

private:
    std::vector<std::string> group_labels_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> data_; // column major
};

// Complete two-level factorial in k factors, one row per run. The first
// factor changes slowest; factors are named A, B, C, ... Row labels are the
// run indices 1..2^k. Requires 1 <= k <= 20.
DesignMatrix full_factorial(int k);

// Keeps only the given rows (group indices into the design, 0-based).
DesignMatrix select_rows(const DesignMatrix& d, const std::vector<int>& rows);

// Elementwise product of the named columns.
std::vector<double> interaction_column(const DesignMatrix& d,
                                       const std::vector<std::string>& effect_names);

// Estimability of target'beta and the contrast that estimates it.
// `target` has one coefficient per design column. `replication` optionally
// gives per-group counts (default: one observation per group). The report's
// dependencies list is the alias structure of the design itself.
AliasReport estimable_contrast(const DesignMatrix& d, const std::vector<double>& target,
                               const std::vector<int>& replication = {});

// Basis of the linear relations among the design's columns. Each relation is
// anchored on the latest dependent column (coefficient +1) expressed against
// earlier independent columns; relations are listed latest-first. Empty iff
// the design has full column rank.
std::vector<ColumnRelation> alias_relations(const DesignMatrix& d);

struct OrthogonalityResult {
    double value = 0.0; // sum_g h_g * zeta_g
    bool aliased = false;
};

// Checks whether a group-level summary zeta is aliased with contrast h.
OrthogonalityResult contrast_orthogonality(const Contrast& h, const std::vector<double>& zeta,
                                           double tol = 1e-9);

// The classic two-period, two-cell design (four groups: ineligible/eligible
// crossed with before/after). `indicator_coding` selects the (0,0,0,1)
// coding of the treatment column; otherwise the (0,0,-1,1) coding is used.
DesignMatrix did_four_group_design(bool indicator_coding = true);

// The eight-group, two-period design used throughout this project:
// columns 1, Bb, Rr, LE, IU, TIME; groups ordered as the four before-period
// eligibility cells then the four after-period cells.
DesignMatrix eight_group_design();

// Index of a column name, throwing on unknown names.
std::size_t column_index(const DesignMatrix& d, const std::string& name);

} // namespace cfb

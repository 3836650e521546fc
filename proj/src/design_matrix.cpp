#include "cfblocks/design_matrix.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cfblocks/csv.hpp"

namespace cfb {

namespace {

Eigen::MatrixXd to_matrix(const DesignMatrix& d) {
    Eigen::MatrixXd X(d.groups(), d.cols());
    for (std::size_t j = 0; j < d.cols(); ++j)
        for (std::size_t g = 0; g < d.groups(); ++g) X(g, j) = d.column(j)[g];
    return X;
}

// Effective rank with a relative singular value cutoff.
int svd_rank(const Eigen::BDCSVD<Eigen::MatrixXd>& svd, double rel_tol) {
    if (svd.singularValues().size() == 0) return 0;
    double cut = rel_tol * svd.singularValues()(0);
    int r = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > cut) ++r;
    return r;
}

constexpr double kRankTol = 1e-9;

} // namespace

double Contrast::dot(const std::vector<double>& zeta) const {
    if (zeta.size() != weights.size())
        throw std::invalid_argument("contrast/zeta length mismatch");
    double s = 0.0;
    for (std::size_t g = 0; g < weights.size(); ++g) s += weights[g] * zeta[g];
    return s;
}

bool is_valid_contrast(const std::vector<double>& weights, double tol) {
    if (weights.empty()) return false;
    double sum = 0.0;
    bool any = false;
    for (double w : weights) {
        sum += w;
        if (w != 0.0) any = true;
    }
    return any && std::abs(sum) <= tol;
}

DesignMatrix::DesignMatrix(std::vector<std::string> group_labels,
                           std::vector<std::pair<std::string, std::vector<double>>> columns)
    : group_labels_(std::move(group_labels)) {
    for (auto& [name, values] : columns) add_column(name, std::move(values));
}

const std::vector<double>& DesignMatrix::column(const std::string& name) const {
    return data_[column_index(*this, name)];
}

bool DesignMatrix::has_column(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

void DesignMatrix::add_column(const std::string& name, std::vector<double> values) {
    if (has_column(name)) throw std::invalid_argument("duplicate effect name: " + name);
    if (values.size() != group_labels_.size())
        throw std::invalid_argument("column " + name + " has wrong length");
    names_.push_back(name);
    data_.push_back(std::move(values));
}

void DesignMatrix::save_csv(const std::string& path) const {
    CsvTable t;
    t.header.push_back("group");
    for (const auto& n : names_) t.header.push_back(n);
    for (std::size_t g = 0; g < groups(); ++g) {
        std::vector<std::string> row;
        row.push_back(group_labels_[g]);
        for (std::size_t j = 0; j < cols(); ++j) row.push_back(format_double(data_[j][g]));
        t.rows.push_back(std::move(row));
    }
    write_csv(path, t);
}

DesignMatrix DesignMatrix::load_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    if (t.header.empty() || t.header[0] != "group")
        throw std::runtime_error("design CSV must start with a 'group' column: " + path);
    DesignMatrix d;
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size())
            throw std::runtime_error("ragged design CSV row in " + path);
        d.group_labels_.push_back(row[0]);
    }
    for (std::size_t j = 1; j < t.header.size(); ++j) {
        std::vector<double> col;
        col.reserve(t.rows.size());
        for (const auto& row : t.rows) {
            bool ok = false;
            col.push_back(parse_double(row[j], ok));
            if (!ok)
                throw std::runtime_error("non-numeric entry '" + row[j] + "' in column " +
                                         t.header[j] + " of " + path);
        }
        d.add_column(t.header[j], std::move(col));
    }
    return d;
}

std::size_t column_index(const DesignMatrix& d, const std::string& name) {
    const auto& names = d.column_names();
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::invalid_argument("unknown effect name: " + name);
    return static_cast<std::size_t>(it - names.begin());
}

DesignMatrix full_factorial(int k) {
    if (k < 1 || k > 20) throw std::invalid_argument("full_factorial: k must be in 1..20");
    const std::size_t n = std::size_t{1} << k;
    std::vector<std::string> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i + 1);
    DesignMatrix d(std::move(labels), {});
    for (int j = 0; j < k; ++j) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i)
            col[i] = ((i >> (k - 1 - j)) & 1) ? -1.0 : 1.0; // first factor slowest
        std::string name;
        if (j < 26) name = std::string(1, static_cast<char>('A' + j));
        else name = "F" + std::to_string(j + 1);
        d.add_column(name, std::move(col));
    }
    return d;
}

DesignMatrix select_rows(const DesignMatrix& d, const std::vector<int>& rows) {
    std::vector<std::string> labels;
    labels.reserve(rows.size());
    for (int r : rows) {
        if (r < 0 || static_cast<std::size_t>(r) >= d.groups())
            throw std::invalid_argument("select_rows: row index out of range");
        labels.push_back(d.group_labels()[r]);
    }
    DesignMatrix out(std::move(labels), {});
    for (std::size_t j = 0; j < d.cols(); ++j) {
        std::vector<double> col;
        col.reserve(rows.size());
        for (int r : rows) col.push_back(d.column(j)[r]);
        out.add_column(d.column_names()[j], std::move(col));
    }
    return out;
}

std::vector<double> interaction_column(const DesignMatrix& d,
                                       const std::vector<std::string>& effect_names) {
    if (effect_names.empty())
        throw std::invalid_argument("interaction_column: no effect names given");
    std::vector<double> out(d.groups(), 1.0);
    for (const auto& name : effect_names) {
        const auto& col = d.column(name);
        for (std::size_t g = 0; g < out.size(); ++g) out[g] *= col[g];
    }
    return out;
}

AliasReport estimable_contrast(const DesignMatrix& d, const std::vector<double>& target,
                               const std::vector<int>& replication) {
    const std::size_t G = d.groups();
    const std::size_t C = d.cols();
    if (target.size() != C)
        throw std::invalid_argument("estimable_contrast: target length != column count");
    std::vector<int> rep = replication;
    if (rep.empty()) rep.assign(G, 1);
    if (rep.size() != G)
        throw std::invalid_argument("estimable_contrast: replication length != group count");
    for (int n : rep)
        if (n <= 0) throw std::invalid_argument("estimable_contrast: replication must be positive");

    Eigen::VectorXd p(C);
    double pnorm = 0.0;
    for (std::size_t j = 0; j < C; ++j) {
        p(j) = target[j];
        pnorm += target[j] * target[j];
    }
    if (pnorm == 0.0) throw std::invalid_argument("estimable_contrast: zero target");

    // Rows within a group are identical, so the expanded design has the same
    // row space for any positive replication: estimability and the reported
    // group-level contrast are computed on the collapsed group matrix, and
    // replication only redistributes each group's weight over its members.
    Eigen::MatrixXd X = to_matrix(d);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    int r = svd_rank(svd, kRankTol);

    AliasReport report;
    report.dependencies = alias_relations(d);

    // Row-space membership: project p onto span of the leading right singular
    // vectors and look at the residual.
    Eigen::VectorXd proj = Eigen::VectorXd::Zero(C);
    for (int i = 0; i < r; ++i) {
        const Eigen::VectorXd v = svd.matrixV().col(i);
        proj += v.dot(p) * v;
    }
    double resid = (p - proj).norm();
    report.estimable = resid <= kRankTol * std::sqrt(pnorm);
    if (!report.estimable) return report;

    // Minimum-norm b with (X'X) b = p, via the SVD pseudo-inverse.
    Eigen::VectorXd b = Eigen::VectorXd::Zero(C);
    for (int i = 0; i < r; ++i) {
        const Eigen::VectorXd v = svd.matrixV().col(i);
        double s = svd.singularValues()(i);
        b += (v.dot(p) / (s * s)) * v;
    }
    report.raw_weights.assign(G, 0.0);
    report.per_individual_weights.assign(G, 0.0);
    double abs_sum = 0.0, plain_sum = 0.0, max_abs = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
        double w = X.row(g).dot(b);
        report.raw_weights[g] = w;
        report.per_individual_weights[g] = w / rep[g];
        abs_sum += std::abs(w);
        plain_sum += w;
        max_abs = std::max(max_abs, std::abs(w));
    }
    // Report a normalized contrast when the weights genuinely sum to zero;
    // normalization makes the group-level report replication-invariant.
    if (max_abs > 0.0 && std::abs(plain_sum) <= 1e-9 * abs_sum) {
        Contrast h;
        h.weights.resize(G);
        double scale = 2.0 / abs_sum;
        double correction = plain_sum / static_cast<double>(G);
        for (std::size_t g = 0; g < G; ++g)
            h.weights[g] = (report.raw_weights[g] - correction) * scale;
        report.contrast = std::move(h);
    }
    return report;
}

std::vector<ColumnRelation> alias_relations(const DesignMatrix& d) {
    const std::size_t G = d.groups();
    const std::size_t C = d.cols();
    if (C == 0) throw std::invalid_argument("alias_relations: design has no columns");

    Eigen::MatrixXd X = to_matrix(d);
    double xnorm = X.norm();
    if (xnorm == 0.0) xnorm = 1.0;

    std::vector<ColumnRelation> relations;
    std::vector<int> independent;
    for (std::size_t j = 0; j < C; ++j) {
        Eigen::VectorXd col = X.col(j);
        if (independent.empty()) {
            if (col.norm() <= kRankTol * xnorm) {
                relations.push_back({{d.column_names()[j], 1.0}}); // zero column
            } else {
                independent.push_back(static_cast<int>(j));
            }
            continue;
        }
        Eigen::MatrixXd B(G, independent.size());
        for (std::size_t t = 0; t < independent.size(); ++t) B.col(t) = X.col(independent[t]);
        Eigen::VectorXd coef = B.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(col);
        double resid = (col - B * coef).norm();
        if (resid <= kRankTol * xnorm) {
            ColumnRelation rel;
            rel[d.column_names()[j]] = 1.0;
            for (std::size_t t = 0; t < independent.size(); ++t) {
                double c = -coef(t);
                if (std::abs(c) > 1e-9) rel[d.column_names()[independent[t]]] = c;
            }
            relations.push_back(std::move(rel));
        } else {
            independent.push_back(static_cast<int>(j));
        }
    }
    // Latest dependent columns first.
    std::reverse(relations.begin(), relations.end());
    return relations;
}

OrthogonalityResult contrast_orthogonality(const Contrast& h, const std::vector<double>& zeta,
                                           double tol) {
    OrthogonalityResult r;
    r.value = h.dot(zeta);
    r.aliased = std::abs(r.value) > tol;
    return r;
}

DesignMatrix did_four_group_design(bool indicator_coding) {
    std::vector<std::string> labels = {"ineligible-before", "eligible-before",
                                       "ineligible-after", "eligible-after"};
    DesignMatrix d(std::move(labels), {});
    d.add_column("1", {1, 1, 1, 1});
    d.add_column("Eligible", {-1, 1, -1, 1});
    d.add_column("Time", {-1, -1, 1, 1});
    if (indicator_coding) d.add_column("Treatment", {0, 0, 0, 1});
    else d.add_column("Treatment", {0, 0, -1, 1});
    return d;
}

DesignMatrix eight_group_design() {
    std::vector<std::string> labels = {"BRbar", "Brbar", "bRbar", "brbar",
                                       "BR", "Br", "bR", "br"};
    DesignMatrix d(std::move(labels), {});
    d.add_column("1", {1, 1, 1, 1, 1, 1, 1, 1});
    d.add_column("Bb", {0, 0, 0, 0, 1, 1, -1, -1});
    d.add_column("Rr", {0, 0, 0, 0, 1, -1, 1, -1});
    d.add_column("LE", {1, -1, 1, -1, 1, -1, 1, -1});
    d.add_column("IU", {1, 1, -1, -1, 1, 1, -1, -1});
    d.add_column("TIME", {-1, -1, -1, -1, 1, 1, 1, 1});
    return d;
}

} // namespace cfb

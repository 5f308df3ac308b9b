#include "xvec/wordsel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "xvec/util.hpp"

namespace xvec {

namespace {

double squared_difference(std::span<const MatrixEntry> a, std::span<const MatrixEntry> b) {
    double sum = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        double diff;
        if (j == b.size() || (i < a.size() && a[i].col < b[j].col)) {
            diff = a[i++].value;
        } else if (i == a.size() || b[j].col < a[i].col) {
            diff = b[j++].value;
        } else {
            diff = a[i++].value - b[j++].value;
        }
        sum += diff * diff;
    }
    return sum;
}

}  // namespace

Eigen::MatrixXd squared_distances(const SparseMatrix& rows) {
    const auto h = static_cast<Eigen::Index>(rows.n_rows());
    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(h, h);
    parallel_for(rows.n_rows(), [&](std::size_t i) {
        for (std::size_t k = i + 1; k < rows.n_rows(); ++k)
            d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                squared_difference(rows.row(i), rows.row(k));
    });
    for (Eigen::Index i = 0; i < h; ++i)
        for (Eigen::Index k = i + 1; k < h; ++k) d2(k, i) = d2(i, k);
    return d2;
}

DistanceMatrix distance_matrix(const SparseMatrix& rows) {
    if (rows.n_rows() < 2) throw std::invalid_argument("distance matrix needs at least 2 rows");
    return DistanceMatrix{squared_distances(rows).cwiseSqrt()};
}

double frobenius(const Eigen::MatrixXd& m) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) sum += m(i, j) * m(i, j);
    return std::sqrt(sum);
}

double frobenius_trace(const Eigen::MatrixXd& m) { return std::sqrt((m.transpose() * m).trace()); }

std::optional<InfluenceMethod> parse_influence_method(std::string_view text) {
    const auto lower = to_lower(trim(text));
    if (lower == "naive") return InfluenceMethod::Naive;
    if (lower == "incremental") return InfluenceMethod::Incremental;
    return std::nullopt;
}

namespace {

ColumnScores naive_influence(const SparseMatrix& rows) {
    const DistanceMatrix base = distance_matrix(rows);
    ColumnScores out{rows.col_labels(), std::vector<double>(rows.n_cols(), 0.0)};
    std::vector<std::uint8_t> mask(rows.n_cols(), 1);
    for (std::size_t j = 0; j < rows.n_cols(); ++j) {
        mask[j] = 0;
        const DistanceMatrix reduced = distance_matrix(mask_columns(rows, mask));
        mask[j] = 1;
        out.scores[j] = frobenius(base.d - reduced.d);
    }
    return out;
}

ColumnScores incremental_influence(const SparseMatrix& rows) {
    if (rows.n_rows() < 2) throw std::invalid_argument("distance matrix needs at least 2 rows");
    const Eigen::MatrixXd d2 = squared_distances(rows);
    const Eigen::MatrixXd d = d2.cwiseSqrt();
    const std::size_t h = rows.n_rows();

    // Column-major view: for each column, the rows holding a value there.
    std::vector<std::vector<std::pair<std::size_t, double>>> by_col(rows.n_cols());
    for (std::size_t r = 0; r < h; ++r)
        for (const auto& e : rows.row(r)) by_col[e.col].emplace_back(r, e.value);

    ColumnScores out{rows.col_labels(), std::vector<double>(rows.n_cols(), 0.0)};
    parallel_for(rows.n_cols(), [&](std::size_t j) {
        const auto& entries = by_col[j];
        if (entries.empty()) return;
        std::vector<double> col(h, 0.0);
        std::vector<std::uint8_t> present(h, 0);
        for (const auto& [r, v] : entries) {
            col[r] = v;
            present[r] = 1;
        }
        double sum = 0.0;
        for (const auto& [i, vi] : entries) {
            const auto ii = static_cast<Eigen::Index>(i);
            for (std::size_t k = 0; k < h; ++k) {
                if (k == i || (present[k] && k < i)) continue;
                const auto kk = static_cast<Eigen::Index>(k);
                const double delta = vi - col[k];
                const double reduced = std::sqrt(std::max(d2(ii, kk) - delta * delta, 0.0));
                const double diff = d(ii, kk) - reduced;
                sum += diff * diff;
            }
        }
        out.scores[j] = std::sqrt(2.0 * sum);
    });
    return out;
}

}  // namespace

ColumnScores column_influence(const SparseMatrix& rows, InfluenceMethod method) {
    return method == InfluenceMethod::Naive ? naive_influence(rows) : incremental_influence(rows);
}

namespace {

std::vector<std::size_t> rank_order(const ColumnScores& s) {
    std::vector<std::size_t> order(s.scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (s.scores[a] != s.scores[b]) return s.scores[a] > s.scores[b];
        return s.words[a] < s.words[b];
    });
    return order;
}

}  // namespace

std::vector<std::string> select_top(const ColumnScores& scores, std::size_t n_s) {
    if (n_s > scores.scores.size())
        throw std::invalid_argument("cannot select " + std::to_string(n_s) + " of " +
                                    std::to_string(scores.scores.size()) + " context words");
    const auto order = rank_order(scores);
    std::vector<std::string> out;
    for (std::size_t k = 0; k < n_s; ++k) out.push_back(scores.words[order[k]]);
    return out;
}

void write_scores(const ColumnScores& scores, std::ostream& out) {
    out << "word,frobenius_score\n";
    for (auto i : rank_order(scores)) out << scores.words[i] << ',' << format_sig(scores.scores[i], 9) << '\n';
}

}  // namespace xvec

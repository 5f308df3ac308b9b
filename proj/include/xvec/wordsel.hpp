#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "xvec/matrix.hpp"

namespace xvec {

// Symmetric h x h Euclidean distances between training rows, zero diagonal.
struct DistanceMatrix {
    Eigen::MatrixXd d;

    std::size_t size() const noexcept { return static_cast<std::size_t>(d.rows()); }
    double operator()(std::size_t i, std::size_t j) const {
        return d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
};

// Squared distances between all row pairs, computed from exact per-cell
// differences; entry (i, j) and (j, i) are the same double.
Eigen::MatrixXd squared_distances(const SparseMatrix& rows);
DistanceMatrix distance_matrix(const SparseMatrix& rows);

// sqrt(sum m_ij^2)
double frobenius(const Eigen::MatrixXd& m);
// sqrt(trace(m^T m))
double frobenius_trace(const Eigen::MatrixXd& m);

enum class InfluenceMethod { Naive, Incremental };
std::optional<InfluenceMethod> parse_influence_method(std::string_view text);

// score[j] = || D - D_without_column_j ||_F over the full h x h matrices.
struct ColumnScores {
    std::vector<std::string> words;
    std::vector<double> scores;
};

// Naive rebuilds every reduced distance matrix. Incremental updates each
// pair touched by column j as sqrt(max(d^2 - (v_ij - v_kj)^2, 0)).
ColumnScores column_influence(const SparseMatrix& rows,
                              InfluenceMethod method = InfluenceMethod::Incremental);

// The n_s highest-scoring words, ties broken by word; returned in rank order.
std::vector<std::string> select_top(const ColumnScores& scores, std::size_t n_s);

// CSV word,frobenius_score sorted by descending score.
void write_scores(const ColumnScores& scores, std::ostream& out);

}  // namespace xvec

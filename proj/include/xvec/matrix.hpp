#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xvec/corpus.hpp"

namespace xvec {

struct MatrixEntry {
    std::uint32_t col = 0;
    double value = 0.0;

    bool operator==(const MatrixEntry&) const = default;
};

// Row-major sparse word-context matrix. Each row holds its non-zero cells
// sorted by column; stored values are strictly positive. Row and column
// labels are unique, so label <-> index is a bijection.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::vector<std::string> row_labels, std::vector<std::string> col_labels);

    std::size_t n_rows() const noexcept { return row_labels_.size(); }
    std::size_t n_cols() const noexcept { return col_labels_.size(); }
    std::size_t nnz() const noexcept;

    const std::vector<std::string>& row_labels() const noexcept { return row_labels_; }
    const std::vector<std::string>& col_labels() const noexcept { return col_labels_; }
    std::optional<std::size_t> row_of(std::string_view label) const;
    std::optional<std::size_t> col_of(std::string_view label) const;

    std::span<const MatrixEntry> row(std::size_t r) const { return rows_.at(r); }
    double at(std::size_t r, std::size_t c) const;

    // Replaces row r. Entries must have distinct in-range columns and
    // non-negative values; zeros are dropped and the row is sorted.
    void set_row(std::size_t r, std::vector<MatrixEntry> entries);

    bool operator==(const SparseMatrix&) const = default;

private:
    std::vector<std::string> row_labels_;
    std::vector<std::string> col_labels_;
    std::unordered_map<std::string, std::size_t> row_index_;
    std::unordered_map<std::string, std::size_t> col_index_;
    std::vector<std::vector<MatrixEntry>> rows_;
};

SparseMatrix from_dense(std::vector<std::string> row_labels, std::vector<std::string> col_labels,
                        const std::vector<std::vector<double>>& values);
std::vector<std::vector<double>> to_dense(const SparseMatrix& m);

// Default labels r0.. / c0.. for tests and synthetic data.
std::vector<std::string> index_labels(std::string_view prefix, std::size_t n);

struct DecayOptions {
    double decay = 0.1;
    // Largest positional offset counted; 0 means unbounded.
    std::size_t max_distance = 0;
};

// x[t][c] += exp(-decay * |p - q|) for every target occurrence at p and
// context occurrence at q != p inside one sentence.
SparseMatrix build_cooc_decay(std::span<const Sentence> corpus, const std::vector<Term>& targets,
                              const std::vector<Term>& contexts, const DecayOptions& options = {});

// x[t][c] += 1 for every target/context occurrence pair with
// 0 < |p - q| <= window inside one sentence.
SparseMatrix build_cooc_window(std::span<const Sentence> corpus, const std::vector<Term>& targets,
                               const std::vector<Term>& contexts, std::size_t window = 10);

// Cell-wise sum of two matrices with identical labels.
SparseMatrix merge_sum(const SparseMatrix& a, const SparseMatrix& b);

// max(log2(P(w,c) / (P(w) P(c))), 0) with probabilities taken from the score
// mass. Throws std::domain_error("empty mass") when the matrix sums to zero.
SparseMatrix ppmi_transform(const SparseMatrix& raw);

double cosine(std::span<const MatrixEntry> u, std::span<const MatrixEntry> v);
double cosine(std::span<const double> u, std::span<const double> v);

// Drops cells in columns whose mask bit is 0. Column labels are kept.
SparseMatrix mask_columns(const SparseMatrix& m, std::span<const std::uint8_t> mask);

// New matrix whose columns are exactly `labels`, in that order. Labels not
// present in `m` become empty columns.
SparseMatrix restrict_columns(const SparseMatrix& m, const std::vector<std::string>& labels);
// New matrix whose rows are `labels` (which must all exist in `m`).
SparseMatrix select_rows(const SparseMatrix& m, const std::vector<std::string>& labels);

// Text format:
//   rows cols nnz
//   %r<TAB>label        (one per row, index order)
//   %c<TAB>label        (one per column, index order)
//   row<TAB>col<TAB>score   (9 significant digits by default, row-major)
// The %r/%c declarations are optional on input; without them labels are
// taken from the triplets in first-appearance order.
void write_matrix(const SparseMatrix& m, std::ostream& out, int digits = 9);
SparseMatrix read_matrix(std::istream& in);
void save_matrix(const SparseMatrix& m, const std::filesystem::path& path, int digits = 9);
SparseMatrix load_matrix(const std::filesystem::path& path);

class DenseEmbeddings {
public:
    DenseEmbeddings() = default;

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return words_.size(); }
    bool empty() const noexcept { return words_.empty(); }
    const std::vector<std::string>& words() const noexcept { return words_; }
    std::optional<std::size_t> find(std::string_view word) const;
    std::span<const double> vector(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }

    // Inserts or replaces (last wins). Returns false on replacement.
    bool insert(std::string word, std::span<const double> values);

private:
    std::size_t dim_ = 0;
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> data_;
};

// `word v1 ... vd` per line; an optional word2vec-style "count dim" header
// line is skipped. Inconsistent dimension throws ParseError.
DenseEmbeddings read_embeddings(std::istream& in);
DenseEmbeddings load_embeddings(const std::filesystem::path& path);

}  // namespace xvec

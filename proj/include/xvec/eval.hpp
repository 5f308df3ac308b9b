#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xvec/matrix.hpp"

namespace xvec {

struct WordPair {
    std::string word1;
    std::string word2;
    double score = 0.0;
};

struct TestSet {
    std::string name;
    std::vector<WordPair> pairs;
};

// word1<TAB>word2<TAB>score (whitespace-separated lines are accepted too).
// A first line whose third field is not numeric is treated as a header.
TestSet read_testset(std::istream& in, std::string name);
TestSet load_testset(const std::filesystem::path& path);

// 1-based ranks, tied values share the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> x);

// Pearson correlation of fractional ranks. Throws std::domain_error
// ("zero rank variance") when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

// Resolves test-set words to matrix rows: an exact label ("dog/N") or a
// bare lemma matched against any POS row, preferring N, V, J, R in order.
class RowLookup {
public:
    explicit RowLookup(const SparseMatrix& m);
    std::optional<std::size_t> find(std::string_view word) const;

private:
    const SparseMatrix* m_;
    std::unordered_map<std::string, std::size_t> by_lemma_;
};

struct EvalEntry {
    std::string matrix;
    std::string testset;
    std::optional<double> spearman;  // empty when evaluation failed
    std::size_t pairs_used = 0;
    std::size_t pairs_skipped_oov = 0;
    std::string note;
};

// Cosine of the two rows per in-vocabulary pair, then Spearman against the
// human scores. Throws std::runtime_error("insufficient coverage") when
// fewer than two pairs are usable.
EvalEntry evaluate(const SparseMatrix& m, const TestSet& ts, std::string matrix_name = "matrix");

// CSV matrix,testset,spearman,pairs_used,oov,delta_pp,delta_rel_pct with
// deltas against `baseline` on the same test set (empty when unavailable).
// Throws when no entry belongs to `baseline`.
void write_report(const std::vector<EvalEntry>& entries, const std::string& baseline,
                  std::ostream& out);

// CSV matrix,baseline,testset,spearman,baseline_spearman,delta_pp,delta_rel_pct
// for explicit (matrix, baseline) pairs.
void write_comparisons(const std::vector<EvalEntry>& entries,
                       const std::vector<std::pair<std::string, std::string>>& comparisons,
                       std::ostream& out);

}  // namespace xvec

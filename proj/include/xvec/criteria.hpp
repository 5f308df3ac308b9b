#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xvec/corpus.hpp"
#include "xvec/matrix.hpp"

namespace xvec {

// Declaration order is also the tie-break order for tree splits.
enum class Criterion { WS = 0, WF = 1, NZ = 2 };

inline constexpr Criterion kCriteria[] = {Criterion::WS, Criterion::WF, Criterion::NZ};

std::string_view criterion_name(Criterion c);
std::optional<Criterion> parse_criterion(std::string_view name);

// Class labels: 1 = Common (A and Triple), 2 = IN (Triple only), 3 = OUT (A only).
struct CriteriaRow {
    std::string word;
    double wf = 0.0;
    double ws = 0.0;
    double nz = 0.0;
    double wf_norm = 0.0;
    double ws_norm = 0.0;
    double nz_norm = 0.0;
    std::optional<int> label;

    double value(Criterion c, bool normalized) const;
};

class CriteriaTable {
public:
    CriteriaTable() = default;
    explicit CriteriaTable(std::vector<CriteriaRow> rows);

    const std::vector<CriteriaRow>& rows() const noexcept { return rows_; }
    std::vector<CriteriaRow>& rows() noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    const CriteriaRow* find(std::string_view word) const;
    CriteriaRow* find(std::string_view word);
    bool has_normalized() const noexcept { return has_normalized_; }
    void set_has_normalized(bool v) noexcept { has_normalized_ = v; }

private:
    std::vector<CriteriaRow> rows_;
    std::unordered_map<std::string, std::size_t> index_;
    bool has_normalized_ = false;
};

enum class WsAggregation { Sum, Mean };

struct CriteriaOptions {
    double zero_eps = 0.01;
    WsAggregation aggregation = WsAggregation::Sum;
    // Abort when more than this fraction of candidates has no embedding.
    double max_missing_fraction = 0.5;
};

// Embedding lookup tries the term label ("dog/N") first, then the bare lemma.
std::optional<std::size_t> find_embedding(const DenseEmbeddings& emb, const Term& term);

// WF = corpus frequency, NZ = number of embedding components with
// |v| < zero_eps, WS = aggregate cosine to every other candidate. Candidates
// without an embedding are dropped with a warning. The returned table is
// already normalized.
CriteriaTable compute_criteria(const std::vector<Term>& candidates, const DenseEmbeddings& emb,
                               const Vocabulary& vocab, const CriteriaOptions& options = {});

// Divides each criterion by its maximum over the table (infinity norm).
CriteriaTable normalize_criteria(CriteriaTable table);

struct LabeledSets {
    std::set<std::string> candidates;
    std::set<std::string> a;
    std::set<std::string> s;
    std::set<std::string> f;
    std::set<std::string> z;
    std::set<std::string> triple;
    std::set<std::string> common;
    std::set<std::string> in;
    std::set<std::string> out;
    std::set<std::string> u_at;
};

// Top-m table words by one criterion, ties broken by word.
std::vector<std::string> top_by(const CriteriaTable& table, Criterion c, std::size_t m);

// Builds S/F/Z (top-M by WS/WF/NZ), Triple, Common, IN, OUT and U_AT, and
// writes labels 1/2/3 into the table rows of Common/IN/OUT words.
LabeledSets build_labeled_sets(CriteriaTable& table, const std::vector<std::string>& a,
                               std::size_t m);

enum class FeaturePair { WfWs, NzWs, NzWf };
std::optional<FeaturePair> parse_feature_pair(std::string_view text);

// CSV rows word,label,x,y for the table words in `selection` (table order).
void emit_scatter(const CriteriaTable& table, const std::set<std::string>& selection,
                  FeaturePair pair, std::ostream& out, bool normalized = false);

// TSV: word wf ws nz wf_norm ws_norm nz_norm label
void write_criteria(const CriteriaTable& table, std::ostream& out);
CriteriaTable read_criteria(std::istream& in);

}  // namespace xvec

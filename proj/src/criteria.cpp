#include "xvec/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "xvec/util.hpp"

namespace xvec {

std::string_view criterion_name(Criterion c) {
    switch (c) {
        case Criterion::WS: return "WS";
        case Criterion::WF: return "WF";
        case Criterion::NZ: return "NZ";
    }
    return "?";
}

std::optional<Criterion> parse_criterion(std::string_view name) {
    const std::string lower = to_lower(trim(name));
    if (lower == "ws") return Criterion::WS;
    if (lower == "wf") return Criterion::WF;
    if (lower == "nz") return Criterion::NZ;
    return std::nullopt;
}

double CriteriaRow::value(Criterion c, bool normalized) const {
    switch (c) {
        case Criterion::WS: return normalized ? ws_norm : ws;
        case Criterion::WF: return normalized ? wf_norm : wf;
        case Criterion::NZ: return normalized ? nz_norm : nz;
    }
    return 0.0;
}

CriteriaTable::CriteriaTable(std::vector<CriteriaRow> rows) : rows_(std::move(rows)) {
    index_.reserve(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i)
        if (!index_.emplace(rows_[i].word, i).second)
            throw std::invalid_argument("duplicate criteria row " + rows_[i].word);
}

const CriteriaRow* CriteriaTable::find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    return it == index_.end() ? nullptr : &rows_[it->second];
}

CriteriaRow* CriteriaTable::find(std::string_view word) {
    auto it = index_.find(std::string(word));
    return it == index_.end() ? nullptr : &rows_[it->second];
}

std::optional<std::size_t> find_embedding(const DenseEmbeddings& emb, const Term& term) {
    if (auto i = emb.find(term.label())) return i;
    return emb.find(term.lemma);
}

CriteriaTable compute_criteria(const std::vector<Term>& candidates, const DenseEmbeddings& emb,
                               const Vocabulary& vocab, const CriteriaOptions& options) {
    if (!candidates.empty() && emb.dim() == 0)
        throw std::runtime_error("embedding table is empty; cannot compute WS/NZ");

    struct Present {
        const Term* term;
        std::size_t emb_index;
    };
    std::vector<Present> present;
    std::size_t missing = 0;
    for (const auto& t : candidates) {
        if (auto i = find_embedding(emb, t)) {
            present.push_back({&t, *i});
        } else {
            ++missing;
        }
    }
    if (missing > 0) spdlog::warn("{} of {} candidates have no embedding and are excluded", missing,
                                  candidates.size());
    if (!candidates.empty() &&
        static_cast<double>(missing) > options.max_missing_fraction * static_cast<double>(candidates.size()))
        throw std::runtime_error("embeddings missing for " + std::to_string(missing) + " of " +
                                 std::to_string(candidates.size()) +
                                 " candidates; wrong embedding file?");

    // Sums run in label order so WS does not depend on candidate order.
    std::vector<std::size_t> canon(present.size());
    std::iota(canon.begin(), canon.end(), 0);
    std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
        return present[a].term->label() < present[b].term->label();
    });

    const std::size_t n = present.size(), dim = emb.dim();
    std::vector<double> unit(n * dim, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const auto v = emb.vector(present[canon[k]].emb_index);
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (std::size_t d = 0; d < dim; ++d) unit[k * dim + d] = v[d] / norm;
    }
    std::vector<double> ws_canon(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        const double* ui = &unit[i * dim];
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* uj = &unit[j * dim];
            double dot = 0.0;
            for (std::size_t d = 0; d < dim; ++d) dot += ui[d] * uj[d];
            sum += dot;
        }
        if (options.aggregation == WsAggregation::Mean && n > 1) sum /= static_cast<double>(n - 1);
        ws_canon[i] = sum;
    });
    std::vector<double> ws(n);
    for (std::size_t k = 0; k < n; ++k) ws[canon[k]] = ws_canon[k];

    std::vector<CriteriaRow> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        CriteriaRow row;
        row.word = present[i].term->label();
        row.wf = static_cast<double>(vocab.frequency(*present[i].term));
        row.ws = ws[i];
        std::size_t nz = 0;
        for (double x : emb.vector(present[i].emb_index))
            if (std::abs(x) < options.zero_eps) ++nz;
        row.nz = static_cast<double>(nz);
        rows.push_back(std::move(row));
    }
    return normalize_criteria(CriteriaTable(std::move(rows)));
}

CriteriaTable normalize_criteria(CriteriaTable table) {
    if (table.empty()) throw std::invalid_argument("cannot normalize an empty criteria table");
    for (Criterion c : kCriteria) {
        double max = 0.0;
        for (const auto& r : table.rows()) {
            const double v = r.value(c, false);
            if (v < 0.0)
                throw std::invalid_argument("negative " + std::string(criterion_name(c)) +
                                            " for " + r.word);
            max = std::max(max, v);
        }
        if (max == 0.0)
            spdlog::warn("criterion {} is zero for every word; normalized values set to 0",
                         criterion_name(c));
        for (auto& r : table.rows()) {
            const double v = max > 0.0 ? r.value(c, false) / max : 0.0;
            switch (c) {
                case Criterion::WS: r.ws_norm = v; break;
                case Criterion::WF: r.wf_norm = v; break;
                case Criterion::NZ: r.nz_norm = v; break;
            }
        }
    }
    table.set_has_normalized(true);
    return table;
}

std::vector<std::string> top_by(const CriteriaTable& table, Criterion c, std::size_t m) {
    std::vector<const CriteriaRow*> rows;
    rows.reserve(table.size());
    for (const auto& r : table.rows()) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(), [c](const CriteriaRow* a, const CriteriaRow* b) {
        const double va = a->value(c, false), vb = b->value(c, false);
        if (va != vb) return va > vb;
        return a->word < b->word;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(m, rows.size()); ++i) out.push_back(rows[i]->word);
    return out;
}

LabeledSets build_labeled_sets(CriteriaTable& table, const std::vector<std::string>& a,
                               std::size_t m) {
    LabeledSets sets;
    for (const auto& r : table.rows()) sets.candidates.insert(r.word);
    sets.a.insert(a.begin(), a.end());
    for (const auto& w : top_by(table, Criterion::WS, m)) sets.s.insert(w);
    for (const auto& w : top_by(table, Criterion::WF, m)) sets.f.insert(w);
    for (const auto& w : top_by(table, Criterion::NZ, m)) sets.z.insert(w);
    sets.triple = sets.s;
    sets.triple.insert(sets.f.begin(), sets.f.end());
    sets.triple.insert(sets.z.begin(), sets.z.end());
    std::set_intersection(sets.a.begin(), sets.a.end(), sets.triple.begin(), sets.triple.end(),
                          std::inserter(sets.common, sets.common.end()));
    std::set_difference(sets.triple.begin(), sets.triple.end(), sets.a.begin(), sets.a.end(),
                        std::inserter(sets.in, sets.in.end()));
    std::set_difference(sets.a.begin(), sets.a.end(), sets.triple.begin(), sets.triple.end(),
                        std::inserter(sets.out, sets.out.end()));
    sets.u_at = sets.a;
    sets.u_at.insert(sets.triple.begin(), sets.triple.end());

    for (auto& r : table.rows()) {
        if (sets.common.count(r.word)) r.label = 1;
        else if (sets.in.count(r.word)) r.label = 2;
        else if (sets.out.count(r.word)) r.label = 3;
        else r.label.reset();
    }
    return sets;
}

std::optional<FeaturePair> parse_feature_pair(std::string_view text) {
    const std::string lower = to_lower(trim(text));
    if (lower == "wf-ws") return FeaturePair::WfWs;
    if (lower == "nz-ws") return FeaturePair::NzWs;
    if (lower == "nz-wf") return FeaturePair::NzWf;
    return std::nullopt;
}

void emit_scatter(const CriteriaTable& table, const std::set<std::string>& selection,
                  FeaturePair pair, std::ostream& out, bool normalized) {
    Criterion x = Criterion::WF, y = Criterion::WS;
    if (pair == FeaturePair::NzWs) x = Criterion::NZ;
    if (pair == FeaturePair::NzWf) {
        x = Criterion::NZ;
        y = Criterion::WF;
    }
    out << "word,label,x,y\n";
    for (const auto& r : table.rows()) {
        if (!selection.count(r.word)) continue;
        out << r.word << ',' << (r.label ? std::to_string(*r.label) : "") << ','
            << format_sig(r.value(x, normalized), 9) << ',' << format_sig(r.value(y, normalized), 9)
            << '\n';
    }
}

void write_criteria(const CriteriaTable& table, std::ostream& out) {
    out << "word\twf\tws\tnz\twf_norm\tws_norm\tnz_norm\tlabel\n";
    for (const auto& r : table.rows()) {
        out << r.word << '\t' << format_sig(r.wf, 17) << '\t' << format_sig(r.ws, 17) << '\t'
            << format_sig(r.nz, 17) << '\t' << format_sig(r.wf_norm, 17) << '\t'
            << format_sig(r.ws_norm, 17) << '\t' << format_sig(r.nz_norm, 17) << '\t'
            << (r.label ? std::to_string(*r.label) : "") << '\n';
    }
}

CriteriaTable read_criteria(std::istream& in) {
    std::vector<CriteriaRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || (line_no == 1 && line.starts_with("word\t"))) continue;
        const auto f = split(line, '\t');
        if (f.size() != 8) throw ParseError("criteria line needs 8 fields", line_no);
        CriteriaRow r;
        r.word = std::string(f[0]);
        double* dst[] = {&r.wf, &r.ws, &r.nz, &r.wf_norm, &r.ws_norm, &r.nz_norm};
        for (std::size_t i = 0; i < 6; ++i)
            if (!parse_double(f[i + 1], *dst[i])) throw ParseError("bad criteria value", line_no);
        if (!trim(f[7]).empty()) {
            double label;
            if (!parse_double(f[7], label) || (label != 1 && label != 2 && label != 3))
                throw ParseError("bad criteria label", line_no);
            r.label = static_cast<int>(label);
        }
        rows.push_back(std::move(r));
    }
    CriteriaTable t(std::move(rows));
    t.set_has_normalized(true);
    return t;
}

}  // namespace xvec

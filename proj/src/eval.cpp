#include "xvec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include "xvec/corpus.hpp"
#include "xvec/util.hpp"

namespace xvec {

TestSet read_testset(std::istream& in, std::string name) {
    TestSet ts{std::move(name), {}};
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        std::vector<std::string_view> f;
        if (line.find('\t') != std::string::npos) {
            f = split(line, '\t');
        } else {
            for (auto part : split(line, ' '))
                if (!part.empty()) f.push_back(part);
        }
        if (f.size() < 3) throw ParseError("test-set line needs word1, word2, score", line_no);
        double score;
        if (!parse_double(f[2], score)) {
            if (ts.pairs.empty() && seen.empty() && line_no == 1) continue;
            throw ParseError("non-numeric score '" + std::string(f[2]) + "'", line_no);
        }
        std::string w1 = to_lower(trim(f[0])), w2 = to_lower(trim(f[1]));
        auto key = std::minmax(w1, w2);
        if (!seen.emplace(key.first, key.second).second)
            throw ParseError("duplicate pair (" + w1 + ", " + w2 + ")", line_no);
        ts.pairs.push_back({std::move(w1), std::move(w2), score});
    }
    return ts;
}

TestSet load_testset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_testset(in, path.stem().string());
}

std::vector<double> fractional_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double mean = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("spearman: need at least two observations");
    const auto rx = fractional_ranks(x), ry = fractional_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw std::domain_error("zero rank variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

RowLookup::RowLookup(const SparseMatrix& m) : m_(&m) {
    std::map<std::string, std::pair<Pos, std::size_t>> best;
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        const auto& label = m.row_labels()[r];
        const auto slash = label.rfind('/');
        if (slash == std::string::npos) continue;
        auto pos = pos_from_code(std::string_view(label).substr(slash + 1));
        if (!pos) continue;
        auto lemma = label.substr(0, slash);
        auto it = best.find(lemma);
        if (it == best.end() || *pos < it->second.first) best[lemma] = {*pos, r};
    }
    for (auto& [lemma, v] : best) by_lemma_.emplace(lemma, v.second);
}

std::optional<std::size_t> RowLookup::find(std::string_view word) const {
    if (auto r = m_->row_of(word)) return r;
    auto it = by_lemma_.find(std::string(word));
    if (it == by_lemma_.end()) return std::nullopt;
    return it->second;
}

EvalEntry evaluate(const SparseMatrix& m, const TestSet& ts, std::string matrix_name) {
    EvalEntry e{std::move(matrix_name), ts.name, std::nullopt, 0, 0, {}};
    const RowLookup lookup(m);
    std::vector<double> model, human;
    for (const auto& p : ts.pairs) {
        auto a = lookup.find(p.word1), b = lookup.find(p.word2);
        if (!a || !b) {
            ++e.pairs_skipped_oov;
            continue;
        }
        model.push_back(cosine(m.row(*a), m.row(*b)));
        human.push_back(p.score);
        ++e.pairs_used;
    }
    if (e.pairs_used < 2)
        throw std::runtime_error("insufficient coverage: " + std::to_string(e.pairs_used) +
                                 " usable pairs in " + ts.name);
    e.spearman = spearman(model, human);
    return e;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) { return v ? format_sig(*v, 9) : ""; }

std::optional<double> lookup(const std::vector<EvalEntry>& entries, const std::string& matrix,
                             const std::string& testset) {
    for (const auto& e : entries)
        if (e.matrix == matrix && e.testset == testset) return e.spearman;
    return std::nullopt;
}

std::pair<std::string, std::string> deltas(const std::optional<double>& value,
                                           const std::optional<double>& base) {
    if (!value || !base) return {"", ""};
    const double pp = (*value - *base) * 100.0;
    std::string rel = *base != 0.0 ? format_sig((*value - *base) / std::abs(*base) * 100.0, 9) : "";
    return {format_sig(pp, 9), rel};
}

}  // namespace

void write_report(const std::vector<EvalEntry>& entries, const std::string& baseline,
                  std::ostream& out) {
    if (std::none_of(entries.begin(), entries.end(), [&](const EvalEntry& e) { return e.matrix == baseline; }))
        throw std::invalid_argument("unknown baseline matrix '" + baseline + "'");
    out << "matrix,testset,spearman,pairs_used,oov,delta_pp,delta_rel_pct\n";
    for (const auto& e : entries) {
        const auto [pp, rel] = deltas(e.spearman, lookup(entries, baseline, e.testset));
        out << e.matrix << ',' << e.testset << ',' << fmt_opt(e.spearman) << ',' << e.pairs_used
            << ',' << e.pairs_skipped_oov << ',' << pp << ',' << rel << '\n';
    }
}

void write_comparisons(const std::vector<EvalEntry>& entries,
                       const std::vector<std::pair<std::string, std::string>>& comparisons,
                       std::ostream& out) {
    out << "matrix,baseline,testset,spearman,baseline_spearman,delta_pp,delta_rel_pct\n";
    std::vector<std::string> testsets;
    for (const auto& e : entries)
        if (std::find(testsets.begin(), testsets.end(), e.testset) == testsets.end())
            testsets.push_back(e.testset);
    for (const auto& [matrix, base] : comparisons) {
        for (const auto& ts : testsets) {
            const auto v = lookup(entries, matrix, ts), b = lookup(entries, base, ts);
            const auto [pp, rel] = deltas(v, b);
            out << matrix << ',' << base << ',' << ts << ',' << fmt_opt(v) << ',' << fmt_opt(b)
                << ',' << pp << ',' << rel << '\n';
        }
    }
}

}  // namespace xvec

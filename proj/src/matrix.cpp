#include "xvec/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "xvec/util.hpp"

namespace xvec {

SparseMatrix::SparseMatrix(std::vector<std::string> row_labels,
                           std::vector<std::string> col_labels)
    : row_labels_(std::move(row_labels)),
      col_labels_(std::move(col_labels)),
      rows_(row_labels_.size()) {
    row_index_.reserve(row_labels_.size());
    for (std::size_t i = 0; i < row_labels_.size(); ++i)
        if (!row_index_.emplace(row_labels_[i], i).second)
            throw std::invalid_argument("duplicate row label " + row_labels_[i]);
    col_index_.reserve(col_labels_.size());
    for (std::size_t i = 0; i < col_labels_.size(); ++i)
        if (!col_index_.emplace(col_labels_[i], i).second)
            throw std::invalid_argument("duplicate column label " + col_labels_[i]);
}

std::size_t SparseMatrix::nnz() const noexcept {
    std::size_t n = 0;
    for (const auto& r : rows_) n += r.size();
    return n;
}

std::optional<std::size_t> SparseMatrix::row_of(std::string_view label) const {
    auto it = row_index_.find(std::string(label));
    if (it == row_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> SparseMatrix::col_of(std::string_view label) const {
    auto it = col_index_.find(std::string(label));
    if (it == col_index_.end()) return std::nullopt;
    return it->second;
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
    const auto& row = rows_.at(r);
    auto it = std::lower_bound(row.begin(), row.end(), c,
                               [](const MatrixEntry& e, std::size_t col) { return e.col < col; });
    return (it != row.end() && it->col == c) ? it->value : 0.0;
}

void SparseMatrix::set_row(std::size_t r, std::vector<MatrixEntry> entries) {
    std::erase_if(entries, [](const MatrixEntry& e) { return e.value == 0.0; });
    std::sort(entries.begin(), entries.end(),
              [](const MatrixEntry& a, const MatrixEntry& b) { return a.col < b.col; });
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].col >= n_cols()) throw std::out_of_range("column index out of range");
        if (!(entries[i].value > 0.0) || !std::isfinite(entries[i].value))
            throw std::invalid_argument("matrix scores must be positive and finite");
        if (i > 0 && entries[i].col == entries[i - 1].col)
            throw std::invalid_argument("duplicate column in row");
    }
    rows_.at(r) = std::move(entries);
}

SparseMatrix from_dense(std::vector<std::string> row_labels, std::vector<std::string> col_labels,
                        const std::vector<std::vector<double>>& values) {
    SparseMatrix m(std::move(row_labels), std::move(col_labels));
    if (values.size() != m.n_rows()) throw std::invalid_argument("row count mismatch");
    for (std::size_t r = 0; r < values.size(); ++r) {
        if (values[r].size() != m.n_cols()) throw std::invalid_argument("column count mismatch");
        std::vector<MatrixEntry> entries;
        for (std::size_t c = 0; c < values[r].size(); ++c)
            if (values[r][c] != 0.0) entries.push_back({static_cast<std::uint32_t>(c), values[r][c]});
        m.set_row(r, std::move(entries));
    }
    return m;
}

std::vector<std::vector<double>> to_dense(const SparseMatrix& m) {
    std::vector<std::vector<double>> out(m.n_rows(), std::vector<double>(m.n_cols(), 0.0));
    for (std::size_t r = 0; r < m.n_rows(); ++r)
        for (const auto& e : m.row(r)) out[r][e.col] = e.value;
    return out;
}

std::vector<std::string> index_labels(std::string_view prefix, std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(prefix) + std::to_string(i));
    return out;
}

namespace {

std::vector<std::string> labels_of(const std::vector<Term>& terms) {
    std::vector<std::string> out;
    out.reserve(terms.size());
    for (const auto& t : terms) out.push_back(t.label());
    return out;
}

// Shared pair enumeration for both counting modes. weight(alpha) is called
// only for alpha in [1, max_alpha] (max_alpha == 0: unbounded).
template <class Weight>
SparseMatrix count_pairs(std::span<const Sentence> corpus, const std::vector<Term>& targets,
                         const std::vector<Term>& contexts, std::size_t max_alpha,
                         Weight&& weight) {
    std::unordered_map<Term, std::uint32_t, TermHash> target_row, context_col;
    for (std::size_t i = 0; i < targets.size(); ++i)
        target_row.emplace(targets[i], static_cast<std::uint32_t>(i));
    for (std::size_t i = 0; i < contexts.size(); ++i)
        context_col.emplace(contexts[i], static_cast<std::uint32_t>(i));

    std::vector<std::unordered_map<std::uint32_t, double>> acc(targets.size());
    std::vector<std::pair<std::size_t, std::uint32_t>> t_occ, c_occ;
    Term key;
    for (const auto& sentence : corpus) {
        t_occ.clear();
        c_occ.clear();
        for (std::size_t p = 0; p < sentence.tokens.size(); ++p) {
            const auto& tok = sentence.tokens[p];
            key.lemma = tok.lemma;
            key.pos = tok.pos;
            if (auto it = target_row.find(key); it != target_row.end()) t_occ.emplace_back(p, it->second);
            if (auto it = context_col.find(key); it != context_col.end()) c_occ.emplace_back(p, it->second);
        }
        for (const auto& [p, row] : t_occ) {
            for (const auto& [q, col] : c_occ) {
                if (p == q) continue;
                const std::size_t alpha = p > q ? p - q : q - p;
                if (max_alpha != 0 && alpha > max_alpha) continue;
                acc[row][col] += weight(alpha);
            }
        }
    }

    SparseMatrix m(labels_of(targets), labels_of(contexts));
    for (std::size_t r = 0; r < acc.size(); ++r) {
        std::vector<MatrixEntry> entries;
        entries.reserve(acc[r].size());
        for (const auto& [col, v] : acc[r]) entries.push_back({col, v});
        m.set_row(r, std::move(entries));
    }
    return m;
}

}  // namespace

SparseMatrix build_cooc_decay(std::span<const Sentence> corpus, const std::vector<Term>& targets,
                              const std::vector<Term>& contexts, const DecayOptions& options) {
    if (!(options.decay > 0.0)) throw std::invalid_argument("decay must be positive");
    std::vector<double> table;
    auto weight = [&](std::size_t alpha) {
        while (table.size() <= alpha)
            table.push_back(std::exp(-options.decay * static_cast<double>(table.size())));
        return table[alpha];
    };
    return count_pairs(corpus, targets, contexts, options.max_distance, weight);
}

SparseMatrix build_cooc_window(std::span<const Sentence> corpus, const std::vector<Term>& targets,
                               const std::vector<Term>& contexts, std::size_t window) {
    if (window == 0) throw std::invalid_argument("window must be at least 1");
    return count_pairs(corpus, targets, contexts, window, [](std::size_t) { return 1.0; });
}

SparseMatrix merge_sum(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.row_labels() != b.row_labels() || a.col_labels() != b.col_labels())
        throw std::invalid_argument("merge_sum: label mismatch");
    SparseMatrix out(a.row_labels(), a.col_labels());
    for (std::size_t r = 0; r < a.n_rows(); ++r) {
        std::vector<MatrixEntry> merged;
        auto x = a.row(r), y = b.row(r);
        std::size_t i = 0, j = 0;
        while (i < x.size() || j < y.size()) {
            if (j == y.size() || (i < x.size() && x[i].col < y[j].col)) {
                merged.push_back(x[i++]);
            } else if (i == x.size() || y[j].col < x[i].col) {
                merged.push_back(y[j++]);
            } else {
                merged.push_back({x[i].col, x[i].value + y[j].value});
                ++i;
                ++j;
            }
        }
        out.set_row(r, std::move(merged));
    }
    return out;
}

SparseMatrix ppmi_transform(const SparseMatrix& raw) {
    std::vector<double> row_sum(raw.n_rows(), 0.0), col_sum(raw.n_cols(), 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < raw.n_rows(); ++r) {
        for (const auto& e : raw.row(r)) {
            row_sum[r] += e.value;
            col_sum[e.col] += e.value;
        }
        total += row_sum[r];
    }
    if (!(total > 0.0)) throw std::domain_error("empty mass");

    SparseMatrix out(raw.row_labels(), raw.col_labels());
    for (std::size_t r = 0; r < raw.n_rows(); ++r) {
        std::vector<MatrixEntry> entries;
        for (const auto& e : raw.row(r)) {
            const double pmi = std::log2((e.value / row_sum[r]) * (total / col_sum[e.col]));
            if (pmi > 0.0) entries.push_back({e.col, pmi});
        }
        out.set_row(r, std::move(entries));
    }
    return out;
}

double cosine(std::span<const MatrixEntry> u, std::span<const MatrixEntry> v) {
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (const auto& e : u) nu += e.value * e.value;
    for (const auto& e : v) nv += e.value * e.value;
    if (nu == 0.0 || nv == 0.0) return 0.0;
    std::size_t i = 0, j = 0;
    while (i < u.size() && j < v.size()) {
        if (u[i].col < v[j].col) {
            ++i;
        } else if (v[j].col < u[i].col) {
            ++j;
        } else {
            dot += u[i++].value * v[j++].value;
        }
    }
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

SparseMatrix mask_columns(const SparseMatrix& m, std::span<const std::uint8_t> mask) {
    if (mask.size() != m.n_cols())
        throw std::invalid_argument("mask length " + std::to_string(mask.size()) +
                                    " does not match column count " + std::to_string(m.n_cols()));
    SparseMatrix out(m.row_labels(), m.col_labels());
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        std::vector<MatrixEntry> kept;
        for (const auto& e : m.row(r))
            if (mask[e.col]) kept.push_back(e);
        out.set_row(r, std::move(kept));
    }
    return out;
}

SparseMatrix restrict_columns(const SparseMatrix& m, const std::vector<std::string>& labels) {
    std::vector<std::int64_t> remap(m.n_cols(), -1);
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (auto c = m.col_of(labels[i])) remap[*c] = static_cast<std::int64_t>(i);
    SparseMatrix out(m.row_labels(), labels);
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        std::vector<MatrixEntry> kept;
        for (const auto& e : m.row(r))
            if (remap[e.col] >= 0) kept.push_back({static_cast<std::uint32_t>(remap[e.col]), e.value});
        out.set_row(r, std::move(kept));
    }
    return out;
}

SparseMatrix select_rows(const SparseMatrix& m, const std::vector<std::string>& labels) {
    SparseMatrix out(labels, m.col_labels());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto r = m.row_of(labels[i]);
        if (!r) throw std::invalid_argument("select_rows: unknown row " + labels[i]);
        auto row = m.row(*r);
        out.set_row(i, std::vector<MatrixEntry>(row.begin(), row.end()));
    }
    return out;
}

void write_matrix(const SparseMatrix& m, std::ostream& out, int digits) {
    out << m.n_rows() << ' ' << m.n_cols() << ' ' << m.nnz() << '\n';
    for (const auto& l : m.row_labels()) out << "%r\t" << l << '\n';
    for (const auto& l : m.col_labels()) out << "%c\t" << l << '\n';
    for (std::size_t r = 0; r < m.n_rows(); ++r)
        for (const auto& e : m.row(r))
            out << m.row_labels()[r] << '\t' << m.col_labels()[e.col] << '\t'
                << format_sig(e.value, digits) << '\n';
}

SparseMatrix read_matrix(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t n_rows = 0, n_cols = 0, nnz = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    {
        std::istringstream header(line);
        if (!(header >> n_rows >> n_cols >> nnz)) throw ParseError("bad matrix header", line_no);
    }
    std::vector<std::string> rows, cols;
    struct Triplet {
        std::string row, col;
        double value;
    };
    std::vector<Triplet> triplets;
    triplets.reserve(nnz);
    std::unordered_map<std::string, std::size_t> seen_row, seen_col;
    bool saw_decl = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto f = split(line, '\t');
        if (f.size() == 2 && (f[0] == "%r" || f[0] == "%c")) {
            saw_decl = true;
            (f[0] == "%r" ? rows : cols).emplace_back(f[1]);
            continue;
        }
        double v = 0.0;
        if (f.size() != 3 || !parse_double(f[2], v) || v < 0.0)
            throw ParseError("bad matrix triplet", line_no);
        triplets.push_back({std::string(f[0]), std::string(f[1]), v});
        if (!saw_decl) {
            if (seen_row.emplace(triplets.back().row, seen_row.size()).second)
                rows.push_back(triplets.back().row);
            if (seen_col.emplace(triplets.back().col, seen_col.size()).second)
                cols.push_back(triplets.back().col);
        }
    }
    if (saw_decl && (rows.size() != n_rows || cols.size() != n_cols))
        throw ParseError("matrix label declarations do not match header", line_no);
    if (triplets.size() != nnz) throw ParseError("matrix nnz does not match header", line_no);

    SparseMatrix m(std::move(rows), std::move(cols));
    std::vector<std::vector<MatrixEntry>> acc(m.n_rows());
    for (const auto& t : triplets) {
        auto r = m.row_of(t.row);
        auto c = m.col_of(t.col);
        if (!r || !c) throw ParseError("triplet references undeclared label " + t.row + "/" + t.col, line_no);
        acc[*r].push_back({static_cast<std::uint32_t>(*c), t.value});
    }
    for (std::size_t r = 0; r < acc.size(); ++r) m.set_row(r, std::move(acc[r]));
    return m;
}

void save_matrix(const SparseMatrix& m, const std::filesystem::path& path, int digits) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_matrix(m, out, digits);
}

SparseMatrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_matrix(in);
}

std::optional<std::size_t> DenseEmbeddings::find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool DenseEmbeddings::insert(std::string word, std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("empty embedding vector");
    if (words_.empty()) dim_ = values.size();
    if (values.size() != dim_) throw std::invalid_argument("embedding dimension mismatch");
    if (auto it = index_.find(word); it != index_.end()) {
        std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
        return false;
    }
    index_.emplace(word, words_.size());
    words_.push_back(std::move(word));
    data_.insert(data_.end(), values.begin(), values.end());
    return true;
}

DenseEmbeddings read_embeddings(std::istream& in) {
    DenseEmbeddings emb;
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split(trim(line), ' ');
        std::erase_if(fields, [](std::string_view f) { return f.empty(); });
        if (line_no == 1 && fields.size() == 2) {
            double a, b;
            if (parse_double(fields[0], a) && parse_double(fields[1], b)) continue;
        }
        if (fields.size() < 2) throw ParseError("embedding line has no values", line_no);
        values.clear();
        for (std::size_t i = 1; i < fields.size(); ++i) {
            double v;
            if (!parse_double(fields[i], v)) throw ParseError("non-numeric embedding value", line_no);
            values.push_back(v);
        }
        if (!emb.empty() && values.size() != emb.dim())
            throw ParseError("embedding dimension " + std::to_string(values.size()) +
                                 " differs from " + std::to_string(emb.dim()),
                             line_no);
        if (!emb.insert(std::string(fields[0]), values))
            spdlog::warn("duplicate embedding for '{}' at line {}; keeping the last", fields[0], line_no);
    }
    return emb;
}

DenseEmbeddings load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_embeddings(in);
}

}  // namespace xvec

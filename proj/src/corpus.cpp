#include "xvec/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <istream>
#include <ostream>
#include <set>

#include <spdlog/spdlog.h>

#include "xvec/util.hpp"

namespace xvec {

char pos_code(Pos pos) {
    switch (pos) {
        case Pos::Noun: return 'N';
        case Pos::Verb: return 'V';
        case Pos::Adjective: return 'J';
        case Pos::Adverb: return 'R';
        case Pos::Other: return 'X';
    }
    return 'X';
}

std::optional<Pos> pos_from_code(std::string_view code) {
    if (code.size() != 1) return std::nullopt;
    switch (code[0]) {
        case 'N': return Pos::Noun;
        case 'V': return Pos::Verb;
        case 'J': return Pos::Adjective;
        case 'R': return Pos::Adverb;
        case 'X': return Pos::Other;
        default: return std::nullopt;
    }
}

std::string_view pos_name(Pos pos) {
    switch (pos) {
        case Pos::Noun: return "noun";
        case Pos::Verb: return "verb";
        case Pos::Adjective: return "adjective";
        case Pos::Adverb: return "adverb";
        case Pos::Other: return "other";
    }
    return "other";
}

std::optional<Pos> parse_pos(std::string_view text) {
    if (auto p = pos_from_code(text)) return p;
    const std::string lower = to_lower(text);
    for (Pos p : {Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb, Pos::Other})
        if (lower == pos_name(p)) return p;
    return std::nullopt;
}

std::string Term::label() const {
    std::string out = lemma;
    out.push_back('/');
    out.push_back(pos_code(pos));
    return out;
}

Term Term::parse(std::string_view label) {
    const auto slash = label.rfind('/');
    if (slash == std::string_view::npos || slash == 0)
        throw std::invalid_argument("bad term label '" + std::string(label) + "'");
    auto pos = pos_from_code(label.substr(slash + 1));
    if (!pos) throw std::invalid_argument("bad POS code in '" + std::string(label) + "'");
    return Term{std::string(label.substr(0, slash)), *pos};
}

std::size_t TermHash::operator()(const Term& t) const noexcept {
    return std::hash<std::string>{}(t.lemma) * 31u + static_cast<std::size_t>(t.pos);
}

TagMap::TagMap(std::vector<std::pair<std::string, Pos>> prefixes)
    : prefixes_(std::move(prefixes)) {
    std::stable_sort(prefixes_.begin(), prefixes_.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
}

TagMap TagMap::penn() {
    return TagMap({{"NN", Pos::Noun},
                   {"VB", Pos::Verb},
                   {"VV", Pos::Verb},
                   {"JJ", Pos::Adjective},
                   {"RB", Pos::Adverb}});
}

Pos TagMap::classify(std::string_view tag) const {
    for (const auto& [prefix, pos] : prefixes_)
        if (tag.starts_with(prefix)) return pos;
    return Pos::Other;
}

CorpusReader::CorpusReader(const std::filesystem::path& path, CorpusOptions options)
    : in_(path), options_(std::move(options)) {
    if (!in_) throw std::runtime_error("cannot open corpus " + path.string());
}

bool CorpusReader::next(Sentence& out) {
    out.tokens.clear();
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string_view view = trim(line);
        if (view.empty() || view == "</s>") {
            if (!out.tokens.empty()) return true;
            continue;
        }
        if (view.front() == '<' && view.back() == '>' && view.find('\t') == std::string_view::npos)
            continue;
        const auto fields = split(line, '\t');
        if (fields.size() < 3 || fields[0].empty() || fields[1].empty()) {
            if (options_.on_malformed == MalformedLinePolicy::Abort)
                throw ParseError("malformed corpus line, expected surface<TAB>lemma<TAB>tag",
                                 line_no_);
            ++skipped_;
            continue;
        }
        out.tokens.push_back(Token{std::string(fields[0]), to_lower(fields[1]),
                                   options_.tags.classify(trim(fields[2]))});
    }
    return !out.tokens.empty();
}

std::vector<Sentence> load_corpus(const std::filesystem::path& path, CorpusOptions options) {
    CorpusReader reader(path, std::move(options));
    std::vector<Sentence> out;
    Sentence s;
    while (reader.next(s)) out.push_back(std::move(s));
    if (reader.skipped_lines() > 0)
        spdlog::warn("{}: skipped {} malformed lines", path.string(), reader.skipped_lines());
    return out;
}

PosCaps PosCaps::parse(std::string_view text) {
    PosCaps caps;
    for (auto item : split(text, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("bad cap '" + std::string(item) + "'");
        auto pos = parse_pos(trim(item.substr(0, eq)));
        if (!pos || *pos == Pos::Other)
            throw std::invalid_argument("bad POS in cap '" + std::string(item) + "'");
        const auto num = trim(item.substr(eq + 1));
        std::size_t value = 0;
        auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
        if (ec != std::errc() || ptr != num.data() + num.size() || value == 0)
            throw std::invalid_argument("cap must be a positive integer: '" + std::string(item) +
                                        "'");
        caps.caps[static_cast<std::size_t>(*pos)] = value;
    }
    return caps;
}

void FrequencyTable::add(const Sentence& sentence) {
    for (const auto& tok : sentence.tokens) {
        ++totals_[static_cast<std::size_t>(tok.pos)];
        if (tok.pos == Pos::Other) continue;
        ++counts_[Term{tok.lemma, tok.pos}];
    }
}

void FrequencyTable::merge(const FrequencyTable& other) {
    for (const auto& [term, n] : other.counts_) counts_[term] += n;
    for (std::size_t i = 0; i < totals_.size(); ++i) totals_[i] += other.totals_[i];
}

std::uint64_t FrequencyTable::count(const Term& term) const {
    auto it = counts_.find(term);
    return it == counts_.end() ? 0 : it->second;
}

std::uint64_t FrequencyTable::total(Pos pos) const {
    return totals_[static_cast<std::size_t>(pos)];
}

namespace {

bool vocab_order(const VocabEntry& a, const VocabEntry& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    if (a.term.lemma != b.term.lemma) return a.term.lemma < b.term.lemma;
    return a.term.pos < b.term.pos;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), vocab_order);
    index_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].frequency == 0)
            throw std::invalid_argument("vocabulary entry with zero frequency: " +
                                        entries_[i].term.label());
        if (!index_.emplace(entries_[i].term, i).second)
            throw std::invalid_argument("duplicate vocabulary entry " + entries_[i].term.label());
    }
}

std::optional<std::size_t> Vocabulary::find(const Term& term) const {
    auto it = index_.find(term);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t Vocabulary::frequency(const Term& term) const {
    auto i = find(term);
    return i ? entries_[*i].frequency : 0;
}

std::vector<Term> Vocabulary::terms() const {
    std::vector<Term> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.term);
    return out;
}

Vocabulary build_vocabulary(const FrequencyTable& freq, const PosCaps& caps) {
    std::array<std::vector<VocabEntry>, 4> by_pos;
    for (const auto& [term, n] : freq.counts())
        if (term.pos != Pos::Other)
            by_pos[static_cast<std::size_t>(term.pos)].push_back({term, n});
    std::vector<VocabEntry> kept;
    for (Pos pos : kContentPos) {
        auto& bucket = by_pos[static_cast<std::size_t>(pos)];
        std::sort(bucket.begin(), bucket.end(), vocab_order);
        const std::size_t keep = std::min(bucket.size(), caps[pos]);
        kept.insert(kept.end(), bucket.begin(), bucket.begin() + static_cast<std::ptrdiff_t>(keep));
    }
    return Vocabulary(std::move(kept));
}

Vocabulary build_vocabulary(std::span<const Sentence> corpus, const PosCaps& caps) {
    FrequencyTable freq;
    for (const auto& s : corpus) freq.add(s);
    return build_vocabulary(freq, caps);
}

void write_vocabulary(const Vocabulary& vocab, std::ostream& out) {
    for (const auto& e : vocab.entries())
        out << e.term.lemma << '\t' << pos_code(e.term.pos) << '\t' << e.frequency << '\n';
}

Vocabulary read_vocabulary(std::istream& in) {
    std::vector<VocabEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split(line, '\t');
        auto pos = f.size() == 3 ? pos_from_code(trim(f[1])) : std::nullopt;
        std::uint64_t n = 0;
        if (pos) {
            const auto num = trim(f[2]);
            auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
            if (ec != std::errc() || ptr != num.data() + num.size()) pos.reset();
        }
        if (!pos) throw ParseError("bad vocabulary line", line_no);
        entries.push_back({Term{std::string(f[0]), *pos}, n});
    }
    return Vocabulary(std::move(entries));
}

std::vector<Term> most_frequent(const Vocabulary& vocab, std::size_t n) {
    std::vector<Term> out;
    for (const auto& e : vocab.entries()) {
        if (out.size() == n) break;
        out.push_back(e.term);
    }
    return out;
}

std::vector<Term> proportional_sample(const Vocabulary& vocab, std::size_t n) {
    n = std::min(n, vocab.size());
    constexpr std::array<std::size_t, 4> weights{8, 4, 4, 2};
    constexpr std::size_t weight_sum = 18;
    std::array<std::size_t, 4> quota{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        quota[i] = n * weights[i] / weight_sum;
        assigned += quota[i];
    }
    for (std::size_t i = 0; assigned < n; i = (i + 1) % 4, ++assigned) ++quota[i];

    std::set<Term> chosen;
    std::array<std::size_t, 4> taken{};
    for (const auto& e : vocab.entries()) {
        const auto k = static_cast<std::size_t>(e.term.pos);
        if (k < 4 && taken[k] < quota[k]) {
            ++taken[k];
            chosen.insert(e.term);
        }
    }
    for (const auto& e : vocab.entries()) {
        if (chosen.size() >= n) break;
        chosen.insert(e.term);
    }
    std::vector<Term> out;
    for (const auto& e : vocab.entries())
        if (chosen.count(e.term)) out.push_back(e.term);
    return out;
}

}  // namespace xvec

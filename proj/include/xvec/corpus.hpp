#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace xvec {

enum class Pos : std::uint8_t { Noun = 0, Verb = 1, Adjective = 2, Adverb = 3, Other = 4 };

inline constexpr std::array<Pos, 4> kContentPos = {Pos::Noun, Pos::Verb, Pos::Adjective,
                                                   Pos::Adverb};

// Single-letter codes used in term labels and vocabulary files: N V J R X.
char pos_code(Pos pos);
std::optional<Pos> pos_from_code(std::string_view code);
std::string_view pos_name(Pos pos);
// Accepts a code ("N") or a name ("noun", case-insensitive).
std::optional<Pos> parse_pos(std::string_view text);

// Word identity throughout the pipeline: lemma plus coarse POS class.
// Rendered as "lemma/N" in every file that names words.
struct Term {
    std::string lemma;
    Pos pos = Pos::Other;

    std::string label() const;
    static Term parse(std::string_view label);

    auto operator<=>(const Term&) const = default;
    bool operator==(const Term&) const = default;
};

struct TermHash {
    std::size_t operator()(const Term& t) const noexcept;
};

struct Token {
    std::string surface;
    std::string lemma;
    Pos pos = Pos::Other;
};

// Token positions are implicit: token k sits at 1-based position k + 1.
struct Sentence {
    std::vector<Token> tokens;
};

// Maps tagset tags to POS classes by longest matching prefix.
class TagMap {
public:
    TagMap() = default;
    explicit TagMap(std::vector<std::pair<std::string, Pos>> prefixes);

    // NN*->Noun, VB*/VV*->Verb, JJ*->Adjective, RB*->Adverb.
    static TagMap penn();

    Pos classify(std::string_view tag) const;

private:
    std::vector<std::pair<std::string, Pos>> prefixes_;
};

enum class MalformedLinePolicy { Skip, Abort };

struct CorpusOptions {
    TagMap tags = TagMap::penn();
    MalformedLinePolicy on_malformed = MalformedLinePolicy::Abort;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Streaming reader for the vertical tagged format:
//   surface<TAB>lemma<TAB>tag[<TAB>...]
// A blank line or </s> closes the current sentence. Other single-token
// markup lines (<s>, <text id=...>) are ignored.
class CorpusReader {
public:
    CorpusReader(const std::filesystem::path& path, CorpusOptions options = {});

    bool next(Sentence& out);
    std::size_t skipped_lines() const noexcept { return skipped_; }

private:
    std::ifstream in_;
    CorpusOptions options_;
    std::size_t line_no_ = 0;
    std::size_t skipped_ = 0;
};

std::vector<Sentence> load_corpus(const std::filesystem::path& path, CorpusOptions options = {});

struct PosCaps {
    std::array<std::size_t, 4> caps{20000, 10000, 10000, 5000};

    std::size_t operator[](Pos pos) const { return caps.at(static_cast<std::size_t>(pos)); }
    // "N=20000,V=10000,J=10000,R=5000"; unspecified classes keep their default.
    static PosCaps parse(std::string_view text);
};

// Lemma+POS occurrence counts. Merging is plain summation.
class FrequencyTable {
public:
    void add(const Sentence& sentence);
    void merge(const FrequencyTable& other);

    std::uint64_t count(const Term& term) const;
    std::uint64_t total(Pos pos) const;
    const std::map<Term, std::uint64_t>& counts() const noexcept { return counts_; }

private:
    std::map<Term, std::uint64_t> counts_;
    std::array<std::uint64_t, 5> totals_{};
};

struct VocabEntry {
    Term term;
    std::uint64_t frequency = 0;
};

// Ordered by frequency descending, then lemma, then POS.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<VocabEntry> entries);

    const std::vector<VocabEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::optional<std::size_t> find(const Term& term) const;
    std::uint64_t frequency(const Term& term) const;

    std::vector<Term> terms() const;

private:
    std::vector<VocabEntry> entries_;
    std::unordered_map<Term, std::size_t, TermHash> index_;
};

Vocabulary build_vocabulary(const FrequencyTable& freq, const PosCaps& caps = {});
Vocabulary build_vocabulary(std::span<const Sentence> corpus, const PosCaps& caps = {});

// TSV: lemma<TAB>pos<TAB>freq
void write_vocabulary(const Vocabulary& vocab, std::ostream& out);
Vocabulary read_vocabulary(std::istream& in);

// The n most frequent vocabulary terms (vocabulary order).
std::vector<Term> most_frequent(const Vocabulary& vocab, std::size_t n);

// The n most frequent terms split across POS classes in the 8:4:4:2
// noun:verb:adjective:adverb proportion. Shortfall in one class is filled
// from the remaining most frequent terms.
std::vector<Term> proportional_sample(const Vocabulary& vocab, std::size_t n);

}  // namespace xvec

#include "doctest.h"

#include <sstream>

#include "support.hpp"
#include "xvec/corpus.hpp"

using namespace xvec;

namespace {

Sentence sentence(std::initializer_list<std::pair<const char*, Pos>> toks) {
    Sentence s;
    for (const auto& [lemma, pos] : toks) s.tokens.push_back({lemma, lemma, pos});
    return s;
}

}  // namespace

TEST_CASE("term labels round-trip") {
    const Term t{"dog", Pos::Noun};
    CHECK(t.label() == "dog/N");
    CHECK(Term::parse("dog/N") == t);
    CHECK(Term::parse("run/V").pos == Pos::Verb);
    CHECK_THROWS(Term::parse("dog"));
    CHECK_THROWS(Term::parse("dog/Q"));
}

TEST_CASE("penn tags map by prefix") {
    const auto tags = TagMap::penn();
    CHECK(tags.classify("NN") == Pos::Noun);
    CHECK(tags.classify("NNS") == Pos::Noun);
    CHECK(tags.classify("VBD") == Pos::Verb);
    CHECK(tags.classify("JJR") == Pos::Adjective);
    CHECK(tags.classify("RB") == Pos::Adverb);
    CHECK(tags.classify("DT") == Pos::Other);
}

TEST_CASE("load_corpus reads vertical format") {
    testing::TempDir dir("corpus");

    SUBCASE("one sentence of two tokens") {
        const auto p = dir.file("a.vert", "Dogs\tdog\tNN\nbark\tbark\tVB\n\n");
        const auto c = load_corpus(p);
        REQUIRE(c.size() == 1);
        REQUIRE(c[0].tokens.size() == 2);
        CHECK(c[0].tokens[0].lemma == "dog");
        CHECK(c[0].tokens[0].pos == Pos::Noun);
        CHECK(c[0].tokens[1].pos == Pos::Verb);
    }
    SUBCASE("blank line separates sentences") {
        const auto p = dir.file("b.vert", "a\ta\tNN\n\nb\tb\tNN\n");
        CHECK(load_corpus(p).size() == 2);
    }
    SUBCASE("markup lines") {
        const auto p = dir.file("c.vert", "<text id=\"x\">\n<s>\nA\tA\tNN\n</s>\n<s>\nb\tb\tVB\n</s>\n</text>\n");
        const auto c = load_corpus(p);
        REQUIRE(c.size() == 2);
        CHECK(c[0].tokens[0].lemma == "a");
    }
    SUBCASE("malformed line aborts with its line number") {
        const auto p = dir.file("d.vert", "a\ta\tNN\ndog\n");
        try {
            load_corpus(p);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }
    SUBCASE("malformed line skipped under skip policy") {
        const auto p = dir.file("e.vert", "a\ta\tNN\ndog\nb\tb\tNN\n");
        CorpusOptions opts;
        opts.on_malformed = MalformedLinePolicy::Skip;
        const auto c = load_corpus(p, opts);
        REQUIRE(c.size() == 1);
        CHECK(c[0].tokens.size() == 2);
    }
    SUBCASE("empty file") {
        CHECK(load_corpus(dir.file("f.vert", "")).empty());
    }
}

TEST_CASE("build_vocabulary applies caps and tie order") {
    std::vector<Sentence> corpus;
    for (int i = 0; i < 5; ++i) corpus.push_back(sentence({{"dog", Pos::Noun}, {"cat", Pos::Noun}}));
    for (int i = 0; i < 2; ++i) corpus.push_back(sentence({{"run", Pos::Verb}}));

    SUBCASE("N cap of one keeps the lexicographically first noun") {
        const auto v = build_vocabulary(corpus, PosCaps::parse("N=1"));
        REQUIRE(v.size() == 2);
        CHECK(v.entries()[0].term == Term{"cat", Pos::Noun});
        CHECK(v.entries()[1].term == Term{"run", Pos::Verb});
        CHECK_FALSE(v.find(Term{"dog", Pos::Noun}));
    }
    SUBCASE("both nouns kept and frequency sorted") {
        corpus.push_back(sentence({{"dog", Pos::Noun}}));
        const auto v = build_vocabulary(corpus, PosCaps::parse("N=2"));
        CHECK(v.entries()[0].term.lemma == "dog");
        CHECK(v.entries()[0].frequency == 6);
        CHECK(v.entries()[1].term.lemma == "cat");
    }
    SUBCASE("empty corpus") {
        CHECK(build_vocabulary(std::vector<Sentence>{}).empty());
    }
    SUBCASE("function words are never counted") {
        corpus.push_back(sentence({{"the", Pos::Other}}));
        CHECK_FALSE(build_vocabulary(corpus).find(Term{"the", Pos::Other}));
    }
}

TEST_CASE("vocabulary frequencies never exceed per-POS token totals") {
    std::vector<Sentence> corpus;
    std::mt19937_64 gen(3);
    const char* lemmas[] = {"a", "b", "c", "d", "e", "f"};
    for (int s = 0; s < 50; ++s) {
        Sentence sent;
        for (int k = 0; k < 8; ++k) {
            const auto pos = static_cast<Pos>(gen() % 5);
            sent.tokens.push_back({"x", lemmas[gen() % 6], pos});
        }
        corpus.push_back(sent);
    }
    FrequencyTable freq;
    for (const auto& s : corpus) freq.add(s);
    const auto v = build_vocabulary(corpus, PosCaps::parse("N=3,V=2,J=1,R=6"));
    for (auto pos : kContentPos) {
        std::uint64_t sum = 0;
        for (const auto& e : v.entries())
            if (e.term.pos == pos) {
                sum += e.frequency;
                CHECK(e.frequency >= 1);
                CHECK(freq.count(e.term) == e.frequency);
            }
        CHECK(sum <= freq.total(pos));
    }
    const auto again = build_vocabulary(corpus, PosCaps::parse("N=3,V=2,J=1,R=6"));
    CHECK(again.terms() == v.terms());
}

TEST_CASE("vocabulary TSV round-trip") {
    const Vocabulary v({{{"dog", Pos::Noun}, 9}, {{"run", Pos::Verb}, 4}, {{"fast", Pos::Adverb}, 4}});
    std::stringstream ss;
    write_vocabulary(v, ss);
    CHECK(ss.str() == "dog\tN\t9\nfast\tR\t4\nrun\tV\t4\n");
    const auto back = read_vocabulary(ss);
    CHECK(back.terms() == v.terms());
    CHECK(back.frequency(Term{"run", Pos::Verb}) == 4);
}

TEST_CASE("vocabulary rejects duplicates") {
    CHECK_THROWS(Vocabulary({{{"dog", Pos::Noun}, 2}, {{"dog", Pos::Noun}, 3}}));
}

TEST_CASE("proportional_sample follows the 8:4:4:2 split") {
    std::vector<VocabEntry> entries;
    const std::pair<Pos, const char*> classes[] = {
        {Pos::Noun, "n"}, {Pos::Verb, "v"}, {Pos::Adjective, "j"}, {Pos::Adverb, "r"}};
    for (const auto& [pos, prefix] : classes)
        for (int i = 0; i < 20; ++i)
            entries.push_back({{std::string(prefix) + std::to_string(i), pos}, static_cast<std::uint64_t>(100 - i)});
    const Vocabulary v(entries);
    const auto sample = proportional_sample(v, 18);
    REQUIRE(sample.size() == 18);
    std::map<Pos, int> per;
    for (const auto& t : sample) ++per[t.pos];
    CHECK(per[Pos::Noun] == 8);
    CHECK(per[Pos::Verb] == 4);
    CHECK(per[Pos::Adjective] == 4);
    CHECK(per[Pos::Adverb] == 2);
}

TEST_CASE("proportional_sample fills a short class from the rest") {
    std::vector<VocabEntry> entries;
    for (int i = 0; i < 20; ++i) entries.push_back({{"n" + std::to_string(i), Pos::Noun}, static_cast<std::uint64_t>(50 - i)});
    entries.push_back({{"v0", Pos::Verb}, 1});
    const auto sample = proportional_sample(Vocabulary(entries), 9);
    CHECK(sample.size() == 9);
    CHECK(std::count_if(sample.begin(), sample.end(), [](const Term& t) { return t.pos == Pos::Verb; }) == 1);
}

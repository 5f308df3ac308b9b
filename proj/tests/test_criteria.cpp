#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "support.hpp"
#include "xvec/criteria.hpp"

using namespace xvec;

namespace {

DenseEmbeddings embeddings(const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
    DenseEmbeddings e;
    for (const auto& [w, v] : rows) e.insert(w, v);
    return e;
}

double cos3(const std::vector<double>& a, const std::vector<double>& b) {
    const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    const double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    const double nb = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
    return dot / (na * nb);
}

CriteriaTable table_of(const std::vector<std::tuple<std::string, double, double, double>>& rows) {
    std::vector<CriteriaRow> out;
    for (const auto& [w, wf, ws, nz] : rows) {
        CriteriaRow r;
        r.word = w;
        r.wf = wf;
        r.ws = ws;
        r.nz = nz;
        out.push_back(r);
    }
    return CriteriaTable(out);
}

}  // namespace

TEST_CASE("NZ counts near-zero components") {
    const auto emb = embeddings({{"dog", {0.005, -0.009, 0.5}}});
    const Vocabulary vocab({{{"dog", Pos::Noun}, 3}});
    const auto t = compute_criteria({{"dog", Pos::Noun}}, emb, vocab);
    REQUIRE(t.size() == 1);
    CHECK(t.rows()[0].nz == 2.0);
    CHECK(t.rows()[0].wf == 3.0);
    CHECK(t.rows()[0].ws == 0.0);
}

TEST_CASE("WS sums pairwise cosines and ignores candidate order") {
    const std::vector<double> a = {1, 2, 3}, b = {3, 2, 1}, c = {0.5, -1, 2};
    const auto emb = embeddings({{"a", a}, {"b", b}, {"c", c}});
    const Vocabulary vocab({{{"a", Pos::Noun}, 5}, {{"b", Pos::Noun}, 4}, {{"c", Pos::Verb}, 2}});
    const std::vector<Term> order1 = {{"a", Pos::Noun}, {"b", Pos::Noun}, {"c", Pos::Verb}};
    const std::vector<Term> order2 = {{"c", Pos::Verb}, {"a", Pos::Noun}, {"b", Pos::Noun}};
    const auto t1 = compute_criteria(order1, emb, vocab);
    const auto t2 = compute_criteria(order2, emb, vocab);
    CHECK(t1.find("a/N")->ws == doctest::Approx(cos3(a, b) + cos3(a, c)).epsilon(1e-12));
    CHECK(t1.find("c/V")->ws == doctest::Approx(cos3(c, a) + cos3(c, b)).epsilon(1e-12));
    for (const auto& r : t1.rows()) CHECK(t2.find(r.word)->ws == r.ws);
}

TEST_CASE("labeled embeddings take precedence over bare lemmas") {
    const auto emb = embeddings({{"run", {1, 0}}, {"run/V", {0, 1}}});
    CHECK(*find_embedding(emb, {"run", Pos::Verb}) == 1);
    CHECK(*find_embedding(emb, {"run", Pos::Noun}) == 0);
    CHECK_FALSE(find_embedding(emb, {"walk", Pos::Verb}));
}

TEST_CASE("missing embeddings") {
    const Vocabulary vocab({{{"a", Pos::Noun}, 5}, {{"b", Pos::Noun}, 4}, {{"c", Pos::Noun}, 2}});
    const std::vector<Term> cands = {{"a", Pos::Noun}, {"b", Pos::Noun}, {"c", Pos::Noun}};
    CHECK(compute_criteria(cands, embeddings({{"a", {1, 0}}, {"b", {0, 1}}}), vocab).size() == 2);
    CHECK_THROWS(compute_criteria(cands, embeddings({{"a", {1, 0}}}), vocab));
    CHECK_THROWS(compute_criteria(cands, DenseEmbeddings{}, vocab));
}

TEST_CASE("infinity-norm normalization") {
    auto t = normalize_criteria(table_of({{"x", 5, 2, 0}, {"y", 10, 4, 0}}));
    CHECK(t.find("x")->wf_norm == 0.5);
    CHECK(t.find("y")->wf_norm == 1.0);
    CHECK(t.find("x")->nz_norm == 0.0);

    const auto single = normalize_criteria(table_of({{"x", 3, 7, 1}}));
    CHECK(single.rows()[0].wf_norm == 1.0);
    CHECK(single.rows()[0].ws_norm == 1.0);
    CHECK(single.rows()[0].nz_norm == 1.0);

    // Normalizing the normalized values again changes nothing.
    std::vector<std::tuple<std::string, double, double, double>> again;
    for (const auto& r : t.rows()) again.emplace_back(r.word, r.wf_norm, r.ws_norm, r.nz_norm);
    const auto t2 = normalize_criteria(table_of(again));
    for (const auto& r : t2.rows()) {
        CHECK(r.wf_norm == r.wf);
        CHECK(r.ws_norm == r.ws);
    }
}

TEST_CASE("normalized values lie in [0,1] with max exactly 1") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<std::tuple<std::string, double, double, double>> rows;
    for (int i = 0; i < 50; ++i) rows.emplace_back("w" + std::to_string(i), u(gen), u(gen), u(gen));
    const auto t = normalize_criteria(table_of(rows));
    for (auto c : kCriteria) {
        double mx = 0;
        for (const auto& r : t.rows()) {
            const double v = r.value(c, true);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            mx = std::max(mx, v);
        }
        CHECK(mx == 1.0);
    }
}

TEST_CASE("labeled sets") {
    // WF ranks a>b>c>d, WS ranks d>c>b>a, NZ ranks b>a>d>c.
    auto base = table_of({{"a", 40, 1, 3}, {"b", 30, 2, 4}, {"c", 20, 3, 1}, {"d", 10, 4, 2}});

    SUBCASE("top-M sets and partition") {
        auto t = base;
        const auto sets = build_labeled_sets(t, {"a", "c"}, 1);
        CHECK(sets.s == std::set<std::string>{"d"});
        CHECK(sets.f == std::set<std::string>{"a"});
        CHECK(sets.z == std::set<std::string>{"b"});
        CHECK(sets.triple == std::set<std::string>{"a", "b", "d"});
        CHECK(sets.common == std::set<std::string>{"a"});
        CHECK(sets.in == std::set<std::string>{"b", "d"});
        CHECK(sets.out == std::set<std::string>{"c"});
        CHECK(t.find("a")->label == 1);
        CHECK(t.find("b")->label == 2);
        CHECK(t.find("c")->label == 3);

        std::set<std::string> common_out = sets.common, common_in = sets.common;
        common_out.insert(sets.out.begin(), sets.out.end());
        common_in.insert(sets.in.begin(), sets.in.end());
        CHECK(common_out == sets.a);
        CHECK(common_in == sets.triple);
    }
    SUBCASE("A equal to Triple") {
        auto t = base;
        const auto sets = build_labeled_sets(t, {"a", "b", "d"}, 1);
        CHECK(sets.in.empty());
        CHECK(sets.out.empty());
        for (const auto& w : sets.a) CHECK(t.find(w)->label == 1);
    }
    SUBCASE("A disjoint from Triple") {
        auto t = base;
        CHECK(build_labeled_sets(t, {"c"}, 1).common.empty());
    }
    SUBCASE("M equal to the candidate count") {
        auto t = base;
        const auto sets = build_labeled_sets(t, {"a"}, 4);
        CHECK(sets.triple == sets.candidates);
        CHECK(sets.s.size() == 4);
    }
    SUBCASE("ties break by word") {
        auto t = table_of({{"z", 5, 0, 0}, {"y", 5, 0, 0}, {"x", 1, 0, 0}});
        CHECK(top_by(t, Criterion::WF, 1) == std::vector<std::string>{"y"});
    }
}

TEST_CASE("scatter output") {
    auto t = normalize_criteria(table_of({{"a", 40, 1, 3}, {"b", 30, 2, 4}, {"c", 20, 3, 1}}));
    std::ostringstream out;
    emit_scatter(t, {"a", "c"}, FeaturePair::WfWs, out);
    CHECK(out.str() == "word,label,x,y\na,,40,1\nc,,20,3\n");
    std::ostringstream empty;
    emit_scatter(t, {}, FeaturePair::NzWf, empty);
    CHECK(empty.str() == "word,label,x,y\n");
}

TEST_CASE("criteria TSV round-trip keeps exact values") {
    auto t = normalize_criteria(table_of({{"a/N", 40, 1.0 / 3.0, 3}, {"b/V", 30, 2, 4}}));
    build_labeled_sets(t, {"a/N"}, 1);
    std::stringstream ss;
    write_criteria(t, ss);
    const auto back = read_criteria(ss);
    REQUIRE(back.size() == 2);
    CHECK(back.find("a/N")->ws == 1.0 / 3.0);
    CHECK(back.find("a/N")->label == t.find("a/N")->label);
    CHECK(back.find("b/V")->nz_norm == 1.0);
    CHECK(back.has_normalized());
}

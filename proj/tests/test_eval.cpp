#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "support.hpp"
#include "xvec/eval.hpp"

using namespace xvec;

namespace {

// Average ranks by counting: rank = 1 + #smaller + (#equal - 1) / 2.
std::vector<double> brute_ranks(const std::vector<double>& x) {
    std::vector<double> r;
    for (double v : x) {
        double less = 0, equal = 0;
        for (double w : x) {
            less += w < v;
            equal += w == v;
        }
        r.push_back(1 + less + (equal - 1) / 2);
    }
    return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

TestSet parse(const std::string& text) {
    std::istringstream in(text);
    return read_testset(in, "t");
}

}  // namespace

TEST_CASE("spearman closed forms") {
    const std::vector<double> x = {1, 2, 3}, up = {10, 20, 30}, down = {3, 2, 1};
    CHECK(spearman(x, up) == 1.0);
    CHECK(spearman(x, down) == -1.0);
    CHECK(spearman(up, up) == 1.0);
    const std::vector<double> flat = {2, 2, 2};
    CHECK_THROWS_WITH(spearman(x, flat), "zero rank variance");
}

TEST_CASE("spearman with ties") {
    const std::vector<double> x = {1, 2, 2, 3}, y = {1, 3, 2, 4};
    CHECK(fractional_ranks(x) == std::vector<double>{1, 2.5, 2.5, 4});
    CHECK(fractional_ranks(x) == brute_ranks(x));
    CHECK(spearman(x, y) == doctest::Approx(pearson(brute_ranks(x), brute_ranks(y))).epsilon(1e-15));
    CHECK(spearman(x, y) == doctest::Approx(0.9486832981).epsilon(1e-10));
}

TEST_CASE("spearman properties on random data") {
    std::mt19937_64 gen(13);
    std::uniform_int_distribution<int> u(0, 9);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> a(12), b(12);
        for (auto& v : a) v = u(gen);
        for (auto& v : b) v = u(gen) - 4.5;
        if (std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; })) continue;
        if (std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; })) continue;
        const double rho = spearman(a, b);
        CHECK(rho >= -1.0);
        CHECK(rho <= 1.0);
        CHECK(fractional_ranks(a) == brute_ranks(a));
        std::vector<double> cubed = b;
        for (auto& v : cubed) v = v * v * v;
        CHECK(fractional_ranks(cubed) == fractional_ranks(b));
        CHECK(spearman(a, cubed) == rho);
    }
}

TEST_CASE("test set reader") {
    CHECK(parse("a b 1\nc d 2\ne f 3.5\n").pairs.size() == 3);
    const auto h = parse("word1\tword2\tscore\nTiger\tcat\t7.35\n");
    REQUIRE(h.pairs.size() == 1);
    CHECK(h.pairs[0].word1 == "tiger");
    CHECK(h.pairs[0].score == 7.35);
    CHECK_THROWS_WITH(parse("a b 1\nb a 2\n"), doctest::Contains("a"));
    try {
        parse("a b 1\nc d x\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("evaluate") {
    // Rows with hand-picked cosines: cos(a,b)=0.8, cos(a,c)=0, cos(b,c)=0.6.
    const auto m = from_dense({"a/N", "b/N", "c/V"}, {"x", "y"}, {{1, 0}, {0.8, 0.6}, {0, 1}});

    SUBCASE("human scores equal to model cosines") {
        const auto e = evaluate(m, parse("a b 0.8\na c 0\nb c 0.6\n"), "M");
        CHECK(*e.spearman == 1.0);
        CHECK(e.pairs_used == 3);
    }
    SUBCASE("hand-computed rank correlation") {
        // Model ranks (3,1,2), human ranks (2,1,3): rho = 1 - 6*2/(3*8) = 0.5.
        const auto e = evaluate(m, parse("a b 5\na c 1\nb c 9\n"));
        CHECK(*e.spearman == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("out-of-vocabulary pairs are skipped and counted") {
        const auto e = evaluate(m, parse("a b 0.8\na c 0\nb c 0.6\nzz a 3\n"));
        CHECK(e.pairs_used == 3);
        CHECK(e.pairs_skipped_oov == 1);
    }
    SUBCASE("order independence") {
        const auto e1 = evaluate(m, parse("a b 5\na c 1\nb c 9\n"));
        const auto e2 = evaluate(m, parse("b c 9\na b 5\na c 1\n"));
        CHECK(*e1.spearman == *e2.spearman);
    }
    SUBCASE("insufficient coverage") {
        CHECK_THROWS_WITH(evaluate(m, parse("p q 1\nr s 2\n")), doctest::Contains("insufficient coverage"));
    }
    SUBCASE("exact labels and POS preference") {
        const auto n = from_dense({"run/V", "run/N", "go/V"}, {"x", "y"}, {{1, 0}, {0, 1}, {1, 0}});
        const RowLookup lookup(n);
        CHECK(*lookup.find("run") == 1);
        CHECK(*lookup.find("run/V") == 0);
        CHECK(*lookup.find("go") == 2);
        CHECK_FALSE(lookup.find("walk"));
    }
}

TEST_CASE("report deltas") {
    std::vector<EvalEntry> entries = {
        {"X_baseline", "men", 0.5, 10, 0, ""},
        {"X_A", "men", 0.55, 10, 0, ""},
        {"X_A", "rg", 0.4, 5, 1, ""},
    };
    std::ostringstream out;
    write_report(entries, "X_baseline", out);
    CHECK(out.str() ==
          "matrix,testset,spearman,pairs_used,oov,delta_pp,delta_rel_pct\n"
          "X_baseline,men,0.5,10,0,0,0\n"
          "X_A,men,0.55,10,0,5,10\n"
          "X_A,rg,0.4,5,1,,\n");
    std::ostringstream self;
    write_report({entries[1]}, "X_A", self);
    CHECK(self.str().find("X_A,men,0.55,10,0,0,0") != std::string::npos);
    std::ostringstream bad;
    CHECK_THROWS(write_report(entries, "X_nope", bad));

    std::ostringstream cmp;
    write_comparisons(entries, {{"X_A", "X_baseline"}}, cmp);
    CHECK(cmp.str() ==
          "matrix,baseline,testset,spearman,baseline_spearman,delta_pp,delta_rel_pct\n"
          "X_A,X_baseline,men,0.55,0.5,5,10\n"
          "X_A,X_baseline,rg,0.4,,,\n");
}

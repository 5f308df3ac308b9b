#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "xvec/bpso.hpp"

using namespace xvec;

namespace {

double dense_cos(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return na == 0 || nb == 0 ? 0.0 : dot / std::sqrt(na * nb);
}

double objective_oracle(const std::vector<std::vector<double>>& rows, const std::vector<std::uint8_t>& mask) {
    double sum = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            std::vector<double> a, b;
            for (std::size_t c = 0; c < mask.size(); ++c)
                if (mask[c]) {
                    a.push_back(rows[i][c]);
                    b.push_back(rows[j][c]);
                }
            const double d = dense_cos(rows[i], rows[j]) - dense_cos(a, b);
            sum += d * d;
        }
    return sum;
}

Particle still_particle(std::vector<double> velocity, std::vector<std::uint8_t> bits) {
    Particle p;
    p.position.bits = bits;
    p.pbest_position.bits = bits;
    p.velocity = std::move(velocity);
    return p;
}

}  // namespace

TEST_CASE("objective of a hand-sized example") {
    const std::vector<std::vector<double>> rows = {{1, 2}, {3, 1}, {0, 4}};
    const auto m = from_dense(index_labels("r", 3), {"x", "y"}, rows);
    const std::vector<std::uint8_t> first = {1, 0}, ones = {1, 1};
    const double c01 = 5.0 / std::sqrt(5.0 * 10.0), c02 = 8.0 / std::sqrt(5.0 * 16.0), c12 = 4.0 / std::sqrt(10.0 * 16.0);
    // Masked rows are (1), (3), (0): cos 1 for the first pair, 0 for the others.
    const double expected = (c01 - 1) * (c01 - 1) + c02 * c02 + c12 * c12;
    CHECK(objective(first, m) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(objective(ones, m) == 0.0);
}

TEST_CASE("objective agrees with direct evaluation and is non-negative") {
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t rows = 2 + gen() % 4, cols = 2 + gen() % 8;
        const auto m = testing::random_matrix(gen, rows, cols, 0.7, false);
        const auto dense = to_dense(m);
        const CosineObjective f(m);
        std::vector<std::uint8_t> mask(cols);
        for (auto& b : mask) b = gen() % 2;
        const double v = f(mask);
        CHECK(v >= 0.0);
        CHECK(std::abs(v - objective_oracle(dense, mask)) < 1e-9);
        std::vector<std::uint8_t> ones(cols, 1);
        CHECK(f(ones) == 0.0);
    }
}

TEST_CASE("objective is invariant under a joint column permutation") {
    std::mt19937_64 gen(4);
    const auto m = testing::random_matrix(gen, 6, 8, 0.8, true);
    const auto dense = to_dense(m);
    std::vector<std::size_t> perm = {3, 0, 7, 1, 6, 2, 5, 4};
    std::vector<std::vector<double>> pd(dense.size(), std::vector<double>(8));
    const std::vector<std::uint8_t> mask = {1, 0, 1, 1, 0, 0, 1, 0};
    std::vector<std::uint8_t> pmask(8);
    for (std::size_t c = 0; c < 8; ++c) {
        for (std::size_t r = 0; r < dense.size(); ++r) pd[r][c] = dense[r][perm[c]];
        pmask[c] = mask[perm[c]];
    }
    const auto pm = from_dense(index_labels("r", 6), index_labels("c", 8), pd);
    CHECK(objective(pmask, pm) == doctest::Approx(objective(mask, m)).epsilon(1e-12));
}

TEST_CASE("velocity update") {
    SwarmConfig cfg;
    Rng rng(1);
    const WeightVector gbest(2);
    SUBCASE("stationary particle") {
        auto p = still_particle({0.0, 0.0}, {0, 0});
        step_velocity(p, gbest, cfg, rng);
        CHECK(p.velocity == std::vector<double>{0.0, 0.0});
    }
    SUBCASE("pure inertia") {
        auto p = still_particle({1.0, 1.0}, {0, 0});
        step_velocity(p, gbest, cfg, rng);
        CHECK(p.velocity[0] == 0.7);
    }
    SUBCASE("clamp") {
        cfg.inertia = 1.3;
        auto p = still_particle({4.0, -4.0}, {0, 0});
        step_velocity(p, gbest, cfg, rng);
        CHECK(p.velocity == std::vector<double>{4.0, -4.0});
    }
}

TEST_CASE("position update and repair") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(10.0) == doctest::Approx(0.99995).epsilon(1e-5));

    Rng rng(3);
    auto p = still_particle({10, 10, -10, -10}, {0, 0, 0, 0});
    step_position(p, 2, rng);
    CHECK(p.position.bits == std::vector<std::uint8_t>{1, 1, 0, 0});

    WeightVector all(4, 1);
    const std::vector<double> v = {0.1, 2.0, -1.0, 0.5};
    repair_cardinality(all, v, 1);
    CHECK(all.bits == std::vector<std::uint8_t>{0, 1, 0, 0});

    WeightVector none(4, 0);
    repair_cardinality(none, v, 2);
    CHECK(none.bits == std::vector<std::uint8_t>{0, 1, 0, 1});

    WeightVector tie(3, 1);
    const std::vector<double> flat = {0, 0, 0};
    repair_cardinality(tie, flat, 1);
    CHECK(tie.bits == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("single particle, single generation") {
    std::mt19937_64 gen(8);
    const auto m = testing::random_matrix(gen, 5, 10, 0.8, true);
    SwarmConfig cfg;
    cfg.population = 1;
    cfg.iterations = 1;
    cfg.n_select = 4;
    WeightVector initial;
    const auto res = run_bpso(m, cfg, [&](std::size_t g, std::span<const Particle> swarm) {
        if (g == 0) initial = swarm[0].position;
    });
    CHECK(res.best == initial);
    CHECK(res.best.count() == 4);
    CHECK(res.trace.size() == 1);
}

TEST_CASE("cardinality, monotone trace and determinism") {
    std::mt19937_64 gen(12);
    const auto m = testing::random_matrix(gen, 12, 30, 0.5, true);
    SwarmConfig cfg;
    cfg.population = 8;
    cfg.iterations = 10;
    cfg.n_select = 9;
    bool feasible = true;
    const auto a = run_bpso(m, cfg, [&](std::size_t, std::span<const Particle> swarm) {
        for (const auto& p : swarm) feasible = feasible && p.position.count() == 9;
    });
    CHECK(feasible);
    CHECK(a.trace.size() == 10);
    for (std::size_t i = 1; i < a.trace.size(); ++i) CHECK(a.trace[i] <= a.trace[i - 1]);
    CHECK(a.best_value == a.trace.back());
    const auto b = run_bpso(m, cfg);
    CHECK(a.best == b.best);
    CHECK(a.trace == b.trace);

    cfg.n_select = 31;
    CHECK_THROWS(run_bpso(m, cfg));
}

TEST_CASE("golden sets") {
    CHECK(common_golden(common_golden({"a", "b", "c"}, {"a", "b", "d"}), {"a", "c", "b"}) ==
          std::vector<std::string>{"a", "b"});
    CHECK(common_golden({"x", "y"}, {"y", "z"}) == std::vector<std::string>{"y"});
    CHECK(common_golden({"x", "y"}, {"y", "x"}) == std::vector<std::string>{"x", "y"});
    CHECK(common_golden({"a"}, {"b"}).empty());

    std::mt19937_64 gen(6);
    const CosineObjective f(testing::random_matrix(gen, 8, 12, 0.6, true));
    SwarmConfig cfg;
    cfg.population = 5;
    cfg.iterations = 4;
    cfg.n_select = 5;
    const auto one = extract_golden(f, cfg, 4, 1);
    CHECK(one.golden.size() == 5);
    CHECK(one.golden == one.runs[one.kept[0]].selected);
    for (const auto& r : one.runs) CHECK(r.best_value >= one.runs[one.kept[0]].best_value);

    const auto three = extract_golden(f, cfg, 4, 3);
    for (auto k : three.kept)
        for (const auto& w : three.golden)
            CHECK(std::binary_search(three.runs[k].selected.begin(), three.runs[k].selected.end(), w));
    CHECK(derived_seed(42, 0) != derived_seed(42, 1));
    CHECK_THROWS(extract_golden(f, cfg, 2, 3));
}

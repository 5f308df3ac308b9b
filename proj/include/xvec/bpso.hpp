#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xvec/matrix.hpp"
#include "xvec/util.hpp"

namespace xvec {

// Binary weight per context column; after every repair exactly n_select bits
// are set.
struct WeightVector {
    std::vector<std::uint8_t> bits;

    WeightVector() = default;
    explicit WeightVector(std::size_t n, std::uint8_t fill = 0) : bits(n, fill) {}

    std::size_t size() const noexcept { return bits.size(); }
    std::size_t count() const noexcept;
    std::span<const std::uint8_t> span() const noexcept { return bits; }
    bool operator==(const WeightVector&) const = default;
};

std::vector<std::string> selected_labels(const WeightVector& w,
                                         const std::vector<std::string>& col_labels);

struct SwarmConfig {
    std::size_t population = 30;
    // Number of evaluated generations, initialization included.
    std::size_t iterations = 20;
    double inertia = 0.7;
    double c1 = 0.15;
    double c2 = 0.15;
    std::size_t n_select = 1000;
    double v_max = 4.0;
    std::uint64_t seed = 42;
};

struct Particle {
    WeightVector position;
    std::vector<double> velocity;
    WeightVector pbest_position;
    double pbest_value = 0.0;
    double value = 0.0;
};

// Sum over row pairs i < j of (cos(w_i, w_j) - cos(w'_i, w'_j))^2 where w'
// keeps only the masked columns. Full-dimension cosines are computed once.
class CosineObjective {
public:
    explicit CosineObjective(const SparseMatrix& train);

    double operator()(std::span<const std::uint8_t> mask) const;

    std::size_t n_rows() const noexcept { return static_cast<std::size_t>(dense_.rows()); }
    std::size_t n_cols() const noexcept { return static_cast<std::size_t>(dense_.cols()); }
    const std::vector<std::string>& col_labels() const noexcept { return col_labels_; }

private:
    static Eigen::MatrixXd cosines(const Eigen::MatrixXd& rows);

    Eigen::MatrixXd dense_;
    Eigen::MatrixXd full_cos_;
    std::vector<std::string> col_labels_;
};

double objective(std::span<const std::uint8_t> mask, const SparseMatrix& train);

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x), clamped to +-v_max.
// Draws r1 then r2 for each bit in index order.
void step_velocity(Particle& p, const WeightVector& gbest, const SwarmConfig& cfg, Rng& rng);

// bit = 1 iff u < sig(v) with one draw per bit in index order, then repair
// to exactly n_select ones.
void step_position(Particle& p, std::size_t n_select, Rng& rng);

// Clears the surplus ones with the lowest sig(v), or sets the missing ones
// with the highest sig(v). On ties the lower index ends up selected.
void repair_cardinality(WeightVector& bits, std::span<const double> velocity, std::size_t n_select);

struct BpsoResult {
    WeightVector best;
    double best_value = 0.0;
    std::vector<double> trace;  // gbest value per generation
};

// Called once per generation after evaluation, with the generation index
// (0 = initialization) and the whole swarm.
using SwarmObserver = std::function<void(std::size_t, std::span<const Particle>)>;

BpsoResult run_bpso(const CosineObjective& objective, const SwarmConfig& cfg,
                    const SwarmObserver& observer = {});
BpsoResult run_bpso(const SparseMatrix& train, const SwarmConfig& cfg,
                    const SwarmObserver& observer = {});

struct GoldenRun {
    std::uint64_t seed = 0;
    double best_value = 0.0;
    std::vector<std::string> selected;
};

struct GoldenResult {
    std::vector<std::string> golden;  // sorted
    std::vector<GoldenRun> runs;      // in run order
    std::vector<std::size_t> kept;    // indices into runs, best first
};

std::uint64_t derived_seed(std::uint64_t base, std::size_t run);

// Runs BPSO n_runs times with derived seeds, keeps the n_keep runs with the
// lowest objective (ties by run order) and intersects their selections.
GoldenResult extract_golden(const CosineObjective& objective, const SwarmConfig& cfg,
                            std::size_t n_runs, std::size_t n_keep);

std::vector<std::string> common_golden(const std::vector<std::string>& a,
                                       const std::vector<std::string>& b);

}  // namespace xvec

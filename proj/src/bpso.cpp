#include "xvec/bpso.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace xvec {

std::size_t WeightVector::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::vector<std::string> selected_labels(const WeightVector& w,
                                         const std::vector<std::string>& col_labels) {
    if (w.size() != col_labels.size()) throw std::invalid_argument("mask/label length mismatch");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w.bits[i]) out.push_back(col_labels[i]);
    return out;
}

CosineObjective::CosineObjective(const SparseMatrix& train)
    : dense_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(train.n_rows()),
                                   static_cast<Eigen::Index>(train.n_cols()))),
      col_labels_(train.col_labels()) {
    for (std::size_t r = 0; r < train.n_rows(); ++r)
        for (const auto& e : train.row(r))
            dense_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(e.col)) = e.value;
    full_cos_ = cosines(dense_);
}

Eigen::MatrixXd CosineObjective::cosines(const Eigen::MatrixXd& rows) {
    Eigen::MatrixXd gram = rows * rows.transpose();
    const Eigen::VectorXd norms = gram.diagonal().cwiseSqrt();
    const Eigen::Index n = gram.rows();
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double d = norms(i) * norms(j);
            gram(i, j) = d > 0.0 ? gram(i, j) / d : 0.0;
        }
    return gram;
}

double CosineObjective::operator()(std::span<const std::uint8_t> mask) const {
    if (mask.size() != n_cols())
        throw std::invalid_argument("mask length does not match training matrix columns");
    std::vector<Eigen::Index> keep;
    for (std::size_t c = 0; c < mask.size(); ++c)
        if (mask[c]) keep.push_back(static_cast<Eigen::Index>(c));
    Eigen::MatrixXd masked(dense_.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
        masked.col(static_cast<Eigen::Index>(k)) = dense_.col(keep[k]);
    const Eigen::MatrixXd cos = cosines(masked);

    double sum = 0.0;
    const Eigen::Index n = dense_.rows();
    for (Eigen::Index j = 1; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i) {
            const double d = full_cos_(i, j) - cos(i, j);
            sum += d * d;
        }
    return sum;
}

double objective(std::span<const std::uint8_t> mask, const SparseMatrix& train) {
    return CosineObjective(train)(mask);
}

void step_velocity(Particle& p, const WeightVector& gbest, const SwarmConfig& cfg, Rng& rng) {
    for (std::size_t j = 0; j < p.velocity.size(); ++j) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        const double x = p.position.bits[j];
        double v = cfg.inertia * p.velocity[j] + cfg.c1 * r1 * (p.pbest_position.bits[j] - x) +
                   cfg.c2 * r2 * (gbest.bits[j] - x);
        p.velocity[j] = std::clamp(v, -cfg.v_max, cfg.v_max);
    }
}

void repair_cardinality(WeightVector& w, std::span<const double> velocity, std::size_t n_select) {
    const std::size_t ones = w.count();
    if (ones == n_select) return;
    std::vector<std::size_t> idx;
    const std::uint8_t pick = ones > n_select ? 1 : 0;
    for (std::size_t j = 0; j < w.size(); ++j)
        if (w.bits[j] == pick) idx.push_back(j);
    // sig is monotone, so ranking by velocity ranks by sig(v).
    if (pick == 1) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return velocity[a] < velocity[b] || (velocity[a] == velocity[b] && a > b);
        });
        for (std::size_t k = 0; k < ones - n_select; ++k) w.bits[idx[k]] = 0;
    } else {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return velocity[a] > velocity[b]; });
        for (std::size_t k = 0; k < n_select - ones; ++k) w.bits[idx[k]] = 1;
    }
}

void step_position(Particle& p, std::size_t n_select, Rng& rng) {
    for (std::size_t j = 0; j < p.velocity.size(); ++j)
        p.position.bits[j] = rng.uniform() < sigmoid(p.velocity[j]) ? 1 : 0;
    repair_cardinality(p.position, p.velocity, n_select);
}

namespace {

void validate(const SwarmConfig& cfg, std::size_t n_cols) {
    if (cfg.n_select > n_cols)
        throw std::invalid_argument("n_select " + std::to_string(cfg.n_select) +
                                    " exceeds the " + std::to_string(n_cols) + " context columns");
    if (cfg.population == 0) throw std::invalid_argument("population must be positive");
    if (cfg.iterations == 0) throw std::invalid_argument("iterations must be positive");
    if (!(cfg.v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
}

}  // namespace

BpsoResult run_bpso(const CosineObjective& objective, const SwarmConfig& cfg,
                    const SwarmObserver& observer) {
    const std::size_t n = objective.n_cols();
    validate(cfg, n);
    Rng rng(cfg.seed);

    std::vector<Particle> swarm(cfg.population);
    std::vector<std::size_t> perm(n);
    for (auto& p : swarm) {
        p.position = WeightVector(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t k = 0; k < cfg.n_select; ++k) {
            const std::size_t j = k + static_cast<std::size_t>(rng.below(n - k));
            std::swap(perm[k], perm[j]);
            p.position.bits[perm[k]] = 1;
        }
        p.velocity.resize(n);
        for (auto& v : p.velocity) v = rng.uniform(-1.0, 1.0);
    }

    const auto evaluate = [&] {
        parallel_for(swarm.size(), [&](std::size_t i) { swarm[i].value = objective(swarm[i].position.bits); });
    };

    evaluate();
    std::size_t g = 0;
    for (std::size_t i = 0; i < swarm.size(); ++i) {
        swarm[i].pbest_position = swarm[i].position;
        swarm[i].pbest_value = swarm[i].value;
        if (swarm[i].pbest_value < swarm[g].pbest_value) g = i;
    }
    WeightVector gbest = swarm[g].pbest_position;
    double gbest_value = swarm[g].pbest_value;
    BpsoResult result;
    result.trace.push_back(gbest_value);
    if (observer) observer(0, swarm);

    for (std::size_t it = 1; it < cfg.iterations; ++it) {
        for (auto& p : swarm) {
            step_velocity(p, gbest, cfg, rng);
            step_position(p, cfg.n_select, rng);
        }
        evaluate();
        for (auto& p : swarm) {
            if (p.value < p.pbest_value) {
                p.pbest_value = p.value;
                p.pbest_position = p.position;
            }
            if (p.pbest_value < gbest_value) {
                gbest_value = p.pbest_value;
                gbest = p.pbest_position;
            }
        }
        result.trace.push_back(gbest_value);
        if (observer) observer(it, swarm);
    }
    result.best = std::move(gbest);
    result.best_value = gbest_value;
    return result;
}

BpsoResult run_bpso(const SparseMatrix& train, const SwarmConfig& cfg, const SwarmObserver& observer) {
    return run_bpso(CosineObjective(train), cfg, observer);
}

std::uint64_t derived_seed(std::uint64_t base, std::size_t run) {
    return splitmix64(base + static_cast<std::uint64_t>(run));
}

GoldenResult extract_golden(const CosineObjective& objective, const SwarmConfig& cfg,
                            std::size_t n_runs, std::size_t n_keep) {
    if (n_keep == 0 || n_runs < n_keep)
        throw std::invalid_argument("golden extraction needs n_runs >= n_keep >= 1");
    GoldenResult out;
    for (std::size_t r = 0; r < n_runs; ++r) {
        SwarmConfig run_cfg = cfg;
        run_cfg.seed = derived_seed(cfg.seed, r);
        const auto res = run_bpso(objective, run_cfg);
        out.runs.push_back({run_cfg.seed, res.best_value, selected_labels(res.best, objective.col_labels())});
        std::sort(out.runs.back().selected.begin(), out.runs.back().selected.end());
    }
    std::vector<std::size_t> order(n_runs);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return out.runs[a].best_value < out.runs[b].best_value;
    });
    out.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_keep));
    out.golden = out.runs[out.kept[0]].selected;
    for (std::size_t k = 1; k < n_keep; ++k)
        out.golden = common_golden(out.golden, out.runs[out.kept[k]].selected);
    return out;
}

std::vector<std::string> common_golden(const std::vector<std::string>& a,
                                       const std::vector<std::string>& b) {
    std::vector<std::string> sa = a, sb = b, out;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
    sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(out));
    return out;
}

}  // namespace xvec

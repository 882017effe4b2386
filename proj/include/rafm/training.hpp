#pragma once

#include <chrono>
#include <random>

#include "rafm/data.hpp"
#include "rafm/metrics.hpp"
#include "rafm/model.hpp"

namespace rafm {

struct TrainConfig {
    double rho_f = 0.01;  // free-variable learning rate
    double rho_d = 0.01;  // dependent-variable learning rate
    double l2 = 0.0;      // per-step weight decay coefficient
    int epochs = 10;
    std::uint64_t seed = 1;
    Task task = Task::classification;
    ConstraintLoss constraint_loss = ConstraintLoss::soft_cross_entropy;
    double init_sigma = 0.01;

    void validate() const {
        if (rho_f <= 0 || rho_d <= 0) throw InputError("learning rates must be positive");
        if (l2 < 0) throw InputError("l2 must be non-negative");
        if (epochs < 1) throw InputError("epochs must be at least 1");
        if (init_sigma <= 0) throw InputError("init_sigma must be positive");
    }
};

// dL/ds at raw score s: s - y for square loss, sigmoid(s) - y for log loss.
inline double task_loss_derivative(double s, double y, Task task) {
    return (task == Task::regression ? s : sigmoid(s)) - y;
}

// log(1 + e^z) without overflow or cancellation.
inline double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

inline double task_loss(double s, double y, Task task) {
    if (task == Task::regression) {
        const double d = s - y;
        return 0.5 * d * d;
    }
    // -y log(sigmoid(s)) - (1-y) log(1 - sigmoid(s)) in stable form
    return y * softplus(-s) + (1.0 - y) * softplus(s);
}

// One embedding-gradient slice: (feature, gradient vector) pairs at one level.
using SliceGradient = std::vector<std::pair<std::uint32_t, std::vector<double>>>;

// Gradients of the task loss w.r.t. the free variables (each feature's
// top-level embedding), plus linear weights and bias.
struct GradientSlices {
    std::vector<SliceGradient> free_embed;  // indexed by level-1
    std::vector<std::pair<std::uint32_t, double>> linear;
    double bias = 0.0;
};

// Task-loss gradient over free variables. For i with top level p = k_i,
// dB_{1,m}/dv_i^{(p)} = x_i * S_{p,p} - x_i^2 * v_i^{(p)}: the A_{p,p+1}
// term of the telescoped sum never touches features outside F_{p+1}.
inline GradientSlices task_gradient(const RaFMModel& model, const SparseInstance& x, double y,
                                    const LevelScores& scores, Task task) {
    const auto nz = detail::active_nonzeros(model, x);
    const int m = model.num_levels();
    const double lprime = task_loss_derivative(scores.raw_score(), y, task);
    if (!std::isfinite(lprime)) throw NumericError("non-finite task loss derivative");

    std::vector<std::vector<double>> pooled(static_cast<size_t>(m));
    for (int p = 1; p <= m; ++p) pooled[static_cast<size_t>(p) - 1] = pooled_sum(model, x, p, p);

    GradientSlices g;
    g.free_embed.resize(static_cast<size_t>(m));
    for (const auto& [i, xi] : nz) {
        const int p = model.assignment.level_of(i);
        const auto v = model.table(p).vec(i);
        const auto& s = pooled[static_cast<size_t>(p) - 1];
        std::vector<double> grad(v.size());
        for (size_t f = 0; f < v.size(); ++f) grad[f] = lprime * (xi * s[f] - xi * xi * v[f]);
        g.free_embed[static_cast<size_t>(p) - 1].emplace_back(i, std::move(grad));
        g.linear.emplace_back(i, lprime * xi);
    }
    g.bias = lprime;
    return g;
}

// Gradient of the level-p constraint loss w.r.t. the dependent slice
// v^{(p)}|_{F_{p+1}}. B_{1,p+1} is a frozen target: no gradient flows to
// level p+1, and level p enters B_{1,p} only through A_{p,p}.
inline SliceGradient constraint_gradient(const RaFMModel& model, const SparseInstance& x,
                                         const LevelScores& scores, int p, ConstraintLoss kind) {
    if (p < 1 || p >= model.num_levels())
        throw std::logic_error("constraint level p must satisfy 1 <= p < m");
    const double b_lo = scores.b_partial[static_cast<size_t>(p) - 1];
    const double b_hi = scores.b_partial[static_cast<size_t>(p)];
    const double factor = kind == ConstraintLoss::squared_score
                              ? b_lo - b_hi
                              : sigmoid(b_lo) - sigmoid(b_hi);

    const auto nz = detail::active_nonzeros(model, x);
    const auto s = pooled_sum(model, x, p, p);
    SliceGradient out;
    for (const auto& [i, xi] : nz) {
        if (model.assignment.level_of(i) < p + 1) continue;
        const auto v = model.table(p).vec(i);
        std::vector<double> grad(v.size());
        for (size_t f = 0; f < v.size(); ++f) grad[f] = factor * (xi * s[f] - xi * xi * v[f]);
        out.emplace_back(i, std::move(grad));
    }
    return out;
}

// Value of the level-p constraint loss given the current partial scores.
inline double constraint_loss_value(double b_lo, double b_hi, ConstraintLoss kind) {
    if (kind == ConstraintLoss::squared_score) {
        const double d = b_lo - b_hi;
        return 0.5 * d * d;
    }
    const double t = sigmoid(b_hi);
    return t * softplus(-b_lo) + (1.0 - t) * softplus(b_lo);
}

// One SGD step. All gradients come from a single forward snapshot, then the
// updates are applied together: dependent slices with rho_d, free slices plus
// linear and bias with rho_f. L2 acts as weight decay on touched parameters,
// bias excluded. Parameters of features with x_i = 0 are never touched.
inline void sgd_step(RaFMModel& model, const SparseInstance& x, double y,
                     const TrainConfig& cfg) {
    if (detail::active_nonzeros(model, x).empty()) return;
    const LevelScores scores = evaluate(model, x);
    const int m = model.num_levels();

    const GradientSlices task = task_gradient(model, x, y, scores, cfg.task);
    std::vector<SliceGradient> dependent(static_cast<size_t>(m) - 1);
    for (int p = 1; p < m; ++p)
        dependent[static_cast<size_t>(p) - 1] =
            constraint_gradient(model, x, scores, p, cfg.constraint_loss);

    auto apply = [&](std::span<double> v, const std::vector<double>& grad, double rate) {
        for (size_t f = 0; f < v.size(); ++f) {
            v[f] -= rate * (grad[f] + cfg.l2 * v[f]);
            if (!std::isfinite(v[f])) throw NumericError("non-finite parameter after update");
        }
    };

    for (int p = 1; p < m; ++p)
        for (const auto& [i, grad] : dependent[static_cast<size_t>(p) - 1])
            apply(model.table(p).vec(i), grad, cfg.rho_d);
    for (int p = 1; p <= m; ++p)
        for (const auto& [i, grad] : task.free_embed[static_cast<size_t>(p) - 1])
            apply(model.table(p).vec(i), grad, cfg.rho_f);
    for (const auto& [i, grad] : task.linear) {
        model.linear[i] -= cfg.rho_f * (grad + cfg.l2 * model.linear[i]);
        if (!std::isfinite(model.linear[i]))
            throw NumericError("non-finite linear weight after update");
    }
    model.bias -= cfg.rho_f * task.bias;
    if (!std::isfinite(model.bias)) throw NumericError("non-finite bias after update");
}

// Gaussian(0, init_sigma^2) embeddings from a deterministic seeded generator;
// linear weights and bias start at zero.
inline RaFMModel init_model(const RankLadder& ladder, const LevelAssignment& assignment,
                            const TrainConfig& cfg) {
    cfg.validate();
    RaFMModel model(ladder, assignment);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, cfg.init_sigma);
    for (auto& t : model.tables)
        for (auto& v : t.values) v = gauss(rng);
    return model;
}

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double valid_loss = std::numeric_limits<double>::quiet_NaN();
    double valid_auc = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
};

inline double mean_task_loss(const RaFMModel& model, const Dataset& ds, Task task) {
    if (ds.size() == 0) throw InputError("cannot evaluate loss on an empty dataset");
    double total = 0.0;
    for (const auto& inst : ds.instances)
        total += task_loss(evaluate(model, inst).raw_score(), inst.label, task);
    return total / static_cast<double>(ds.size());
}

struct TrainResult {
    RaFMModel model;
    std::vector<EpochMetrics> metrics;
};

// Epochs of random-reshuffling SGD. Deterministic given (data, config).
inline TrainResult train(const Dataset& train_set, const RankLadder& ladder,
                         const LevelAssignment& assignment, const TrainConfig& cfg,
                         const Dataset* validation = nullptr) {
    cfg.validate();
    if (train_set.size() == 0) throw InputError("training set is empty");

    TrainResult result{init_model(ladder, assignment, cfg), {}};
    RaFMModel& model = result.model;

    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (size_t idx : order) {
            try {
                sgd_step(model, train_set.instances[idx], train_set.instances[idx].label, cfg);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", instance " +
                                   std::to_string(idx) + ": " + e.what());
            }
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.train_loss = mean_task_loss(model, train_set, cfg.task);
        if (validation && validation->size() > 0) {
            em.valid_loss = mean_task_loss(model, *validation, cfg.task);
            if (cfg.task == Task::classification) {
                std::vector<double> probs, labels;
                probs.reserve(validation->size());
                labels.reserve(validation->size());
                for (const auto& inst : validation->instances) {
                    probs.push_back(predict(model, inst, cfg.task));
                    labels.push_back(inst.label);
                }
                bool has_pos = false, has_neg = false;
                for (double y : labels) (y > 0.5 ? has_pos : has_neg) = true;
                if (has_pos && has_neg) em.valid_auc = auc(probs, labels);
            }
        }
        em.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
        result.metrics.push_back(em);
    }
    return result;
}

}  // namespace rafm

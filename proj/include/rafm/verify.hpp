#pragma once

#include <random>

#include "rafm/instrument.hpp"
#include "rafm/metrics.hpp"
#include "rafm/training.hpp"

namespace rafm {

struct PropertyResult {
    std::string name;
    bool pass = false;
    double worst_error = 0.0;
    std::string detail;
};

namespace verify_detail {

inline RaFMModel random_model(std::mt19937_64& rng, int max_levels = 4,
                              std::uint32_t max_features = 50, int max_rank = 16) {
    std::uniform_int_distribution<int> m_dist(1, max_levels);
    const int m = m_dist(rng);

    std::vector<int> ranks;
    std::uniform_int_distribution<int> d_dist(1, max_rank);
    while (static_cast<int>(ranks.size()) < m) {
        int d = d_dist(rng);
        if (std::find(ranks.begin(), ranks.end(), d) == ranks.end()) ranks.push_back(d);
    }
    std::sort(ranks.begin(), ranks.end());

    std::uniform_int_distribution<std::uint32_t> f_dist(2, max_features);
    const std::uint32_t n = f_dist(rng);
    std::uniform_int_distribution<int> level_dist(1, m);
    std::vector<int> levels(n);
    for (auto& k : levels) k = level_dist(rng);
    // F_m must be nonempty only implicitly; the model tolerates empty top sets,
    // but keep at least one feature at the top level for interesting scores.
    levels[0] = m;

    RaFMModel model(RankLadder(ranks), LevelAssignment(levels, m));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& t : model.tables)
        for (auto& v : t.values) v = gauss(rng);
    for (auto& w : model.linear) w = gauss(rng);
    model.bias = gauss(rng);
    return model;
}

inline SparseInstance random_instance(std::mt19937_64& rng, std::uint32_t feature_count,
                                      double density = 0.4) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SparseInstance x;
    for (std::uint32_t i = 0; i < feature_count; ++i) {
        if (unit(rng) >= density) continue;
        x.indices.push_back(i);
        x.values.push_back(gauss(rng));
    }
    x.label = unit(rng) < 0.5 ? 0.0 : 1.0;
    return x;
}

// Independent oracle for A_{l,k}: explicit pairwise double loop over F_k.
inline double a_term_pairwise(const RaFMModel& model, const SparseInstance& x, int l, int k) {
    double total = 0.0;
    const auto nz = detail::active_nonzeros(model, x);
    for (size_t a = 0; a < nz.size(); ++a) {
        if (model.assignment.level_of(nz[a].first) < k) continue;
        for (size_t b = a + 1; b < nz.size(); ++b) {
            if (model.assignment.level_of(nz[b].first) < k) continue;
            const auto vi = model.table(l).vec(nz[a].first);
            const auto vj = model.table(l).vec(nz[b].first);
            double dot = 0.0;
            for (size_t f = 0; f < vi.size(); ++f) dot += vi[f] * vj[f];
            total += dot * nz[a].second * nz[b].second;
        }
    }
    return total;
}

inline double rel_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a) + std::abs(b), 1e-2});
}

}  // namespace verify_detail

// |evaluate - interaction_naive| <= tol * (1 + |naive|) over random models.
inline PropertyResult check_oracle_equivalence(int configs = 1000, std::uint64_t seed = 7,
                                               double tol = 1e-9) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int c = 0; c < configs; ++c) {
        const auto model = verify_detail::random_model(rng);
        const auto x = verify_detail::random_instance(rng, model.feature_count());
        const double naive = interaction_naive(model, x);
        const double fast = evaluate(model, x).b_partial.back();
        worst = std::max(worst, std::abs(fast - naive) / (1.0 + std::abs(naive)));
    }
    return {"oracle_equivalence", worst <= tol, worst,
            std::to_string(configs) + " random configurations"};
}

// Squared-sum identity vs the pairwise double loop for all l <= k.
inline PropertyResult check_a_term_identity(int configs = 1000, std::uint64_t seed = 11,
                                            double tol = 1e-10) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int c = 0; c < configs; ++c) {
        const auto model = verify_detail::random_model(rng);
        const auto x = verify_detail::random_instance(rng, model.feature_count());
        for (int k = 1; k <= model.num_levels(); ++k) {
            for (int l = 1; l <= k; ++l) {
                const double fast = a_term(model, x, l, k);
                const double slow = verify_detail::a_term_pairwise(model, x, l, k);
                worst = std::max(worst,
                                 std::abs(fast - slow) / (1.0 + std::abs(slow)));
            }
        }
    }
    return {"a_term_identity", worst <= tol, worst,
            std::to_string(configs) + " random configurations, all (l, k)"};
}

namespace verify_detail {

// Central finite differences of the task loss w.r.t. every free-slice
// coordinate, compared against task_gradient.
inline double task_gradient_fd_error(RaFMModel& model, const SparseInstance& x, Task task,
                                     double h = 1e-6) {
    const double y = x.label;
    const auto scores = evaluate(model, x);
    const auto g = task_gradient(model, x, y, scores, task);
    double worst = 0.0;

    auto loss_at = [&]() { return task_loss(evaluate(model, x).raw_score(), y, task); };

    for (int p = 1; p <= model.num_levels(); ++p) {
        for (const auto& [i, grad] : g.free_embed[static_cast<size_t>(p) - 1]) {
            auto v = model.table(p).vec(i);
            for (size_t f = 0; f < v.size(); ++f) {
                const double saved = v[f];
                v[f] = saved + h;
                const double up = loss_at();
                v[f] = saved - h;
                const double down = loss_at();
                v[f] = saved;
                worst = std::max(worst, rel_error(grad[f], (up - down) / (2 * h)));
            }
        }
    }
    for (const auto& [i, grad] : g.linear) {
        const double saved = model.linear[i];
        model.linear[i] = saved + h;
        const double up = loss_at();
        model.linear[i] = saved - h;
        const double down = loss_at();
        model.linear[i] = saved;
        worst = std::max(worst, rel_error(grad, (up - down) / (2 * h)));
    }
    {
        const double saved = model.bias;
        model.bias = saved + h;
        const double up = loss_at();
        model.bias = saved - h;
        const double down = loss_at();
        model.bias = saved;
        worst = std::max(worst, rel_error(g.bias, (up - down) / (2 * h)));
    }
    return worst;
}

// Finite differences of the constraint loss at level p with the level-(p+1)
// target frozen at its unperturbed value.
inline double constraint_gradient_fd_error(RaFMModel& model, const SparseInstance& x, int p,
                                           ConstraintLoss kind, double h = 1e-6) {
    const auto scores = evaluate(model, x);
    const double target = scores.b_partial[static_cast<size_t>(p)];
    const auto g = constraint_gradient(model, x, scores, p, kind);
    double worst = 0.0;

    auto loss_at = [&]() {
        const double b_lo = evaluate(model, x).b_partial[static_cast<size_t>(p) - 1];
        return constraint_loss_value(b_lo, target, kind);
    };

    for (const auto& [i, grad] : g) {
        auto v = model.table(p).vec(i);
        for (size_t f = 0; f < v.size(); ++f) {
            const double saved = v[f];
            v[f] = saved + h;
            const double up = loss_at();
            v[f] = saved - h;
            const double down = loss_at();
            v[f] = saved;
            worst = std::max(worst, rel_error(grad[f], (up - down) / (2 * h)));
        }
    }
    return worst;
}

}  // namespace verify_detail

// Analytic gradients vs central finite differences, both loss kinds.
inline PropertyResult check_gradients(int models = 200, std::uint64_t seed = 13,
                                      double tol = 1e-4) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int c = 0; c < models; ++c) {
        auto model = verify_detail::random_model(rng, 3, 20, 8);
        auto x = verify_detail::random_instance(rng, model.feature_count());
        if (x.nnz() < 2) continue;
        const Task task = c % 2 == 0 ? Task::regression : Task::classification;
        worst = std::max(worst, verify_detail::task_gradient_fd_error(model, x, task));
        for (int p = 1; p < model.num_levels(); ++p) {
            worst = std::max(worst, verify_detail::constraint_gradient_fd_error(
                                        model, x, p, ConstraintLoss::squared_score));
            worst = std::max(worst, verify_detail::constraint_gradient_fd_error(
                                        model, x, p, ConstraintLoss::soft_cross_entropy));
        }
    }
    return {"gradient_check", worst < tol, worst,
            std::to_string(models) + " random small models, both loss kinds"};
}

// Storage structure: exact parameter counts and no inactive entries.
inline PropertyResult check_parameter_structure(int configs = 100, std::uint64_t seed = 17) {
    std::mt19937_64 rng(seed);
    bool ok = true;
    for (int c = 0; c < configs && ok; ++c) {
        const auto model = verify_detail::random_model(rng);
        const auto pc = parameter_count(model);
        std::size_t expected = 0;
        for (int k = 1; k <= model.num_levels(); ++k)
            expected += static_cast<std::size_t>(model.ladder.rank(k)) *
                        model.assignment.set_size(k);
        ok = ok && pc.embeddings_total == expected;
        ok = ok && pc.grand_total == expected + model.feature_count() + 1;
        for (int k = 1; k <= model.num_levels() && ok; ++k) {
            const auto& t = model.table(k);
            std::size_t rows = 0;
            for (std::uint32_t i = 0; i < model.feature_count(); ++i) {
                const bool active = model.assignment.level_of(i) >= k;
                ok = ok && (t.row[i] != LevelTable::npos) == active;
                if (active) ++rows;
            }
            ok = ok && t.values.size() == rows * static_cast<std::size_t>(t.dim);
        }
    }
    return {"parameter_structure", ok, ok ? 0.0 : 1.0,
            std::to_string(configs) + " random models, exact counts"};
}

// Fuzz the quasi-triangle inequality for log loss.
inline PropertyResult check_quasi_triangle_fuzz(long long samples = 100000,
                                                std::uint64_t seed = 19) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> prob(1e-6, 1.0 - 1e-6);
    std::uniform_real_distribution<double> delta_dist(1.0 + 1e-9, 100.0);
    std::uniform_int_distribution<int> label(0, 1);
    long long violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (long long s = 0; s < samples; ++s) {
        const auto r = check_quasi_triangle(label(rng), prob(rng), prob(rng), delta_dist(rng));
        if (!r.holds) ++violations;
        worst_margin = std::min(worst_margin, r.margin);
    }
    return {"quasi_triangle", violations == 0,
            static_cast<double>(violations),
            std::to_string(samples) + " samples, worst margin " + std::to_string(worst_margin)};
}

// AUC vs brute-force pairwise win rate on small inputs.
inline PropertyResult check_auc_oracle(int trials = 100, std::uint64_t seed = 23) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size_dist(2, 200);
    std::uniform_int_distribution<int> label(0, 1);
    std::uniform_int_distribution<int> grid(0, 9);  // coarse grid so ties occur
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int n = size_dist(rng);
        std::vector<double> probs(static_cast<size_t>(n)), labels(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            probs[static_cast<size_t>(i)] = grid(rng) / 10.0;
            labels[static_cast<size_t>(i)] = label(rng);
        }
        labels[0] = 1.0;
        labels[static_cast<size_t>(n) - 1] = 0.0;
        double wins = 0.0;
        long long pairs = 0;
        for (int a = 0; a < n; ++a) {
            if (labels[static_cast<size_t>(a)] < 0.5) continue;
            for (int b = 0; b < n; ++b) {
                if (labels[static_cast<size_t>(b)] > 0.5) continue;
                ++pairs;
                if (probs[static_cast<size_t>(a)] > probs[static_cast<size_t>(b)]) wins += 1.0;
                else if (probs[static_cast<size_t>(a)] == probs[static_cast<size_t>(b)])
                    wins += 0.5;
            }
        }
        const double brute = wins / static_cast<double>(pairs);
        worst = std::max(worst, std::abs(auc(probs, labels) - brute));
    }
    return {"auc_oracle", worst <= 1e-12, worst, std::to_string(trials) + " random inputs"};
}

inline std::vector<PropertyResult> run_all_properties(std::uint64_t seed = 1,
                                                      int sweep_configs = 1000,
                                                      int gradient_models = 200,
                                                      long long fuzz_samples = 100000) {
    return {
        check_oracle_equivalence(sweep_configs, seed + 1),
        check_a_term_identity(sweep_configs, seed + 2),
        check_gradients(gradient_models, seed + 3),
        check_parameter_structure(100, seed + 4),
        check_quasi_triangle_fuzz(fuzz_samples, seed + 5),
        check_auc_oracle(100, seed + 6),
    };
}

}  // namespace rafm

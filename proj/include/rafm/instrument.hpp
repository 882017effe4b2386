#pragma once

#include <random>

#include "rafm/model.hpp"

namespace rafm {

struct ParameterCount {
    std::vector<std::size_t> per_level;  // D_k * |F_k|
    std::size_t embeddings_total = 0;
    std::size_t linear = 0;
    std::size_t bias = 1;
    std::size_t grand_total = 0;
};

inline ParameterCount parameter_count(const RaFMModel& model) {
    ParameterCount pc;
    for (const auto& t : model.tables) {
        pc.per_level.push_back(t.values.size());
        pc.embeddings_total += t.values.size();
    }
    pc.linear = model.linear.size();
    pc.grand_total = pc.embeddings_total + pc.linear + pc.bias;
    return pc;
}

// Same result as evaluate; the counter accumulates one multiply per scalar
// multiply in pooled sums, norms, and dot products.
inline LevelScores counted_evaluate(const RaFMModel& model, const SparseInstance& x,
                                    OpCounter& counter) {
    return evaluate(model, x, &counter);
}

enum class RankRegime { linear, exponential };
enum class FeatureRegime { linear, exponential };

// Synthetic size regimes matching the asymptotic comparison rows:
// linear  ranks D_k ~ (k/m) D,   exponential ranks D_k ~ 2^{k-m} D;
// linear  sets |F_k| ~ (1-(k-1)/m)|F|, exponential sets |F_k| ~ 2^{1-k}|F|.
struct ComplexityScenario {
    RankRegime rank_regime = RankRegime::exponential;
    FeatureRegime feature_regime = FeatureRegime::exponential;
    int m = 4;
    int max_rank = 64;       // D
    int feature_count = 1024;  // |F|
    double density = 1.0;    // per-feature nonzero probability in synthetic instances

    std::vector<int> ranks() const {
        std::vector<int> d(static_cast<size_t>(m));
        for (int k = 1; k <= m; ++k) {
            const double exact = rank_regime == RankRegime::linear
                                     ? static_cast<double>(k) / m * max_rank
                                     : std::ldexp(static_cast<double>(max_rank), k - m);
            int v = std::max(1, static_cast<int>(std::lround(exact)));
            if (k > 1) v = std::max(v, d[static_cast<size_t>(k) - 2] + 1);
            d[static_cast<size_t>(k) - 1] = v;
        }
        return d;
    }

    std::vector<int> set_sizes() const {
        std::vector<int> c(static_cast<size_t>(m));
        for (int k = 1; k <= m; ++k) {
            const double exact =
                feature_regime == FeatureRegime::linear
                    ? (1.0 - static_cast<double>(k - 1) / m) * feature_count
                    : std::ldexp(static_cast<double>(feature_count), 1 - k);
            int v = std::max(1, static_cast<int>(std::lround(exact)));
            if (k > 1) v = std::min(v, c[static_cast<size_t>(k) - 2]);
            c[static_cast<size_t>(k) - 1] = v;
        }
        if (c[0] != feature_count)
            throw InputError("regime does not cover the full feature set");
        return c;
    }
};

struct ScenarioReport {
    double rafm_mult_mean = 0.0;
    double single_fm_mult_mean = 0.0;
    double time_ratio = 0.0;   // RaFM multiplies / FM multiplies
    double param_ratio = 0.0;  // RaFM embedding params / FM embedding params
};

namespace detail {

inline RaFMModel random_scenario_model(const RankLadder& ladder,
                                       const LevelAssignment& assignment, std::mt19937_64& rng) {
    RaFMModel model(ladder, assignment);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& t : model.tables)
        for (auto& v : t.values) v = gauss(rng);
    return model;
}

}  // namespace detail

// Builds a RaFM per the regime and a single FM with rank D over the same
// features, then compares mean multiply counts on shared synthetic instances.
inline ScenarioReport run_scenario(const ComplexityScenario& scenario, int trials,
                                   std::uint64_t seed = 42) {
    if (trials < 1) throw InputError("trials must be positive");
    const auto ranks = scenario.ranks();
    const auto sizes = scenario.set_sizes();

    // Feature i belongs to F_k iff i < |F_k|; the nested counts define levels.
    std::vector<int> levels(static_cast<size_t>(scenario.feature_count), 1);
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(scenario.feature_count); ++i)
        for (int k = scenario.m; k >= 1; --k)
            if (i < static_cast<std::uint32_t>(sizes[static_cast<size_t>(k) - 1])) {
                levels[i] = k;
                break;
            }

    std::mt19937_64 rng(seed);
    RaFMModel rafm = detail::random_scenario_model(RankLadder(ranks),
                                                   LevelAssignment(levels, scenario.m), rng);
    RaFMModel fm = detail::random_scenario_model(
        RankLadder({scenario.max_rank}),
        LevelAssignment(std::vector<int>(static_cast<size_t>(scenario.feature_count), 1), 1),
        rng);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    OpCounter rafm_counter{0, 0, "rafm"};
    OpCounter fm_counter{0, 0, "fm"};
    for (int t = 0; t < trials; ++t) {
        SparseInstance x;
        for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(scenario.feature_count); ++i) {
            if (unit(rng) >= scenario.density) continue;
            x.indices.push_back(i);
            x.values.push_back(gauss(rng));
        }
        counted_evaluate(rafm, x, rafm_counter);
        counted_evaluate(fm, x, fm_counter);
    }

    ScenarioReport report;
    report.rafm_mult_mean = static_cast<double>(rafm_counter.multiplies) / trials;
    report.single_fm_mult_mean = static_cast<double>(fm_counter.multiplies) / trials;
    report.time_ratio = report.rafm_mult_mean / report.single_fm_mult_mean;
    report.param_ratio = static_cast<double>(parameter_count(rafm).embeddings_total) /
                         static_cast<double>(parameter_count(fm).embeddings_total);
    return report;
}

}  // namespace rafm

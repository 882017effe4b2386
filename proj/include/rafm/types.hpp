#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rafm {

// Thrown for malformed user input (bad files, bad configs, invalid instances).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when training or evaluation produces a non-finite value.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ordered embedding dimensions D_1 < D_2 < ... < D_m shared by all features.
struct RankLadder {
    std::vector<int> ranks;

    RankLadder() = default;
    explicit RankLadder(std::vector<int> r) : ranks(std::move(r)) { validate(); }

    int levels() const { return static_cast<int>(ranks.size()); }
    int rank(int level) const { return ranks[static_cast<size_t>(level) - 1]; }
    int max_rank() const { return ranks.back(); }

    void validate() const {
        if (ranks.empty())
            throw InputError("rank ladder must contain at least one rank");
        int prev = 0;
        for (int d : ranks) {
            if (d <= prev)
                throw InputError("rank ladder must be strictly increasing and positive, got " +
                                 std::to_string(d) + " after " + std::to_string(prev));
            prev = d;
        }
    }
};

// Per-feature maximum level k_i. The nested sets F_k = {i : k_i >= k} are
// derived on construction and cached as counts for instrumentation.
struct LevelAssignment {
    std::vector<int> levels;          // k_i per feature, 1-based, in [1, m]
    std::vector<std::uint32_t> set_sizes;  // |F_k| for k = 1..m

    LevelAssignment() = default;
    LevelAssignment(std::vector<int> lv, int num_levels) : levels(std::move(lv)) {
        set_sizes.assign(static_cast<size_t>(num_levels), 0);
        for (int k : levels) {
            if (k < 1 || k > num_levels)
                throw InputError("feature level " + std::to_string(k) + " out of range [1, " +
                                 std::to_string(num_levels) + "]");
            for (int p = 1; p <= k; ++p) ++set_sizes[static_cast<size_t>(p) - 1];
        }
        // F_1 = F and the sets are nested by construction; check anyway.
        for (size_t k = 1; k < set_sizes.size(); ++k) {
            if (set_sizes[k] > set_sizes[k - 1])
                throw std::logic_error("level sets are not nested");
        }
        if (!levels.empty() && set_sizes[0] != levels.size())
            throw std::logic_error("F_1 must equal the full feature set");
    }

    std::uint32_t feature_count() const { return static_cast<std::uint32_t>(levels.size()); }
    int num_levels() const { return static_cast<int>(set_sizes.size()); }
    int level_of(std::uint32_t feature) const { return levels[feature]; }
    std::uint32_t set_size(int k) const { return set_sizes[static_cast<size_t>(k) - 1]; }
};

// One sparse example: strictly increasing feature ids, finite values, a label.
struct SparseInstance {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;
    double label = 0.0;

    size_t nnz() const { return indices.size(); }

    void validate() const {
        if (indices.size() != values.size())
            throw InputError("instance index/value lengths differ");
        for (size_t t = 0; t < indices.size(); ++t) {
            if (t > 0 && indices[t] <= indices[t - 1])
                throw InputError("instance indices must be strictly increasing (duplicate or "
                                 "descending index " + std::to_string(indices[t]) + ")");
            if (!std::isfinite(values[t]))
                throw InputError("instance value at index " + std::to_string(indices[t]) +
                                 " is not finite");
        }
    }
};

// Partial interaction scores B_{1,p} for p = 1..m plus the shared linear and
// bias terms. b_partial.back() is the full RaFM interaction term.
struct LevelScores {
    std::vector<double> b_partial;
    double linear_term = 0.0;
    double bias_term = 0.0;

    double raw_score() const { return b_partial.back() + linear_term + bias_term; }
    double raw_score_at(int level) const {
        return b_partial[static_cast<size_t>(level) - 1] + linear_term + bias_term;
    }
};

// Multiply/add tallies for complexity verification.
struct OpCounter {
    std::uint64_t multiplies = 0;
    std::uint64_t adds = 0;
    std::string scope;
};

inline double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

enum class Task { regression, classification };
enum class ConstraintLoss { squared_score, soft_cross_entropy };

}  // namespace rafm

#pragma once

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <span>

#include "rafm/types.hpp"

namespace rafm {

// Embedding table for one level: rows exist only for features in F_k.
struct LevelTable {
    int dim = 0;
    std::vector<std::uint32_t> row;  // per feature; npos when the feature is not in F_k
    std::vector<double> values;      // |F_k| * dim, rows in ascending feature id order

    static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();

    bool has(std::uint32_t feature) const {
        return feature < row.size() && row[feature] != npos;
    }
    std::span<double> vec(std::uint32_t feature) {
        return {values.data() + static_cast<size_t>(row[feature]) * dim,
                static_cast<size_t>(dim)};
    }
    std::span<const double> vec(std::uint32_t feature) const {
        return {values.data() + static_cast<size_t>(row[feature]) * dim,
                static_cast<size_t>(dim)};
    }
};

// Rank-aware FM: bias, linear weights, and one active-factor table per level.
// Immutable during evaluation; training mutates it under exclusive access.
struct RaFMModel {
    double bias = 0.0;
    std::vector<double> linear;      // w_i per feature
    std::vector<LevelTable> tables;  // one per level, index k-1
    RankLadder ladder;
    LevelAssignment assignment;

    RaFMModel() = default;
    RaFMModel(RankLadder lad, LevelAssignment assign)
        : ladder(std::move(lad)), assignment(std::move(assign)) {
        if (assignment.num_levels() != ladder.levels())
            throw InputError("level assignment does not match rank ladder depth");
        const std::uint32_t n = assignment.feature_count();
        linear.assign(n, 0.0);
        tables.resize(static_cast<size_t>(ladder.levels()));
        for (int k = 1; k <= ladder.levels(); ++k) {
            LevelTable& t = tables[static_cast<size_t>(k) - 1];
            t.dim = ladder.rank(k);
            t.row.assign(n, LevelTable::npos);
            std::uint32_t next = 0;
            for (std::uint32_t i = 0; i < n; ++i)
                if (assignment.level_of(i) >= k) t.row[i] = next++;
            t.values.assign(static_cast<size_t>(next) * t.dim, 0.0);
        }
    }

    std::uint32_t feature_count() const { return assignment.feature_count(); }
    int num_levels() const { return ladder.levels(); }

    const LevelTable& table(int level) const { return tables[static_cast<size_t>(level) - 1]; }
    LevelTable& table(int level) { return tables[static_cast<size_t>(level) - 1]; }

    std::size_t embedding_param_count() const {
        std::size_t total = 0;
        for (const auto& t : tables) total += t.values.size();
        return total;
    }
};

namespace detail {

// Nonzero entries of an instance that fall inside the model's vocabulary.
// Out-of-vocabulary ids contribute nothing to any term.
inline std::vector<std::pair<std::uint32_t, double>> active_nonzeros(const RaFMModel& model,
                                                                     const SparseInstance& x) {
    x.validate();
    std::vector<std::pair<std::uint32_t, double>> nz;
    nz.reserve(x.nnz());
    for (size_t t = 0; t < x.nnz(); ++t)
        if (x.values[t] != 0.0 && x.indices[t] < model.feature_count())
            nz.emplace_back(x.indices[t], x.values[t]);
    return nz;
}

}  // namespace detail

// Pairwise interaction term by explicit double loop over nonzero features,
// each pair evaluated at its maximum common level. Oracle path; O(D n^2).
inline double interaction_naive(const RaFMModel& model, const SparseInstance& x) {
    const auto nz = detail::active_nonzeros(model, x);
    double total = 0.0;
    for (size_t a = 0; a < nz.size(); ++a) {
        for (size_t b = a + 1; b < nz.size(); ++b) {
            const auto [i, xi] = nz[a];
            const auto [j, xj] = nz[b];
            const int k = std::min(model.assignment.level_of(i), model.assignment.level_of(j));
            const auto vi = model.table(k).vec(i);
            const auto vj = model.table(k).vec(j);
            double dot = 0.0;
            for (int f = 0; f < model.ladder.rank(k); ++f) dot += vi[f] * vj[f];
            total += dot * xi * xj;
        }
    }
    return total;
}

// S = sum over nonzero features of x in F_k of x_i * v_i^{(l)}. Requires l <= k.
inline std::vector<double> pooled_sum(const RaFMModel& model, const SparseInstance& x, int l,
                                      int k) {
    if (l > k) throw std::logic_error("pooled_sum requires l <= k");
    const auto nz = detail::active_nonzeros(model, x);
    std::vector<double> s(static_cast<size_t>(model.ladder.rank(l)), 0.0);
    const LevelTable& tab = model.table(l);
    for (const auto& [i, xi] : nz) {
        if (model.assignment.level_of(i) < k) continue;
        const auto v = tab.vec(i);
        for (size_t f = 0; f < s.size(); ++f) s[f] += v[f] * xi;
    }
    return s;
}

namespace detail {

// A_{l,k} over a pre-filtered nonzero list, via the squared-sum identity.
// O(D_l * |nz in F_k|); tallies one multiply per scalar multiply when counted.
inline double a_term_filtered(const RaFMModel& model,
                              const std::vector<std::pair<std::uint32_t, double>>& nz, int l,
                              int k, OpCounter* counter) {
    const int dim = model.ladder.rank(l);
    const LevelTable& tab = model.table(l);
    std::vector<double> s(static_cast<size_t>(dim), 0.0);
    double sq = 0.0;
    size_t matched = 0;
    for (const auto& [i, xi] : nz) {
        if (model.assignment.level_of(i) < k) continue;
        ++matched;
        const auto v = tab.vec(i);
        for (int f = 0; f < dim; ++f) {
            const double scaled = v[f] * xi;
            s[f] += scaled;
            sq += scaled * scaled;
        }
        if (counter) {
            counter->multiplies += 2ull * dim;
            counter->adds += 2ull * dim;
        }
    }
    if (matched == 0) return 0.0;
    double norm2 = 0.0;
    for (int f = 0; f < dim; ++f) norm2 += s[f] * s[f];
    if (counter) {
        counter->multiplies += static_cast<std::uint64_t>(dim) + 1;
        counter->adds += static_cast<std::uint64_t>(dim) + 1;
    }
    return 0.5 * (norm2 - sq);
}

}  // namespace detail

// A_{l,k}: level-l pairwise interactions restricted to pairs in F_k.
inline double a_term(const RaFMModel& model, const SparseInstance& x, int l, int k,
                     OpCounter* counter = nullptr) {
    if (l > k) throw std::logic_error("a_term requires l <= k");
    const auto nz = detail::active_nonzeros(model, x);
    return detail::a_term_filtered(model, nz, l, k, counter);
}

// Full evaluation via the telescoping recursion
//   B_{1,1} = A_{1,1};  B_{1,p+1} = B_{1,p} - A_{p,p+1} + A_{p+1,p+1}.
// Cost is O(D_1 n_1 + sum_{p>=2} D_p n_p) with n_p = nonzeros in F_p.
inline LevelScores evaluate(const RaFMModel& model, const SparseInstance& x,
                            OpCounter* counter = nullptr) {
    const auto nz = detail::active_nonzeros(model, x);
    const int m = model.num_levels();

    LevelScores out;
    out.b_partial.resize(static_cast<size_t>(m));
    out.b_partial[0] = detail::a_term_filtered(model, nz, 1, 1, counter);
    for (int p = 1; p < m; ++p) {
        const double drop = detail::a_term_filtered(model, nz, p, p + 1, counter);
        const double gain = detail::a_term_filtered(model, nz, p + 1, p + 1, counter);
        out.b_partial[static_cast<size_t>(p)] =
            out.b_partial[static_cast<size_t>(p) - 1] - drop + gain;
        if (counter) counter->adds += 2;
    }

    for (const auto& [i, xi] : nz) {
        out.linear_term += model.linear[i] * xi;
        if (counter) {
            ++counter->multiplies;
            ++counter->adds;
        }
    }
    out.bias_term = model.bias;
    return out;
}

inline double predict(const RaFMModel& model, const SparseInstance& x, Task task) {
    const double s = evaluate(model, x).raw_score();
    return task == Task::classification ? sigmoid(s) : s;
}

// Score of the level-p sub-model (B_{1,p} + linear + bias), e.g. RaFM-low at p=1.
inline double predict_level(const RaFMModel& model, const SparseInstance& x, int level,
                            Task task) {
    const double s = evaluate(model, x).raw_score_at(level);
    return task == Task::classification ? sigmoid(s) : s;
}

// ---------------------------------------------------------------------------
// Binary snapshot. Little-endian; doubles as IEEE-754 64-bit.
// Layout: "RAFM", u32 version, u32 m, u64 |F|, u32 ranks[m], u32 levels[|F|],
// f64 bias, f64 linear[|F|], then per level the table rows in ascending
// feature id order.
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void write_raw(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw InputError("model snapshot truncated");
    return v;
}

}  // namespace detail

inline constexpr std::uint32_t kModelFormatVersion = 1;

inline void save_model(const RaFMModel& model, std::ostream& os) {
    os.write("RAFM", 4);
    detail::write_raw(os, kModelFormatVersion);
    detail::write_raw(os, static_cast<std::uint32_t>(model.num_levels()));
    detail::write_raw(os, static_cast<std::uint64_t>(model.feature_count()));
    for (int d : model.ladder.ranks) detail::write_raw(os, static_cast<std::uint32_t>(d));
    for (int k : model.assignment.levels) detail::write_raw(os, static_cast<std::uint32_t>(k));
    detail::write_raw(os, model.bias);
    for (double w : model.linear) detail::write_raw(os, w);
    for (const auto& t : model.tables)
        os.write(reinterpret_cast<const char*>(t.values.data()),
                 static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    if (!os) throw InputError("failed writing model snapshot");
}

inline void save_model(const RaFMModel& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open model file for writing: " + path);
    save_model(model, os);
}

inline RaFMModel load_model(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "RAFM", 4) != 0)
        throw InputError("not a RaFM model snapshot (bad magic)");
    const auto version = detail::read_raw<std::uint32_t>(is);
    if (version != kModelFormatVersion)
        throw InputError("unsupported model format version " + std::to_string(version));
    const auto m = detail::read_raw<std::uint32_t>(is);
    const auto n = detail::read_raw<std::uint64_t>(is);
    std::vector<int> ranks(m);
    for (auto& d : ranks) d = static_cast<int>(detail::read_raw<std::uint32_t>(is));
    std::vector<int> levels(static_cast<size_t>(n));
    for (auto& k : levels) k = static_cast<int>(detail::read_raw<std::uint32_t>(is));
    RaFMModel model(RankLadder(std::move(ranks)),
                    LevelAssignment(std::move(levels), static_cast<int>(m)));
    model.bias = detail::read_raw<double>(is);
    for (auto& w : model.linear) w = detail::read_raw<double>(is);
    for (auto& t : model.tables) {
        is.read(reinterpret_cast<char*>(t.values.data()),
                static_cast<std::streamsize>(t.values.size() * sizeof(double)));
        if (!is) throw InputError("model snapshot truncated");
    }
    return model;
}

inline RaFMModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open model file: " + path);
    return load_model(is);
}

}  // namespace rafm

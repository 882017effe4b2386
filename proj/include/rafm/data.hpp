#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "rafm/types.hpp"

namespace rafm {

enum class IndexBase { zero, one };

struct Dataset {
    std::vector<SparseInstance> instances;
    std::uint32_t feature_count = 0;
    std::vector<std::uint64_t> occurrence;  // nonzero-entry count per feature

    size_t size() const { return instances.size(); }

    void recount_occurrence() {
        occurrence.assign(feature_count, 0);
        for (const auto& inst : instances)
            for (size_t t = 0; t < inst.nnz(); ++t)
                if (inst.values[t] != 0.0) ++occurrence[inst.indices[t]];
    }

    // Expected nonzeros per instance falling in F_k, for k = 1..m.
    std::vector<double> expected_nonzeros(const LevelAssignment& assignment) const {
        std::vector<double> n(static_cast<size_t>(assignment.num_levels()), 0.0);
        for (const auto& inst : instances)
            for (size_t t = 0; t < inst.nnz(); ++t)
                if (inst.values[t] != 0.0)
                    for (int k = 1; k <= assignment.level_of(inst.indices[t]); ++k)
                        n[static_cast<size_t>(k) - 1] += 1.0;
        if (!instances.empty())
            for (auto& v : n) v /= static_cast<double>(instances.size());
        return n;
    }
};

namespace detail {

inline bool parse_double(std::string_view tok, double& out) {
    const char* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc() && p == end && std::isfinite(out);
}

inline bool parse_index(std::string_view tok, long long& out) {
    const char* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc() && p == end;
}

}  // namespace detail

// libsvm text format: "label idx:val idx:val ..." with ascending indices.
// Internal representation is always zero-based regardless of the input base.
inline Dataset parse_libsvm(std::istream& is, IndexBase base = IndexBase::zero) {
    Dataset ds;
    std::string line;
    size_t line_no = 0;
    long long max_index = -1;

    auto fail = [&](const std::string& what) {
        throw InputError("parse error at line " + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) fail("missing label");
        SparseInstance inst;
        if (!detail::parse_double(tok, inst.label)) fail("non-numeric label '" + tok + "'");

        long long prev = -1;
        while (ls >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) fail("expected idx:val, got '" + tok + "'");
            long long idx;
            double val;
            if (!detail::parse_index(std::string_view(tok).substr(0, colon), idx))
                fail("non-numeric index in '" + tok + "'");
            if (!detail::parse_double(std::string_view(tok).substr(colon + 1), val))
                fail("non-numeric value in '" + tok + "'");
            if (base == IndexBase::one) --idx;
            if (idx < 0) fail("negative feature index in '" + tok + "'");
            if (idx == prev) fail("duplicate feature index " + std::to_string(idx));
            if (idx < prev) fail("descending feature index " + std::to_string(idx));
            prev = idx;
            max_index = std::max(max_index, idx);
            inst.indices.push_back(static_cast<std::uint32_t>(idx));
            inst.values.push_back(val);
        }
        ds.instances.push_back(std::move(inst));
    }
    ds.feature_count = static_cast<std::uint32_t>(max_index + 1);
    ds.recount_occurrence();
    return ds;
}

inline void write_libsvm(const Dataset& ds, std::ostream& os) {
    char buf[64];
    for (const auto& inst : ds.instances) {
        std::snprintf(buf, sizeof(buf), "%.17g", inst.label);
        os << buf;
        for (size_t t = 0; t < inst.nnz(); ++t) {
            std::snprintf(buf, sizeof(buf), "%.17g", inst.values[t]);
            os << ' ' << inst.indices[t] << ':' << buf;
        }
        os << '\n';
    }
}

// Rank-level tuning: k_i = argmin_k |log n_i - log D_k|, ties to the smaller k.
// Unseen features (n_i = 0) get level 1.
inline LevelAssignment assign_levels(const std::vector<std::uint64_t>& occurrence,
                                     const RankLadder& ladder) {
    const int m = ladder.levels();
    std::vector<double> log_d(static_cast<size_t>(m));
    for (int k = 1; k <= m; ++k) log_d[static_cast<size_t>(k) - 1] = std::log(ladder.rank(k));

    std::vector<int> levels(occurrence.size(), 1);
    for (size_t i = 0; i < occurrence.size(); ++i) {
        if (occurrence[i] == 0) continue;
        const double log_n = std::log(static_cast<double>(occurrence[i]));
        int best = 1;
        double best_dist = std::abs(log_n - log_d[0]);
        for (int k = 2; k <= m; ++k) {
            const double dist = std::abs(log_n - log_d[static_cast<size_t>(k) - 1]);
            // ties (up to rounding of the logs) go to the smaller level
            if (dist < best_dist - 1e-12) {
                best = k;
                best_dist = dist;
            }
        }
        levels[i] = best;
    }
    return LevelAssignment(std::move(levels), m);
}

struct SplitFractions {
    double train = 0.8, valid = 0.1, test = 0.1;
};

// Seeded permutation, then contiguous slices sized by largest-remainder rounding.
inline std::array<Dataset, 3> split(const Dataset& ds, SplitFractions f, std::uint64_t seed) {
    const double sum = f.train + f.valid + f.test;
    if (f.train <= 0 || f.valid <= 0 || f.test <= 0 || std::abs(sum - 1.0) > 1e-9)
        throw InputError("split fractions must be positive and sum to 1");

    const size_t n = ds.size();
    std::vector<size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    const double fr[3] = {f.train, f.valid, f.test};
    size_t sizes[3];
    double rem[3];
    size_t assigned = 0;
    for (int s = 0; s < 3; ++s) {
        const double exact = fr[s] * static_cast<double>(n);
        sizes[s] = static_cast<size_t>(exact);
        rem[s] = exact - static_cast<double>(sizes[s]);
        assigned += sizes[s];
    }
    while (assigned < n) {
        int best = 0;
        for (int s = 1; s < 3; ++s)
            if (rem[s] > rem[best]) best = s;
        ++sizes[best];
        rem[best] = -1.0;
        ++assigned;
    }

    std::array<Dataset, 3> out;
    size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
        out[s].feature_count = ds.feature_count;
        out[s].instances.reserve(sizes[s]);
        for (size_t t = 0; t < sizes[s]; ++t)
            out[s].instances.push_back(ds.instances[perm[pos++]]);
        out[s].recount_occurrence();
    }
    return out;
}

struct HistogramBucket {
    std::uint64_t lower = 0;  // 0 for the zero bucket, else power of two
    std::uint64_t feature_count = 0;
};

// Bucketed view of feature occurrence counts: zero bucket, then [2^b, 2^{b+1}).
inline std::vector<HistogramBucket> occurrence_histogram(const Dataset& ds) {
    std::uint64_t max_occ = 0;
    for (auto c : ds.occurrence) max_occ = std::max(max_occ, c);
    size_t num_buckets = 1;
    for (std::uint64_t b = 1; b <= max_occ; b *= 2) ++num_buckets;

    std::vector<HistogramBucket> buckets(num_buckets);
    for (size_t b = 1; b < num_buckets; ++b) buckets[b].lower = 1ull << (b - 1);
    for (auto c : ds.occurrence) {
        size_t b = 0;
        if (c > 0) {
            b = 1;
            while ((1ull << b) <= c) ++b;
        }
        ++buckets[b].feature_count;
    }
    return buckets;
}

}  // namespace rafm

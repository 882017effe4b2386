#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <sstream>

#include "rafm/data.hpp"

using namespace rafm;

TEST_CASE("parse_libsvm") {
    SECTION("zero-indexed direct read") {
        std::istringstream is("1 0:1 3:2\n");
        const auto ds = parse_libsvm(is, IndexBase::zero);
        REQUIRE(ds.size() == 1);
        CHECK(ds.feature_count == 4);
        CHECK(ds.instances[0].label == 1.0);
        CHECK(ds.instances[0].indices == std::vector<std::uint32_t>{0, 3});
        CHECK(ds.instances[0].values == std::vector<double>{1.0, 2.0});
        CHECK(ds.occurrence == std::vector<std::uint64_t>{1, 0, 0, 1});
    }

    SECTION("one-indexed input shifts to a zero-based representation") {
        std::istringstream is("0 1:5 4:1\n");
        const auto ds = parse_libsvm(is, IndexBase::one);
        CHECK(ds.feature_count == 4);
        CHECK(ds.instances[0].indices == std::vector<std::uint32_t>{0, 3});
    }

    SECTION("empty input") {
        std::istringstream is("");
        const auto ds = parse_libsvm(is);
        CHECK(ds.size() == 0);
        CHECK(ds.feature_count == 0);
    }

    SECTION("CRLF and blank lines are tolerated") {
        std::istringstream is("1 0:1\r\n\n  \n0 1:2\r\n");
        const auto ds = parse_libsvm(is);
        REQUIRE(ds.size() == 2);
        CHECK(ds.instances[1].values[0] == 2.0);
    }

    SECTION("errors carry line numbers") {
        auto expect_error = [](const std::string& text, const std::string& needle) {
            std::istringstream is(text);
            try {
                parse_libsvm(is);
                FAIL("expected a parse error for: " << text);
            } catch (const InputError& e) {
                CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring(needle));
            }
        };
        expect_error("1 2:1 2:3\n", "line 1");
        expect_error("1 2:1 2:3\n", "duplicate");
        expect_error("1 0:1\n1 3:1 2:1\n", "line 2");
        expect_error("1 3:1 2:1\n", "descending");
        expect_error("x 0:1\n", "label");
        expect_error("1 a:1\n", "index");
        expect_error("1 0:b\n", "value");
        expect_error("1 0=1\n", "idx:val");
        std::istringstream one_based("1 0:1\n");
        CHECK_THROWS_WITH(parse_libsvm(one_based, IndexBase::one),
                          Catch::Matchers::ContainsSubstring("negative"));
    }

    SECTION("zero-valued entries parse but do not count as occurrences") {
        std::istringstream is("1 0:0 1:2\n");
        const auto ds = parse_libsvm(is);
        CHECK(ds.occurrence == std::vector<std::uint64_t>{0, 1});
    }
}

TEST_CASE("round-trip through text") {
    std::istringstream is("1 0:1.5 3:-2\n0 1:0.25\n-1.5 0:3 2:0.125\n");
    const auto ds = parse_libsvm(is);
    std::ostringstream os;
    write_libsvm(ds, os);
    std::istringstream back(os.str());
    const auto ds2 = parse_libsvm(back);
    REQUIRE(ds2.size() == ds.size());
    CHECK(ds2.feature_count == ds.feature_count);
    for (size_t n = 0; n < ds.size(); ++n) {
        CHECK(ds2.instances[n].label == ds.instances[n].label);
        CHECK(ds2.instances[n].indices == ds.instances[n].indices);
        CHECK(ds2.instances[n].values == ds.instances[n].values);
    }
}

TEST_CASE("assign_levels") {
    const RankLadder ladder({32, 512});

    SECTION("exact rank match wins") {
        CHECK(assign_levels({32}, ladder).level_of(0) == 1);
        CHECK(assign_levels({512}, ladder).level_of(0) == 2);
    }

    SECTION("log-space argmin picks the closer rank") {
        // |ln(100/32)| = 1.139 < |ln(512/100)| = 1.633
        CHECK(assign_levels({100}, ladder).level_of(0) == 1);
        CHECK(assign_levels({200}, ladder).level_of(0) == 2);
    }

    SECTION("unseen features default to level 1") {
        CHECK(assign_levels({0}, ladder).level_of(0) == 1);
    }

    SECTION("equidistant ties break to the smaller level") {
        // ladder (2, 8): n = 4 is exactly between in log space
        CHECK(assign_levels({4}, RankLadder({2, 8})).level_of(0) == 1);
    }

    SECTION("monotone in occurrence counts") {
        std::vector<std::uint64_t> occ;
        for (std::uint64_t n = 0; n < 2000; n += 7) occ.push_back(n);
        const auto a = assign_levels(occ, ladder);
        for (size_t i = 1; i < occ.size(); ++i)
            CHECK(a.level_of(static_cast<std::uint32_t>(i)) >=
                  a.level_of(static_cast<std::uint32_t>(i - 1)));
    }

    SECTION("set sizes are nested") {
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<std::uint64_t> occ_dist(0, 5000);
        std::vector<std::uint64_t> occ(300);
        for (auto& n : occ) n = occ_dist(rng);
        const auto a = assign_levels(occ, RankLadder({4, 16, 64, 256}));
        for (int k = 2; k <= 4; ++k) CHECK(a.set_size(k) <= a.set_size(k - 1));
        CHECK(a.set_size(1) == occ.size());
    }
}

namespace {

Dataset random_dataset(std::mt19937_64& rng, size_t n, std::uint32_t features) {
    Dataset ds;
    ds.feature_count = features;
    std::uniform_int_distribution<std::uint32_t> feat(0, features - 1);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (size_t t = 0; t < n; ++t) {
        SparseInstance inst;
        std::uint32_t a = feat(rng), b = feat(rng);
        while (b == a) b = feat(rng);
        inst.indices = {std::min(a, b), std::max(a, b)};
        inst.values = {val(rng), val(rng)};
        inst.label = static_cast<double>(t);  // unique labels make instances identifiable
        ds.instances.push_back(std::move(inst));
    }
    ds.recount_occurrence();
    return ds;
}

}  // namespace

TEST_CASE("split") {
    std::mt19937_64 rng(5);
    const auto ds = random_dataset(rng, 10, 6);

    SECTION("exact fractions") {
        const auto parts = split(ds, {0.8, 0.1, 0.1}, 42);
        CHECK(parts[0].size() == 8);
        CHECK(parts[1].size() == 1);
        CHECK(parts[2].size() == 1);
    }

    SECTION("deterministic under the seed") {
        const auto a = split(ds, {0.8, 0.1, 0.1}, 42);
        const auto b = split(ds, {0.8, 0.1, 0.1}, 42);
        for (int s = 0; s < 3; ++s) {
            REQUIRE(a[s].size() == b[s].size());
            for (size_t t = 0; t < a[s].size(); ++t)
                CHECK(a[s].instances[t].label == b[s].instances[t].label);
        }
    }

    SECTION("the three parts form a permutation of the input") {
        const auto big = random_dataset(rng, 103, 9);
        const auto parts = split(big, {0.6, 0.2, 0.2}, 7);
        CHECK(parts[0].size() + parts[1].size() + parts[2].size() == big.size());
        std::map<double, int> seen;
        for (const auto& p : parts)
            for (const auto& inst : p.instances) ++seen[inst.label];
        CHECK(seen.size() == big.size());  // labels are unique, so each appears once
    }

    SECTION("occurrence counts are recomputed per part") {
        const auto parts = split(ds, {0.8, 0.1, 0.1}, 42);
        for (const auto& p : parts) {
            std::vector<std::uint64_t> expect(p.feature_count, 0);
            for (const auto& inst : p.instances)
                for (size_t t = 0; t < inst.nnz(); ++t)
                    if (inst.values[t] != 0.0) ++expect[inst.indices[t]];
            CHECK(p.occurrence == expect);
        }
    }

    SECTION("invalid fractions are rejected") {
        CHECK_THROWS_AS(split(ds, {0.8, 0.1, 0.2}, 1), InputError);
        CHECK_THROWS_AS(split(ds, {1.0, 0.0, 0.0}, 1), InputError);
    }
}

TEST_CASE("occurrence_histogram") {
    SECTION("hand-bucketed counts") {
        Dataset ds;
        ds.feature_count = 4;
        ds.occurrence = {0, 1, 3, 200};
        const auto buckets = occurrence_histogram(ds);
        std::map<std::uint64_t, std::uint64_t> by_lower;
        for (const auto& b : buckets)
            if (b.feature_count > 0) by_lower[b.lower] = b.feature_count;
        CHECK(by_lower == std::map<std::uint64_t, std::uint64_t>{
                              {0, 1}, {1, 1}, {2, 1}, {128, 1}});
    }

    SECTION("all features occur once") {
        Dataset ds;
        ds.feature_count = 5;
        ds.occurrence = {1, 1, 1, 1, 1};
        const auto buckets = occurrence_histogram(ds);
        REQUIRE(buckets.size() == 2);
        CHECK(buckets[0].feature_count == 0);
        CHECK(buckets[1].lower == 1);
        CHECK(buckets[1].feature_count == 5);
    }

    SECTION("empty dataset") {
        Dataset ds;
        for (const auto& b : occurrence_histogram(ds)) CHECK(b.feature_count == 0);
    }
}

TEST_CASE("expected nonzeros per level are monotone") {
    std::mt19937_64 rng(11);
    const auto ds = random_dataset(rng, 200, 40);
    const RankLadder ladder({2, 8, 32});
    const auto assignment = assign_levels(ds.occurrence, ladder);
    const auto n = ds.expected_nonzeros(assignment);
    REQUIRE(n.size() == 3);
    for (size_t k = 1; k < n.size(); ++k) CHECK(n[k] <= n[k - 1]);
    CHECK_THAT(n[0], Catch::Matchers::WithinAbs(2.0, 1e-12));  // every instance has 2 nonzeros
}

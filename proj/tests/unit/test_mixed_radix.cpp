#include <doctest.h>

#include <vector>

#include <oracle_data.hpp>

#include "dash/crt.hpp"
#include "dash/gadgets.hpp"
#include "dash/mixed_radix.hpp"

using namespace dash;

namespace {

MixedRadixSpec spec_of(const std::vector<int>& radices) {
    MixedRadixSpec s;
    for (int r : radices) s.radices.push_back(static_cast<mrs_val_t>(r));
    return s;
}

bool radices_match(const MixedRadixSpec& s, const std::vector<int>& want) {
    if (s.radices.size() != want.size()) return false;
    for (std::size_t i = 0; i < want.size(); ++i)
        if (s.radices[i] != want[i]) return false;
    return true;
}

}  // namespace

TEST_SUITE("mixed_radix") {

TEST_CASE("full-accuracy radix choice matches the frozen selections") {
    CHECK(radices_match(choose_mixed_radix(crt_base(1)), oracle::kRadixFullK1));
    CHECK(radices_match(choose_mixed_radix(crt_base(2)), oracle::kRadixFullK2));
    CHECK(radices_match(choose_mixed_radix(crt_base(3)), oracle::kRadixFullK3));
    CHECK(radices_match(choose_mixed_radix(crt_base(4)), oracle::kRadixFullK4));
    CHECK(radices_match(choose_mixed_radix(crt_base(8)), oracle::kRadixFullK8));
    CHECK(radices_match(choose_mixed_radix(crt_base(9)), oracle::kRadixFullK9));
}

TEST_CASE("every full-accuracy choice satisfies the structural rules") {
    for (int k = 1; k <= 9; ++k) {
        const CrtBase base = crt_base(k);
        const MixedRadixSpec spec = choose_mixed_radix(base);
        CAPTURE(k);
        // Large enough that k digit sums cannot wrap.
        CHECK(spec.M() > static_cast<u128>(k) * base.P / 2);
        CHECK(spec.radices[0] % 2 == 0);
        for (int j = 1; j < spec.t(); ++j) {
            CHECK(spec.radices[j] >= 2);
            CHECK(spec.radices[j] <= 8);
            if (j >= 2) CHECK(spec.radices[j] <= spec.radices[j - 1]);
        }
        CHECK_NOTHROW(validate_spec(spec));
    }
}

TEST_CASE("spec validation rejects malformed radix lists") {
    CHECK_THROWS_AS(validate_spec(spec_of({})), DataError);
    CHECK_THROWS_AS(validate_spec(spec_of({7})), DataError);    // odd m_1
    CHECK_THROWS_AS(validate_spec(spec_of({4, 1})), DataError);
    CHECK_THROWS_AS(validate_spec(spec_of({130})), DataError);
}

TEST_CASE("sign tables over P_3 with M=46 match the frozen values") {
    const CrtBase base = crt_base(3);
    const SignTables tables = build_sign_tables(base, spec_of({46}));
    REQUIRE(tables.d.size() == 3);
    const std::vector<const std::vector<int>*> want = {
        &oracle::kSignTableP3M46_0, &oracle::kSignTableP3M46_1,
        &oracle::kSignTableP3M46_2};
    for (int i = 0; i < 3; ++i) {
        REQUIRE(tables.d[i].size() == want[i]->size());
        for (std::size_t x = 0; x < want[i]->size(); ++x)
            CHECK(tables.d[i][x] == static_cast<u128>((*want[i])[x]));
    }
}

TEST_CASE("digit decompositions reassemble the table values") {
    const CrtBase base = crt_base(4);
    const MixedRadixSpec spec = spec_of({6, 4, 2});  // M = 48
    const SignTables tables = build_sign_tables(base, spec);
    for (int i = 0; i < base.k; ++i)
        for (crt_val_t x = 0; x < base.primes[i]; ++x) {
            u128 v = 0;
            for (int j = 0; j < spec.t(); ++j)
                v = v * spec.radices[j] + tables.digits[i][j][x];
            CHECK(v == tables.d[i][x]);
            CHECK(tables.d[i][x] < spec.M());
        }
}

TEST_CASE("classification accuracy on P_3 is exhaustive and frozen") {
    const CrtBase base = crt_base(3);
    const SignAccuracy acc = measure_sign_accuracy(base, spec_of({46}));
    CHECK(acc.exhaustive);
    CHECK(acc.total == 30);
    CHECK(acc.correct == static_cast<std::uint64_t>(oracle::kP3M46Correct));
    CHECK(acc.fraction() == doctest::Approx(1.0));
}

TEST_CASE("accuracy over the pinned decreasing-M grid") {
    const CrtBase base = crt_base(3);
    std::uint64_t prev = 30;
    for (std::size_t i = 0; i < oracle::kSweepGridM.size(); ++i) {
        const SignAccuracy acc =
            measure_sign_accuracy(base, spec_of({oracle::kSweepGridM[i]}));
        CAPTURE(oracle::kSweepGridM[i]);
        CHECK(acc.correct ==
              static_cast<std::uint64_t>(oracle::kSweepCorrect[i]));
        if (oracle::kSweepMonotone) CHECK(acc.correct <= prev);
        prev = acc.correct;
    }
}

TEST_CASE("reduced-accuracy choice stops exactly at the target") {
    const CrtBase base = crt_base(3);
    // The walk returns the smallest spec still meeting the target, so the
    // result must pass and its successor must be the first failure.
    for (double target : {28.0 / 30.0, 1.0}) {
        CAPTURE(target);
        const MixedRadixSpec spec = choose_mixed_radix(base, target);
        REQUIRE(spec.t() == 1);
        CHECK(measure_sign_accuracy(base, spec).fraction() >= target);
        if (spec.radices[0] > 2) {
            MixedRadixSpec next = spec;
            next.radices[0] -= 2;
            CHECK(measure_sign_accuracy(base, next).fraction() < target);
        }
        CHECK(spec.M() <= choose_mixed_radix(base).M());
    }
}

TEST_CASE("sign plan layout for a carried two-position spec") {
    const SignPlan plan = make_sign_plan(spec_of({4, 3}), 2);
    CHECK(plan.k == 2);
    REQUIRE(plan.positions.size() == 1);
    CHECK(plan.positions[0].m == 3);
    CHECK(plan.positions[0].b_mod == 5);  // 2 summands · max digit 2, plus 1
    CHECK(plan.positions[0].carry_in == 0);
    CHECK(plan.positions[0].carry_out == 2);
    CHECK(plan.msd_carry == 2);
}

TEST_CASE("sign plan layout for a three-position spec with carry chaining") {
    const SignPlan plan = make_sign_plan(spec_of({6, 4, 2}), 3);
    REQUIRE(plan.positions.size() == 2);
    // LSD: three mod-2 digits sum to at most 3.
    CHECK(plan.positions[0].m == 2);
    CHECK(plan.positions[0].b_mod == 4);
    CHECK(plan.positions[0].carry_out == 2);
    // Middle: three mod-4 digits plus a carry of at most 1 reach 10.
    CHECK(plan.positions[1].m == 4);
    CHECK(plan.positions[1].b_mod == 11);
    CHECK(plan.positions[1].carry_in == 2);
    CHECK(plan.positions[1].carry_out == 3);
    CHECK(plan.msd_carry == 3);
}

TEST_CASE("addition costs and bounds match the frozen table") {
    for (const auto& row : oracle::kMixedRadixCosts) {
        const int k = row[0];
        const int t = row[1];
        std::vector<int> radices(row.begin() + 2, row.begin() + 2 + t);
        const MixedRadixSpec spec = spec_of(radices);
        CAPTURE(k);
        CAPTURE(t);
        const auto cost = static_cast<std::uint64_t>(row[2 + t]);
        const auto bound = static_cast<std::uint64_t>(row[3 + t]);
        CHECK(mixed_radix_add_cost(k, spec) == cost);
        CHECK(mixed_radix_add_bound(k, spec) == bound);
        CHECK(cost <= bound);
    }
}

TEST_CASE("full-accuracy specs stay under the addition bound for all k") {
    for (int k = 2; k <= 9; ++k) {
        const MixedRadixSpec spec = choose_mixed_radix(crt_base(k));
        CHECK(mixed_radix_add_cost(k, spec) <= mixed_radix_add_bound(k, spec));
    }
}

}  // TEST_SUITE

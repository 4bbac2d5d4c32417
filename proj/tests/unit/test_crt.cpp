#include <doctest.h>

#include <oracle_data.hpp>

#include "dash/crt.hpp"
#include "dash/errors.hpp"

using namespace dash;

TEST_SUITE("crt") {

TEST_CASE("first primes and products") {
    const CrtBase b3 = crt_base(3);
    CHECK(b3.primes == std::vector<crt_val_t>{2, 3, 5});
    CHECK(b3.P == 30);

    const CrtBase b8 = crt_base(8);
    CHECK(b8.primes == std::vector<crt_val_t>{2, 3, 5, 7, 11, 13, 17, 19});
    CHECK(static_cast<unsigned long long>(b8.P) == oracle::kP8);
    CHECK(static_cast<unsigned long long>(crt_base(9).P) == oracle::kP9);
    const u128 p16 =
        (static_cast<u128>(oracle::kP16Hi) << 64) | oracle::kP16Lo;
    CHECK(crt_base(16).P == p16);

    CHECK_THROWS_AS(crt_base(0), DataError);
    CHECK_THROWS_AS(crt_base(17), DataError);
}

TEST_CASE("reconstruction coefficients match the classic formula") {
    const CrtBase b3 = crt_base(3);
    REQUIRE(b3.coeffs.size() == 3);
    for (int i = 0; i < 3; ++i)
        CHECK(static_cast<unsigned long long>(b3.coeffs[i]) ==
              oracle::kCrtCoeffsP3[i]);
    const CrtBase b8 = crt_base(8);
    REQUIRE(b8.coeffs.size() == 8);
    for (int i = 0; i < 8; ++i)
        CHECK(static_cast<unsigned long long>(b8.coeffs[i]) ==
              oracle::kCrtCoeffsP8[i]);
    // alpha_i = 1 (mod p_i) and 0 (mod p_j), unreduced in [0, p_i·P).
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            CHECK(b8.coeffs[i] % b8.primes[j] == (i == j ? 1u : 0u));
}

TEST_CASE("decompose and reconstruct are inverse") {
    const CrtBase base = crt_base(8);
    for (u128 x : {u128{0}, u128{1}, u128{29}, u128{123456},
                   base.P - 1, base.P / 2}) {
        const auto r = crt_decompose(x, base);
        REQUIRE(r.size() == 8);
        for (int i = 0; i < 8; ++i) CHECK(r[i] == x % base.primes[i]);
        CHECK(crt_reconstruct(r, base) == x);
    }
}

TEST_CASE("worked residue example reconstructs to the oracle value") {
    // Residues (0,1,0) over (2,3,5) — brute force over [0,30) gives 10.
    const CrtBase base = crt_base(3);
    const std::vector<crt_val_t> r = {0, 1, 0};
    CHECK(static_cast<int>(crt_reconstruct(r, base)) ==
          oracle::kCrtExample010);
}

TEST_CASE("signed encoding splits the ring in half") {
    const CrtBase base = crt_base(3);  // P = 30
    CHECK(max_signed(base) == 14);     // ceil(30/2) - 1
    CHECK(min_signed(base) == -15);
    CHECK(encode_signed(0, base) == 0);
    CHECK(encode_signed(14, base) == 14);
    CHECK(encode_signed(-1, base) == 29);
    CHECK(encode_signed(-15, base) == 15);
    for (q_val_t v = -15; v <= 14; ++v)
        CHECK(decode_signed(encode_signed(v, base), base) == v);
    CHECK_THROWS_AS(encode_signed(15, base), DataError);
    CHECK_THROWS_AS(encode_signed(-16, base), DataError);
}

TEST_CASE("quantize rounds half away from zero") {
    const CrtBase base = crt_base(8);
    const QuantParams q{2.0};
    CHECK(quantize(1.2, q, base) == 2);    // 2.4 -> 2
    CHECK(quantize(1.25, q, base) == 3);   // 2.5 -> 3
    CHECK(quantize(-1.25, q, base) == -3); // -2.5 -> -3
    CHECK(quantize(0.0, q, base) == 0);
    CHECK_THROWS_AS(quantize(1e9, QuantParams{100.0}, base), DataError);
}

}  // TEST_SUITE

#pragma once

#include <span>
#include <vector>

#include "dash/errors.hpp"
#include "dash/types.hpp"

namespace dash {

inline constexpr int kMaxCrtPrimes = 16;

// The first k primes, their product P_k (the composite primal modulus) and
// the CRT reconstruction coefficients alpha_i = A_i * (A_i^{-1} mod p_i),
// A_i = P_k / p_i. Immutable after construction.
struct CrtBase {
    int k = 0;
    std::vector<crt_val_t> primes;
    u128 P = 0;
    std::vector<u128> coeffs;
};

// Builds the base for the first k primes, 1 <= k <= 16.
CrtBase crt_base(int k);

// Residues (x mod p_1, ..., x mod p_k); requires 0 <= x < P_k.
std::vector<crt_val_t> crt_decompose(u128 x, const CrtBase& base);

// Unique x in [0, P_k) with x = r_i (mod p_i) for all i.
u128 crt_reconstruct(std::span<const crt_val_t> residues, const CrtBase& base);

// Signed encoding into Z_{P_k}: v >= 0 maps to v (lower half, [0, ceil(P/2))),
// v < 0 maps to P_k + v (upper half). decode_signed is the exact inverse.
u128 encode_signed(q_val_t v, const CrtBase& base);
q_val_t decode_signed(u128 x, const CrtBase& base);

// Largest representable value ceil(P/2)-1 and smallest -floor(P/2), clamped
// to the q_val_t range.
q_val_t max_signed(const CrtBase& base);
q_val_t min_signed(const CrtBase& base);

// Quantization constant for the simple global scheme x_q = round(x * alpha).
struct QuantParams {
    double alpha = 1.0;
};

// Round-half-away-from-zero quantization, range-checked against the base.
q_val_t quantize(double x, const QuantParams& params, const CrtBase& base);

}  // namespace dash

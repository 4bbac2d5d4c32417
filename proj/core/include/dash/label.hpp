#pragma once

#include <array>
#include <cstdint>

#include "dash/errors.hpp"
#include "dash/types.hpp"

namespace dash {

// Largest digit count across all supported moduli: modulus 2 packs 128 digits
// into the 128-bit compressed chunk.
inline constexpr int kMaxLabelDigits = 128;
// Wire moduli are primes up to 53 plus mixed-radix helper moduli up to 128.
inline constexpr int kMaxModulus = 128;

// Number of digits n_m = max{ n : m^n <= 2^128 }; equals floor(128/log2 m).
int n_digits(crt_val_t m);

// Precomputed per-modulus constants for fast compression/decomposition.
struct ModInfo {
    crt_val_t m = 0;
    std::uint16_t n = 0;      // digit count
    bool pow2 = false;        // modulus is a power of two
    std::uint8_t log2m = 0;   // valid when pow2
    bool full_range = false;  // m^n == 2^128 exactly (every chunk is valid)
    u128 mn = 0;              // m^n when not full_range
    // Chunked extraction: r digits per chunk, chunk modulus m^r <= 2^31.
    std::uint16_t r = 0;
    std::uint64_t mr = 0;  // m^r
    // magic[j] = ceil(2^64 / m^(j+1)) for j in [0, r): exact floor division
    // of chunk values (< m^r <= 2^31) via the high 64 bits of a product.
    std::array<std::uint64_t, 32> magic{};
};

const ModInfo& mod_info(crt_val_t m);

// A wire label: n_m digits over Z_m, digit 0 being both the point-and-permute
// color digit and the least-significant Horner digit. Value type, no heap.
struct Label {
    crt_val_t mod = 0;
    std::uint16_t n = 0;
    std::array<crt_val_t, kMaxLabelDigits> d;

    Label() = default;

    static Label zeros(crt_val_t m) {
        Label l = shape(m);
        l.d.fill(0);
        return l;
    }
    // Digits left uninitialized; used by the counting executor and as an
    // output slot.
    static Label shape(crt_val_t m) {
        Label l;
        l.mod = m;
        l.n = static_cast<std::uint16_t>(n_digits(m));
        return l;
    }
};

inline crt_val_t color(const Label& l) { return l.d[0]; }

bool label_eq(const Label& a, const Label& b);

// Componentwise modular arithmetic. Moduli must match.
Label label_add(const Label& a, const Label& b);
Label label_sub(const Label& a, const Label& b);
Label label_neg(const Label& a);
Label label_scale(const Label& a, crt_val_t c);

void label_add_into(Label& a, const Label& b);
void label_sub_into(Label& a, const Label& b);
// a += c * b (mod m), the half-gate evaluation hot path.
void label_add_scaled(Label& a, const Label& b, crt_val_t c);

// Horner compression: (..((d_{n-1} m + d_{n-2}) m + ...) m + d_0, injective
// because m^n <= 2^128.
u128 compress(const Label& l);

// Strict inverse: throws DataError when c >= m^n.
Label decompress(u128 c, crt_val_t m);
// Lenient variant: reduces c mod m^n first (pad derivation, tampered inputs).
Label decompress_mod(u128 c, crt_val_t m);

}  // namespace dash

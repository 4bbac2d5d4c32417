#pragma once

#include <cstdint>
#include <vector>

#include "dash/crt.hpp"
#include "dash/types.hpp"

namespace dash {

// Discretization spec for the approximated sign: M = m_1 · … · m_t with
// radices[0] = m_1 the most significant. m_1 must be even so the final
// comparison is a clean half-split of the top digit.
struct MixedRadixSpec {
    std::vector<mrs_val_t> radices;

    int t() const { return static_cast<int>(radices.size()); }
    u128 M() const {
        u128 m = 1;
        for (auto r : radices) m *= r;
        return m;
    }
};

void validate_spec(const MixedRadixSpec& spec);

// Full accuracy: smallest M with M > k·P_k/2, m_1 even, trailing radices
// non-increasing in {2..8}; m_1 from [50,128] when trailing digits exist,
// plus plain even singletons for tiny bases. Ties prefer fewer digits, then
// larger m_1.
MixedRadixSpec choose_mixed_radix(const CrtBase& base);
/// Reduced accuracy: walks specs of decreasing M (dropping trailing digits,
// then stepping m_1 down by 2) until measured accuracy first falls below
// `target`; returns the last passing spec.
MixedRadixSpec choose_mixed_radix(const CrtBase& base, double target);

// Lookup tables d_i(x_i) = round(M·((α_i·x_i mod P)/P)) mod M (round half
// away from zero), plus their mixed-radix digit decompositions.
struct SignTables {
    MixedRadixSpec spec;
    // d[i][x] for residue x of prime i; values in [0, M).
    std::vector<std::vector<u128>> d;
    // digits[i][j][x]: digit of d[i][x] at position j (j = 0 is m_1, the MSD).
    std::vector<std::vector<std::vector<mrs_val_t>>> digits;
};

SignTables build_sign_tables(const CrtBase& base, const MixedRadixSpec& spec);

/// Plaintext model of the approximated comparison: counts x ∈ Z_P with
// (2·Σ_i d_i(x_i) mod M ≥ M) == (2x ≥ P). Exhaustive when P ≤ 2^20,
// otherwise a fixed deterministic sample of 10^5 points.
struct SignAccuracy {
    std::uint64_t correct = 0;
    std::uint64_t total = 0;
    bool exhaustive = false;
    double fraction() const {
        return total ? static_cast<double>(correct) / static_cast<double>(total)
                     : 0.0;
    }
};
SignAccuracy measure_sign_accuracy(const CrtBase& base,
                                   const MixedRadixSpec& spec);

// Exact ciphertext count of the garbled mixed-radix addition of k summands
// (least-significant carry-in elided), and the closed-form upper bound
// 2k·Σ_{j≥2} m_j + 2t(k−1) it must stay under.
std::uint64_t mixed_radix_add_cost(int k, const MixedRadixSpec& spec);
std::uint64_t mixed_radix_add_bound(int k, const MixedRadixSpec& spec);

}  // namespace dash

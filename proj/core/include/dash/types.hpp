#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dash {

// Residues and label digits; the largest supported prime (53) and every
// mixed-radix modulus (<= 128) fit comfortably.
using crt_val_t = std::uint16_t;
// Mixed-radix digit values.
using mrs_val_t = std::uint16_t;
// Quantized scalar values (inputs, weights, plain intermediates).
using q_val_t = std::int64_t;
// Real-valued weights and biases before quantization.
using wandb_t = double;

// 128-bit unsigned integers: compressed labels, composite primal moduli,
// ciphertext blocks, session ids.
using u128 = unsigned __int128;

// Tensor shapes.
using dim_t = std::vector<std::uint32_t>;

inline std::uint64_t size_of(const dim_t& d) {
    std::uint64_t n = 1;
    for (auto x : d) n *= x;
    return n;
}

inline std::uint64_t lo64(u128 x) { return static_cast<std::uint64_t>(x); }
inline std::uint64_t hi64(u128 x) { return static_cast<std::uint64_t>(x >> 64); }
inline u128 make_u128(std::uint64_t hi, std::uint64_t lo) {
    return (static_cast<u128>(hi) << 64) | lo;
}
inline u128 rotl1(u128 x) { return (x << 1) | (x >> 127); }

std::string u128_to_string(u128 x);

}  // namespace dash

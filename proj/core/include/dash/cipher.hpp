#pragma once

#include <cstdint>
#include <span>

#include "dash/label.hpp"
#include "dash/types.hpp"

namespace dash {

// Per-ciphertext domain separation. (gate_id, row_id, slot) must be unique
// across a circuit; slot distinguishes the ciphertext streams of one gate.
struct Tweak {
    std::uint64_t gate_id = 0;
    std::uint32_t row_id = 0;
    std::uint32_t slot = 0;
};

inline constexpr std::uint32_t kSlotGarblerRow = 0;
inline constexpr std::uint32_t kSlotEvaluatorRow = 1;
inline constexpr std::uint32_t kSlotShortBlock = 2;

inline u128 tweak_encode(const Tweak& t) {
    return static_cast<u128>(t.gate_id) | (static_cast<u128>(t.row_id) << 64) |
           (static_cast<u128>(t.slot) << 96);
}

// The Davies-Meyer compression π(x)⊕x under the fixed public permutation π
// (AES-128 with an all-zeros key). Also used standalone for commitments.
u128 davies_meyer(u128 x);

// Raw pad π(K)⊕K for K = compress(k1) [⊕ rotl1(compress(k2))]
// ⊕ encode(tweak).
u128 pad_bits(const Label& k1, const Tweak& t);
u128 pad_bits(const Label& k1, const Label& k2, const Tweak& t);

// Pad label over Z_q: the raw bits reduced mod q^{n_q} and decomposed.
Label pad_label(const Label& k1, const Tweak& t, crt_val_t q);
Label pad_label(const Label& k1, const Label& k2, const Tweak& t, crt_val_t q);

// One-time-pad encryption of a label by pad addition; ciphertext is the
// compressed sum. Any 16-byte ciphertext decrypts to some label (reduction
// mod q^{n_q}); wrong keys yield uniform-looking garbage caught at decode.
u128 encrypt_label(const Label& k1, const Tweak& t, const Label& m);
u128 encrypt_label(const Label& k1, const Label& k2, const Tweak& t,
                   const Label& m);
Label decrypt_label(const Label& k1, const Tweak& t, u128 ct, crt_val_t q);
Label decrypt_label(const Label& k1, const Label& k2, const Tweak& t, u128 ct,
                    crt_val_t q);

// Packs values[j] ∈ Z_p into field j of ⌈log2 p⌉ bits, XOR-masked by pad bits
// of keys[j]. All fields share one tweak; the keys provide separation.
// Throws DataError when values.size() · ⌈log2 p⌉ > 128.
u128 encrypt_short(std::span<const Label> keys, const Tweak& t,
                   std::span<const crt_val_t> values, crt_val_t p);
// Recovers the field at `index` using the single key the evaluator holds;
// the result is reduced mod p so corrupted blocks still parse.
crt_val_t decrypt_short(const Label& key, const Tweak& t, u128 ct,
                        std::uint32_t index, crt_val_t p);

// Bit width of one short field.
inline std::uint32_t short_field_width(crt_val_t p) {
    std::uint32_t w = 0;
    while ((crt_val_t{1} << w) < p) ++w;
    return w == 0 ? 1 : w;
}

}  // namespace dash

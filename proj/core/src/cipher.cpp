#include "dash/cipher.hpp"

#include "dash/aes.hpp"
#include "dash/errors.hpp"

namespace dash {

u128 davies_meyer(u128 k) { return fixed_permutation().encrypt(k) ^ k; }

u128 pad_bits(const Label& k1, const Tweak& t) {
    return davies_meyer(compress(k1) ^ tweak_encode(t));
}

u128 pad_bits(const Label& k1, const Label& k2, const Tweak& t) {
    return davies_meyer(compress(k1) ^ rotl1(compress(k2)) ^ tweak_encode(t));
}

Label pad_label(const Label& k1, const Tweak& t, crt_val_t q) {
    return decompress_mod(pad_bits(k1, t), q);
}

Label pad_label(const Label& k1, const Label& k2, const Tweak& t,
                crt_val_t q) {
    return decompress_mod(pad_bits(k1, k2, t), q);
}

u128 encrypt_label(const Label& k1, const Tweak& t, const Label& m) {
    return compress(label_add(m, pad_label(k1, t, m.mod)));
}

u128 encrypt_label(const Label& k1, const Label& k2, const Tweak& t,
                   const Label& m) {
    return compress(label_add(m, pad_label(k1, k2, t, m.mod)));
}

Label decrypt_label(const Label& k1, const Tweak& t, u128 ct, crt_val_t q) {
    return label_sub(decompress_mod(ct, q), pad_label(k1, t, q));
}

Label decrypt_label(const Label& k1, const Label& k2, const Tweak& t, u128 ct,
                    crt_val_t q) {
    return label_sub(decompress_mod(ct, q), pad_label(k1, k2, t, q));
}

u128 encrypt_short(std::span<const Label> keys, const Tweak& t,
                   std::span<const crt_val_t> values, crt_val_t p) {
    if (keys.size() != values.size())
        throw DataError("short block: keys/values size mismatch");
    const std::uint32_t w = short_field_width(p);
    if (values.size() * w > 128)
        throw DataError("short block exceeds 128 bits");
    const u128 field_mask = (static_cast<u128>(1) << w) - 1;
    u128 ct = 0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        const u128 mask = pad_bits(keys[j], t) & field_mask;
        const u128 field = (static_cast<u128>(values[j]) ^ mask) & field_mask;
        ct |= field << (w * j);
    }
    return ct;
}

crt_val_t decrypt_short(const Label& key, const Tweak& t, u128 ct,
                        std::uint32_t index, crt_val_t p) {
    const std::uint32_t w = short_field_width(p);
    const u128 field_mask = (static_cast<u128>(1) << w) - 1;
    const u128 field = (ct >> (w * index)) & field_mask;
    const u128 mask = pad_bits(key, t) & field_mask;
    return static_cast<crt_val_t>(static_cast<std::uint32_t>(field ^ mask) % p);
}

}  // namespace dash

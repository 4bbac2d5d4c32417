#include "dash/prf.hpp"

#include <cctype>
#include <cstdlib>
#include <random>

#include "dash/errors.hpp"

namespace dash {

Label LabelPrf::draw(std::uint64_t wire_id, std::uint32_t stream,
                     crt_val_t m) const {
    Label l = Label::shape(m);
    const int n_blocks = (l.n + 3) / 4;  // four u32 draws per AES block
    u128 blocks[32];
    for (int b = 0; b < n_blocks; ++b)
        blocks[b] = static_cast<u128>(wire_id) |
                    (static_cast<u128>(stream) << 64) |
                    (static_cast<u128>(static_cast<std::uint32_t>(b)) << 96);
    aes_.encrypt_blocks(blocks, blocks, n_blocks);
    for (int i = 0; i < l.n; ++i) {
        const auto word =
            static_cast<std::uint32_t>(blocks[i / 4] >> (32 * (i % 4)));
        l.d[i] = static_cast<crt_val_t>(word % m);
    }
    return l;
}

Seed random_seed() {
    std::random_device rd;
    Seed s;
    for (std::size_t i = 0; i < s.size(); i += 4) {
        const std::uint32_t w = rd();
        s[i] = static_cast<std::uint8_t>(w);
        s[i + 1] = static_cast<std::uint8_t>(w >> 8);
        s[i + 2] = static_cast<std::uint8_t>(w >> 16);
        s[i + 3] = static_cast<std::uint8_t>(w >> 24);
    }
    return s;
}

Seed seed_from_string(const std::string& text) {
    std::string hex = text;
    if (hex.rfind("0x", 0) == 0 || hex.rfind("0X", 0) == 0) hex = hex.substr(2);
    if (hex.empty() || hex.size() > 32)
        throw DataError("seed must be 1..32 hex digits");
    u128 value = 0;
    for (char ch : hex) {
        int digit;
        if (ch >= '0' && ch <= '9')
            digit = ch - '0';
        else if (ch >= 'a' && ch <= 'f')
            digit = ch - 'a' + 10;
        else if (ch >= 'A' && ch <= 'F')
            digit = ch - 'A' + 10;
        else
            throw DataError("seed contains a non-hex character");
        value = (value << 4) | static_cast<unsigned>(digit);
    }
    Seed s;
    for (int i = 15; i >= 0; --i) {
        s[i] = static_cast<std::uint8_t>(value);
        value >>= 8;
    }
    return s;
}

Seed seed_from_env(const char* name) {
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0')
        return seed_from_string(v);
    return random_seed();
}

}  // namespace dash

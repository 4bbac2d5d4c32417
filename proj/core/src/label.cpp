#include "dash/label.hpp"

#include <algorithm>
#include <cassert>

namespace dash {

namespace {

// Exact largest n with m^n <= 2^128, by repeated multiplication. The loop
// counts powers strictly below 2^128; one more digit fits only when m^(n+1)
// is exactly 2^128, i.e. m = 2^e with e·(n+1) = 128. A bare u128 wrap test
// cannot decide that: for m = 64 the product 64^22 = 2^132 also wraps to
// zero even though the capacity is 21.
int compute_n_digits(crt_val_t m) {
    const u128 limit = static_cast<u128>(-1) / m;  // floor((2^128-1)/m)
    u128 acc = 1;
    int n = 0;
    while (acc <= limit) {
        acc *= m;
        ++n;
    }
    if ((m & (m - 1)) == 0) {
        int e = 0;
        while ((crt_val_t{1} << e) < m) ++e;
        if (e * (n + 1) == 128) ++n;
    }
    return n;
}

ModInfo compute_mod_info(crt_val_t m) {
    ModInfo info;
    info.m = m;
    info.n = static_cast<std::uint16_t>(compute_n_digits(m));
    info.pow2 = (m & (m - 1)) == 0;
    if (info.pow2) {
        std::uint8_t lg = 0;
        while ((crt_val_t{1} << (lg + 1)) <= m) ++lg;
        info.log2m = lg;
    }
    u128 mn = 1;
    for (int i = 0; i < info.n; ++i) mn *= m;
    info.full_range = (mn == 0);  // wrapped: m^n == 2^128
    info.mn = mn;

    // Chunk size: largest r with m^r <= 2^31, so chunk values stay small
    // enough for the magic-multiply digit extraction to be exact.
    std::uint64_t mr = 1;
    std::uint16_t r = 0;
    while (mr <= (std::uint64_t{1} << 31) / m) {
        mr *= m;
        ++r;
    }
    info.r = r;
    info.mr = mr;
    // magic[j] = ceil(2^64 / m^(j+1)); for x < 2^31 and divisor <= 2^31,
    // (x * magic) >> 64 == floor(x / m^(j+1)) exactly.
    std::uint64_t mj = 1;
    for (int j = 0; j < r; ++j) {
        mj *= m;
        info.magic[j] = ~std::uint64_t{0} / mj + 1;
    }
    return info;
}

struct ModInfoTable {
    std::array<ModInfo, kMaxModulus + 1> t;
    ModInfoTable() {
        for (crt_val_t m = 2; m <= kMaxModulus; ++m) t[m] = compute_mod_info(m);
    }
};

const ModInfoTable& mod_table() {
    static const ModInfoTable table;
    return table;
}

inline std::uint64_t mulhi64(std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>((static_cast<u128>(a) * b) >> 64);
}

// value mod m for value < 2^31, via the precomputed reciprocal.
inline crt_val_t fast_mod(std::uint32_t value, const ModInfo& info) {
    const std::uint64_t q = mulhi64(value, info.magic[0]);
    return static_cast<crt_val_t>(value - q * info.m);
}

// Writes the base-m digits of chunk (< m^r) into out[0..count).
// Digit j is floor(chunk/m^j) mod m; both quotients come straight from the
// original chunk so the magic multiplies stay independent.
inline void extract_chunk(std::uint32_t chunk, const ModInfo& info,
                          crt_val_t* out, int count) {
    std::uint64_t q_prev = chunk;
    for (int j = 0; j < count; ++j) {
        const std::uint64_t q = mulhi64(chunk, info.magic[j]);
        out[j] = static_cast<crt_val_t>(q_prev - q * info.m);
        q_prev = q;
    }
}

Label decompose(u128 c, const ModInfo& info) {
    Label l;
    l.mod = info.m;
    l.n = info.n;
    if (info.pow2) {
        const crt_val_t mask = info.m - 1;
        for (int i = 0; i < info.n; ++i) {
            l.d[i] = static_cast<crt_val_t>(c) & mask;
            c >>= info.log2m;
        }
        return l;
    }
    int written = 0;
    while (written < info.n) {
        const int count =
            std::min<int>(info.r, info.n - written);
        const auto chunk = static_cast<std::uint32_t>(c % info.mr);
        c /= info.mr;
        extract_chunk(chunk, info, &l.d[written], count);
        written += count;
    }
    return l;
}

}  // namespace

int n_digits(crt_val_t m) {
    if (m < 2 || m > kMaxModulus) throw DataError("modulus out of range");
    return mod_table().t[m].n;
}

const ModInfo& mod_info(crt_val_t m) {
    if (m < 2 || m > kMaxModulus) throw DataError("modulus out of range");
    return mod_table().t[m];
}

bool label_eq(const Label& a, const Label& b) {
    if (a.mod != b.mod || a.n != b.n) return false;
    for (int i = 0; i < a.n; ++i)
        if (a.d[i] != b.d[i]) return false;
    return true;
}

Label label_add(const Label& a, const Label& b) {
    Label r = a;
    label_add_into(r, b);
    return r;
}

Label label_sub(const Label& a, const Label& b) {
    Label r = a;
    label_sub_into(r, b);
    return r;
}

Label label_neg(const Label& a) {
    Label r = a;
    const crt_val_t m = a.mod;
    for (int i = 0; i < a.n; ++i)
        r.d[i] = a.d[i] == 0 ? 0 : static_cast<crt_val_t>(m - a.d[i]);
    return r;
}

Label label_scale(const Label& a, crt_val_t c) {
    const ModInfo& info = mod_info(a.mod);
    Label r;
    r.mod = a.mod;
    r.n = a.n;
    for (int i = 0; i < a.n; ++i)
        r.d[i] = fast_mod(static_cast<std::uint32_t>(a.d[i]) * c, info);
    return r;
}

void label_add_into(Label& a, const Label& b) {
    assert(a.mod == b.mod);
    const crt_val_t m = a.mod;
    for (int i = 0; i < a.n; ++i) {
        const crt_val_t s = static_cast<crt_val_t>(a.d[i] + b.d[i]);
        a.d[i] = s >= m ? static_cast<crt_val_t>(s - m) : s;
    }
}

void label_sub_into(Label& a, const Label& b) {
    assert(a.mod == b.mod);
    const crt_val_t m = a.mod;
    for (int i = 0; i < a.n; ++i) {
        const crt_val_t s =
            static_cast<crt_val_t>(a.d[i] + m - b.d[i]);
        a.d[i] = s >= m ? static_cast<crt_val_t>(s - m) : s;
    }
}

void label_add_scaled(Label& a, const Label& b, crt_val_t c) {
    assert(a.mod == b.mod);
    if (c == 0) return;
    if (c == 1) {
        label_add_into(a, b);
        return;
    }
    const ModInfo& info = mod_info(a.mod);
    for (int i = 0; i < a.n; ++i) {
        const std::uint32_t s =
            a.d[i] + static_cast<std::uint32_t>(b.d[i]) * c;
        a.d[i] = fast_mod(s, info);
    }
}

u128 compress(const Label& l) {
    const ModInfo& info = mod_info(l.mod);
    if (info.pow2) {
        u128 acc = 0;
        for (int i = l.n - 1; i >= 0; --i)
            acc = (acc << info.log2m) | l.d[i];
        return acc;
    }
    u128 acc = 0;
    for (int i = l.n - 1; i >= 0; --i) acc = acc * l.mod + l.d[i];
    return acc;
}

Label decompress(u128 c, crt_val_t m) {
    const ModInfo& info = mod_info(m);
    if (!info.full_range && c >= info.mn)
        throw DataError("compressed label out of range");
    return decompose(c, info);
}

Label decompress_mod(u128 c, crt_val_t m) {
    const ModInfo& info = mod_info(m);
    if (!info.full_range && c >= info.mn) c %= info.mn;
    return decompose(c, info);
}

}  // namespace dash

#include "dash/mixed_radix.hpp"

#include <algorithm>

#include "dash/errors.hpp"

namespace dash {

namespace {

// 256-bit helpers for the exact rounding round(M·y/P): M can approach 2^68
// for the largest bases, so M·y overflows u128.
struct U256 {
    u128 hi = 0;
    u128 lo = 0;
};

U256 mul_u128(u128 a, u128 b) {
    const u128 a_lo = lo64(a), a_hi = hi64(a);
    const u128 b_lo = lo64(b), b_hi = hi64(b);
    const u128 ll = a_lo * b_lo;
    const u128 lh = a_lo * b_hi;
    const u128 hl = a_hi * b_lo;
    const u128 hh = a_hi * b_hi;
    U256 r;
    r.lo = ll + (lh << 64);
    u128 carry = (r.lo < ll) ? 1 : 0;
    const u128 lo2 = r.lo + (hl << 64);
    carry += (lo2 < r.lo) ? 1 : 0;
    r.lo = lo2;
    r.hi = hh + (lh >> 64) + (hl >> 64) + carry;
    return r;
}

U256 add_small(U256 a, u128 b) {
    U256 r;
    r.lo = a.lo + b;
    r.hi = a.hi + ((r.lo < a.lo) ? 1 : 0);
    return r;
}

// Bitwise long division; quotient must fit in 128 bits (guaranteed here
// since numerator < divisor · 2^128).
u128 div_u256(U256 n, u128 d) {
    u128 q = 0, rem = 0;
    for (int i = 255; i >= 0; --i) {
        const u128 bit =
            i >= 128 ? (n.hi >> (i - 128)) & 1 : (n.lo >> i) & 1;
        rem = (rem << 1) | bit;
        if (rem >= d) {
            rem -= d;
            if (i < 128) q |= static_cast<u128>(1) << i;
        }
    }
    return q;
}

// round-half-away(M·y/P) = floor((2·M·y + P) / (2P)) for y ∈ [0, P).
u128 round_scaled(u128 M, u128 y, u128 P) {
    U256 num = mul_u128(2 * M, y);
    num = add_small(num, P);
    return div_u256(num, 2 * P);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct SearchBest {
    bool found = false;
    u128 M = 0;
    int t = 0;
    int m1 = 0;
    std::vector<mrs_val_t> radices;
};

void consider(SearchBest& best, int m1, const std::vector<int>& trailing,
              u128 bound) {
    u128 M = m1;
    for (int d : trailing) M *= static_cast<unsigned>(d);
    if (M <= bound) return;
    const int t = 1 + static_cast<int>(trailing.size());
    const bool better =
        !best.found || M < best.M || (M == best.M && t < best.t) ||
        (M == best.M && t == best.t && m1 > best.m1);
    if (!better) return;
    best.found = true;
    best.M = M;
    best.t = t;
    best.m1 = m1;
    best.radices.assign(1, static_cast<mrs_val_t>(m1));
    for (int d : trailing) best.radices.push_back(static_cast<mrs_val_t>(d));
}

void dfs(SearchBest& best, std::vector<int>& seq, u128 q, int last, u128 bound,
         u128 qmax) {
    if (!seq.empty()) {
        const u128 need = bound / q + 1;  // smallest m1 with m1·q > bound
        u128 m1 = need + (need & 1);
        if (m1 < 50) m1 = 50;
        if (m1 <= 128)
            consider(best, static_cast<int>(m1), seq, bound);
    }
    for (int d = std::min(last, 8); d >= 2; --d) {
        if (q * static_cast<unsigned>(d) <= qmax) {
            seq.push_back(d);
            dfs(best, seq, q * static_cast<unsigned>(d), d, bound, qmax);
            seq.pop_back();
        }
    }
}

// Plaintext comparison model shared by accuracy measurement. Returns the
// per-prime d tables only (digit split not needed here).
std::vector<std::vector<u128>> d_tables(const CrtBase& base, u128 M) {
    std::vector<std::vector<u128>> d(base.k);
    for (int i = 0; i < base.k; ++i) {
        const crt_val_t p = base.primes[i];
        const u128 alpha = base.coeffs[i] % base.P;
        d[i].resize(p);
        for (crt_val_t x = 0; x < p; ++x) {
            const u128 y = alpha * x % base.P;
            d[i][x] = round_scaled(M, y, base.P) % M;
        }
    }
    return d;
}

bool classify_matches(const CrtBase& base,
                      const std::vector<std::vector<u128>>& d, u128 M,
                      u128 x) {
    u128 s = 0;
    for (int i = 0; i < base.k; ++i) s += d[i][static_cast<crt_val_t>(
        x % base.primes[i])];
    s %= M;
    return (2 * s >= M) == (2 * x >= base.P);
}

}  // namespace

void validate_spec(const MixedRadixSpec& spec) {
    if (spec.radices.empty()) throw DataError("empty mixed-radix spec");
    if (spec.radices[0] % 2 != 0)
        throw DataError("mixed-radix m_1 must be even");
    for (auto r : spec.radices)
        if (r < 2 || r > 128)
            throw DataError("mixed-radix digit modulus out of range");
}

MixedRadixSpec choose_mixed_radix(const CrtBase& base) {
    const u128 bound = static_cast<u128>(base.k) * base.P / 2;
    SearchBest best;
    // Even singletons (covers tiny bases where m_1 < 50 suffices).
    for (int m1 = 2; m1 <= 128; m1 += 2) consider(best, m1, {}, bound);
    // Trailing digit multisets, non-increasing from {2..8}; the product cap
    // keeps the search bounded while leaving every useful m_1 reachable.
    u128 qmax = bound / 25 + 1;
    if (qmax < 1) qmax = 1;
    std::vector<int> seq;
    dfs(best, seq, 1, 8, bound, qmax);
    if (!best.found)
        throw DataError("no mixed-radix spec reaches the required M");
    MixedRadixSpec spec{best.radices};
    validate_spec(spec);
    return spec;
}

MixedRadixSpec choose_mixed_radix(const CrtBase& base, double target) {
    MixedRadixSpec current = choose_mixed_radix(base);
    if (measure_sign_accuracy(base, current).fraction() < target)
        return current;  // full spec is the best available
    MixedRadixSpec last_passing = current;
    while (true) {
        MixedRadixSpec next = current;
        if (next.radices.size() > 1)
            next.radices.pop_back();  // drop least-significant radix
        else if (next.radices[0] > 2)
            next.radices[0] -= 2;
        else
            return last_passing;
        if (measure_sign_accuracy(base, next).fraction() < target)
            return last_passing;
        last_passing = next;
        current = next;
    }
}

SignTables build_sign_tables(const CrtBase& base, const MixedRadixSpec& spec) {
    validate_spec(spec);
    SignTables tables;
    tables.spec = spec;
    const u128 M = spec.M();
    tables.d = d_tables(base, M);
    const int t = spec.t();
    tables.digits.resize(base.k);
    for (int i = 0; i < base.k; ++i) {
        const crt_val_t p = base.primes[i];
        tables.digits[i].assign(t, std::vector<mrs_val_t>(p));
        for (crt_val_t x = 0; x < p; ++x) {
            u128 v = tables.d[i][x];
            for (int j = t - 1; j >= 0; --j) {
                tables.digits[i][j][x] =
                    static_cast<mrs_val_t>(v % spec.radices[j]);
                v /= spec.radices[j];
            }
        }
    }
    return tables;
}

SignAccuracy measure_sign_accuracy(const CrtBase& base,
                                   const MixedRadixSpec& spec) {
    validate_spec(spec);
    const u128 M = spec.M();
    const auto d = d_tables(base, M);
    SignAccuracy acc;
    if (base.P <= (u128{1} << 20)) {
        acc.exhaustive = true;
        acc.total = static_cast<std::uint64_t>(base.P);
        for (u128 x = 0; x < base.P; ++x)
            if (classify_matches(base, d, M, x)) ++acc.correct;
    } else {
        acc.exhaustive = false;
        acc.total = 100000;
        for (std::uint64_t i = 0; i < acc.total; ++i) {
            const u128 x =
                make_u128(splitmix64(2 * i), splitmix64(2 * i + 1)) % base.P;
            if (classify_matches(base, d, M, x)) ++acc.correct;
        }
    }
    return acc;
}

std::uint64_t mixed_radix_add_cost(int k, const MixedRadixSpec& spec) {
    validate_spec(spec);
    if (k < 2) return 0;  // single summand: identity, no gates
    const int t = spec.t();
    std::uint64_t total = 0;
    std::uint64_t carry_mod = 0;  // 0 = no incoming carry wire
    for (int j = t - 1; j >= 1; --j) {  // positions t .. 2
        const std::uint64_t m = spec.radices[j];
        const std::uint64_t b =
            static_cast<std::uint64_t>(k) * (m - 1) +
            (carry_mod ? carry_mod - 1 : 0) + 1;
        total += static_cast<std::uint64_t>(k) * m;  // summand casts
        if (carry_mod) total += carry_mod;           // carry cast
        const std::uint64_t maxcarry = (b - 1) / m;
        if (maxcarry > 0) {
            total += b;  // unary carry gate
            carry_mod = maxcarry + 1;
        } else {
            carry_mod = 0;
        }
    }
    if (t > 1 && carry_mod) total += carry_mod;  // final carry into the MSD
    return total;
}

std::uint64_t mixed_radix_add_bound(int k, const MixedRadixSpec& spec) {
    std::uint64_t trailing = 0;
    for (std::size_t j = 1; j < spec.radices.size(); ++j)
        trailing += spec.radices[j];
    return 2ull * k * trailing +
           2ull * spec.radices.size() * (k > 0 ? k - 1 : 0);
}

}  // namespace dash

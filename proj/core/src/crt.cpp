#include "dash/crt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dash {

std::string u128_to_string(u128 x) {
    if (x == 0) return "0";
    std::string s;
    while (x) {
        s.push_back(static_cast<char>('0' + static_cast<int>(x % 10)));
        x /= 10;
    }
    std::reverse(s.begin(), s.end());
    return s;
}

namespace {

constexpr crt_val_t kPrimes[kMaxCrtPrimes] = {2,  3,  5,  7,  11, 13, 17, 19,
                                              23, 29, 31, 37, 41, 43, 47, 53};

u128 inv_mod_prime(u128 a, crt_val_t p) {
    // Fermat: a^(p-2) mod p, p prime, a not divisible by p.
    std::uint64_t base = static_cast<std::uint64_t>(a % p);
    std::uint64_t r = 1;
    for (int e = p - 2; e > 0; e >>= 1) {
        if (e & 1) r = r * base % p;
        base = base * base % p;
    }
    return r;
}

}  // namespace

CrtBase crt_base(int k) {
    if (k < 1 || k > kMaxCrtPrimes)
        throw DataError("crt_base: k must be in [1, " + std::to_string(kMaxCrtPrimes) +
                        "], got " + std::to_string(k));
    CrtBase b;
    b.k = k;
    b.primes.assign(kPrimes, kPrimes + k);
    b.P = 1;
    for (auto p : b.primes) b.P *= p;
    b.coeffs.reserve(k);
    for (auto p : b.primes) {
        u128 A = b.P / p;
        b.coeffs.push_back(A * inv_mod_prime(A, p));
    }
    return b;
}

std::vector<crt_val_t> crt_decompose(u128 x, const CrtBase& base) {
    if (x >= base.P) throw DataError("crt_decompose: value out of range");
    std::vector<crt_val_t> r(base.k);
    for (int i = 0; i < base.k; ++i)
        r[i] = static_cast<crt_val_t>(x % base.primes[i]);
    return r;
}

u128 crt_reconstruct(std::span<const crt_val_t> residues, const CrtBase& base) {
    if (static_cast<int>(residues.size()) != base.k)
        throw DataError("crt_reconstruct: residue count mismatch");
    u128 acc = 0;
    for (int i = 0; i < base.k; ++i) {
        if (residues[i] >= base.primes[i])
            throw DataError("crt_reconstruct: residue out of range");
        acc += base.coeffs[i] % base.P * residues[i] % base.P;
    }
    return acc % base.P;
}

u128 encode_signed(q_val_t v, const CrtBase& base) {
    u128 half_up = (base.P + 1) / 2;  // lower half is [0, ceil(P/2))
    u128 half_down = base.P / 2;      // negatives reach down to -floor(P/2)
    if (v >= 0) {
        if (static_cast<u128>(v) >= half_up)
            throw DataError("encode_signed: value above representable range");
        return static_cast<u128>(v);
    }
    u128 mag = static_cast<u128>(-(v + 1)) + 1;  // |v| without overflow at INT64_MIN
    if (mag > half_down)
        throw DataError("encode_signed: value below representable range");
    return base.P - mag;
}

q_val_t decode_signed(u128 x, const CrtBase& base) {
    if (x >= base.P) throw DataError("decode_signed: value out of range");
    u128 half_up = (base.P + 1) / 2;
    if (x < half_up) {
        if (x > static_cast<u128>(INT64_MAX))
            throw DataError("decode_signed: value exceeds 64-bit signed range");
        return static_cast<q_val_t>(x);
    }
    u128 mag = base.P - x;
    if (mag > static_cast<u128>(INT64_MAX))
        throw DataError("decode_signed: value exceeds 64-bit signed range");
    return -static_cast<q_val_t>(mag);
}

q_val_t max_signed(const CrtBase& base) {
    u128 hi = (base.P + 1) / 2 - 1;
    return hi > static_cast<u128>(INT64_MAX) ? INT64_MAX : static_cast<q_val_t>(hi);
}

q_val_t min_signed(const CrtBase& base) {
    u128 mag = base.P / 2;
    return mag > static_cast<u128>(INT64_MAX) ? INT64_MIN : -static_cast<q_val_t>(mag);
}

q_val_t quantize(double x, const QuantParams& params, const CrtBase& base) {
    if (!(params.alpha > 0)) throw DataError("quantize: alpha must be positive");
    double scaled = x * params.alpha;
    if (!std::isfinite(scaled) || std::abs(scaled) > 9.1e18)
        throw DataError("quantize: value not representable");
    q_val_t q = std::llround(scaled);  // rounds half away from zero
    if (q > max_signed(base) || q < min_signed(base))
        throw DataError("quantize: value outside signed range of base");
    return q;
}

}  // namespace dash

#include "dash/aes.hpp"

#include <cstring>

#if defined(__AES__) && defined(__SSE2__)
#define DASH_AESNI 1
#include <wmmintrin.h>
#else
#include <openssl/evp.h>

#include <mutex>

#include "dash/errors.hpp"
#endif

namespace dash {

#ifdef DASH_AESNI

namespace {

inline __m128i expand_step(__m128i key, __m128i keygened) {
    keygened = _mm_shuffle_epi32(keygened, _MM_SHUFFLE(3, 3, 3, 3));
    key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
    key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
    key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
    return _mm_xor_si128(key, keygened);
}

}  // namespace

Aes128::Aes128(const std::array<std::uint8_t, 16>& key) {
    __m128i k[11];
    k[0] = _mm_loadu_si128(reinterpret_cast<const __m128i*>(key.data()));
    k[1] = expand_step(k[0], _mm_aeskeygenassist_si128(k[0], 0x01));
    k[2] = expand_step(k[1], _mm_aeskeygenassist_si128(k[1], 0x02));
    k[3] = expand_step(k[2], _mm_aeskeygenassist_si128(k[2], 0x04));
    k[4] = expand_step(k[3], _mm_aeskeygenassist_si128(k[3], 0x08));
    k[5] = expand_step(k[4], _mm_aeskeygenassist_si128(k[4], 0x10));
    k[6] = expand_step(k[5], _mm_aeskeygenassist_si128(k[5], 0x20));
    k[7] = expand_step(k[6], _mm_aeskeygenassist_si128(k[6], 0x40));
    k[8] = expand_step(k[7], _mm_aeskeygenassist_si128(k[7], 0x80));
    k[9] = expand_step(k[8], _mm_aeskeygenassist_si128(k[8], 0x1B));
    k[10] = expand_step(k[9], _mm_aeskeygenassist_si128(k[9], 0x36));
    std::memcpy(rk_.data(), k, sizeof(k));
}

u128 Aes128::encrypt(u128 block) const {
    const __m128i* k = reinterpret_cast<const __m128i*>(rk_.data());
    __m128i m = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&block));
    m = _mm_xor_si128(m, _mm_load_si128(k));
    for (int r = 1; r < 10; ++r) m = _mm_aesenc_si128(m, _mm_load_si128(k + r));
    m = _mm_aesenclast_si128(m, _mm_load_si128(k + 10));
    u128 out;
    _mm_storeu_si128(reinterpret_cast<__m128i*>(&out), m);
    return out;
}

void Aes128::encrypt_blocks(const u128* in, u128* out, std::size_t n) const {
    const __m128i* k = reinterpret_cast<const __m128i*>(rk_.data());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m128i m0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in + i));
        __m128i m1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in + i + 1));
        __m128i m2 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in + i + 2));
        __m128i m3 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in + i + 3));
        __m128i rk0 = _mm_load_si128(k);
        m0 = _mm_xor_si128(m0, rk0);
        m1 = _mm_xor_si128(m1, rk0);
        m2 = _mm_xor_si128(m2, rk0);
        m3 = _mm_xor_si128(m3, rk0);
        for (int r = 1; r < 10; ++r) {
            __m128i rk = _mm_load_si128(k + r);
            m0 = _mm_aesenc_si128(m0, rk);
            m1 = _mm_aesenc_si128(m1, rk);
            m2 = _mm_aesenc_si128(m2, rk);
            m3 = _mm_aesenc_si128(m3, rk);
        }
        __m128i rk10 = _mm_load_si128(k + 10);
        m0 = _mm_aesenclast_si128(m0, rk10);
        m1 = _mm_aesenclast_si128(m1, rk10);
        m2 = _mm_aesenclast_si128(m2, rk10);
        m3 = _mm_aesenclast_si128(m3, rk10);
        _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i), m0);
        _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i + 1), m1);
        _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i + 2), m2);
        _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i + 3), m3);
    }
    for (; i < n; ++i) out[i] = encrypt(in[i]);
}

#else  // OpenSSL fallback

Aes128::Aes128(const std::array<std::uint8_t, 16>& key) {
    // Store the raw key; a per-call EVP context is too slow, so cache one
    // context per thread per key (identified by key bytes).
    std::memcpy(rk_.data(), key.data(), 16);
}

namespace {

EVP_CIPHER_CTX* thread_ctx(const std::uint8_t* key) {
    thread_local struct Cache {
        EVP_CIPHER_CTX* ctx = nullptr;
        std::uint8_t key[16] = {};
        bool init = false;
    } cache;
    if (!cache.init || std::memcmp(cache.key, key, 16) != 0) {
        if (!cache.ctx) cache.ctx = EVP_CIPHER_CTX_new();
        if (EVP_EncryptInit_ex(cache.ctx, EVP_aes_128_ecb(), nullptr, key, nullptr) != 1)
            throw Error("EVP_EncryptInit_ex failed");
        EVP_CIPHER_CTX_set_padding(cache.ctx, 0);
        std::memcpy(cache.key, key, 16);
        cache.init = true;
    }
    return cache.ctx;
}

}  // namespace

u128 Aes128::encrypt(u128 block) const {
    u128 out;
    int len = 0;
    EVP_CIPHER_CTX* ctx = thread_ctx(rk_.data());
    if (EVP_EncryptUpdate(ctx, reinterpret_cast<unsigned char*>(&out), &len,
                          reinterpret_cast<const unsigned char*>(&block), 16) != 1)
        throw Error("EVP_EncryptUpdate failed");
    return out;
}

void Aes128::encrypt_blocks(const u128* in, u128* out, std::size_t n) const {
    int len = 0;
    EVP_CIPHER_CTX* ctx = thread_ctx(rk_.data());
    if (EVP_EncryptUpdate(ctx, reinterpret_cast<unsigned char*>(out), &len,
                          reinterpret_cast<const unsigned char*>(in),
                          static_cast<int>(16 * n)) != 1)
        throw Error("EVP_EncryptUpdate failed");
}

#endif

const Aes128& fixed_permutation() {
    static const Aes128 pi(std::array<std::uint8_t, 16>{});
    return pi;
}

}  // namespace dash

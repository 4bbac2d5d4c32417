#pragma once

#include <array>
#include <cstdint>

#include "dash/types.hpp"

namespace dash {

// AES-128 encryption under one fixed key (ECB, raw blocks). Used as the
// public fixed-key permutation pi (all-zero key) and as the PRF behind
// deterministic label generation. Thread-safe after construction.
class Aes128 {
  public:
    explicit Aes128(const std::array<std::uint8_t, 16>& key);

    u128 encrypt(u128 block) const;
    // Encrypts n independent blocks (pipelines on AES-NI hardware).
    void encrypt_blocks(const u128* in, u128* out, std::size_t n) const;

  private:
    // Expanded round keys (11 x 16 bytes), stored as raw bytes.
    alignas(16) std::array<std::uint8_t, 176> rk_{};
};

// The circuit-wide fixed permutation: AES-128 with the all-zero key.
const Aes128& fixed_permutation();

}  // namespace dash

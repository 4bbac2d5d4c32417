#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "dash/aes.hpp"
#include "dash/label.hpp"
#include "dash/types.hpp"

namespace dash {

using Seed = std::array<std::uint8_t, 16>;

// Deterministic label source: AES-128 in counter mode keyed by the garbler's
// seed. Counter block layout: wire_id (u64) | stream (u32) | ctr (u32).
// Stream 0 draws per-wire base labels, stream 1 draws per-modulus offsets, so
// label material is a pure function of (seed, wire_id, modulus).
class LabelPrf {
  public:
    explicit LabelPrf(const Seed& seed) : aes_(seed) {}

    // Uniform label over Z_m^n, addressed by wire id.
    Label label(std::uint64_t wire_id, crt_val_t m) const {
        return draw(wire_id, 0, m);
    }
    // Offset label R_m: digit 0 forced to 1 (point-and-permute digit).
    Label offset(crt_val_t m) const {
        Label r = draw(m, 1, m);
        r.d[0] = 1;
        return r;
    }

  private:
    Label draw(std::uint64_t wire_id, std::uint32_t stream, crt_val_t m) const;

    Aes128 aes_;
};

inline Label gen_offset(crt_val_t m, const LabelPrf& rng) {
    return rng.offset(m);
}

Seed random_seed();
// Parses up to 32 hex digits (optionally 0x-prefixed) into a big-endian
// 16-byte seed. Throws DataError on malformed input.
Seed seed_from_string(const std::string& text);
// random_seed(), unless the environment variable `name` overrides it.
Seed seed_from_env(const char* name = "DASH_SEED");

}  // namespace dash

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dash/cipher.hpp"
#include "dash/crt.hpp"
#include "dash/errors.hpp"
#include "dash/label.hpp"
#include "dash/mixed_radix.hpp"
#include "dash/prf.hpp"
#include "dash/types.hpp"

namespace dash {

// Per-modulus offset labels R_m (garbler secret). Populated before garbling
// from the moduli discovered by a counting pass, then used read-only.
struct OffsetSet {
    std::array<Label, kMaxModulus + 1> r{};
    std::array<bool, kMaxModulus + 1> present{};

    void ensure(crt_val_t m, const LabelPrf& prf) {
        if (!present[m]) {
            r[m] = prf.offset(m);
            present[m] = true;
        }
    }
    const Label& get(crt_val_t m) const {
        if (!present[m]) throw Error("offset for modulus not initialized");
        return r[m];
    }
};

// ----- Streaming contexts ---------------------------------------------------
//
// Every gadget below is written once as a template over a context type and
// instantiated in three modes:
//   GarbleCtx — wires carry base labels l^0; emits ciphertext rows; draws
//               fresh bases from the PRF by wire id.
//   EvalCtx   — wires carry active labels; consumes ciphertext rows.
//   CountCtx  — wires carry only modulus metadata; tallies ciphertexts,
//               gates, fresh wires, and the moduli that need offsets.
// Gate ids (tweaks), wire ids, and ciphertext positions advance identically
// in all modes, which is what makes per-element stride precomputation and
// deterministic parallel garbling possible.

struct GarbleCtx {
    static constexpr bool kGarble = true;
    static constexpr bool kEval = false;

    const LabelPrf* prf = nullptr;
    const OffsetSet* offsets = nullptr;
    std::vector<u128>* cts = nullptr;
    std::uint64_t next_gate = 0;
    std::uint64_t next_wire = 0;

    std::uint64_t gate() { return next_gate++; }
    Label fresh_base(crt_val_t m) { return prf->label(next_wire++, m); }
    const Label& offset(crt_val_t m) { return offsets->get(m); }
    void emit(u128 ct) { cts->push_back(ct); }
};

struct EvalCtx {
    static constexpr bool kGarble = false;
    static constexpr bool kEval = true;

    std::span<const u128> cts;
    std::size_t pos = 0;
    std::uint64_t next_gate = 0;

    std::uint64_t gate() { return next_gate++; }
    const u128* take(std::size_t n) {
        if (pos + n > cts.size()) throw DataError("ciphertext stream exhausted");
        const u128* p = cts.data() + pos;
        pos += n;
        return p;
    }
};

struct CountCtx {
    static constexpr bool kGarble = false;
    static constexpr bool kEval = false;

    std::uint64_t cts = 0;
    std::uint64_t gates = 0;
    std::uint64_t wires = 0;
    std::array<bool, kMaxModulus + 1> moduli{};

    std::uint64_t gate() { return gates++; }
    Label fresh_base(crt_val_t m) {
        ++wires;
        moduli[m] = true;
        return Label::zeros(m);
    }
    void offset(crt_val_t m) { moduli[m] = true; }
};

template <class Ctx>
inline constexpr bool is_garble_v = Ctx::kGarble;
template <class Ctx>
inline constexpr bool is_eval_v = Ctx::kEval;

// ----- Free gadgets ---------------------------------------------------------

// Unbounded fan-in addition: componentwise label sum, zero ciphertexts.
template <class Ctx>
Label free_add(Ctx&, std::span<const Label> in) {
    if (in.size() < 2) throw DataError("free_add needs at least two operands");
    Label out = in[0];
    for (std::size_t i = 1; i < in.size(); ++i) {
        if (in[i].mod != out.mod) throw DataError("free_add modulus mismatch");
        label_add_into(out, in[i]);
    }
    return out;
}

// c·l for c coprime to the modulus (c mod p ≠ 0 for prime p).
template <class Ctx>
Label const_mult(Ctx&, const Label& l, crt_val_t c) {
    if (c % l.mod == 0)
        throw DataError("const_mult by a multiple of the modulus");
    return label_scale(l, static_cast<crt_val_t>(c % l.mod));
}

// Adds a public constant to the wire's semantics. The garbler shifts the
// base label (l'^0 = l^0 − cR); the evaluator's label is untouched.
template <class Ctx>
Label add_public_constant(Ctx& ctx, const Label& l, crt_val_t c) {
    if constexpr (is_garble_v<Ctx>) {
        if (c % l.mod == 0) return l;
        return label_sub(l, label_scale(ctx.offset(l.mod),
                                        static_cast<crt_val_t>(c % l.mod)));
    } else {
        if constexpr (!is_eval_v<Ctx>) ctx.offset(l.mod);
        return l;
    }
}

// ----- Projection gate ------------------------------------------------------
//
// p ciphertext rows ordered by input color; row for input value a sits at
// index (color(l^0)+a) mod p and holds EN_{l^a}(l_out^0 + φ(a)·R_q).

template <class Ctx, class Phi>
Label t_proj(Ctx& ctx, const Label& in, crt_val_t q, Phi&& phi) {
    const std::uint64_t g = ctx.gate();
    if constexpr (is_garble_v<Ctx>) {
        const crt_val_t p = in.mod;
        const Label& rp = ctx.offset(p);
        const Label& rq = ctx.offset(q);
        const Label out0 = ctx.fresh_base(q);
        std::array<u128, kMaxModulus> rows;
        Label key = in;
        for (crt_val_t a = 0; a < p; ++a) {
            const crt_val_t row = static_cast<crt_val_t>((color(in) + a) % p);
            const Label payload = label_add(
                out0, label_scale(rq, static_cast<crt_val_t>(phi(a) % q)));
            rows[row] = encrypt_label(key, Tweak{g, row, kSlotGarblerRow},
                                      payload);
            label_add_into(key, rp);
        }
        for (crt_val_t row = 0; row < p; ++row) ctx.emit(rows[row]);
        return out0;
    } else if constexpr (is_eval_v<Ctx>) {
        const crt_val_t p = in.mod;
        const u128* rows = ctx.take(p);
        const crt_val_t row = color(in);
        return decrypt_label(in, Tweak{g, row, kSlotGarblerRow}, rows[row], q);
    } else {
        ctx.cts += in.mod;
        ctx.offset(in.mod);
        return ctx.fresh_base(q);
    }
}

// Garbled-row-reduction variant used only for the sign comparison: the row
// with input color 0 is omitted (implicitly the all-zero ciphertext), so the
// output base label is derived from that row's pad instead of drawn fresh.
template <class Ctx, class Phi>
Label t_proj_grr(Ctx& ctx, const Label& in, crt_val_t q, Phi&& phi) {
    const std::uint64_t g = ctx.gate();
    if constexpr (is_garble_v<Ctx>) {
        const crt_val_t p = in.mod;
        const Label& rp = ctx.offset(p);
        const Label& rq = ctx.offset(q);
        // Input value whose label has color 0.
        const crt_val_t a0 = static_cast<crt_val_t>((p - color(in)) % p);
        const Label key0 = label_add(in, label_scale(rp, a0));
        // decrypt(0) = −pad, so set l_out^0 = −pad − φ(a0)·R_q.
        const Label out0 = label_sub(
            label_neg(pad_label(key0, Tweak{g, 0, kSlotGarblerRow}, q)),
            label_scale(rq, static_cast<crt_val_t>(phi(a0) % q)));
        std::array<u128, kMaxModulus> rows;
        Label key = in;
        for (crt_val_t a = 0; a < p; ++a) {
            const crt_val_t row = static_cast<crt_val_t>((color(in) + a) % p);
            if (row != 0) {
                const Label payload = label_add(
                    out0, label_scale(rq, static_cast<crt_val_t>(phi(a) % q)));
                rows[row] = encrypt_label(key, Tweak{g, row, kSlotGarblerRow},
                                          payload);
            }
            label_add_into(key, rp);
        }
        for (crt_val_t row = 1; row < p; ++row) ctx.emit(rows[row]);
        return out0;
    } else if constexpr (is_eval_v<Ctx>) {
        const crt_val_t p = in.mod;
        const u128* rows = ctx.take(p - 1);  // row j stored at rows[j-1]
        const crt_val_t row = color(in);
        const u128 ct = row == 0 ? 0 : rows[row - 1];
        return decrypt_label(in, Tweak{g, row, kSlotGarblerRow}, ct, q);
    } else {
        ctx.cts += in.mod - 1;
        ctx.offset(in.mod);
        ctx.offset(q);
        return Label::zeros(q);
    }
}

// ----- Generalized half gate (same modulus) ---------------------------------
//
// Computes x·y mod p in 2p ciphertexts. Garbler rows (indexed by color of x)
// carry l_u^0 + a·r·R; evaluator rows (indexed by color of y, which equals
// (r+b) mod p for r = color(l_y^0)) carry l_v^0 − color·l_x^0. The evaluator
// outputs V + color_y·X − U; the output base label is l_v^0 − l_u^0.

template <class Ctx>
Label t_half_gate(Ctx& ctx, const Label& x, const Label& y) {
    if (x.mod != y.mod) throw DataError("half gate modulus mismatch");
    const std::uint64_t g = ctx.gate();
    const crt_val_t p = x.mod;
    if constexpr (is_garble_v<Ctx>) {
        const Label& rp = ctx.offset(p);
        const Label u0 = ctx.fresh_base(p);
        const Label v0 = ctx.fresh_base(p);
        const crt_val_t r = color(y);
        std::array<u128, kMaxModulus> rows;
        Label key = x;
        for (crt_val_t a = 0; a < p; ++a) {
            const crt_val_t row = static_cast<crt_val_t>((color(x) + a) % p);
            const Label payload = label_add(
                u0, label_scale(rp, static_cast<crt_val_t>(
                                        static_cast<std::uint32_t>(a) * r % p)));
            rows[row] =
                encrypt_label(key, Tweak{g, row, kSlotGarblerRow}, payload);
            label_add_into(key, rp);
        }
        for (crt_val_t row = 0; row < p; ++row) ctx.emit(rows[row]);
        key = y;
        for (crt_val_t b = 0; b < p; ++b) {
            // color(y-label for value b) = (r + b) mod p, also the scalar the
            // evaluator multiplies x by.
            const crt_val_t row = static_cast<crt_val_t>((r + b) % p);
            const Label payload = label_sub(v0, label_scale(x, row));
            rows[row] =
                encrypt_label(key, Tweak{g, row, kSlotEvaluatorRow}, payload);
            label_add_into(key, rp);
        }
        for (crt_val_t row = 0; row < p; ++row) ctx.emit(rows[row]);
        return label_sub(v0, u0);
    } else if constexpr (is_eval_v<Ctx>) {
        const u128* grows = ctx.take(p);
        const u128* erows = ctx.take(p);
        const crt_val_t cx = color(x);
        const crt_val_t cy = color(y);
        const Label u =
            decrypt_label(x, Tweak{g, cx, kSlotGarblerRow}, grows[cx], p);
        Label out =
            decrypt_label(y, Tweak{g, cy, kSlotEvaluatorRow}, erows[cy], p);
        label_add_scaled(out, x, cy);
        label_sub_into(out, u);
        return out;
    } else {
        ctx.cts += 2u * p;
        ctx.offset(p);
        ctx.fresh_base(p);
        return ctx.fresh_base(p);
    }
}

// ----- Mixed-modulus half gate ----------------------------------------------
//
// x mod p times y mod q (q ≤ p, y read as an integer in {0..q−1}) in p+q+1
// ciphertexts: p garbler rows, q evaluator rows keyed by mod-q labels with
// mod-p payloads, and one packed short block carrying the scalars
// (r+b) mod p with r = color(l_x^0). The q ≤ p relaxation (the construction
// is stated for q < p) lets the p = 2 residue lane reuse the same gadget.

template <class Ctx>
Label t_mm_half_gate(Ctx& ctx, const Label& x, const Label& y) {
    const crt_val_t p = x.mod;
    const crt_val_t q = y.mod;
    if (q > p) throw DataError("mixed-modulus half gate needs q <= p");
    if (static_cast<std::uint32_t>(q) * short_field_width(p) > 128)
        throw DataError("mixed-modulus short block exceeds 128 bits");
    const std::uint64_t g = ctx.gate();
    if constexpr (is_garble_v<Ctx>) {
        const Label& rp = ctx.offset(p);
        const Label& rq = ctx.offset(q);
        const Label u0 = ctx.fresh_base(p);
        const Label v0 = ctx.fresh_base(p);
        const crt_val_t r = color(x);
        std::array<u128, kMaxModulus> rows;
        Label key = x;
        for (crt_val_t a = 0; a < p; ++a) {
            const crt_val_t row = static_cast<crt_val_t>((color(x) + a) % p);
            const Label payload = label_add(
                u0, label_scale(rp, static_cast<crt_val_t>(
                                        static_cast<std::uint32_t>(a) * r % p)));
            rows[row] =
                encrypt_label(key, Tweak{g, row, kSlotGarblerRow}, payload);
            label_add_into(key, rp);
        }
        for (crt_val_t row = 0; row < p; ++row) ctx.emit(rows[row]);
        std::array<Label, kMaxModulus> field_keys;
        std::array<crt_val_t, kMaxModulus> field_vals;
        key = y;
        for (crt_val_t b = 0; b < q; ++b) {
            const crt_val_t row = static_cast<crt_val_t>((color(y) + b) % q);
            const crt_val_t s = static_cast<crt_val_t>((r + b) % p);
            const Label payload = label_sub(v0, label_scale(x, s));
            rows[row] =
                encrypt_label(key, Tweak{g, row, kSlotEvaluatorRow}, payload);
            field_keys[row] = key;
            field_vals[row] = s;
            label_add_into(key, rq);
        }
        for (crt_val_t row = 0; row < q; ++row) ctx.emit(rows[row]);
        ctx.emit(encrypt_short({field_keys.data(), q},
                               Tweak{g, 0, kSlotShortBlock},
                               {field_vals.data(), q}, p));
        return label_sub(v0, u0);
    } else if constexpr (is_eval_v<Ctx>) {
        const u128* grows = ctx.take(p);
        const u128* erows = ctx.take(q);
        const u128 short_block = *ctx.take(1);
        const crt_val_t cx = color(x);
        const crt_val_t cy = color(y);
        const Label u =
            decrypt_label(x, Tweak{g, cx, kSlotGarblerRow}, grows[cx], p);
        Label out =
            decrypt_label(y, Tweak{g, cy, kSlotEvaluatorRow}, erows[cy], p);
        const crt_val_t s =
            decrypt_short(y, Tweak{g, 0, kSlotShortBlock}, short_block, cy, p);
        label_add_scaled(out, x, s);
        label_sub_into(out, u);
        return out;
    } else {
        ctx.cts += static_cast<std::uint64_t>(p) + q + 1;
        ctx.offset(p);
        ctx.offset(q);
        ctx.fresh_base(p);
        return ctx.fresh_base(p);
    }
}

// ----- Mixed-radix addition and the approximated sign -----------------------

// Static layout of the garbled mixed-radix addition of k summands: one entry
// per position t..2 (LSD first). The least-significant carry-in is elided.
struct MrPosition {
    mrs_val_t m = 0;             // radix at this position
    std::uint32_t b_mod = 0;     // modulus holding the integer digit sum
    std::uint32_t carry_in = 0;  // modulus of the incoming carry (0 = none)
    std::uint32_t carry_out = 0; // modulus of the outgoing carry (0 = none)
};

struct SignPlan {
    MixedRadixSpec spec;
    int k = 0;
    std::vector<MrPosition> positions;  // empty when t == 1 or k == 1
    std::uint32_t msd_carry = 0;        // carry modulus entering the MSD
};

SignPlan make_sign_plan(const MixedRadixSpec& spec, int k);

// Sum of k mixed-radix bundles, returning only the most-significant digit
// (mod m_1). bundles[s][j] is summand s, position j (j = 0 the MSD).
template <class Ctx>
Label t_mixed_radix_add(Ctx& ctx,
                        const std::vector<std::vector<Label>>& bundles,
                        const SignPlan& plan) {
    const int k = static_cast<int>(bundles.size());
    const int t = plan.spec.t();
    if (k != plan.k) throw DataError("mixed-radix summand count mismatch");
    for (const auto& b : bundles)
        if (static_cast<int>(b.size()) != t)
            throw DataError("mixed-radix bundle width mismatch");
    if (k == 1) return bundles[0][0];
    Label carry;  // valid when carry_mod != 0
    std::uint32_t carry_mod = 0;
    for (std::size_t i = 0; i < plan.positions.size(); ++i) {
        const MrPosition& pos = plan.positions[i];
        const int j = t - 1 - static_cast<int>(i);  // position index in bundle
        const auto lift = [](crt_val_t a) { return a; };
        std::vector<Label> terms;
        terms.reserve(k + 1);
        for (int s = 0; s < k; ++s)
            terms.push_back(t_proj(ctx, bundles[s][j],
                                   static_cast<crt_val_t>(pos.b_mod), lift));
        if (pos.carry_in != 0) {
            if (pos.carry_in != carry_mod)
                throw DataError("mixed-radix carry modulus mismatch");
            terms.push_back(t_proj(ctx, carry,
                                   static_cast<crt_val_t>(pos.b_mod), lift));
        }
        const Label sum = free_add(ctx, terms);
        if (pos.carry_out != 0) {
            const mrs_val_t m = pos.m;
            carry = t_proj(ctx, sum, static_cast<crt_val_t>(pos.carry_out),
                           [m](crt_val_t a) {
                               return static_cast<crt_val_t>(a / m);
                           });
            carry_mod = pos.carry_out;
        } else {
            carry_mod = 0;
        }
    }
    // Most-significant position: free adds mod m_1 plus the carry cast.
    const crt_val_t m1 = plan.spec.radices[0];
    std::vector<Label> terms;
    terms.reserve(k + 1);
    for (int s = 0; s < k; ++s) terms.push_back(bundles[s][0]);
    if (plan.msd_carry != 0) {
        if (plan.msd_carry != carry_mod)
            throw DataError("mixed-radix carry modulus mismatch");
        terms.push_back(t_proj(ctx, carry, m1, [m1](crt_val_t c) {
            return static_cast<crt_val_t>(c % m1);
        }));
    }
    return free_add(ctx, terms);
}

// Approximated sign of the CRT-encoded value behind the k input labels.
/// Output: a Z_2 wire that is 1 iff the value is strictly positive, i.e.
// encoded x ∈ [1, P/2). Realized as NOT(approx-compare x ≥ P/2) AND (x ≠ 0);
// the zero test is exact, so accuracy is governed by the comparison alone.
// tables may be null outside garbling.
template <class Ctx>
Label t_approx_sign_bit(Ctx& ctx, std::span<const Label> x,
                        const CrtBase& base, const SignPlan& plan,
                        const SignTables* tables) {
    const int k = base.k;
    const int t = plan.spec.t();
    // Digit wires of d_i(x_i), via t projections per prime.
    std::vector<std::vector<Label>> bundles(k, std::vector<Label>(t));
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < t; ++j) {
            const std::vector<mrs_val_t>* tab =
                tables ? &tables->digits[i][j] : nullptr;
            bundles[i][j] =
                t_proj(ctx, x[i], plan.spec.radices[j], [tab](crt_val_t a) {
                    return (*tab)[a];
                });
        }
    const Label msd = t_mixed_radix_add(ctx, bundles, plan);
    // Comparison: MSD ≥ m_1/2 ⇔ x ≥ P/2 (up to the approximation error);
    // the single row-reduced projection in the circuit (m_1 − 1 rows).
    const crt_val_t m1 = plan.spec.radices[0];
    const crt_val_t half = static_cast<crt_val_t>(m1 / 2);
    const Label negative = t_proj_grr(ctx, msd, 2, [half](crt_val_t s) {
        return static_cast<crt_val_t>(s >= half ? 1 : 0);
    });
    const Label nonneg = add_public_constant(ctx, negative, 1);
    // Exact zero test: count nonzero residues, then threshold.
    std::vector<Label> nz(k);
    const auto is_nonzero = [](crt_val_t a) {
        return static_cast<crt_val_t>(a != 0 ? 1 : 0);
    };
    for (int i = 0; i < k; ++i)
        nz[i] = t_proj(ctx, x[i], static_cast<crt_val_t>(k + 1), is_nonzero);
    const Label count =
        k == 1 ? nz[0] : free_add(ctx, std::span<const Label>(nz));
    const Label nonzero = t_proj(ctx, count, 2, [](crt_val_t c) {
        return static_cast<crt_val_t>(c >= 1 ? 1 : 0);
    });
    return t_half_gate(ctx, nonneg, nonzero);
}

// ----- Ciphertext-cost accounting -------------------------------------------

inline std::uint64_t projection_cost(crt_val_t p) { return p; }
inline std::uint64_t grr_projection_cost(crt_val_t p) { return p - 1u; }
inline std::uint64_t half_gate_cost(crt_val_t p) { return 2u * p; }
inline std::uint64_t mm_half_gate_cost(crt_val_t p, crt_val_t q) {
    return static_cast<std::uint64_t>(p) + q + 1;
}

std::uint64_t sign_gadget_cost(const CrtBase& base, const SignPlan& plan);
std::uint64_t relu_cost_per_element(const CrtBase& base, const SignPlan& plan);
std::uint64_t sign_act_cost_per_element(const CrtBase& base,
                                        const SignPlan& plan);

// ----- Spec-named one-off wrappers ------------------------------------------
//
// Thin aliases so call sites read like the construction descriptions; the
// garble/eval split is carried by the context type.

template <class Phi>
Label garble_projection(GarbleCtx& ctx, const Label& in, crt_val_t q,
                        Phi&& phi) {
    return t_proj(ctx, in, q, std::forward<Phi>(phi));
}
inline Label eval_projection(EvalCtx& ctx, const Label& in, crt_val_t q) {
    return t_proj(ctx, in, q, [](crt_val_t) { return crt_val_t{0}; });
}
inline Label garble_half_gate(GarbleCtx& ctx, const Label& x, const Label& y) {
    return t_half_gate(ctx, x, y);
}
inline Label eval_half_gate(EvalCtx& ctx, const Label& x, const Label& y) {
    return t_half_gate(ctx, x, y);
}
inline Label garble_mm_half_gate(GarbleCtx& ctx, const Label& x,
                                 const Label& y) {
    return t_mm_half_gate(ctx, x, y);
}
inline Label eval_mm_half_gate(EvalCtx& ctx, const Label& x, const Label& y) {
    return t_mm_half_gate(ctx, x, y);
}
inline Label garble_mixed_radix_add(GarbleCtx& ctx,
                                    const std::vector<std::vector<Label>>& b,
                                    const SignPlan& plan) {
    return t_mixed_radix_add(ctx, b, plan);
}
inline Label eval_mixed_radix_add(EvalCtx& ctx,
                                  const std::vector<std::vector<Label>>& b,
                                  const SignPlan& plan) {
    return t_mixed_radix_add(ctx, b, plan);
}
inline Label garble_approx_sign(GarbleCtx& ctx, std::span<const Label> x,
                                const CrtBase& base, const SignPlan& plan,
                                const SignTables& tables) {
    return t_approx_sign_bit(ctx, x, base, plan, &tables);
}
inline Label eval_approx_sign(EvalCtx& ctx, std::span<const Label> x,
                              const CrtBase& base, const SignPlan& plan) {
    return t_approx_sign_bit(ctx, x, base, plan, nullptr);
}

}  // namespace dash

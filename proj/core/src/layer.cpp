#include "dash/layer.hpp"

#include <algorithm>
#include <cstring>

#include "dash/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dash {

namespace {

int thread_count(const LayerEnv& env) {
#ifdef _OPENMP
    return env.threads > 0 ? env.threads : omp_get_max_threads();
#else
    (void)env;
    return 1;
#endif
}

std::uint32_t conv_out_extent(std::uint32_t in, std::uint32_t f,
                              std::uint32_t s) {
    if (f == 0 || s == 0 || f > in)
        throw DataError("convolution filter does not fit the input");
    return (in - f) / s + 1;
}

// Per-lane weight residues (w mod p, lifted to [0, p)).
std::vector<crt_val_t> weight_residues(const std::vector<q_val_t>& w,
                                       crt_val_t p) {
    std::vector<crt_val_t> r(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const q_val_t m = ((w[i] % p) + p) % p;
        r[i] = static_cast<crt_val_t>(m);
    }
    return r;
}

crt_val_t bias_residue(q_val_t b, crt_val_t p) {
    return static_cast<crt_val_t>(((b % p) + p) % p);
}

q_val_t checked(q_val_t v, const CrtBase& base) {
    if (v > max_signed(base) || v < min_signed(base))
        throw OverflowError(
            "intermediate value left the signed range of the base");
    return v;
}

// ----- plain reference layers ----------------------------------------------

std::vector<q_val_t> plain_dense(const Layer& l,
                                 const std::vector<q_val_t>& in,
                                 const CrtBase& base) {
    std::vector<q_val_t> out(l.out_dim);
    for (std::uint32_t j = 0; j < l.out_dim; ++j) {
        __int128 acc = l.q_biases.empty() ? 0 : l.q_biases[j];
        for (std::uint32_t i = 0; i < l.in_dim; ++i)
            acc += static_cast<__int128>(
                       l.q_weights[static_cast<std::size_t>(j) * l.in_dim +
                                   i]) *
                   in[i];
        if (acc > INT64_MAX || acc < INT64_MIN)
            throw OverflowError("dense accumulation overflow");
        out[j] = checked(static_cast<q_val_t>(acc), base);
    }
    return out;
}

std::vector<q_val_t> plain_conv(const Layer& l,
                                const std::vector<q_val_t>& in,
                                const dim_t& shape, const CrtBase& base) {
    const std::uint32_t h = shape[1], w = shape[2];
    const std::uint32_t oh = conv_out_extent(h, l.filter, l.stride);
    const std::uint32_t ow = conv_out_extent(w, l.filter, l.stride);
    std::vector<q_val_t> out(static_cast<std::size_t>(l.out_ch) * oh * ow);
    std::size_t dst = 0;
    for (std::uint32_t oc = 0; oc < l.out_ch; ++oc)
        for (std::uint32_t oy = 0; oy < oh; ++oy)
            for (std::uint32_t ox = 0; ox < ow; ++ox) {
                __int128 acc = l.q_biases.empty() ? 0 : l.q_biases[oc];
                for (std::uint32_t ic = 0; ic < l.in_ch; ++ic)
                    for (std::uint32_t ky = 0; ky < l.filter; ++ky)
                        for (std::uint32_t kx = 0; kx < l.filter; ++kx) {
                            const std::size_t wi =
                                ((static_cast<std::size_t>(oc) * l.in_ch +
                                  ic) *
                                     l.filter +
                                 ky) *
                                    l.filter +
                                kx;
                            const std::size_t xi =
                                (static_cast<std::size_t>(ic) * h +
                                 (oy * l.stride + ky)) *
                                    w +
                                (ox * l.stride + kx);
                            acc += static_cast<__int128>(l.q_weights[wi]) *
                                   in[xi];
                        }
                if (acc > INT64_MAX || acc < INT64_MIN)
                    throw OverflowError("conv accumulation overflow");
                out[dst++] = checked(static_cast<q_val_t>(acc), base);
            }
    return out;
}

// ----- public-weight linear layers (free gadgets) ---------------------------
//
// The same componentwise arithmetic serves garbling (on base labels, plus the
// bias base-shift) and evaluation (on active labels): per output element the
// digit sums are accumulated in u32 and reduced once.

void accumulate_term(std::uint32_t* acc, const crt_val_t* digits, int n,
                     std::uint32_t w) {
    for (int d = 0; d < n; ++d) acc[d] += w * digits[d];
}

void linear_public_lane(const Layer& l, const LabelTensor& in,
                        LabelTensor& out, const Label& zero, crt_val_t p,
                        bool garbler, const OffsetSet* offsets,
                        const dim_t& in_shape, int threads) {
    const int n = in.digits();
    const std::vector<crt_val_t> wr = weight_residues(l.q_weights, p);
    const bool dense = l.kind == LayerKind::Dense;
    const std::uint32_t h = dense ? 0 : in_shape[1];
    const std::uint32_t w = dense ? 0 : in_shape[2];
    const std::uint32_t oh = dense ? 0 : conv_out_extent(h, l.filter, l.stride);
    const std::uint32_t ow = dense ? 0 : conv_out_extent(w, l.filter, l.stride);
    const std::int64_t units = static_cast<std::int64_t>(out.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
#endif
    for (std::int64_t u = 0; u < units; ++u) {
        std::uint32_t acc[kMaxLabelDigits] = {0};
        std::uint32_t zero_terms = 0;
        q_val_t bias = 0;
        if (dense) {
            const auto j = static_cast<std::uint32_t>(u);
            for (std::uint32_t i = 0; i < l.in_dim; ++i) {
                const crt_val_t wv =
                    wr[static_cast<std::size_t>(j) * l.in_dim + i];
                if (wv == 0)
                    ++zero_terms;
                else
                    accumulate_term(acc, in.at(i), n, wv);
            }
            if (!l.q_biases.empty()) bias = l.q_biases[j];
        } else {
            const std::uint32_t oc = static_cast<std::uint32_t>(u) / (oh * ow);
            const std::uint32_t oy =
                (static_cast<std::uint32_t>(u) / ow) % oh;
            const std::uint32_t ox = static_cast<std::uint32_t>(u) % ow;
            for (std::uint32_t ic = 0; ic < l.in_ch; ++ic)
                for (std::uint32_t ky = 0; ky < l.filter; ++ky)
                    for (std::uint32_t kx = 0; kx < l.filter; ++kx) {
                        const std::size_t wi =
                            ((static_cast<std::size_t>(oc) * l.in_ch + ic) *
                                 l.filter +
                             ky) *
                                l.filter +
                            kx;
                        const std::size_t xi =
                            (static_cast<std::size_t>(ic) * h +
                             (oy * l.stride + ky)) *
                                w +
                            (ox * l.stride + kx);
                        if (wr[wi] == 0)
                            ++zero_terms;
                        else
                            accumulate_term(acc, in.at(xi), n, wr[wi]);
                    }
            if (!l.q_biases.empty()) bias = l.q_biases[oc];
        }
        Label sum = Label::shape(p);
        for (int d = 0; d < n; ++d)
            sum.d[d] = static_cast<crt_val_t>(acc[d] % p);
        if (zero_terms != 0)
            label_add_scaled(sum, zero,
                             static_cast<crt_val_t>(zero_terms % p));
        if (garbler) {
            const crt_val_t b = bias_residue(bias, p);
            if (b != 0)
                label_sub_into(sum, label_scale(offsets->get(p), b));
        }
        out.set(u, sum);
    }
}

// ----- gadget-layer units ---------------------------------------------------

template <class Ctx>
Label private_linear_unit(Ctx& ctx, std::span<const Label> xs,
                          std::span<const crt_val_t> ws, crt_val_t p,
                          crt_val_t bias) {
    std::vector<Label> terms;
    terms.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const crt_val_t w = ws[i];
        terms.push_back(t_proj(ctx, xs[i], p, [w, p](crt_val_t a) {
            return static_cast<crt_val_t>(static_cast<std::uint32_t>(w) * a %
                                          p);
        }));
    }
    Label sum = terms.size() == 1
                    ? terms[0]
                    : free_add(ctx, std::span<const Label>(terms));
    return add_public_constant(ctx, sum, bias);
}

template <class Ctx>
void relu_element(Ctx& ctx, const Label* in, Label* out, const LayerEnv& env) {
    const Label bit = t_approx_sign_bit(
        ctx, std::span<const Label>(in, env.base->k), *env.base, *env.plan,
        env.tables);
    for (int i = 0; i < env.base->k; ++i)
        out[i] = t_mm_half_gate(ctx, in[i], bit);
}

template <class Ctx>
void sign_act_element(Ctx& ctx, const Label* in, Label* out,
                      const LayerEnv& env) {
    const Label bit = t_approx_sign_bit(
        ctx, std::span<const Label>(in, env.base->k), *env.base, *env.plan,
        env.tables);
    for (int i = 0; i < env.base->k; ++i) {
        const crt_val_t p = env.base->primes[i];
        // +1 ↦ residue 1, −1 ↦ residue p−1 (= P−1 mod p).
        out[i] = t_proj(ctx, bit, p, [p](crt_val_t b) {
            return static_cast<crt_val_t>(b != 0 ? 1 : p - 1);
        });
    }
}

// Per-unit resource footprint, measured once on a throwaway counting pass.
struct UnitCost {
    std::uint64_t cts = 0, gates = 0, wires = 0;
};

UnitCost element_unit_cost(const Layer& l, const LayerEnv& env,
                           std::array<bool, kMaxModulus + 1>* moduli) {
    CountCtx c;
    std::vector<Label> in, out(env.base->k);
    for (auto p : env.base->primes) in.push_back(Label::zeros(p));
    if (l.kind == LayerKind::ReLU)
        relu_element(c, in.data(), out.data(), env);
    else
        sign_act_element(c, in.data(), out.data(), env);
    if (moduli)
        for (int m = 0; m <= kMaxModulus; ++m)
            if (c.moduli[m]) (*moduli)[m] = true;
    return {c.cts, c.gates, c.wires};
}

UnitCost private_unit_cost(std::size_t window, crt_val_t p) {
    return {static_cast<std::uint64_t>(window) * p,
            static_cast<std::uint64_t>(window),
            static_cast<std::uint64_t>(window)};
}

std::size_t private_window(const Layer& l) {
    return l.kind == LayerKind::Dense
               ? l.in_dim
               : static_cast<std::size_t>(l.in_ch) * l.filter * l.filter;
}

// Gathers the inputs of one private-linear unit and its weight residues.
void collect_private_unit(const Layer& l, const LabelTensor& in,
                          const dim_t& in_shape,
                          const std::vector<crt_val_t>& wr, std::int64_t u,
                          std::vector<Label>& xs, std::vector<crt_val_t>& ws,
                          crt_val_t& bias, crt_val_t p) {
    xs.clear();
    ws.clear();
    // The evaluator's copy of a private layer has no weights or biases; the
    // residues below are only read on the garbling side (projection φ).
    const bool have_w = !wr.empty();
    if (l.kind == LayerKind::Dense) {
        const auto j = static_cast<std::uint32_t>(u);
        for (std::uint32_t i = 0; i < l.in_dim; ++i) {
            xs.push_back(in.get(i));
            ws.push_back(
                have_w ? wr[static_cast<std::size_t>(j) * l.in_dim + i]
                       : crt_val_t{0});
        }
        bias = bias_residue(l.q_biases.empty() ? 0 : l.q_biases[j], p);
    } else {
        const std::uint32_t h = in_shape[1], w = in_shape[2];
        const std::uint32_t oh = conv_out_extent(h, l.filter, l.stride);
        const std::uint32_t ow = conv_out_extent(w, l.filter, l.stride);
        const std::uint32_t oc = static_cast<std::uint32_t>(u) / (oh * ow);
        const std::uint32_t oy = (static_cast<std::uint32_t>(u) / ow) % oh;
        const std::uint32_t ox = static_cast<std::uint32_t>(u) % ow;
        for (std::uint32_t ic = 0; ic < l.in_ch; ++ic)
            for (std::uint32_t ky = 0; ky < l.filter; ++ky)
                for (std::uint32_t kx = 0; kx < l.filter; ++kx) {
                    const std::size_t wi =
                        ((static_cast<std::size_t>(oc) * l.in_ch + ic) *
                             l.filter +
                         ky) *
                            l.filter +
                        kx;
                    const std::size_t xi =
                        (static_cast<std::size_t>(ic) * h +
                         (oy * l.stride + ky)) *
                            w +
                        (ox * l.stride + kx);
                    xs.push_back(in.get(xi));
                    ws.push_back(have_w ? wr[wi] : crt_val_t{0});
                }
        bias = bias_residue(l.q_biases.empty() ? 0 : l.q_biases[oc], p);
    }
}

}  // namespace

dim_t layer_out_shape(const Layer& layer, const dim_t& in) {
    switch (layer.kind) {
        case LayerKind::Dense: {
            if (in.size() != 1 || in[0] != layer.in_dim)
                throw DataError("dense layer input shape mismatch");
            return {layer.out_dim};
        }
        case LayerKind::Conv2d: {
            if (in.size() != 3 || in[0] != layer.in_ch)
                throw DataError("conv layer input shape mismatch");
            const std::uint32_t oh =
                conv_out_extent(in[1], layer.filter, layer.stride);
            const std::uint32_t ow =
                conv_out_extent(in[2], layer.filter, layer.stride);
            return {layer.out_ch, oh, ow};
        }
        case LayerKind::ReLU:
        case LayerKind::SignAct:
            return in;
        case LayerKind::Flatten:
            return {static_cast<std::uint32_t>(size_of(in))};
    }
    throw DataError("unknown layer kind");
}

std::vector<q_val_t> plain_forward(const Layer& layer,
                                   const std::vector<q_val_t>& in,
                                   const dim_t& in_shape,
                                   const CrtBase& base) {
    if (in.size() != size_of(in_shape))
        throw DataError("plain_forward input size mismatch");
    switch (layer.kind) {
        case LayerKind::Dense:
            if (layer.q_weights.size() != layer.weight_count())
                throw DataError("layer not quantized");
            return plain_dense(layer, in, base);
        case LayerKind::Conv2d:
            if (layer.q_weights.size() != layer.weight_count())
                throw DataError("layer not quantized");
            return plain_conv(layer, in, in_shape, base);
        case LayerKind::ReLU: {
            std::vector<q_val_t> out(in.size());
            for (std::size_t i = 0; i < in.size(); ++i)
                out[i] = in[i] > 0 ? in[i] : 0;
            return out;
        }
        case LayerKind::SignAct: {
            std::vector<q_val_t> out(in.size());
            for (std::size_t i = 0; i < in.size(); ++i)
                out[i] = in[i] > 0 ? 1 : -1;
            return out;
        }
        case LayerKind::Flatten:
            return in;
    }
    throw DataError("unknown layer kind");
}

void count_layer(const Layer& layer, const dim_t& in_shape,
                 const LayerEnv& env, CountCtx& ctx) {
    const dim_t out_shape = layer_out_shape(layer, in_shape);
    switch (layer.kind) {
        case LayerKind::Flatten:
            return;
        case LayerKind::Dense:
        case LayerKind::Conv2d: {
            if (!layer.private_weights) {
                // Free gadgets; the bias base-shift still needs offsets.
                for (auto p : env.base->primes) ctx.moduli[p] = true;
                return;
            }
            const std::size_t window = private_window(layer);
            const std::uint64_t units = size_of(out_shape);
            for (auto p : env.base->primes) {
                ctx.moduli[p] = true;
                const UnitCost uc = private_unit_cost(window, p);
                ctx.cts += uc.cts * units;
                ctx.gates += uc.gates * units;
                ctx.wires += uc.wires * units;
            }
            return;
        }
        case LayerKind::ReLU:
        case LayerKind::SignAct: {
            const UnitCost uc = element_unit_cost(layer, env, &ctx.moduli);
            const std::uint64_t units = size_of(out_shape);
            ctx.cts += uc.cts * units;
            ctx.gates += uc.gates * units;
            ctx.wires += uc.wires * units;
            return;
        }
    }
}

namespace {

// Shared garble/eval scheduler. In garble mode `blob` receives ciphertexts
// at deterministic per-unit offsets; in eval mode they are consumed from the
// same offsets, so thread schedule cannot affect results.
template <bool Garble>
std::vector<LabelTensor> run_layer(const Layer& layer,
                                   const std::vector<LabelTensor>& in,
                                   const LayerEnv& env,
                                   std::uint64_t gate_base,
                                   std::uint64_t wire_base,
                                   std::vector<u128>* blob,
                                   std::span<const u128> cts) {
    const CrtBase& base = *env.base;
    const int k = base.k;
    if (static_cast<int>(in.size()) != k)
        throw DataError("wire bundle lane count mismatch");
    const dim_t in_shape = in[0].shape();
    const dim_t out_shape = layer_out_shape(layer, in_shape);
    const int threads = thread_count(env);

    if (layer.kind == LayerKind::Flatten) {
        std::vector<LabelTensor> out;
        out.reserve(k);
        for (const auto& lane : in)
            out.push_back(tensor_reshape(lane, out_shape));
        return out;
    }

    std::vector<LabelTensor> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i)
        out.emplace_back(base.primes[i], out_shape);

    if (layer.linear() && !layer.private_weights) {
        for (int i = 0; i < k; ++i)
            linear_public_lane(layer, in[i], out[i], (*env.zeros)[i],
                               base.primes[i], Garble, env.offsets, in_shape,
                               threads);
        return out;
    }

    if (layer.linear()) {  // private weights: projection gates
        const std::size_t window = private_window(layer);
        const std::int64_t units = static_cast<std::int64_t>(size_of(out_shape));
        std::uint64_t ct_off = 0, gate_off = 0, wire_off = 0;
        std::size_t blob_base = 0;
        if constexpr (Garble) {
            blob_base = blob->size();
            CountCtx total;
            count_layer(layer, in_shape, env, total);
            blob->resize(blob_base + total.cts);
        }
        for (int i = 0; i < k; ++i) {
            const crt_val_t p = base.primes[i];
            const UnitCost uc = private_unit_cost(window, p);
            const std::vector<crt_val_t> wr =
                weight_residues(layer.q_weights, p);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
#endif
            for (std::int64_t u = 0; u < units; ++u) {
                std::vector<Label> xs;
                std::vector<crt_val_t> ws;
                crt_val_t bias = 0;
                collect_private_unit(layer, in[i], in_shape, wr, u, xs, ws,
                                     bias, p);
                Label result;
                if constexpr (Garble) {
                    std::vector<u128> local;
                    local.reserve(uc.cts);
                    GarbleCtx c;
                    c.prf = env.prf;
                    c.offsets = env.offsets;
                    c.cts = &local;
                    c.next_gate = gate_base + gate_off + u * uc.gates;
                    c.next_wire = wire_base + wire_off + u * uc.wires;
                    result = private_linear_unit(c, xs, ws, p, bias);
                    std::copy(local.begin(), local.end(),
                              blob->begin() + blob_base + ct_off +
                                  u * uc.cts);
                } else {
                    EvalCtx c;
                    c.cts = cts.subspan(ct_off + u * uc.cts, uc.cts);
                    c.next_gate = gate_base + gate_off + u * uc.gates;
                    result = private_linear_unit(c, xs, ws, p, bias);
                }
                out[i].set(u, result);
            }
            ct_off += uc.cts * units;
            gate_off += uc.gates * units;
            wire_off += uc.wires * units;
        }
        return out;
    }

    // ReLU / SignAct: one gadget bundle per tensor element.
    const UnitCost uc = element_unit_cost(layer, env, nullptr);
    const std::int64_t units = static_cast<std::int64_t>(size_of(out_shape));
    std::size_t blob_base = 0;
    if constexpr (Garble) {
        blob_base = blob->size();
        blob->resize(blob_base + uc.cts * units);
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads)
#endif
    for (std::int64_t u = 0; u < units; ++u) {
        std::vector<Label> xin(k), xout(k);
        for (int i = 0; i < k; ++i) xin[i] = in[i].get(u);
        if constexpr (Garble) {
            std::vector<u128> local;
            local.reserve(uc.cts);
            GarbleCtx c;
            c.prf = env.prf;
            c.offsets = env.offsets;
            c.cts = &local;
            c.next_gate = gate_base + u * uc.gates;
            c.next_wire = wire_base + u * uc.wires;
            if (layer.kind == LayerKind::ReLU)
                relu_element(c, xin.data(), xout.data(), env);
            else
                sign_act_element(c, xin.data(), xout.data(), env);
            std::copy(local.begin(), local.end(),
                      blob->begin() + blob_base + u * uc.cts);
        } else {
            EvalCtx c;
            c.cts = cts.subspan(u * uc.cts, uc.cts);
            c.next_gate = gate_base + u * uc.gates;
            if (layer.kind == LayerKind::ReLU)
                relu_element(c, xin.data(), xout.data(), env);
            else
                sign_act_element(c, xin.data(), xout.data(), env);
        }
        for (int i = 0; i < k; ++i) out[i].set(u, xout[i]);
    }
    return out;
}

}  // namespace

std::vector<LabelTensor> garble_layer(const Layer& layer,
                                      const std::vector<LabelTensor>& in,
                                      const LayerEnv& env,
                                      std::uint64_t gate_base,
                                      std::uint64_t wire_base,
                                      std::vector<u128>& cts) {
    return run_layer<true>(layer, in, env, gate_base, wire_base, &cts, {});
}

std::vector<LabelTensor> eval_layer(const Layer& layer,
                                    const std::vector<LabelTensor>& in,
                                    const LayerEnv& env,
                                    std::uint64_t gate_base,
                                    std::span<const u128> cts) {
    return run_layer<false>(layer, in, env, gate_base, 0, nullptr, cts);
}

}  // namespace dash

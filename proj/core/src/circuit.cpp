#include "dash/circuit.hpp"

#include <cmath>

#include "dash/errors.hpp"

namespace dash {

std::vector<dim_t> circuit_shapes(const Circuit& c) {
    if (c.input_shape.empty() || size_of(c.input_shape) == 0)
        throw DataError("circuit has an empty input shape");
    std::vector<dim_t> shapes{c.input_shape};
    for (const auto& l : c.layers)
        shapes.push_back(layer_out_shape(l, shapes.back()));
    return shapes;
}

void validate_circuit(const Circuit& c) {
    if (c.k < 1 || c.k > kMaxCrtPrimes)
        throw DataError("CRT base size out of range");
    circuit_shapes(c);  // throws on inconsistent shapes
    for (const auto& l : c.layers) {
        if (!l.linear()) continue;
        if (!l.q_weights.empty() && l.q_weights.size() != l.weight_count())
            throw DataError("quantized weight count mismatch");
        if (!l.q_biases.empty() && l.q_biases.size() != l.bias_count())
            throw DataError("quantized bias count mismatch");
        if (!l.weights.empty() && l.weights.size() != l.weight_count())
            throw DataError("weight count mismatch");
        if (!l.biases.empty() && l.biases.size() != l.bias_count())
            throw DataError("bias count mismatch");
    }
}

bool circuit_needs_sign(const Circuit& c) {
    for (const auto& l : c.layers)
        if (l.kind == LayerKind::ReLU || l.kind == LayerKind::SignAct)
            return true;
    return false;
}

SignContext make_sign_context(const CrtBase& base, double target) {
    const MixedRadixSpec spec = target < 1.0
                                    ? choose_mixed_radix(base, target)
                                    : choose_mixed_radix(base);
    return sign_context_from_spec(base, spec);
}

SignContext sign_context_from_spec(const CrtBase& base,
                                   const MixedRadixSpec& spec) {
    SignContext ctx;
    ctx.spec = spec;
    ctx.plan = make_sign_plan(spec, base.k);
    ctx.tables = build_sign_tables(base, spec);
    return ctx;
}

std::vector<q_val_t> circuit_plain_forward(const Circuit& c,
                                           std::vector<q_val_t> in,
                                           const CrtBase& base) {
    dim_t shape = c.input_shape;
    for (const auto& l : c.layers) {
        in = plain_forward(l, in, shape, base);
        shape = layer_out_shape(l, shape);
    }
    return in;
}

std::vector<q_val_t> quantize_input(std::span<const double> in,
                                    const QuantParams& q,
                                    const CrtBase& base) {
    std::vector<q_val_t> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double scaled = in[i] * q.alpha;
        if (!std::isfinite(scaled))
            throw DataError("non-finite input value");
        const q_val_t v = static_cast<q_val_t>(std::llround(scaled));
        if (v > max_signed(base) || v < min_signed(base))
            throw OverflowError("quantized input outside the signed range");
        out[i] = v;
    }
    return out;
}

void quantize_circuit(Circuit& c, double alpha) {
    c.quant.alpha = alpha;
    double scale = alpha;  // running scale of the data entering each layer
    for (auto& l : c.layers) {
        switch (l.kind) {
            case LayerKind::Dense:
            case LayerKind::Conv2d: {
                if (l.weights.size() != l.weight_count())
                    throw DataError("layer missing real-valued weights");
                l.q_weights.resize(l.weights.size());
                for (std::size_t i = 0; i < l.weights.size(); ++i)
                    l.q_weights[i] = static_cast<q_val_t>(
                        std::llround(l.weights[i] * alpha));
                const double bscale = scale * alpha;
                l.q_biases.resize(l.bias_count());
                for (std::size_t i = 0; i < l.q_biases.size(); ++i)
                    l.q_biases[i] = static_cast<q_val_t>(std::llround(
                        (i < l.biases.size() ? l.biases[i] : 0.0) * bscale));
                scale = bscale;
                break;
            }
            case LayerKind::SignAct:
                scale = 1.0;
                break;
            case LayerKind::ReLU:
            case LayerKind::Flatten:
                break;
        }
    }
}

double circuit_output_scale(const Circuit& c, double alpha) {
    double scale = alpha;
    for (const auto& l : c.layers) {
        if (l.linear())
            scale *= alpha;
        else if (l.kind == LayerKind::SignAct)
            scale = 1.0;
    }
    return scale;
}

CountCtx count_circuit(const Circuit& c, const CrtBase& base,
                       const SignPlan* plan) {
    CountCtx ctx;
    LayerEnv env;
    env.base = &base;
    env.plan = plan;
    dim_t shape = c.input_shape;
    for (const auto& l : c.layers) {
        count_layer(l, shape, env, ctx);
        shape = layer_out_shape(l, shape);
    }
    // Input encoding and decoding need every prime's offset regardless of
    // which gadgets the layers use.
    for (auto p : base.primes) ctx.moduli[p] = true;
    return ctx;
}

}  // namespace dash

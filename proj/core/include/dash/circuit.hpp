#pragma once

#include <span>
#include <vector>

#include "dash/crt.hpp"
#include "dash/layer.hpp"
#include "dash/mixed_radix.hpp"

namespace dash {

// A quantized CNN as a chain of layers over a CRT base of k primes.
struct Circuit {
    dim_t input_shape;
    int k = 8;
    std::vector<Layer> layers;
    QuantParams quant;        // global scale α for inputs and weights
    double sign_target = 1.0; // < 1 selects a reduced-accuracy sign spec
};

// Shape chain, input included (size layers()+1). Throws DataError on
// inconsistent layer parameters.
std::vector<dim_t> circuit_shapes(const Circuit& c);

// Structural validation beyond shape propagation: k range, weight/bias
// vector sizes for quantized layers, modulus limits.
void validate_circuit(const Circuit& c);

bool circuit_needs_sign(const Circuit& c);

// Mixed-radix machinery shared by the whole network. The spec itself is
// public; the lookup tables are only needed by the garbler but are cheap.
struct SignContext {
    MixedRadixSpec spec;
    SignPlan plan;
    SignTables tables;
};
SignContext make_sign_context(const CrtBase& base, double target);
SignContext sign_context_from_spec(const CrtBase& base,
                                   const MixedRadixSpec& spec);

// Integer forward pass with per-layer range checks (reference semantics).
std::vector<q_val_t> circuit_plain_forward(const Circuit& c,
                                           std::vector<q_val_t> in,
                                           const CrtBase& base);

// round(x·α) on every input element, range-checked against the base.
std::vector<q_val_t> quantize_input(std::span<const double> in,
                                    const QuantParams& q, const CrtBase& base);

// Fills q_weights/q_biases from the real-valued parameters: weights at scale
// α, biases at the running data scale of their layer times α. A sign
// activation emits exact ±1, resetting the data scale to 1.
void quantize_circuit(Circuit& c, double alpha);

// Scale of the network output under quantize_circuit(α): divide decoded
// integers by this to recover real-valued scores.
double circuit_output_scale(const Circuit& c, double alpha);

// Whole-network counting pass (offset moduli + ciphertext/gate/wire totals).
CountCtx count_circuit(const Circuit& c, const CrtBase& base,
                       const SignPlan* plan);

}  // namespace dash

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dash/crt.hpp"
#include "dash/gadgets.hpp"
#include "dash/label_tensor.hpp"
#include "dash/types.hpp"

namespace dash {

enum class LayerKind : std::uint8_t {
    Dense = 1,
    Conv2d = 2,
    ReLU = 3,
    SignAct = 4,
    Flatten = 5,
};

// One network layer. Linear layers carry real weights until quantization and
// quantized integer weights afterwards; weights are row-major [out][in] for
// Dense and [out_ch][in_ch][f][f] for Conv2d (square filters, no padding).
struct Layer {
    LayerKind kind = LayerKind::Flatten;
    bool private_weights = false;  // projection-gate mode for linear layers

    // Dense
    std::uint32_t in_dim = 0, out_dim = 0;
    // Conv2d
    std::uint32_t in_ch = 0, out_ch = 0, filter = 0, stride = 0;

    std::vector<wandb_t> weights;
    std::vector<wandb_t> biases;
    std::vector<q_val_t> q_weights;
    std::vector<q_val_t> q_biases;

    bool linear() const {
        return kind == LayerKind::Dense || kind == LayerKind::Conv2d;
    }
    std::size_t weight_count() const {
        if (kind == LayerKind::Dense)
            return static_cast<std::size_t>(in_dim) * out_dim;
        if (kind == LayerKind::Conv2d)
            return static_cast<std::size_t>(out_ch) * in_ch * filter * filter;
        return 0;
    }
    std::size_t bias_count() const {
        if (kind == LayerKind::Dense) return out_dim;
        if (kind == LayerKind::Conv2d) return out_ch;
        return 0;
    }
};

// Shape propagation; throws DataError on incompatible shapes.
dim_t layer_out_shape(const Layer& layer, const dim_t& in);

// Exact integer reference semantics; every output is range-checked against
// the signed range of the base (OverflowError flags an oversized
// quantization constant).
std::vector<q_val_t> plain_forward(const Layer& layer,
                                   const std::vector<q_val_t>& in,
                                   const dim_t& in_shape, const CrtBase& base);

// Everything a layer needs besides the wire bundle itself.
struct LayerEnv {
    const CrtBase* base = nullptr;
    const SignPlan* plan = nullptr;      // ReLU / SignAct layers
    const SignTables* tables = nullptr;  // garbling only
    const std::vector<Label>* zeros = nullptr;  // per-prime zero-wire labels
    const LabelPrf* prf = nullptr;       // garbling only
    const OffsetSet* offsets = nullptr;  // garbling only
    int threads = 0;                     // 0 = library default
};

// Counting pass: advances ciphertext/gate/wire counters and records the
// moduli needing offsets, exactly as garbling will.
void count_layer(const Layer& layer, const dim_t& in_shape,
                 const LayerEnv& env, CountCtx& ctx);

// Garbles one layer: consumes per-lane base-label tensors, appends the
// layer's ciphertext blob to `cts`, returns the output base tensors.
// gate/wire ids start at the provided bases and advance deterministically.
std::vector<LabelTensor> garble_layer(const Layer& layer,
                                      const std::vector<LabelTensor>& in,
                                      const LayerEnv& env,
                                      std::uint64_t gate_base,
                                      std::uint64_t wire_base,
                                      std::vector<u128>& cts);

// Evaluates one layer on active labels against the layer's ciphertext blob.
std::vector<LabelTensor> eval_layer(const Layer& layer,
                                    const std::vector<LabelTensor>& in,
                                    const LayerEnv& env,
                                    std::uint64_t gate_base,
                                    std::span<const u128> cts);

}  // namespace dash

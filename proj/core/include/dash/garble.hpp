#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dash/circuit.hpp"
#include "dash/label_tensor.hpp"
#include "dash/prf.hpp"
#include "dash/serial.hpp"

namespace dash {

// ----- Binary container format ----------------------------------------------
//
// Every artifact file starts with the magic "DASH", a format version (u16)
// and a kind tag (u8); the payload layout depends on the kind.

inline constexpr std::uint16_t kFormatVersion = 1;

enum class FileKind : std::uint8_t {
    GarbledCircuit = 1,
    Encoding = 2,
    Decoding = 3,
    GarbledInput = 4,
    GarbledOutput = 5,
    QuantizedModel = 6,
};

void write_file_header(ByteWriter& w, FileKind kind);
// Throws DataError on bad magic, unsupported version, or a kind mismatch.
void read_file_header(ByteReader& r, FileKind expected);

// ----- Garbling artifacts ---------------------------------------------------

struct GarbleStats {
    std::uint64_t ciphertexts = 0;
    std::uint64_t gates = 0;
    std::uint64_t wires = 0;
    std::uint64_t ciphertext_bytes() const { return ciphertexts * 16; }
};

// The material handed to the evaluator. Weights appear only for
// public-weight linear layers; biases never leave the garbler (they are
// folded into base-label shifts).
struct GarbledCircuit {
    Circuit circuit;
    MixedRadixSpec sign_spec;          // radices empty when unused
    std::vector<Label> zero_labels;    // active labels of the k zero wires
    std::vector<u128> cts;
    std::vector<std::uint64_t> layer_ct_base;  // prefix sums, layers()+1
    u128 seed_commitment = 0;
};

// Garbler-private input-encoding material: e(x) = base + (x mod p)·R_p.
struct EncodingInfo {
    int k = 0;
    dim_t shape;
    std::vector<Label> offsets;       // R_p per prime
    std::vector<LabelTensor> bases;   // per-prime lane over the input shape
};

// Output-decoding tables: per output element and prime lane, the p candidate
// compressed labels compress(l^0 + v·R_p), indexed by residue v.
struct DecodingInfo {
    int k = 0;
    dim_t shape;
    std::vector<std::vector<u128>> table;  // [element·k + lane][v]
};

struct GarbledNetwork {
    GarbledCircuit gc;
    EncodingInfo enc;
    DecodingInfo dec;
    GarbleStats stats;
};

// ----- Core operations ------------------------------------------------------

// Per-layer gate/wire/ciphertext start positions, one extra entry with the
// totals. Identical on the garbler and the evaluator because the counting
// pass never reads weight values.
struct LayerBases {
    std::uint64_t gate = 0, wire = 0, ct = 0;
};
std::vector<LayerBases> circuit_layout(const Circuit& c, const CrtBase& base,
                                       const SignPlan* plan,
                                       std::uint64_t wire0);
// Wires drawn before any gadget runs: k zero wires + k per input element.
std::uint64_t input_wire_count(const Circuit& c);

// Whole-network garbling under a seed; deterministic up to byte identity.
GarbledNetwork garble(const Circuit& circuit, const Seed& seed,
                      int threads = 0);

// Encodes quantized inputs into active label lanes (garbler side).
std::vector<LabelTensor> garble_inputs(const EncodingInfo& enc,
                                       std::span<const q_val_t> values,
                                       const CrtBase& base);

// Runs the garbled network on active labels. Deterministic for any thread
// count. Throws DataError on malformed blobs.
std::vector<LabelTensor> evaluate(const GarbledCircuit& gc,
                                  const std::vector<LabelTensor>& inputs,
                                  int threads = 0);

// Maps active output labels back to signed integers via the decoding tables.
// Any label not in its table (tampering, wrong circuit) raises
// AuthenticityError.
std::vector<q_val_t> decode_outputs(const DecodingInfo& dec,
                                    const std::vector<LabelTensor>& outputs,
                                    const CrtBase& base);

// ----- Serialization --------------------------------------------------------

std::vector<std::uint8_t> serialize_garbled_circuit(const GarbledCircuit& gc);
GarbledCircuit parse_garbled_circuit(std::span<const std::uint8_t> data);

std::vector<std::uint8_t> serialize_encoding(const EncodingInfo& enc);
EncodingInfo parse_encoding(std::span<const std::uint8_t> data);

std::vector<std::uint8_t> serialize_decoding(const DecodingInfo& dec);
DecodingInfo parse_decoding(std::span<const std::uint8_t> data);

// Self-describing label-bundle files (garbled inputs / outputs).
std::vector<std::uint8_t> serialize_bundle(
    FileKind kind, const std::vector<LabelTensor>& lanes);
std::vector<LabelTensor> parse_bundle(FileKind kind,
                                      std::span<const std::uint8_t> data);

// Raw wire payload of a bundle: exactly k·size·16 bytes, lane-major; used on
// the network where shape and base are implied by the session.
std::vector<std::uint8_t> bundle_payload(const std::vector<LabelTensor>& lanes);
std::vector<LabelTensor> bundle_from_payload(
    std::span<const std::uint8_t> data, const CrtBase& base,
    const dim_t& shape);

}  // namespace dash

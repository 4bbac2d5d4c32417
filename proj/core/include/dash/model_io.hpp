#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dash/circuit.hpp"
#include "dash/garble.hpp"

namespace dash {

// ----- Model files (JSON, real-valued parameters) ---------------------------
//
// {"format":"dash-model","version":1,"input_shape":[...],"layers":[...]}
// See docs/model-format.md for the full grammar and a complete example.

Circuit parse_model_json(const std::string& text);
std::string model_to_json(const Circuit& c);
Circuit load_model(const std::filesystem::path& path);
void save_model(const Circuit& c, const std::filesystem::path& path);

// ----- Quantization ---------------------------------------------------------

// Largest α in the geometric grid 2^−8 … 2^8 (factor-2 steps) for which a
// plain dry run over all samples keeps every input and every intermediate
// within half the signed range of the base (safety factor 2). Throws
// DataError when no grid point is feasible.
QuantParams optimize_quantization(const Circuit& c,
                                  const std::vector<std::vector<double>>& samples,
                                  const CrtBase& base);

// Largest |value| over inputs and all layer outputs of a quantized dry run.
q_val_t dry_run_peak(const Circuit& quantized,
                     const std::vector<double>& sample, const CrtBase& base);

// ----- Quantized-circuit container (binary) ---------------------------------
//
// Full-fidelity serialization of a quantized Circuit (including private
// weights and biases): the model owner → garbling device payload, and the
// on-disk export of `export_quantized`.

std::vector<std::uint8_t> serialize_circuit(const Circuit& c);
Circuit parse_circuit(std::span<const std::uint8_t> data);

void export_quantized(const Circuit& c, const std::filesystem::path& path);
Circuit load_quantized(const std::filesystem::path& path);

// ----- Artifact file helpers ------------------------------------------------

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> data);

void save_garbled_circuit(const GarbledCircuit& gc,
                          const std::filesystem::path& path);
GarbledCircuit load_garbled_circuit(const std::filesystem::path& path);
void save_encoding(const EncodingInfo& enc, const std::filesystem::path& path);
EncodingInfo load_encoding(const std::filesystem::path& path);
void save_decoding(const DecodingInfo& dec, const std::filesystem::path& path);
DecodingInfo load_decoding(const std::filesystem::path& path);
void save_bundle(FileKind kind, const std::vector<LabelTensor>& lanes,
                 const std::filesystem::path& path);
std::vector<LabelTensor> load_bundle(FileKind kind,
                                     const std::filesystem::path& path);

}  // namespace dash
